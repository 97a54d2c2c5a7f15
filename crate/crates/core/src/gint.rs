//! Exact Gaussian-integer arithmetic over `Z[i]`.
//!
//! The lattice levels are built on powers of `phi = 1 + j`. Reduction modulo
//! `phi` is a parity check on `re + im`; reduction modulo `phi^k` maps onto a
//! fixed table of coset representatives.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use num_complex::Complex64;
use num_rational::Rational64;

use crate::error::{Error, Result};

/// Largest `k` for which a coset table is precomputed.
pub const MAX_COSET_LEVEL: u32 = 6;

/// An element `re + j*im` of the Gaussian integers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

/// A vector of Gaussian integers (one lattice symbol per entry).
pub type GaussVec = Vec<GaussInt>;

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };
    pub const ONE: GaussInt = GaussInt { re: 1, im: 0 };
    pub const J: GaussInt = GaussInt { re: 0, im: 1 };
    pub const PHI: GaussInt = GaussInt { re: 1, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        GaussInt { re, im }
    }

    /// Squared Euclidean norm `re^2 + im^2`.
    pub fn norm(self) -> i64 {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(self) -> Self {
        GaussInt::new(self.re, -self.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0 {
            write!(f, "{}-{}j", self.re, -self.im)
        } else {
            write!(f, "{}+{}j", self.re, self.im)
        }
    }
}

impl From<i64> for GaussInt {
    fn from(re: i64) -> Self {
        GaussInt::new(re, 0)
    }
}

impl Add for GaussInt {
    type Output = GaussInt;
    fn add(self, rhs: GaussInt) -> GaussInt {
        GaussInt::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl AddAssign for GaussInt {
    fn add_assign(&mut self, rhs: GaussInt) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for GaussInt {
    type Output = GaussInt;
    fn sub(self, rhs: GaussInt) -> GaussInt {
        GaussInt::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl SubAssign for GaussInt {
    fn sub_assign(&mut self, rhs: GaussInt) {
        self.re -= rhs.re;
        self.im -= rhs.im;
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt::new(-self.re, -self.im)
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;
    fn mul(self, rhs: GaussInt) -> GaussInt {
        GaussInt::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Mul<i64> for GaussInt {
    type Output = GaussInt;
    fn mul(self, rhs: i64) -> GaussInt {
        GaussInt::new(self.re * rhs, self.im * rhs)
    }
}

/// `(1 + j)^k`, computed exactly.
pub fn phi_pow(k: u32) -> GaussInt {
    // (1+j)^2 = 2j, so only the low bit of k needs a real multiplication.
    let two_j_pow = {
        let mut acc = GaussInt::ONE;
        for _ in 0..k / 2 {
            acc = acc * GaussInt::new(0, 2);
        }
        acc
    };
    if k % 2 == 1 {
        two_j_pow * GaussInt::PHI
    } else {
        two_j_pow
    }
}

/// Residue of `z` modulo `phi`: 0 when `phi | z`, 1 otherwise.
///
/// `phi` divides `z` exactly when `re + im` is even.
pub fn mod_phi(z: GaussInt) -> u8 {
    ((z.re + z.im).rem_euclid(2)) as u8
}

/// Divides by `phi` once, or returns `None` when the remainder is nonzero.
pub fn div_phi(z: GaussInt) -> Option<GaussInt> {
    // z / (1+j) = z (1-j) / 2
    let s = z.re + z.im;
    let d = z.im - z.re;
    if s.rem_euclid(2) != 0 {
        return None;
    }
    Some(GaussInt::new(s / 2, d / 2))
}

/// Returns `q` with `q * phi^k == z`.
pub fn exact_div_phi(z: GaussInt, k: u32) -> Result<GaussInt> {
    let mut q = z;
    for _ in 0..k {
        q = div_phi(q).ok_or(Error::NotDivisible { value: z, k })?;
    }
    Ok(q)
}

/// Whether `phi^k` divides `z`.
pub fn divisible_by_phi_pow(z: GaussInt, k: u32) -> bool {
    exact_div_phi(z, k).is_ok()
}

/// Canonical coset representatives of `Z[i] / phi^k Z[i]`.
#[derive(Clone, Debug)]
pub struct CosetTable {
    k: u32,
    reps: Vec<GaussInt>,
    // index into `reps`, addressed by (re mod m, im mod m) with m = 2^ceil(k/2)
    lookup: Vec<u8>,
    modulus: i64,
}

impl CosetTable {
    fn build(k: u32, reps: Vec<GaussInt>) -> CosetTable {
        let modulus = 1i64 << k.div_ceil(2);
        let mut lookup = vec![u8::MAX; (modulus * modulus) as usize];
        for a in 0..modulus {
            for b in 0..modulus {
                let z = GaussInt::new(a, b);
                let idx = reps
                    .iter()
                    .position(|&r| divisible_by_phi_pow(z - r, k))
                    .expect("representative table must be complete");
                lookup[(a * modulus + b) as usize] = idx as u8;
            }
        }
        CosetTable {
            k,
            reps,
            lookup,
            modulus,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn reps(&self) -> &[GaussInt] {
        &self.reps
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Index of the representative congruent to `z`.
    pub fn index_of(&self, z: GaussInt) -> usize {
        let a = z.re.rem_euclid(self.modulus);
        let b = z.im.rem_euclid(self.modulus);
        self.lookup[(a * self.modulus + b) as usize] as usize
    }

    /// The representative congruent to `z` modulo `phi^k`.
    pub fn reduce(&self, z: GaussInt) -> GaussInt {
        self.reps[self.index_of(z)]
    }

    /// Largest squared norm among the representatives.
    pub fn max_norm(&self) -> i64 {
        self.reps.iter().map(|r| r.norm()).max().unwrap_or(0)
    }

    /// Mean of `|r|^2` over the representatives.
    pub fn avg_energy(&self) -> Rational64 {
        let total: i64 = self.reps.iter().map(|r| r.norm()).sum();
        Rational64::new(total, self.reps.len() as i64)
    }
}

fn g(re: i64, im: i64) -> GaussInt {
    GaussInt::new(re, im)
}

fn canonical_reps(k: u32) -> Vec<GaussInt> {
    match k {
        1 => vec![g(0, 0), g(1, 0)],
        2 => vec![g(0, 0), g(0, 1), g(-1, 0), g(-1, -1)],
        3 => vec![
            g(0, 0),
            g(0, 1),
            g(-1, 0),
            g(-1, -1),
            g(0, -1),
            g(1, 0),
            g(1, -1),
            g(0, -2),
        ],
        _ => min_norm_reps(k),
    }
}

/// One representative per coset: minimum norm, ties broken by the smallest
/// `(re, im)` pair. Listed in `(norm, re, im)` order.
fn min_norm_reps(k: u32) -> Vec<GaussInt> {
    let count = 1usize << k;
    let bound = 1i64 << k.div_ceil(2);
    let mut candidates: Vec<GaussInt> = (-bound..=bound)
        .flat_map(|re| (-bound..=bound).map(move |im| g(re, im)))
        .collect();
    candidates.sort_by_key(|z| (z.norm(), z.re, z.im));
    let mut reps: Vec<GaussInt> = Vec::with_capacity(count);
    for z in candidates {
        if reps.iter().all(|&r| !divisible_by_phi_pow(z - r, k)) {
            reps.push(z);
            if reps.len() == count {
                break;
            }
        }
    }
    debug_assert_eq!(reps.len(), count);
    reps
}

static TABLES: OnceLock<Vec<CosetTable>> = OnceLock::new();

/// The canonical representative table for `phi^k`, `1 <= k <= 6`.
pub fn representative_set(k: u32) -> Result<&'static CosetTable> {
    if !(1..=MAX_COSET_LEVEL).contains(&k) {
        return Err(Error::UnsupportedLevel(k));
    }
    let tables = TABLES.get_or_init(|| {
        (1..=MAX_COSET_LEVEL)
            .map(|k| CosetTable::build(k, canonical_reps(k)))
            .collect()
    });
    Ok(&tables[(k - 1) as usize])
}

/// The representative of `z` modulo `phi^k`.
pub fn mod_phi_pow(z: GaussInt, k: u32) -> Result<GaussInt> {
    Ok(representative_set(k)?.reduce(z))
}

/// Mean symbol energy of the `phi^k` representative set.
pub fn avg_energy(k: u32) -> Result<Rational64> {
    Ok(representative_set(k)?.avg_energy())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Brute-force product, independent of the `phi_pow` shortcut.
    fn naive_pow(k: u32) -> GaussInt {
        (0..k).fold(GaussInt::ONE, |acc, _| acc * GaussInt::PHI)
    }

    #[test]
    fn phi_powers() {
        assert_eq!(phi_pow(0), g(1, 0));
        assert_eq!(phi_pow(2), g(0, 2));
        assert_eq!(phi_pow(3), g(-2, 2));
        for k in 0..12 {
            assert_eq!(phi_pow(k), naive_pow(k));
        }
    }

    #[test]
    fn mod_phi_examples() {
        assert_eq!(mod_phi(g(1, 1)), 0);
        assert_eq!(mod_phi(g(1, 0)), 1);
        assert_eq!(mod_phi(g(3, 2)), 1);
        // no q in a generous box satisfies q * phi = 3+2j
        let found = (-5..=5)
            .flat_map(|a| (-5..=5).map(move |b| g(a, b)))
            .any(|q| q * GaussInt::PHI == g(3, 2));
        assert!(!found);
    }

    #[test]
    fn mod_phi_pow_examples() {
        assert_eq!(mod_phi_pow(g(2, 1), 2).unwrap(), g(0, 1));
        assert_eq!(mod_phi_pow(g(0, 0), 3).unwrap(), g(0, 0));
        assert_eq!(mod_phi_pow(g(1, 0), 2).unwrap(), g(-1, 0));
        assert_eq!(exact_div_phi(g(2, 0), 2).unwrap(), g(0, -1));
    }

    #[test]
    fn exact_division() {
        assert_eq!(exact_div_phi(g(2, 2), 1).unwrap(), g(2, 0));
        assert_eq!(g(2, 0) * GaussInt::PHI, g(2, 2));
        assert_eq!(exact_div_phi(g(0, 0), 3).unwrap(), g(0, 0));
        assert!(matches!(
            exact_div_phi(g(1, 0), 1),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn representative_tables() {
        assert_eq!(representative_set(1).unwrap().reps(), &[g(0, 0), g(1, 0)]);
        assert_eq!(
            representative_set(2).unwrap().reps(),
            &[g(0, 0), g(0, 1), g(-1, 0), g(-1, -1)]
        );
        assert_eq!(
            representative_set(3).unwrap().reps(),
            &[
                g(0, 0),
                g(0, 1),
                g(-1, 0),
                g(-1, -1),
                g(0, -1),
                g(1, 0),
                g(1, -1),
                g(0, -2)
            ]
        );
        for k in 1..=MAX_COSET_LEVEL {
            assert_eq!(representative_set(k).unwrap().len(), 1 << k);
        }
        assert!(matches!(
            representative_set(0),
            Err(Error::UnsupportedLevel(0))
        ));
        assert!(matches!(
            representative_set(7),
            Err(Error::UnsupportedLevel(7))
        ));
    }

    #[test]
    fn energies() {
        assert_eq!(avg_energy(1).unwrap(), Rational64::new(1, 2));
        assert_eq!(avg_energy(2).unwrap(), Rational64::new(1, 1));
        assert_eq!(avg_energy(3).unwrap(), Rational64::new(3, 2));
    }

    #[test]
    fn reps_are_idempotent_and_min_norm_for_high_k() {
        for k in 1..=MAX_COSET_LEVEL {
            let table = representative_set(k).unwrap();
            for &r in table.reps() {
                assert_eq!(table.reduce(r), r);
            }
        }
        // k >= 4 uses minimum-norm representatives
        for k in 4..=MAX_COSET_LEVEL {
            let table = representative_set(k).unwrap();
            for &r in table.reps() {
                for re in -10..=10 {
                    for im in -10..=10 {
                        let z = g(re, im);
                        if table.reduce(z) == r {
                            assert!(z.norm() >= r.norm());
                        }
                    }
                }
            }
        }
    }
}
