//! Multistage lattice decoding: network-coded decoding at the relay,
//! point-to-point decoding, and peer recovery at the end users.
//!
//! Level `l` is decoded from the binary label
//! `mod_phi((lambda - off) / phi^{l-1})` of every lattice point `lambda`
//! still consistent with the digits already decided, where `off` collects
//! the re-encoded lower levels. Metrics stay in the received domain, which
//! is the same as dividing by `phi^{l-1}` and using variance
//! `sigma^2 / 2^{l-1}`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gint::{self, mod_phi, phi_pow, representative_set, GaussInt, GaussVec};
use crate::lattice::{EncodedFrame, LatticeConfig};
use crate::polar::{CodeRef, LLR_MAX};

/// Smallest noise variance used in metrics (noise-free runs).
const SIGMA2_FLOOR: f64 = 1e-9;

/// A lattice point in a folding set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub point: Complex64,
    pub bit: u8,
    /// Log of the prior weight (multiplicity of the point among user pairs).
    pub log_weight: f64,
}

/// Truncation of the per-coset likelihood sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoldWindow {
    pub max_candidates: usize,
    /// Square root of the largest log-likelihood gap kept within a coset.
    pub radius: f64,
}

impl Default for FoldWindow {
    fn default() -> Self {
        FoldWindow {
            max_candidates: 8,
            radius: 4.0,
        }
    }
}

impl FoldWindow {
    /// No truncation.
    pub fn exact() -> Self {
        FoldWindow {
            max_candidates: usize::MAX,
            radius: f64::INFINITY,
        }
    }
}

/// LLR of the label bit of `y` (positive favours 0).
///
/// Each coset sum keeps at most `max_candidates` points, nearest first, and
/// drops any point whose likelihood falls below `exp(-radius^2)` times that
/// of the coset's best point.
pub fn fold_llr(y: Complex64, sigma2: f64, set: &[Candidate], window: FoldWindow) -> Result<f64> {
    let sigma2 = sigma2.max(SIGMA2_FLOOR);
    let mut metrics: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for c in set {
        let d2 = (y - c.point).norm_sqr();
        metrics[(c.bit & 1) as usize].push(c.log_weight - d2 / (2.0 * sigma2));
    }
    if metrics[0].is_empty() || metrics[1].is_empty() {
        return Err(Error::EmptyCoset);
    }
    let gap = window.radius * window.radius;
    let lse = |m: &mut Vec<f64>| -> f64 {
        m.sort_unstable_by(|a, b| b.total_cmp(a));
        let best = m[0];
        let acc: f64 = m
            .iter()
            .take(window.max_candidates.max(1))
            .take_while(|&&v| best - v <= gap)
            .map(|&v| (v - best).exp())
            .sum();
        best + acc.ln()
    };
    let l0 = lse(&mut metrics[0]);
    let l1 = lse(&mut metrics[1]);
    Ok((l0 - l1).clamp(-LLR_MAX, LLR_MAX))
}

/// Per-level folding tables for a set of superimposed users.
///
/// For level `l` and each residue class `r` of the running offset modulo
/// `phi^l`, the table lists every sum point `lambda` with
/// `phi^{l-1} | lambda - r` and its label.
#[derive(Clone, Debug)]
struct LevelTables {
    classes: Vec<Vec<Candidate>>,
}

fn build_tables(user_points: &[Vec<GaussInt>], levels: usize) -> Vec<LevelTables> {
    // all sums with multiplicities
    let mut sums: HashMap<GaussInt, u32> = HashMap::new();
    sums.insert(GaussInt::ZERO, 1);
    for pts in user_points {
        let mut next = HashMap::new();
        for (&s, &m) in &sums {
            for &p in pts {
                *next.entry(s + p).or_insert(0) += m;
            }
        }
        sums = next;
    }
    let mut sums: Vec<(GaussInt, u32)> = sums.into_iter().collect();
    sums.sort_by_key(|(z, _)| (z.re, z.im));

    (1..=levels as u32)
        .map(|l| {
            let table = representative_set(l).expect("level within range");
            let classes = table
                .reps()
                .iter()
                .map(|&r| {
                    sums.iter()
                        .filter_map(|&(z, m)| {
                            let q = gint::exact_div_phi(z - r, l - 1).ok()?;
                            Some(Candidate {
                                point: z.to_complex(),
                                bit: mod_phi(q),
                                log_weight: (m as f64).ln(),
                            })
                        })
                        .collect()
                })
                .collect();
            LevelTables { classes }
        })
        .collect()
}

/// Output of a multistage decode.
#[derive(Clone, Debug, Default)]
pub struct MultistageOutput {
    /// Decoded information bits per level.
    pub info: Vec<Vec<u8>>,
    /// Integer re-encoding of each level.
    pub cw_int: Vec<Vec<i64>>,
}

impl MultistageOutput {
    pub fn flat_info(&self) -> Vec<u8> {
        self.info.concat()
    }
}

/// Reusable multistage decoder for a fixed set of users and level codes.
#[derive(Clone, Debug)]
pub struct MultistageDecoder {
    codes: Vec<CodeRef>,
    tables: Vec<LevelTables>,
    window: FoldWindow,
}

impl MultistageDecoder {
    /// `user_points` are the symbol alphabets of the superimposed users and
    /// `codes` the code decoded at each level.
    pub fn new(user_points: &[Vec<GaussInt>], codes: Vec<CodeRef>, window: FoldWindow) -> Self {
        let tables = build_tables(user_points, codes.len());
        MultistageDecoder {
            codes,
            tables,
            window,
        }
    }

    /// Decoder for the superposition of two lattice users. Level codes are
    /// taken from whichever user has more levels.
    pub fn for_pair(cfg_a: &LatticeConfig, cfg_b: &LatticeConfig) -> Self {
        let (lo, hi) = if cfg_a.order() <= cfg_b.order() {
            (cfg_a, cfg_b)
        } else {
            (cfg_b, cfg_a)
        };
        let codes = hi
            .codes()
            .iter()
            .enumerate()
            .map(|(l, c)| match lo.codes().get(l) {
                Some(o) if o.k() > c.k() => o.clone(),
                _ => c.clone(),
            })
            .collect();
        MultistageDecoder::new(
            &[cfg_a.used_points(), cfg_b.used_points()],
            codes,
            FoldWindow::default(),
        )
    }

    /// Point-to-point decoder for one lattice user.
    pub fn for_single(cfg: &LatticeConfig) -> Self {
        MultistageDecoder::new(
            &[cfg.used_points()],
            cfg.codes().to_vec(),
            FoldWindow::default(),
        )
    }

    pub fn levels(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[CodeRef] {
        &self.codes
    }

    /// Decodes all levels. `offset` is subtracted from the received points
    /// before the first level (the scaled correction signal at the relay).
    pub fn decode(
        &self,
        y: &[Complex64],
        sigma2: f64,
        offset: Option<&[GaussInt]>,
    ) -> MultistageOutput {
        let n = y.len();
        let mut off: GaussVec = match offset {
            Some(o) => {
                assert_eq!(o.len(), n, "offset length");
                o.to_vec()
            }
            None => vec![GaussInt::ZERO; n],
        };
        let mut out = MultistageOutput::default();
        let mut llrs = vec![0.0; n];
        for (li, code) in self.codes.iter().enumerate() {
            let l = li as u32 + 1;
            assert_eq!(code.n_out(), n, "code length");
            let k = code.k();
            let (info, cw_int) = if k == 0 {
                (Vec::new(), vec![0i64; n])
            } else {
                self.level_llrs(li, y, sigma2, &off, &mut llrs);
                let info = if k == code.n() {
                    let hard: Vec<u8> = llrs.iter().map(|&v| (v < 0.0) as u8).collect();
                    code.extract_info(&hard).expect("length checked")
                } else {
                    code.sc_decode(&llrs)
                };
                let cw = code.encode_integer(&info).expect("length matches code");
                (info, cw)
            };
            let w = phi_pow(l - 1);
            for (o, &v) in off.iter_mut().zip(&cw_int) {
                *o += w * v;
            }
            out.info.push(info);
            out.cw_int.push(cw_int);
        }
        out
    }

    fn level_llrs(
        &self,
        li: usize,
        y: &[Complex64],
        sigma2: f64,
        off: &[GaussInt],
        llrs: &mut [f64],
    ) {
        let l = li as u32 + 1;
        let table = representative_set(l).expect("level within range");
        let classes = &self.tables[li].classes;
        let w = phi_pow(l - 1);
        for i in 0..y.len() {
            let set = &classes[table.index_of(off[i])];
            llrs[i] = match fold_llr(y[i], sigma2, set, self.window) {
                Ok(v) => v,
                Err(_) => fallback_llr(y[i], sigma2, off[i], w, set),
            };
        }
    }
}

/// LLR when one coset is empty: saturate toward the populated one, or fold
/// over the unbounded lattice `Z[i]` when nothing is consistent.
fn fallback_llr(y: Complex64, sigma2: f64, off: GaussInt, w: GaussInt, set: &[Candidate]) -> f64 {
    if let Some(c) = set.first() {
        return if c.bit == 0 { LLR_MAX } else { -LLR_MAX };
    }
    // residual in the scaled domain: (y - off) / phi^{l-1}
    let wc = w.to_complex();
    let r = (y - off.to_complex()) / wc;
    let s2 = sigma2.max(SIGMA2_FLOOR) / wc.norm_sqr();
    let (re0, im0) = (r.re.round() as i64, r.im.round() as i64);
    let grid: Vec<Candidate> = (-2..=2)
        .flat_map(|dr| (-2..=2).map(move |di| GaussInt::new(re0 + dr, im0 + di)))
        .map(|z| Candidate {
            point: z.to_complex(),
            bit: mod_phi(z),
            log_weight: 0.0,
        })
        .collect();
    fold_llr(r, s2, &grid, FoldWindow::default()).unwrap_or(0.0)
}

/// Relay output for one uplink frame.
#[derive(Clone, Debug)]
pub struct RelayDecodeResult {
    /// Network-coded information per level.
    pub s_r: Vec<Vec<u8>>,
    /// Integer re-encoding per level.
    pub c_r: Vec<Vec<i64>>,
}

/// `phi^{L_A - 1} e`, the offset removed at the relay before decoding.
pub fn correction_offset(e: &[u8], order_a: u32) -> GaussVec {
    let w = phi_pow(order_a);
    e.iter().map(|&b| w * (b as i64)).collect()
}

/// One-shot relay decode (builds the folding tables each call).
pub fn relay_multistage_decode(
    y: &[Complex64],
    cfg_a: &LatticeConfig,
    cfg_b: &LatticeConfig,
    e: &[u8],
    sigma2: f64,
) -> RelayDecodeResult {
    let dec = MultistageDecoder::for_pair(cfg_a, cfg_b);
    let off = correction_offset(e, cfg_a.order().min(cfg_b.order()));
    let out = dec.decode(y, sigma2, Some(&off));
    RelayDecodeResult {
        s_r: out.info,
        c_r: out.cw_int,
    }
}

/// One-shot point-to-point decode returning the concatenated source.
pub fn p2p_lattice_decode(y: &[Complex64], cfg: &LatticeConfig, sigma2: f64) -> Vec<u8> {
    MultistageDecoder::for_single(cfg)
        .decode(y, sigma2, None)
        .flat_info()
}

/// Recovers the peer's per-level information from the relay's network-coded
/// levels by replaying the relay's peeling on the user's own contribution.
///
/// `own_offset` is the correction offset `phi^{L_A-1} e` when the recovering
/// user is the one that sent it. Fails with `NotDivisible` when the relay
/// levels are inconsistent with the user's own frame.
pub fn user_recover_peer(
    relay_levels: &[Vec<u8>],
    relay_codes: &[CodeRef],
    own: &EncodedFrame,
    own_offset: Option<&[GaussInt]>,
    peer_cfg: &LatticeConfig,
) -> Result<Vec<Vec<u8>>> {
    let n = own.x.len();
    let levels = peer_cfg.codes().len();
    if relay_levels.len() < levels || relay_codes.len() < levels {
        return Err(Error::LengthMismatch {
            expected: levels,
            actual: relay_levels.len().min(relay_codes.len()),
        });
    }
    let mut acc: GaussVec = own.x.clone();
    if let Some(o) = own_offset {
        for (a, &v) in acc.iter_mut().zip(o) {
            *a -= v;
        }
    }
    let mut peer = Vec::with_capacity(levels);
    for (li, peer_code) in peer_cfg.codes().iter().enumerate() {
        let l = li as u32;
        let c_r = relay_codes[li].encode_integer(&relay_levels[li])?;
        let mut bits = vec![0u8; n];
        for i in 0..n {
            let u = gint::exact_div_phi(acc[i], l)?;
            bits[i] = (c_r[i] & 1) as u8 ^ mod_phi(u);
        }
        let info = peer_code.extract_info(&bits)?;
        let c_peer = peer_code.encode_integer(&info)?;
        let w = phi_pow(l);
        for i in 0..n {
            acc[i] += w * (c_peer[i] - c_r[i]);
        }
        peer.push(info);
    }
    Ok(peer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(points: &[(f64, f64, u8)]) -> Vec<Candidate> {
        points
            .iter()
            .map(|&(re, im, bit)| Candidate {
                point: Complex64::new(re, im),
                bit,
                log_weight: 0.0,
            })
            .collect()
    }

    #[test]
    fn fold_saturates_at_a_point() {
        let set = cands(&[(0.0, 0.0, 0), (1.0, 0.0, 1), (0.0, 1.0, 1), (1.0, 1.0, 0)]);
        let v = fold_llr(Complex64::new(0.0, 0.0), 1e-4, &set, FoldWindow::default()).unwrap();
        assert_eq!(v, LLR_MAX);
    }

    #[test]
    fn fold_symmetric_midpoint_is_zero() {
        let set = cands(&[(0.0, 0.0, 0), (1.0, 0.0, 1)]);
        let v = fold_llr(Complex64::new(0.5, 0.0), 0.3, &set, FoldWindow::default()).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn fold_empty_coset_is_an_error() {
        let set = cands(&[(0.0, 0.0, 0)]);
        assert!(matches!(
            fold_llr(Complex64::new(0.0, 0.0), 0.3, &set, FoldWindow::default()),
            Err(Error::EmptyCoset)
        ));
    }

    #[test]
    fn tables_partition_sums() {
        let pts = representative_set(2).unwrap().reps().to_vec();
        let tables = build_tables(&[pts.clone(), pts], 2);
        // level 1: a single class holding every distinct sum
        assert_eq!(tables[0].classes.len(), 2);
        let total: f64 = tables[0].classes[0]
            .iter()
            .map(|c| c.log_weight.exp())
            .sum();
        assert!((total - 16.0).abs() < 1e-9);
        // level 2: each sum is consistent with exactly one class per parity
        let n2: usize = tables[1].classes.iter().map(|c| c.len()).sum();
        let n1 = tables[0].classes[0].len();
        assert_eq!(n2, n1 * 2);
    }
}
