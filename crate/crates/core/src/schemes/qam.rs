//! Gray-labelled rectangular QAM for the separate coding and modulation
//! baseline, with soft demapping and the relay's XOR demapper.

use num_complex::Complex64;

use crate::polar::LLR_MAX;

const SIGMA2_FLOOR: f64 = 1e-9;

/// Gray order on the amplitudes -3, -1, 1, 3.
const GRAY4: [(u8, f64); 4] = [(0b00, -3.0), (0b01, -1.0), (0b11, 1.0), (0b10, 3.0)];

/// A labelled constellation; `points[label]` is the symbol for `label`,
/// whose bit `j` is `(label >> (bits - 1 - j)) & 1`.
#[derive(Clone, Debug)]
pub struct Qam {
    bits: usize,
    points: Vec<Complex64>,
}

impl Qam {
    /// 8 points on a 4x2 grid: two Gray bits on I, one bit on Q. Energy 6.
    pub fn qam8() -> Self {
        let mut points = vec![Complex64::new(0.0, 0.0); 8];
        for &(gi, i) in &GRAY4 {
            for (gq, q) in [(0u8, -1.0), (1u8, 1.0)] {
                points[((gi << 1) | gq) as usize] = Complex64::new(i, q);
            }
        }
        Qam { bits: 3, points }
    }

    /// Square 16-QAM, two Gray bits per dimension. Energy 10.
    pub fn qam16() -> Self {
        let mut points = vec![Complex64::new(0.0, 0.0); 16];
        for &(gi, i) in &GRAY4 {
            for &(gq, q) in &GRAY4 {
                points[((gi << 2) | gq) as usize] = Complex64::new(i, q);
            }
        }
        Qam { bits: 4, points }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn avg_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    fn bit(&self, label: usize, j: usize) -> u8 {
        ((label >> (self.bits - 1 - j)) & 1) as u8
    }

    /// Maps a bit stream (length a multiple of the symbol size) to symbols.
    pub fn modulate(&self, bits: &[u8]) -> Vec<Complex64> {
        assert_eq!(bits.len() % self.bits, 0, "bit count");
        bits.chunks(self.bits)
            .map(|c| {
                let label = c
                    .iter()
                    .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                self.points[label]
            })
            .collect()
    }

    /// Exact per-bit LLRs for a point-to-point symbol stream.
    pub fn demap(&self, y: &[Complex64], sigma2: f64) -> Vec<f64> {
        let s2 = 2.0 * sigma2.max(SIGMA2_FLOOR);
        let mut out = Vec::with_capacity(y.len() * self.bits);
        let mut metric = vec![0.0; self.points.len()];
        for &yi in y {
            for (m, p) in metric.iter_mut().zip(&self.points) {
                *m = -(yi - p).norm_sqr() / s2;
            }
            for j in 0..self.bits {
                let mut sets = [f64::NEG_INFINITY; 2];
                for (label, &m) in metric.iter().enumerate() {
                    let b = self.bit(label, j) as usize;
                    sets[b] = log_add(sets[b], m);
                }
                out.push((sets[0] - sets[1]).clamp(-LLR_MAX, LLR_MAX));
            }
        }
        out
    }

    /// Per-bit LLRs of `bit_j(a) XOR bit_j(b)` from `y = p_a + p_b + noise`,
    /// marginalised over all symbol pairs.
    pub fn xor_demap(&self, y: &[Complex64], sigma2: f64) -> Vec<f64> {
        let s2 = 2.0 * sigma2.max(SIGMA2_FLOOR);
        let m = self.points.len();
        let pairs: Vec<(Complex64, usize)> = (0..m)
            .flat_map(|a| (0..m).map(move |b| (a, b)))
            .map(|(a, b)| (self.points[a] + self.points[b], a ^ b))
            .collect();
        let mut out = Vec::with_capacity(y.len() * self.bits);
        let mut metric = vec![0.0; pairs.len()];
        for &yi in y {
            for (mm, (p, _)) in metric.iter_mut().zip(&pairs) {
                *mm = -(yi - p).norm_sqr() / s2;
            }
            for j in 0..self.bits {
                let mut sets = [f64::NEG_INFINITY; 2];
                for (&mm, &(_, x)) in metric.iter().zip(&pairs) {
                    let b = self.bit(x, j) as usize;
                    sets[b] = log_add(sets[b], mm);
                }
                out.push((sets[0] - sets[1]).clamp(-LLR_MAX, LLR_MAX));
            }
        }
        out
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
