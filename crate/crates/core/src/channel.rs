//! Precoded-equivalent AWGN channel and the SNR convention.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gint::GaussInt;

/// Uplink channel parameters. The offsets apply to user B relative to A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    /// Noise variance per real dimension.
    pub sigma2: f64,
    /// Residual gain ratio (1 = perfect precoding).
    pub o_pw: f64,
    /// Residual phase in radians (0 = perfect precoding).
    pub o_ph: f64,
}

impl ChannelParams {
    pub fn perfect(sigma2: f64) -> Self {
        ChannelParams {
            sigma2,
            o_pw: 1.0,
            o_ph: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma2.is_nan()
            || self.sigma2 < 0.0
            || self.o_pw.is_nan()
            || self.o_pw <= 0.0
            || !self.o_ph.is_finite()
        {
            return Err(Error::InvalidConfig(format!(
                "bad channel parameters {self:?}"
            )));
        }
        Ok(())
    }

    /// Complex gain applied to user B.
    pub fn gain_b(&self) -> Complex64 {
        Complex64::from_polar(self.o_pw, self.o_ph)
    }
}

pub fn to_complex(x: &[GaussInt]) -> Vec<Complex64> {
    x.iter().map(|z| z.to_complex()).collect()
}

/// Noise-free superposition `x_A + O_pw e^{j O_ph} x_B`.
pub fn superpose(
    x_a: &[Complex64],
    x_b: &[Complex64],
    params: &ChannelParams,
) -> Result<Vec<Complex64>> {
    if x_a.len() != x_b.len() {
        return Err(Error::LengthMismatch {
            expected: x_a.len(),
            actual: x_b.len(),
        });
    }
    let g = params.gain_b();
    let perfect = params.o_pw == 1.0 && params.o_ph == 0.0;
    Ok(x_a
        .iter()
        .zip(x_b)
        .map(|(&a, &b)| if perfect { a + b } else { a + g * b })
        .collect())
}

/// Adds circular Gaussian noise with variance `sigma2` per real dimension.
pub fn awgn<R: Rng + ?Sized>(x: &mut [Complex64], sigma2: f64, rng: &mut R) {
    let s = sigma2.max(0.0).sqrt();
    for v in x.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(s * re, s * im);
    }
}

/// Per-dimension noise variance for `SNR = p_A N / (K_A N_0)` with
/// `N_0 = 2 sigma^2`.
pub fn sigma2_from_snr(snr_db: f64, p_a: f64, n: usize, k_a: usize) -> Result<f64> {
    if k_a == 0 {
        return Err(Error::InvalidConfig("K_A must be positive".into()));
    }
    let n0 = p_a * n as f64 / (k_a as f64 * 10f64.powf(snr_db / 10.0));
    Ok(n0 / 2.0)
}

/// Inverse of [`sigma2_from_snr`].
pub fn snr_db_from_sigma2(sigma2: f64, p_a: f64, n: usize, k_a: usize) -> f64 {
    10.0 * (p_a * n as f64 / (k_a as f64 * 2.0 * sigma2)).log10()
}

/// Symbol-energy-to-noise ratio `E_s / N_0` in dB for the same noise level.
pub fn es_n0_db(sigma2: f64, es: f64) -> f64 {
    10.0 * (es / (2.0 * sigma2)).log10()
}
