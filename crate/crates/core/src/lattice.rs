//! Multilevel lattice encoder with hypercube shaping.
//!
//! A user with `L` levels splits its source over `L - 1` nested polar codes,
//! embeds each codeword into the integers, combines them as
//! `c = c_1 + phi c_2 + ... + phi^{L-2} c_{L-1}` and transmits the canonical
//! representative `x = mod_{phi^{L-1}}(c)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gint::{self, mod_phi, phi_pow, representative_set, CosetTable, GaussInt, GaussVec};
use crate::polar::{self, info_len, inv_entropy, ChannelKind, CodeRef, PolarCode};

/// Design noise variance used to rank every lattice component code. One
/// ordering per length keeps the level codes nested.
pub const DESIGN_SIGMA2: f64 = 0.5;

/// Rates at or above this are treated as rate 1.
pub const RATE_ONE: f64 = 1.0 - 1e-9;

/// Per-user lattice setup: block length and level rates `R_1..R_{L-1}`.
#[derive(Clone, Debug)]
pub struct LatticeConfig {
    n: usize,
    rates: Vec<f64>,
    codes: Vec<CodeRef>,
}

impl LatticeConfig {
    pub fn new(n: usize, rates: &[f64]) -> Result<Self> {
        if rates.is_empty() || rates.len() as u32 > gint::MAX_COSET_LEVEL {
            return Err(Error::InvalidConfig(format!(
                "expected 1..={} level rates, got {}",
                gint::MAX_COSET_LEVEL,
                rates.len()
            )));
        }
        if let Some(w) = rates.windows(2).find(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig(format!(
                "level rates must be non-decreasing ({} > {})",
                w[0], w[1]
            )));
        }
        let codes = rates
            .iter()
            .map(|&r| {
                polar::construct_code(n, r, DESIGN_SIGMA2, ChannelKind::SoftAwgn).map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LatticeConfig {
            n,
            rates: rates.to_vec(),
            codes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of lattice levels `L` (one more than the coded levels).
    pub fn levels(&self) -> usize {
        self.rates.len() + 1
    }

    /// Number of coded levels `L - 1`, which is also the shaping exponent.
    pub fn order(&self) -> u32 {
        self.rates.len() as u32
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn codes(&self) -> &[CodeRef] {
        &self.codes
    }

    /// `K_l` for each coded level.
    pub fn level_k(&self) -> Vec<usize> {
        self.codes.iter().map(|c| c.k()).collect()
    }

    pub fn total_k(&self) -> usize {
        self.codes.iter().map(|c| c.k()).sum()
    }

    /// Representatives the transmitted symbols are drawn from.
    pub fn constellation(&self) -> &'static CosetTable {
        representative_set(self.order()).expect("order validated at construction")
    }

    /// Number of leading levels that carry no information. Every symbol is
    /// then divisible by `phi` to that power.
    pub fn frozen_prefix(&self) -> u32 {
        self.codes.iter().take_while(|c| c.k() == 0).count() as u32
    }

    /// The representatives that can actually occur.
    pub fn used_points(&self) -> Vec<GaussInt> {
        let z = self.frozen_prefix();
        self.constellation()
            .reps()
            .iter()
            .copied()
            .filter(|&r| gint::divisible_by_phi_pow(r, z))
            .collect()
    }

    /// Mean energy of the nominal constellation `representative_set(L-1)`.
    pub fn avg_energy(&self) -> f64 {
        let e = self.constellation().avg_energy();
        *e.numer() as f64 / *e.denom() as f64
    }
}

/// Output of [`encode_user`].
#[derive(Clone, Debug)]
pub struct EncodedFrame {
    /// Transmitted symbols.
    pub x: GaussVec,
    /// Combination before shaping.
    pub c: GaussVec,
    /// Shaping vector, `x = c + phi^{L-1} b`.
    pub b: GaussVec,
    /// Binary codeword per level.
    pub level_cw: Vec<Vec<u8>>,
    /// Integer-embedded codeword per level.
    pub level_cw_int: Vec<Vec<i64>>,
    /// Source bits per level.
    pub level_src: Vec<Vec<u8>>,
}

/// Splits `s` into consecutive chunks of `K_l` bits.
pub fn split_source(s: &[u8], cfg: &LatticeConfig) -> Result<Vec<Vec<u8>>> {
    if s.len() != cfg.total_k() {
        return Err(Error::LengthMismatch {
            expected: cfg.total_k(),
            actual: s.len(),
        });
    }
    let mut out = Vec::with_capacity(cfg.codes.len());
    let mut pos = 0;
    for code in &cfg.codes {
        out.push(s[pos..pos + code.k()].to_vec());
        pos += code.k();
    }
    Ok(out)
}

/// `sum_l phi^{l-1} c_l` over integer-embedded codewords.
pub fn lattice_combine(level_cw: &[Vec<i64>]) -> GaussVec {
    let n = level_cw.first().map_or(0, |c| c.len());
    let mut c = vec![GaussInt::ZERO; n];
    for (l, cw) in level_cw.iter().enumerate() {
        assert_eq!(cw.len(), n, "level codeword lengths differ");
        let w = phi_pow(l as u32);
        for (ci, &v) in c.iter_mut().zip(cw) {
            *ci += w * v;
        }
    }
    c
}

/// Returns `(x, b)` with `x = mod_{phi^{L-1}}(c)` and `b = (x - c) / phi^{L-1}`.
pub fn hypercube_shape(c: &[GaussInt], levels: usize) -> Result<(GaussVec, GaussVec)> {
    if levels < 2 {
        return Err(Error::InvalidConfig(format!(
            "hypercube shaping needs at least 2 levels, got {levels}"
        )));
    }
    let k = (levels - 1) as u32;
    let table = representative_set(k)?;
    let mut x = Vec::with_capacity(c.len());
    let mut b = Vec::with_capacity(c.len());
    for &ci in c {
        let xi = table.reduce(ci);
        b.push(gint::exact_div_phi(xi - ci, k)?);
        x.push(xi);
    }
    Ok((x, b))
}

/// Full transmit chain for one frame.
pub fn encode_user(s: &[u8], cfg: &LatticeConfig) -> Result<EncodedFrame> {
    let level_src = split_source(s, cfg)?;
    let mut level_cw = Vec::with_capacity(level_src.len());
    let mut level_cw_int = Vec::with_capacity(level_src.len());
    for (code, src) in cfg.codes.iter().zip(&level_src) {
        let int = code.encode_integer(src)?;
        level_cw.push(int.iter().map(|&v| (v & 1) as u8).collect());
        level_cw_int.push(int);
    }
    let c = lattice_combine(&level_cw_int);
    let (x, b) = hypercube_shape(&c, cfg.levels())?;
    Ok(EncodedFrame {
        x,
        c,
        b,
        level_cw,
        level_cw_int,
        level_src,
    })
}

/// Correction making `b_A - e` congruent to a level codeword modulo `phi`.
#[derive(Clone, Debug)]
pub struct CorrectionSignal {
    pub e: Vec<u8>,
    pub c_shape: Vec<u8>,
    pub s_shape: Vec<u8>,
    pub flip_prob: f64,
}

impl CorrectionSignal {
    pub fn weight(&self) -> usize {
        self.e.iter().filter(|&&b| b != 0).count()
    }
}

/// Flip probability assigned to a shaping code of the given rate.
pub fn shaping_flip_prob(rate: f64) -> f64 {
    if rate >= RATE_ONE {
        0.0
    } else {
        inv_entropy(1.0 - rate)
    }
}

/// BSC-decodes `mod_phi(b)` with `shape_code` and returns the residual.
pub fn make_correction(b: &[GaussInt], shape_code: &PolarCode) -> Result<CorrectionSignal> {
    let parity: Vec<u8> = b.iter().map(|&z| mod_phi(z)).collect();
    let rate = shape_code.k() as f64 / shape_code.n() as f64;
    let p = shaping_flip_prob(rate);
    let (s_shape, c_shape) = if shape_code.k() == shape_code.n() {
        (shape_code.extract_info(&parity)?, parity.clone())
    } else if shape_code.k() == 0 {
        (Vec::new(), vec![0; parity.len()])
    } else {
        shape_code.bsc_decode_full(&parity, p)?
    };
    let e = b
        .iter()
        .zip(&c_shape)
        .map(|(&z, &c)| mod_phi(z - GaussInt::from(c as i64)))
        .collect();
    Ok(CorrectionSignal {
        e,
        c_shape,
        s_shape,
        flip_prob: p,
    })
}

/// Base-`phi` digits `d_1..d_k` of `z` with `z = sum phi^{m-1} d_m mod phi^k`.
pub fn phi_digits(z: GaussInt, k: u32) -> Vec<u8> {
    let mut rest = z;
    (0..k)
        .map(|_| {
            let d = mod_phi(rest);
            rest = gint::div_phi(rest - GaussInt::from(d as i64)).expect("digit removed");
            d
        })
        .collect()
}

/// Capacity in bits of one frame of length `n` with the given level rates.
pub fn frame_capacity(n: usize, rates: &[f64]) -> usize {
    rates.iter().map(|&r| info_len(r, n)).sum()
}
