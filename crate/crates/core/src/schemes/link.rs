//! Point-to-point lattice links with payload framing.
//!
//! A payload is carried in full frames of the base length plus one final
//! fragment at the smallest power-of-two length whose capacity covers the
//! remainder. Unused capacity in a frame is filled with random bits.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{awgn, to_complex};
use crate::error::{Error, Result};
use crate::lattice::{encode_user, frame_capacity, LatticeConfig};
use crate::relay::MultistageDecoder;

struct Prepared {
    cfg: LatticeConfig,
    dec: MultistageDecoder,
}

/// One transmitter and any number of receivers sharing a lattice setup.
pub struct LatticeLink {
    n: usize,
    rates: Vec<f64>,
    by_log2: Vec<OnceLock<Arc<Prepared>>>,
}

impl std::fmt::Debug for LatticeLink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeLink")
            .field("n", &self.n)
            .field("rates", &self.rates)
            .finish()
    }
}

impl LatticeLink {
    pub fn new(n: usize, rates: &[f64]) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if frame_capacity(n, rates) == 0 {
            return Err(Error::InvalidConfig(format!(
                "rates {rates:?} carry no bits at N={n}"
            )));
        }
        // validates the rates once up front
        LatticeConfig::new(n, rates)?;
        Ok(LatticeLink {
            n,
            rates: rates.to_vec(),
            by_log2: (0..=n.trailing_zeros()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn capacity(&self) -> usize {
        frame_capacity(self.n, &self.rates)
    }

    /// Frame lengths used for a payload of `bits` bits.
    pub fn plan(&self, bits: usize) -> Vec<usize> {
        let cap = self.capacity();
        let mut frames = vec![self.n; bits / cap];
        let rest = bits % cap;
        if rest > 0 {
            let mut m = 1;
            while frame_capacity(m, &self.rates) < rest {
                m *= 2;
            }
            frames.push(m);
        }
        frames
    }

    /// Channel uses needed for a payload.
    pub fn symbols(&self, bits: usize) -> usize {
        self.plan(bits).iter().sum()
    }

    fn sized(&self, m: usize) -> Arc<Prepared> {
        self.by_log2[m.trailing_zeros() as usize]
            .get_or_init(|| {
                let cfg = LatticeConfig::new(m, &self.rates).expect("rates validated");
                let dec = MultistageDecoder::for_single(&cfg);
                Arc::new(Prepared { cfg, dec })
            })
            .clone()
    }

    /// Configuration for frames of length `m`.
    pub fn config(&self, m: usize) -> LatticeConfig {
        self.sized(m).cfg.clone()
    }

    /// Sends `bits` to `sigma2.len()` independent receivers and returns what
    /// each one decodes.
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        bits: &[u8],
        sigma2: &[f64],
        rng: &mut R,
    ) -> Vec<Vec<u8>> {
        let mut out = vec![Vec::with_capacity(bits.len()); sigma2.len()];
        let mut pos = 0;
        for m in self.plan(bits.len()) {
            let sz = self.sized(m);
            let cap = sz.cfg.total_k();
            let take = cap.min(bits.len() - pos);
            let mut frame: Vec<u8> = bits[pos..pos + take].to_vec();
            frame.extend((take..cap).map(|_| rng.random_range(0..2u8)));
            let enc = encode_user(&frame, &sz.cfg).expect("frame sized to capacity");
            let x = to_complex(&enc.x);
            for (rx, &s2) in out.iter_mut().zip(sigma2) {
                let mut y: Vec<Complex64> = x.clone();
                awgn(&mut y, s2, rng);
                let dec = sz.dec.decode(&y, s2, None).flat_info();
                rx.extend_from_slice(&dec[..take]);
            }
            pos += take;
        }
        out
    }
}
