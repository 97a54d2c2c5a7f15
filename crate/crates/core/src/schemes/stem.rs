//! Separate coding and modulation baseline: shortened polar codes with
//! Gray QAM and an XOR demapper at the relay.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::qam::Qam;
use super::{random_bits, NoisePlan, Preset, Timing, TrialResult};
use crate::channel::{awgn, superpose, ChannelParams};
use crate::error::{Error, Result};
use crate::lattice::{frame_capacity, DESIGN_SIGMA2};
use crate::polar::{ChannelKind, PolarCode};

/// A shortened polar code bound to a constellation.
struct QamLink {
    qam: Qam,
    code: Arc<PolarCode>,
    symbols: usize,
}

impl QamLink {
    /// Smallest symbol count carrying `k` bits at code rate `rate`.
    fn for_payload(qam: Qam, k: usize, rate: f64) -> Result<Self> {
        let bps = qam.bits_per_symbol();
        let symbols = (k as f64 / (rate * bps as f64) - 1e-9).ceil().max(1.0) as usize;
        Self::with_symbols(qam, k, symbols)
    }

    fn with_symbols(qam: Qam, k: usize, symbols: usize) -> Result<Self> {
        let coded = symbols * qam.bits_per_symbol();
        let code = PolarCode::shortened(coded, k, DESIGN_SIGMA2, ChannelKind::SoftAwgn)?;
        Ok(QamLink {
            qam,
            code: Arc::new(code),
            symbols,
        })
    }

    fn send<R: Rng + ?Sized>(&self, info: &[u8], sigma2: f64, rng: &mut R) -> Vec<u8> {
        let cw = self.code.encode(info).expect("payload sized to code");
        let mut y = self.qam.modulate(&cw);
        awgn(&mut y, sigma2, rng);
        self.code.sc_decode(&self.qam.demap(&y, sigma2))
    }
}

/// Prepared STEM setup.
pub struct StemSystem {
    n: usize,
    w: f64,
    k_a: usize,
    k_b: usize,
    pnc: QamLink,
    slot3: QamLink,
    slot4: QamLink,
}

impl StemSystem {
    pub fn new(p: &Preset) -> Result<Self> {
        let rates = p
            .stem
            .ok_or_else(|| Error::InvalidConfig(format!("preset {} has no QAM rates", p.name)))?;
        // same source split as the lattice schemes of the same table row
        let k_a = frame_capacity(p.n, &p.rates_a);
        let k_b = frame_capacity(p.n, &p.rates_b);
        if k_b < k_a {
            return Err(Error::InvalidConfig("K_B must be at least K_A".into()));
        }
        let pnc = QamLink::with_symbols(Qam::qam8(), k_a, p.n)?;
        let slot3 = QamLink::for_payload(Qam::qam16(), k_b - k_a, rates.slot3)?;
        let slot4 = QamLink::for_payload(Qam::qam8(), k_b - k_a, rates.slot4)?;
        Ok(StemSystem {
            n: p.n,
            w: p.w,
            k_a,
            k_b,
            pnc,
            slot3,
            slot4,
        })
    }

    pub fn k_a(&self) -> usize {
        self.k_a
    }

    pub fn k_b(&self) -> usize {
        self.k_b
    }

    pub fn p_a(&self) -> f64 {
        self.pnc.qam.avg_energy()
    }

    pub fn timing(&self) -> Timing {
        let s = |n: usize| n as f64 / self.w;
        Timing {
            slots: [
                0.0,
                s(self.n),
                s(self.pnc.symbols),
                s(self.slot3.symbols),
                s(self.slot4.symbols),
            ],
        }
    }

    pub fn run_frame(
        &self,
        noise: &NoisePlan,
        params: &ChannelParams,
        rng: &mut ChaCha8Rng,
    ) -> TrialResult {
        let s_a = random_bits(rng, self.k_a);
        let s_b = random_bits(rng, self.k_b);
        let (s_b_pnc, s_b_p2p) = s_b.split_at(self.k_a);
        let code = &self.pnc.code;
        let qam = &self.pnc.qam;

        // slot 1: both users on the same code and constellation
        let xa = qam.modulate(&code.encode(&s_a).expect("sized"));
        let xb = qam.modulate(&code.encode(s_b_pnc).expect("sized"));
        let mut y = superpose(&xa, &xb, params).expect("equal lengths");
        awgn(&mut y, noise.uplink_pnc, rng);
        let xor_info = code.sc_decode(&qam.xor_demap(&y, noise.uplink_pnc));

        // slot 2: broadcast of the XOR message
        let at_a = self.pnc.send(&xor_info, noise.downlink, rng);
        let at_b = self.pnc.send(&xor_info, noise.downlink, rng);
        let peer_a: Vec<u8> = at_a.iter().zip(&s_a).map(|(x, s)| x ^ s).collect();
        let peer_b: Vec<u8> = at_b.iter().zip(s_b_pnc).map(|(x, s)| x ^ s).collect();

        // slots 3 and 4
        let at_relay = self.slot3.send(s_b_p2p, noise.p2p_uplink, rng);
        let fwd = self.slot4.send(&at_relay, noise.p2p_downlink, rng);

        let ok_a = peer_a == s_b_pnc && fwd == s_b_p2p;
        let ok_b = peer_b == s_a;
        TrialResult {
            success: ok_a && ok_b,
            success_a: ok_a,
            success_b: ok_b,
            timing: self.timing(),
            k_ehat: 0,
            symmetric: true,
        }
    }
}
