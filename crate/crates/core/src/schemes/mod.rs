//! Transmission schemes, timing model and frame-level metrics.

mod link;
mod presets;
pub mod qam;
mod stem;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{awgn, sigma2_from_snr, superpose, to_complex, ChannelParams};
use crate::error::{Error, Result};
use crate::gint::GaussInt;
use crate::lattice::{encode_user, make_correction, CorrectionSignal, EncodedFrame, LatticeConfig};
use crate::polar::{source_compress_adaptive, source_decompress_adaptive, CodeRef};
use crate::relay::{correction_offset, user_recover_peer, MultistageDecoder};

pub use link::LatticeLink;
pub use presets::{all_presets, preset, Preset, SchemeKind, StemRates};
pub use stem::StemSystem;

/// Durations of the five slots, in seconds. Slot 0 carries the correction
/// signal; slots 3 and 4 exist only in the symmetric schemes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub slots: [f64; 5],
}

impl Timing {
    pub fn total(&self) -> f64 {
        self.slots.iter().sum()
    }
}

/// Outcome of one simulated frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialResult {
    /// User A recovered all of B's bits and B recovered all of A's.
    pub success: bool,
    pub success_a: bool,
    pub success_b: bool,
    pub timing: Timing,
    /// Compressed correction length in bits (0 when not sent).
    pub k_ehat: usize,
    /// Whether the frame ran the symmetric scheme.
    pub symmetric: bool,
}

/// Aggregate over frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub frames: usize,
    pub frame_errors: usize,
    pub fer: f64,
    pub throughput_bps: f64,
    pub t_total_us_mean: f64,
    pub t_slot0_us_mean: f64,
    pub k_ehat_mean: f64,
    /// Fraction of frames that used the symmetric scheme.
    pub symmetric_share: f64,
}

/// FER `1 - P_B / P̄_B` and throughput `P_B K_B / sum(T)`.
pub fn aggregate(results: &[TrialResult], k_b: usize) -> Result<Metrics> {
    if results.is_empty() {
        return Err(Error::InvalidConfig("no frames to aggregate".into()));
    }
    let frames = results.len();
    let ok = results.iter().filter(|r| r.success).count();
    let t_sum: f64 = results.iter().map(|r| r.timing.total()).sum();
    let f = frames as f64;
    Ok(Metrics {
        frames,
        frame_errors: frames - ok,
        fer: 1.0 - ok as f64 / f,
        throughput_bps: if t_sum > 0.0 {
            ok as f64 * k_b as f64 / t_sum
        } else {
            0.0
        },
        t_total_us_mean: t_sum / f * 1e6,
        t_slot0_us_mean: results.iter().map(|r| r.timing.slots[0]).sum::<f64>() / f * 1e6,
        k_ehat_mean: results.iter().map(|r| r.k_ehat as f64).sum::<f64>() / f,
        symmetric_share: results.iter().filter(|r| r.symmetric).count() as f64 / f,
    })
}

/// Per-slot noise variances. All equal the uplink value unless overridden.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisePlan {
    pub uplink_pnc: f64,
    pub downlink: f64,
    pub p2p_uplink: f64,
    pub p2p_downlink: f64,
}

impl NoisePlan {
    pub fn uniform(sigma2: f64) -> Self {
        NoisePlan {
            uplink_pnc: sigma2,
            downlink: sigma2,
            p2p_uplink: sigma2,
            p2p_downlink: sigma2,
        }
    }

    /// Scales each slot's variance by `10^(-offset_db / 10)`; positive
    /// offsets mean a cleaner slot.
    pub fn with_offsets_db(sigma2: f64, offsets: [f64; 4]) -> Self {
        let s = |o: f64| sigma2 * 10f64.powf(-o / 10.0);
        NoisePlan {
            uplink_pnc: s(offsets[0]),
            downlink: s(offsets[1]),
            p2p_uplink: s(offsets[2]),
            p2p_downlink: s(offsets[3]),
        }
    }
}

/// Lattice machinery shared by ALEM, SLEM and DLEM.
struct LatticeSystem {
    a: LatticeConfig,
    b: LatticeConfig,
    /// Relay decoder for the asymmetric uplink.
    asym: MultistageDecoder,
    /// Relay decoder for the symmetric uplink (B uses A's setup).
    sym: MultistageDecoder,
    relay_link: LatticeLink,
    b_link: LatticeLink,
    slot0_link: LatticeLink,
    /// Level-`L_A` code of B, used for the correction signal.
    shape_code: Option<CodeRef>,
}

impl LatticeSystem {
    fn new(p: &Preset) -> Result<Self> {
        let a = LatticeConfig::new(p.n, &p.rates_a)?;
        let b = LatticeConfig::new(p.n, &p.rates_b)?;
        if a.order() > b.order() {
            return Err(Error::InvalidConfig(
                "user A must not have more levels than B".into(),
            ));
        }
        if b.order() > a.order() + 1 {
            return Err(Error::InvalidConfig(
                "user B may have at most one level more than A".into(),
            ));
        }
        let shared = a.order() as usize;
        if p.rates_a[..shared] != p.rates_b[..shared] {
            return Err(Error::InvalidConfig(
                "shared uplink levels must use identical rates".into(),
            ));
        }
        let shape_code = if b.order() > a.order() {
            let c = b.codes()[a.order() as usize].clone();
            (c.k() < c.n()).then_some(c)
        } else {
            None
        };
        Ok(LatticeSystem {
            asym: MultistageDecoder::for_pair(&a, &b),
            sym: MultistageDecoder::for_pair(&a, &a),
            relay_link: LatticeLink::new(p.n, &p.rates_relay)?,
            b_link: LatticeLink::new(p.n, &p.rates_b)?,
            slot0_link: LatticeLink::new(p.n, &p.rates_slot0)?,
            a,
            b,
            shape_code,
        })
    }

    fn k_a(&self) -> usize {
        self.a.total_k()
    }

    fn k_b(&self) -> usize {
        self.b.total_k()
    }
}

enum Engine {
    Lattice(Box<LatticeSystem>),
    Stem(Box<StemSystem>),
}

/// A preset prepared for simulation: codes constructed, decoders built.
pub struct Simulator {
    preset: Preset,
    engine: Engine,
}

/// Random source bits.
pub(crate) fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn add_noise<R: Rng + ?Sized>(mut y: Vec<Complex64>, sigma2: f64, rng: &mut R) -> Vec<Complex64> {
    awgn(&mut y, sigma2, rng);
    y
}

/// What A prepares before the uplink: its frame and, when needed, the
/// correction signal with its compressed form.
struct UserAState {
    frame: EncodedFrame,
    corr: Option<(CorrectionSignal, Vec<u8>)>,
}

impl UserAState {
    fn k_ehat(&self) -> usize {
        self.corr.as_ref().map_or(0, |(_, c)| c.len())
    }
}

impl Simulator {
    pub fn new(preset: Preset) -> Result<Self> {
        if !preset.n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(preset.n));
        }
        if preset.w.is_nan() || preset.w <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                preset.w
            )));
        }
        let engine = match preset.kind {
            SchemeKind::Stem => Engine::Stem(Box::new(StemSystem::new(&preset)?)),
            _ => Engine::Lattice(Box::new(LatticeSystem::new(&preset)?)),
        };
        Ok(Simulator { preset, engine })
    }

    pub fn preset(&self) -> &Preset {
        &self.preset
    }

    pub fn k_a(&self) -> usize {
        match &self.engine {
            Engine::Lattice(l) => l.k_a(),
            Engine::Stem(s) => s.k_a(),
        }
    }

    pub fn k_b(&self) -> usize {
        match &self.engine {
            Engine::Lattice(l) => l.k_b(),
            Engine::Stem(s) => s.k_b(),
        }
    }

    /// Average symbol energy of user A entering the SNR definition.
    pub fn p_a(&self) -> f64 {
        match &self.engine {
            Engine::Lattice(l) => l.a.avg_energy(),
            Engine::Stem(s) => s.p_a(),
        }
    }

    pub fn sigma2(&self, snr_db: f64) -> Result<f64> {
        sigma2_from_snr(snr_db, self.p_a(), self.preset.n, self.k_a())
    }

    fn secs(&self, symbols: usize) -> f64 {
        symbols as f64 / self.preset.w
    }

    /// Slot durations for a given compressed correction length, following
    /// the preset's scheme (DLEM reports its asymmetric branch).
    pub fn timing(&self, k_ehat: usize) -> Timing {
        match &self.engine {
            Engine::Stem(s) => s.timing(),
            Engine::Lattice(l) => match self.preset.kind {
                SchemeKind::Slem => self.sym_timing(l),
                _ => self.asym_timing(l, k_ehat),
            },
        }
    }

    fn asym_timing(&self, l: &LatticeSystem, k_ehat: usize) -> Timing {
        Timing {
            slots: [
                self.secs(l.slot0_link.symbols(k_ehat)),
                self.secs(self.preset.n),
                self.secs(l.relay_link.symbols(l.k_b())),
                0.0,
                0.0,
            ],
        }
    }

    fn sym_timing(&self, l: &LatticeSystem) -> Timing {
        let p2p = l.k_b() - l.k_a();
        Timing {
            slots: [
                0.0,
                self.secs(self.preset.n),
                self.secs(l.relay_link.symbols(l.k_a())),
                self.secs(l.b_link.symbols(p2p)),
                self.secs(l.relay_link.symbols(p2p)),
            ],
        }
    }

    /// Duration of the symmetric scheme's third slot for this rate family.
    pub fn t3_sym(&self) -> f64 {
        match &self.engine {
            Engine::Stem(s) => s.timing().slots[3],
            Engine::Lattice(l) => self.sym_timing(l).slots[3],
        }
    }

    /// Simulates frame `index` of a run seeded with `seed`.
    pub fn run_frame(
        &self,
        noise: &NoisePlan,
        params: &ChannelParams,
        seed: u64,
        index: u64,
    ) -> TrialResult {
        let mut rng = frame_rng(seed, index);
        match &self.engine {
            Engine::Stem(s) => s.run_frame(noise, params, &mut rng),
            Engine::Lattice(l) => match self.preset.kind {
                SchemeKind::Alem => self.run_alem(l, noise, params, &mut rng),
                SchemeKind::Slem => self.run_slem(l, noise, params, &mut rng),
                SchemeKind::Dlem => self.run_dlem(l, noise, params, &mut rng),
                SchemeKind::Stem => unreachable!("handled above"),
            },
        }
    }

    fn prepare_a(&self, l: &LatticeSystem, s_a: &[u8], asymmetric: bool) -> UserAState {
        let frame = encode_user(s_a, &l.a).expect("source sized to K_A");
        let corr = match (&l.shape_code, asymmetric) {
            (Some(code), true) => {
                let corr = make_correction(&frame.b, code).expect("shape code matches N");
                let blk = source_compress_adaptive(&corr.e).expect("N is a power of two");
                Some((corr, blk))
            }
            _ => None,
        };
        UserAState { frame, corr }
    }

    fn run_alem(
        &self,
        l: &LatticeSystem,
        noise: &NoisePlan,
        params: &ChannelParams,
        rng: &mut ChaCha8Rng,
    ) -> TrialResult {
        let s_a = random_bits(rng, l.k_a());
        let s_b = random_bits(rng, l.k_b());
        let ua = self.prepare_a(l, &s_a, true);
        let n = self.preset.n;

        // slot 0: compressed correction to the relay
        let (e_true, e_relay) = match &ua.corr {
            Some((corr, blk)) => {
                let rx = l
                    .slot0_link
                    .transmit(blk, &[noise.p2p_uplink], rng)
                    .pop()
                    .expect("one receiver");
                let e_hat = source_decompress_adaptive(&rx, n).unwrap_or_else(|_| vec![0; n]);
                (corr.e.clone(), e_hat)
            }
            None => (vec![0; n], vec![0; n]),
        };

        // slot 1: asymmetric PNC uplink
        let fb = encode_user(&s_b, &l.b).expect("source sized to K_B");
        let y =
            superpose(&to_complex(&ua.frame.x), &to_complex(&fb.x), params).expect("equal lengths");
        let y = add_noise(y, noise.uplink_pnc, rng);
        let order_a = l.a.order();
        let relay = l.asym.decode(
            &y,
            noise.uplink_pnc,
            Some(&correction_offset(&e_relay, order_a)),
        );

        // slot 2: broadcast of the network-coded levels
        let payload = relay.flat_info();
        let rx = l
            .relay_link
            .transmit(&payload, &[noise.downlink, noise.downlink], rng);
        let own_off = correction_offset(&e_true, order_a);
        let ok_a = recover(
            &rx[0],
            l.asym.codes(),
            &ua.frame,
            Some(&own_off),
            &l.b,
            &s_b,
        );
        let ok_b = recover(&rx[1], l.asym.codes(), &fb, None, &l.a, &s_a);

        TrialResult {
            success: ok_a && ok_b,
            success_a: ok_a,
            success_b: ok_b,
            timing: self.asym_timing(l, ua.k_ehat()),
            k_ehat: ua.k_ehat(),
            symmetric: false,
        }
    }

    fn run_slem(
        &self,
        l: &LatticeSystem,
        noise: &NoisePlan,
        params: &ChannelParams,
        rng: &mut ChaCha8Rng,
    ) -> TrialResult {
        let s_a = random_bits(rng, l.k_a());
        let s_b = random_bits(rng, l.k_b());
        let (s_b_pnc, s_b_p2p) = s_b.split_at(l.k_a());
        let fa = encode_user(&s_a, &l.a).expect("source sized to K_A");
        let fb = encode_user(s_b_pnc, &l.a).expect("source sized to K_A");

        // slot 1: symmetric PNC uplink
        let y = superpose(&to_complex(&fa.x), &to_complex(&fb.x), params).expect("equal lengths");
        let y = add_noise(y, noise.uplink_pnc, rng);
        let relay = l.sym.decode(&y, noise.uplink_pnc, None);

        // slot 2: broadcast
        let rx = l
            .relay_link
            .transmit(&relay.flat_info(), &[noise.downlink, noise.downlink], rng);
        let pnc_a = recover(&rx[0], l.sym.codes(), &fa, None, &l.a, s_b_pnc);
        let ok_b = recover(&rx[1], l.sym.codes(), &fb, None, &l.a, &s_a);

        // slots 3 and 4: the rest of B's bits through the relay
        let at_relay = l
            .b_link
            .transmit(s_b_p2p, &[noise.p2p_uplink], rng)
            .pop()
            .expect("one receiver");
        let at_a = l
            .relay_link
            .transmit(&at_relay, &[noise.p2p_downlink], rng)
            .pop()
            .expect("one receiver");
        let ok_a = pnc_a && at_a == s_b_p2p;

        TrialResult {
            success: ok_a && ok_b,
            success_a: ok_a,
            success_b: ok_b,
            timing: self.sym_timing(l),
            k_ehat: 0,
            symmetric: true,
        }
    }

    fn run_dlem(
        &self,
        l: &LatticeSystem,
        noise: &NoisePlan,
        params: &ChannelParams,
        rng: &mut ChaCha8Rng,
    ) -> TrialResult {
        // A's correction length is known before the frame starts; peek at it
        // with a copy of the stream so both branches see the same sources.
        let mut peek = rng.clone();
        let s_a = random_bits(&mut peek, l.k_a());
        let k_ehat = self.prepare_a(l, &s_a, true).k_ehat();
        let t_e = self.asym_timing(l, k_ehat).slots[0];
        let t3 = self.sym_timing(l).slots[3];
        if t3 <= t_e {
            self.run_slem(l, noise, params, rng)
        } else {
            self.run_alem(l, noise, params, rng)
        }
    }

    /// DLEM's choice for a given correction length: `true` means symmetric.
    pub fn dlem_prefers_symmetric(&self, k_ehat: usize) -> bool {
        match &self.engine {
            Engine::Lattice(l) => {
                self.sym_timing(l).slots[3] <= self.asym_timing(l, k_ehat).slots[0]
            }
            Engine::Stem(_) => true,
        }
    }
}

/// Splits the received relay payload into levels and compares the
/// recovered peer source with the truth.
fn recover(
    rx: &[u8],
    relay_codes: &[CodeRef],
    own: &EncodedFrame,
    own_offset: Option<&[GaussInt]>,
    peer: &LatticeConfig,
    truth: &[u8],
) -> bool {
    let mut levels = Vec::with_capacity(relay_codes.len());
    let mut pos = 0;
    for c in relay_codes {
        levels.push(rx[pos..pos + c.k()].to_vec());
        pos += c.k();
    }
    match user_recover_peer(&levels, relay_codes, own, own_offset, peer) {
        Ok(p) => p.concat() == truth,
        Err(_) => false,
    }
}

/// The per-frame generator: the run seed with the frame index as stream.
pub fn frame_rng(seed: u64, index: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
