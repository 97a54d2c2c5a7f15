//! Genie-aided Monte-Carlo reliability estimation.
//!
//! The all-zero word is sent over the design channel and SC is run with the
//! true bits fed back; the error rate of each synthetic channel ranks the
//! indices. Results are memoized per `(kind, N, design_param, trials)` and,
//! when `PNC_SIM_CACHE_DIR` is set, persisted as text files.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::sc::ScEngine;
use super::ChannelKind;

/// Trials per reliability estimate.
pub const CONSTRUCTION_TRIALS: usize = 100_000;
const CONSTRUCTION_SEED: u64 = 0x5eed_c0de;
const CHUNK: usize = 5_000;

/// Per-index genie-aided error rates and the resulting ordering.
#[derive(Debug, Clone)]
pub struct Reliability {
    pub n: usize,
    /// Estimated error probability of each synthetic channel.
    pub pe: Vec<f64>,
    /// Indices from most to least reliable.
    pub order: Vec<usize>,
}

impl Reliability {
    /// Ranks channels by estimated error probability.
    pub fn from_pe(pe: Vec<f64>) -> Self {
        let n = pe.len();
        let weights = polarization_weights(n);
        let mut order: Vec<usize> = (0..n).collect();
        // unresolved ties (typically pe == 0) fall back to the beta-expansion weight
        order.sort_by(|&a, &b| {
            pe[a]
                .total_cmp(&pe[b])
                .then(weights[b].total_cmp(&weights[a]))
                .then(b.cmp(&a))
        });
        Reliability { n, pe, order }
    }
}

/// Beta-expansion weights `sum_b bit_b(i) 2^(b/4)`.
pub fn polarization_weights(n: usize) -> Vec<f64> {
    let beta = 2f64.powf(0.25);
    (0..n)
        .map(|i| {
            (0..usize::BITS)
                .filter(|b| (i >> b) & 1 == 1)
                .map(|b| beta.powi(b as i32))
                .sum()
        })
        .collect()
}

type Key = (u8, usize, u64, usize);

fn memo() -> &'static Mutex<HashMap<Key, Arc<Reliability>>> {
    static MEMO: OnceLock<Mutex<HashMap<Key, Arc<Reliability>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Reliability estimate for a code of length `n`; memoized.
pub fn reliability(kind: ChannelKind, n: usize, design_param: f64) -> Arc<Reliability> {
    reliability_with_trials(kind, n, design_param, CONSTRUCTION_TRIALS)
}

pub fn reliability_with_trials(
    kind: ChannelKind,
    n: usize,
    design_param: f64,
    trials: usize,
) -> Arc<Reliability> {
    let key = (kind as u8, n, design_param.to_bits(), trials);
    if let Some(r) = memo().lock().unwrap().get(&key) {
        return Arc::clone(r);
    }
    let cache_path = std::env::var_os("PNC_SIM_CACHE_DIR")
        .map(|dir| cache_file(Path::new(&dir), kind, n, design_param, trials));
    let loaded = cache_path.as_deref().and_then(|p| load_cache(p, n));
    let rel = Arc::new(match loaded {
        Some(r) => r,
        None => {
            let r = Reliability::from_pe(estimate_pe(kind, n, design_param, trials));
            if let Some(p) = cache_path.as_deref() {
                // a failed write only costs a recomputation next time
                let _ = store_cache(p, kind, design_param, trials, &r);
            }
            r
        }
    });
    memo()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| Arc::clone(&rel))
        .clone()
}

fn estimate_pe(kind: ChannelKind, n: usize, design_param: f64, trials: usize) -> Vec<f64> {
    let chunks = trials.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(CONSTRUCTION_SEED);
            rng.set_stream(c as u64);
            let this_chunk = CHUNK.min(trials - c * CHUNK);
            let mut eng = ScEngine::new(n);
            let mut errors = vec![0u64; n];
            let mut llrs = vec![0.0; n];
            for _ in 0..this_chunk {
                fill_design_llrs(kind, design_param, &mut rng, &mut llrs);
                // counted in half-errors so that an exact tie scores 1/2
                eng.run(&llrs, &mut |i, l| {
                    if l < 0.0 {
                        errors[i] += 2;
                    } else if l == 0.0 {
                        errors[i] += 1;
                    }
                    0
                });
            }
            errors
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    counts
        .into_iter()
        .map(|c| c as f64 / (2 * trials) as f64)
        .collect()
}

fn fill_design_llrs(kind: ChannelKind, param: f64, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    match kind {
        ChannelKind::SoftAwgn => {
            // BPSK +1 with per-dimension noise variance `param`
            let sigma = param.sqrt();
            let scale = 2.0 / param;
            for l in out.iter_mut() {
                let noise: f64 = rng.sample(StandardNormal);
                *l = scale * (1.0 + sigma * noise);
            }
        }
        ChannelKind::Bsc => {
            let p = param.clamp(1e-12, 0.5);
            let mag = ((1.0 - p) / p).ln();
            for l in out.iter_mut() {
                *l = if rng.random::<f64>() < p { -mag } else { mag };
            }
        }
    }
}

fn cache_file(dir: &Path, kind: ChannelKind, n: usize, param: f64, trials: usize) -> PathBuf {
    dir.join(format!(
        "polar-{}-n{}-d{:016x}-t{}.txt",
        kind.name(),
        n,
        param.to_bits(),
        trials
    ))
}

fn load_cache(path: &Path, n: usize) -> Option<Reliability> {
    let file = fs::File::open(path).ok()?;
    let mut pe = vec![f64::NAN; n];
    let mut seen = 0;
    for line in BufReader::new(file).lines() {
        let line = line.ok()?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let idx: usize = parts.next()?.parse().ok()?;
        let p: f64 = parts.next()?.parse().ok()?;
        if idx >= n || !pe[idx].is_nan() {
            return None;
        }
        pe[idx] = p;
        seen += 1;
    }
    (seen == n).then(|| Reliability::from_pe(pe))
}

fn store_cache(
    path: &Path,
    kind: ChannelKind,
    param: f64,
    trials: usize,
    rel: &Reliability,
) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    writeln!(
        f,
        "# pnc-sim polar reliability kind={} n={} design={} trials={}",
        kind.name(),
        rel.n,
        param,
        trials
    )?;
    for &i in &rel.order {
        writeln!(f, "{} {:e}", i, rel.pe[i])?;
    }
    f.flush()?;
    fs::rename(tmp, path)
}
