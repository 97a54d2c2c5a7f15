//! Built-in consistency checks run by `pnc-sim selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelParams;
use crate::gint::{exact_div_phi, mod_phi, mod_phi_pow, representative_set, GaussInt};
use crate::polar::{source_compress, source_decompress};
use crate::schemes::{aggregate, all_presets, preset, NoisePlan, Simulator};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, failures: Vec<String>, ok_detail: String) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            ok_detail
        } else {
            let shown: Vec<_> = failures.iter().take(3).cloned().collect();
            format!("{} failure(s): {}", failures.len(), shown.join("; "))
        };
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn g(re: i64, im: i64) -> GaussInt {
    GaussInt::new(re, im)
}

/// The expected `k = 2` and `k = 3` representative lists.
pub fn reference_tables() -> (Vec<GaussInt>, Vec<GaussInt>) {
    (
        vec![g(0, 0), g(0, 1), g(-1, 0), g(-1, -1)],
        vec![
            g(0, 0),
            g(0, 1),
            g(-1, 0),
            g(-1, -1),
            g(0, -1),
            g(1, 0),
            g(1, -1),
            g(0, -2),
        ],
    )
}

/// Compares candidate `k = 2, 3` tables with the reference lists.
pub fn check_tables(k2: &[GaussInt], k3: &[GaussInt]) -> Check {
    let (r2, r3) = reference_tables();
    let mut fails = Vec::new();
    if k2 != r2.as_slice() {
        fails.push(format!("k=2 table {k2:?}"));
    }
    if k3 != r3.as_slice() {
        fails.push(format!("k=3 table {k3:?}"));
    }
    Check::new("representative tables", fails, "k=2 and k=3 match".into())
}

/// Homomorphism, congruence, completeness and carry checks over
/// `[-bound, bound]^2` for `1 <= k <= k_max`.
pub fn check_modulo_algebra(bound: i64, k_max: u32) -> Check {
    let mut fails = Vec::new();
    let pts: Vec<GaussInt> = (-bound..=bound)
        .flat_map(|re| (-bound..=bound).map(move |im| g(re, im)))
        .collect();
    for &a in &pts {
        for &b in &pts {
            if mod_phi(a + b) != mod_phi(a) ^ mod_phi(b) {
                fails.push(format!("mod_phi({a} + {b})"));
            }
        }
    }
    for k in 1..=k_max {
        let table = match representative_set(k) {
            Ok(t) => t,
            Err(e) => {
                fails.push(format!("k={k}: {e}"));
                continue;
            }
        };
        for &z in &pts {
            let r = mod_phi_pow(z, k).expect("k in range");
            if exact_div_phi(z - r, k).is_err() {
                fails.push(format!("{z} - {r} not divisible by phi^{k}"));
            }
            let hits = table
                .reps()
                .iter()
                .filter(|&&rep| exact_div_phi(z - rep, k).is_ok())
                .count();
            if hits != 1 {
                fails.push(format!("{z} matches {hits} representatives at k={k}"));
            }
        }
    }
    let two_over_phi = g(1, -1);
    if two_over_phi * GaussInt::PHI != g(2, 0) || mod_phi(two_over_phi) != 0 {
        fails.push("2 / phi".into());
    }
    for a in 0..2i64 {
        for b in 0..2i64 {
            let carry = (a + b) - (a ^ b);
            if carry != 2 * a * b || mod_phi(two_over_phi * (a * b)) != 0 {
                fails.push(format!("carry of {a}, {b}"));
            }
        }
    }
    Check::new(
        "modulo algebra",
        fails,
        format!("box [-{bound},{bound}]^2, k <= {k_max}"),
    )
}

/// Round trips random Bernoulli blocks through the source codec.
pub fn check_source_codec(n: usize, blocks: usize, seed: u64) -> Check {
    let mut fails = Vec::new();
    for p in [0.02, 0.05, 0.11] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..blocks {
            let raw: Vec<u8> = (0..n).map(|_| rng.random_bool(p) as u8).collect();
            let back = source_compress(&raw, p).and_then(|b| source_decompress(&b, n, p));
            if back.as_deref().ok() != Some(raw.as_slice()) {
                fails.push(format!("p={p} block {i}"));
            }
        }
    }
    Check::new(
        "source codec round trip",
        fails,
        format!("{blocks} blocks x 3 flip probabilities at N={n}"),
    )
}

/// Totals of the Table I ALEM/SLEM pair differ by exactly the third slot.
pub fn check_timing_identity() -> Check {
    let mut fails = Vec::new();
    for kb in [537, 588, 639] {
        let sims = preset(&format!("table1-alem-{kb}"))
            .and_then(Simulator::new)
            .and_then(|a| Ok((a, Simulator::new(preset(&format!("table1-slem-{kb}"))?)?)));
        match sims {
            Ok((alem, slem)) => {
                let (ta, ts) = (alem.timing(0), slem.timing(0));
                let diff = ts.total() - ta.total() - ts.slots[3];
                if diff.abs() > 4.0 * f64::EPSILON * ts.total() {
                    fails.push(format!("K_B={kb}: off by {diff:e} s"));
                }
            }
            Err(e) => fails.push(format!("K_B={kb}: {e}")),
        }
    }
    Check::new("timing identity", fails, "Table I pairs".into())
}

/// Zero-noise frames of every preset must all succeed.
pub fn check_noiseless(frames: u64) -> Check {
    let mut fails = Vec::new();
    for p in all_presets() {
        let name = p.name.clone();
        let sim = match Simulator::new(p) {
            Ok(s) => s,
            Err(e) => {
                fails.push(format!("{name}: {e}"));
                continue;
            }
        };
        let res: Vec<_> = (0..frames)
            .map(|i| {
                sim.run_frame(
                    &NoisePlan::uniform(0.0),
                    &ChannelParams::perfect(0.0),
                    11,
                    i,
                )
            })
            .collect();
        match aggregate(&res, sim.k_b()) {
            Ok(m) if m.frame_errors == 0 => {}
            Ok(m) => fails.push(format!(
                "{name}: {} of {frames} frames failed",
                m.frame_errors
            )),
            Err(e) => fails.push(format!("{name}: {e}")),
        }
    }
    Check::new(
        "noiseless end-to-end",
        fails,
        format!("{frames} frames per preset"),
    )
}

/// The full suite as run by the CLI.
pub fn run_all() -> Vec<Check> {
    let (k2, k3) = match (representative_set(2), representative_set(3)) {
        (Ok(a), Ok(b)) => (a.reps().to_vec(), b.reps().to_vec()),
        _ => (Vec::new(), Vec::new()),
    };
    vec![
        check_tables(&k2, &k3),
        check_modulo_algebra(8, 4),
        check_source_codec(256, 50, 3),
        check_timing_identity(),
        check_noiseless(20),
    ]
}
