//! SNR sweeps, parallel frame execution and CSV output.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::polar::{entropy_h, source_compress, source_decompress};
use crate::schemes::{aggregate, preset, Metrics, NoisePlan, Preset, Simulator};

/// Environment variable that sets the worker count.
pub const THREADS_ENV: &str = "PNC_SIM_THREADS";

/// Column order of the sweep CSV.
pub const CSV_HEADER: &str =
    "scheme,preset,snr_db,frames,frame_errors,fer,throughput_bps,t_total_us_mean,t_slot0_us_mean,t3_us,k_ehat_mean,seed";

/// Column order of the compression CSV.
pub const COMPRESSION_HEADER: &str = "p,n,rate,entropy";

/// Parses `start:step:stop`, a comma list, or a single value (dB).
pub fn parse_snr(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad SNR value `{s}`")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidConfig(format!("bad SNR value `{s}`")))
        }
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 => spec.split(',').map(num).collect(),
        3 => {
            let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if step <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "SNR step must be positive, got {step}"
                )));
            }
            if stop < start {
                return Err(Error::InvalidConfig(format!(
                    "SNR range {start}..{stop} is empty"
                )));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // round to the step's precision so 4 + 10*0.5 prints as 9
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(Error::InvalidConfig(format!(
            "SNR sweep `{spec}` is not start:step:stop"
        ))),
    }
}

/// Contents of a JSON run configuration. Every field is optional; flags
/// override these and these override preset defaults.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub snr: Option<String>,
    pub frames: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub o_pw: Option<f64>,
    pub o_ph: Option<f64>,
    /// Per-slot SNR offsets in dB: PNC uplink, downlink, P2P uplink, P2P downlink.
    pub slot_snr_offsets_db: Option<[f64; 4]>,
    pub zero_noise: Option<bool>,
    /// Replaces the named preset entirely.
    pub preset_override: Option<Preset>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A fully resolved sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub snr_db: Vec<f64>,
    pub frames: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub slot_snr_offsets_db: [f64; 4],
    pub zero_noise: bool,
}

impl RunConfig {
    pub const DEFAULT_FRAMES: u64 = 2000;
    pub const DEFAULT_SEED: u64 = 1;
    pub const DEFAULT_SNR: &'static str = "4:0.5:9";

    /// Merges flag values (`flags`) over a config file (`file`) over the
    /// preset's defaults.
    pub fn resolve(flags: &ConfigFile, file: &ConfigFile) -> Result<Self> {
        let mut p = match (&flags.preset_override, &file.preset_override) {
            (Some(p), _) | (None, Some(p)) => p.clone(),
            _ => {
                let name = flags
                    .preset
                    .as_ref()
                    .or(file.preset.as_ref())
                    .ok_or_else(|| Error::InvalidConfig("no preset given".into()))?;
                preset(name)?
            }
        };
        if let Some(v) = flags.o_pw.or(file.o_pw) {
            p.o_pw = v;
        }
        if let Some(v) = flags.o_ph.or(file.o_ph) {
            p.o_ph = v;
        }
        let snr = flags
            .snr
            .as_deref()
            .or(file.snr.as_deref())
            .unwrap_or(Self::DEFAULT_SNR);
        let frames = flags.frames.or(file.frames).unwrap_or(Self::DEFAULT_FRAMES);
        if frames == 0 {
            return Err(Error::InvalidConfig("frames must be at least 1".into()));
        }
        let cfg = RunConfig {
            preset: p,
            snr_db: parse_snr(snr)?,
            frames,
            seed: flags.seed.or(file.seed).unwrap_or(Self::DEFAULT_SEED),
            threads: flags.threads.or(threads_from_env()?).or(file.threads),
            slot_snr_offsets_db: flags
                .slot_snr_offsets_db
                .or(file.slot_snr_offsets_db)
                .unwrap_or([0.0; 4]),
            zero_noise: flags.zero_noise.or(file.zero_noise).unwrap_or(false),
        };
        ChannelParams {
            sigma2: 0.0,
            o_pw: cfg.preset.o_pw,
            o_ph: cfg.preset.o_ph,
        }
        .validate()?;
        if cfg.threads == Some(0) {
            return Err(Error::InvalidConfig(
                "thread count must be at least 1".into(),
            ));
        }
        Ok(cfg)
    }
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV}=`{v}` is not a count"))),
        _ => Ok(None),
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub scheme: String,
    pub preset: String,
    pub snr_db: f64,
    pub metrics: Metrics,
    pub t3_us: f64,
    pub seed: u64,
}

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{:.6e},{:.3},{:.3},{:.3},{:.3},{:.3},{}",
            self.scheme,
            self.preset,
            self.snr_db,
            m.frames,
            m.frame_errors,
            m.fer,
            m.throughput_bps,
            m.t_total_us_mean,
            m.t_slot0_us_mean,
            self.t3_us,
            m.k_ehat_mean,
            self.seed
        )
    }
}

/// Channel setup of one SNR point.
pub fn point_channel(
    sim: &Simulator,
    cfg: &RunConfig,
    snr_db: f64,
) -> Result<(NoisePlan, ChannelParams)> {
    let sigma2 = if cfg.zero_noise {
        0.0
    } else {
        sim.sigma2(snr_db)?
    };
    let noise = NoisePlan::with_offsets_db(sigma2, cfg.slot_snr_offsets_db);
    let params = ChannelParams {
        sigma2,
        o_pw: cfg.preset.o_pw,
        o_ph: cfg.preset.o_ph,
    };
    params.validate()?;
    Ok((noise, params))
}

/// Runs `frames` frames at one SNR on the current rayon pool.
pub fn run_point(sim: &Simulator, cfg: &RunConfig, snr_db: f64) -> Result<SweepPoint> {
    let (noise, params) = point_channel(sim, cfg, snr_db)?;
    let results: Vec<_> = (0..cfg.frames)
        .into_par_iter()
        .map(|i| sim.run_frame(&noise, &params, cfg.seed, i))
        .collect();
    Ok(SweepPoint {
        scheme: cfg.preset.kind.name().to_string(),
        preset: cfg.preset.name.clone(),
        snr_db,
        metrics: aggregate(&results, sim.k_b())?,
        t3_us: sim.t3_sym() * 1e6,
        seed: cfg.seed,
    })
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

/// Runs the whole sweep; `progress` sees each finished point.
pub fn run_sweep(
    cfg: &RunConfig,
    mut progress: impl FnMut(&SweepPoint),
) -> Result<Vec<SweepPoint>> {
    let sim = Simulator::new(cfg.preset.clone())?;
    let pool = pool(cfg.threads)?;
    let mut out = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        let pt = pool.install(|| run_point(&sim, cfg, snr))?;
        progress(&pt);
        out.push(pt);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(mut w: W, rows: &[SweepPoint]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Measured compression rate of one `(p, n)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionPoint {
    pub p: f64,
    pub n: usize,
    pub rate: f64,
    pub entropy: f64,
    /// Blocks that did not decompress to the input.
    pub failures: usize,
}

/// Compresses `blocks` Bernoulli(p) blocks per pair and averages the rate.
pub fn compression_sweep(
    ps: &[f64],
    ns: &[usize],
    blocks: usize,
    seed: u64,
) -> Result<Vec<CompressionPoint>> {
    if blocks == 0 {
        return Err(Error::InvalidConfig("blocks must be at least 1".into()));
    }
    let mut out = Vec::new();
    for &n in ns {
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        for &p in ps {
            if !(p > 0.0 && p < 0.5) {
                return Err(Error::InvalidFlipProb(p));
            }
            let per_block: Vec<Result<(usize, bool)>> = (0..blocks as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i);
                    let raw: Vec<u8> = (0..n).map(|_| rng.random_bool(p) as u8).collect();
                    let blk = source_compress(&raw, p)?;
                    let back = source_decompress(&blk, n, p)?;
                    Ok((blk.len(), back == raw))
                })
                .collect();
            let mut bits = 0;
            let mut failures = 0;
            for r in per_block {
                let (len, ok) = r?;
                bits += len;
                failures += usize::from(!ok);
            }
            out.push(CompressionPoint {
                p,
                n,
                rate: bits as f64 / (blocks * n) as f64,
                entropy: entropy_h(p),
                failures,
            });
        }
    }
    Ok(out)
}

pub fn write_compression_csv<W: Write>(mut w: W, rows: &[CompressionPoint]) -> Result<()> {
    writeln!(w, "{COMPRESSION_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{:.6},{:.6}", r.p, r.n, r.rate, r.entropy)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_arithmetic() {
        let v = parse_snr("4:0.5:9").unwrap();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 4.0);
        assert_eq!(v[10], 9.0);
        assert_eq!(parse_snr("7").unwrap(), vec![7.0]);
        assert_eq!(parse_snr("5,6.5").unwrap(), vec![5.0, 6.5]);
        assert_eq!(parse_snr("0.1:0.1:0.3").unwrap(), vec![0.1, 0.2, 0.3]);
        for bad in ["4:0:9", "4:-1:9", "9:1:4", "a", "1:2", "nan"] {
            assert!(parse_snr(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn precedence() {
        let file = ConfigFile::from_json(
            r#"{"preset": "table1-slem-537", "frames": 10, "seed": 5, "o_pw": 1.1}"#,
        )
        .unwrap();
        let flags = ConfigFile {
            frames: Some(3),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags, &file).unwrap();
        assert_eq!(cfg.preset.name, "table1-slem-537");
        assert_eq!(cfg.frames, 3);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.preset.o_pw, 1.1);
        assert_eq!(cfg.preset.o_ph, 0.0);
        assert_eq!(cfg.snr_db.len(), 11);
    }

    #[test]
    fn config_errors() {
        assert!(ConfigFile::from_json(r#"{"bogus": 1}"#).is_err());
        let none = ConfigFile::default();
        assert!(RunConfig::resolve(&none, &none).is_err());
        let bad = ConfigFile {
            preset: Some("table1-alem-537".into()),
            frames: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&bad, &none).is_err());
        let unknown = ConfigFile {
            preset: Some("nope".into()),
            ..Default::default()
        };
        assert!(matches!(
            RunConfig::resolve(&unknown, &none),
            Err(Error::UnknownPreset(_))
        ));
    }
}
