use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pnc_sim::schemes::all_presets;
use pnc_sim::selftest;
use pnc_sim::sim::{self, ConfigFile, RunConfig};
use pnc_sim::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SELFTEST: u8 = 3;
const EXIT_RUNTIME: u8 = 1;

#[derive(Parser)]
#[command(
    name = "pnc-sim",
    version,
    about = "Asymmetric PNC link-level simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep SNR for one preset and write a CSV.
    Run(RunArgs),
    /// List the registered presets.
    Presets {
        /// Print full setups as JSON lines.
        #[arg(long)]
        json: bool,
    },
    /// Run the built-in consistency checks.
    Selftest,
    /// Measure source-codec compression rates and write a CSV.
    Compression(CompressionArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    preset: Option<String>,
    /// start:step:stop, a comma list, or one value (dB).
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (also PNC_SIM_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Amplitude mismatch of user B.
    #[arg(long)]
    o_pw: Option<f64>,
    /// Phase mismatch of user B in radians.
    #[arg(long)]
    o_ph: Option<f64>,
    /// Per-slot SNR offsets in dB: pnc-uplink,downlink,p2p-uplink,p2p-downlink.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    slot_snr_offsets: Option<Vec<f64>>,
    /// Run every slot without noise.
    #[arg(long)]
    zero_noise: bool,
    /// No progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct CompressionArgs {
    /// Flip probabilities.
    #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.05, 0.11])]
    p: Vec<f64>,
    /// Block lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [256usize, 1024])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    blocks: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_)
            | Error::UnknownPreset(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::InvalidRate(_)
            | Error::InvalidFlipProb(_)
            | Error::NotPowerOfTwo(_)
    )
}

fn fail(e: Error) -> ExitCode {
    eprintln!("pnc-sim: {e}");
    ExitCode::from(if is_config_error(&e) {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    })
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Error::InvalidConfig(format!("cannot write {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_run(a: RunArgs) -> Result<(), Error> {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?,
        None => ConfigFile::default(),
    };
    let offsets = match a.slot_snr_offsets.as_deref() {
        Some([u, d, pu, pd]) => Some([*u, *d, *pu, *pd]),
        Some(_) => return Err(Error::InvalidConfig("expected four slot offsets".into())),
        None => None,
    };
    let flags = ConfigFile {
        preset: a.preset,
        snr: a.snr,
        frames: a.frames,
        seed: a.seed,
        threads: a.threads,
        out: a.out.clone(),
        o_pw: a.o_pw,
        o_ph: a.o_ph,
        slot_snr_offsets_db: offsets,
        zero_noise: a.zero_noise.then_some(true),
        preset_override: None,
    };
    let cfg = RunConfig::resolve(&flags, &file)?;
    let out_path = flags.out.or(file.out);
    let writer = open_out(out_path.as_deref())?;

    let start = Instant::now();
    let total = cfg.snr_db.len();
    let mut done = 0;
    if !a.quiet {
        eprintln!(
            "{}: {} SNR point(s) x {} frames, seed {}",
            cfg.preset.name, total, cfg.frames, cfg.seed
        );
    }
    let rows = sim::run_sweep(&cfg, |pt| {
        done += 1;
        if !a.quiet {
            eprintln!(
                "[{done}/{total}] snr {:.2} dB  fer {:.4e}  throughput {:.0} bit/s  ({:.1} s)",
                pt.snr_db,
                pt.metrics.fer,
                pt.metrics.throughput_bps,
                start.elapsed().as_secs_f64()
            );
        }
    })?;
    sim::write_csv(writer, &rows)
}

fn cmd_presets(json: bool) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    for p in all_presets() {
        if json {
            writeln!(out, "{}", serde_json::to_string(&p)?)?;
        } else {
            writeln!(out, "{:<18} {:<5} {}", p.name, p.kind.name(), p.source)?;
        }
    }
    Ok(())
}

fn cmd_selftest() -> ExitCode {
    let start = Instant::now();
    let checks = selftest::run_all();
    let mut ok = true;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        ok &= c.passed;
    }
    eprintln!(
        "selftest finished in {:.1} s",
        start.elapsed().as_secs_f64()
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SELFTEST)
    }
}

fn cmd_compression(a: CompressionArgs) -> Result<(), Error> {
    let writer = open_out(a.out.as_deref())?;
    let rows = sim::compression_sweep(&a.p, &a.n, a.blocks, a.seed)?;
    for r in &rows {
        eprintln!(
            "p {} n {}: rate {:.4} (H = {:.4}), {} failure(s)",
            r.p, r.n, r.rate, r.entropy, r.failures
        );
        if r.failures > 0 {
            return Err(Error::MalformedBlock(format!(
                "{} block(s) did not round trip at p={} n={}",
                r.failures, r.p, r.n
            )));
        }
    }
    sim::write_compression_csv(writer, &rows)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Presets { json } => cmd_presets(json),
        Cmd::Selftest => return cmd_selftest(),
        Cmd::Compression(a) => cmd_compression(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
