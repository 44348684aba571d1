use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otfs::chanest::{
    discretize_channel, matched_filter_matrix, pilot_sigma2, simulate_pilot_rx, DiscretePilotModel, PilotGrid, PilotPath,
    PnPilot,
};
use otfs::detect::DetectorMode;
use otfs::harness::{
    ber_csv, est_error_csv, frame_rng, run_ber_sweep, run_estimated_csi_sweep, run_estimation_error_sweep,
    run_selftest, BerRecord, ExperimentConfig, RunOptions, Stream,
};
use otfs::num_complex::Complex64;

#[derive(Parser)]
#[command(name = "otfs", version, about = "Link-level OTFS simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER vs SNR with perfect channel knowledge, one curve per Doppler.
    Ber(SweepArgs),
    /// BER vs SNR with the channel estimated from a PN pilot.
    BerEst(SweepArgs),
    /// Channel-estimation error vs pilot SNR and PN length.
    EstError(SweepArgs),
    /// Matched-filter magnitude grid for a pilot through a few shifted paths.
    MfDump(MfArgs),
    /// Runs the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides detector.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output CSV (overrides output.path); `-` writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit nonzero if any point stops at the frame cap before reaching the error target.
    #[arg(long)]
    strict: bool,
    /// Write wall_s = 0 so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// SNR list in dB, comma separated (overrides sweep.snr_db).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    /// Doppler list in Hz, comma separated (overrides sweep.doppler_hz).
    #[arg(long, value_delimiter = ',')]
    doppler_hz: Option<Vec<f64>>,
    #[arg(long)]
    min_frames: Option<u64>,
    #[arg(long)]
    min_bit_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    /// Detector mode: conventional, temperature or randomized.
    #[arg(long)]
    mode: Option<DetectorMode>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// LFSR degrees, comma separated (overrides estimation.pn_degrees).
    #[arg(long, value_delimiter = ',')]
    pn_degrees: Option<Vec<u32>>,
    /// Pilot SNRs in dB, comma separated (overrides estimation.pilot_snr_db).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pilot_snr_db: Option<Vec<f64>>,
    #[arg(long)]
    draws: Option<u64>,
}

#[derive(Args)]
struct MfArgs {
    /// LFSR degree; the pilot has 2^r - 1 samples.
    #[arg(long, default_value_t = 7)]
    r: u32,
    /// Paths as delta:omega[:gain], e.g. `40:90` or `100:30:0.7`.
    #[arg(long, value_delimiter = ',', default_value = "40:90")]
    paths: Vec<String>,
    /// Per-sample pilot SNR in dB; omit for a noiseless pilot.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Take the paths from a configuration's first channel draw instead.
    #[arg(long, conflicts_with = "paths")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

impl SweepArgs {
    fn load(&self) -> otfs::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.detector.seed = s;
        }
        if let Some(v) = &self.snr_db {
            cfg.sweep.snr_db = v.clone();
        }
        if let Some(v) = &self.doppler_hz {
            cfg.sweep.doppler_hz = Some(v.clone());
            cfg.channel.max_doppler_hz = None;
            cfg.channel.speed_kmph = None;
        }
        if let Some(v) = self.min_frames {
            cfg.sweep.min_frames = v;
        }
        if let Some(v) = self.min_bit_errors {
            cfg.sweep.min_bit_errors = v;
        }
        if let Some(v) = self.max_frames {
            cfg.sweep.max_frames = v;
        }
        if let Some(v) = self.mode {
            cfg.detector.mode = v;
        }
        if let Some(v) = self.n_iter {
            cfg.detector.n_iter = v;
        }
        if let Some(v) = self.temperature {
            cfg.detector.temperature = v;
        }
        if let Some(v) = &self.pn_degrees {
            cfg.estimation.pn_degrees = v.clone();
        }
        if let Some(v) = &self.pilot_snr_db {
            cfg.estimation.pilot_snr_db = v.clone();
        }
        if let Some(v) = self.draws {
            cfg.estimation.draws = v;
        }
        if let Some(p) = &self.out {
            cfg.output.path = p.clone();
        }
        if self.no_timing {
            cfg.output.timing = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions { threads: self.threads }
    }
}

fn write_out(path: &Path, text: &str) -> otfs::Result<()> {
    if path == Path::new("-") {
        print!("{text}");
    } else {
        fs::write(path, text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn finish_ber(records: &[BerRecord], cfg: &ExperimentConfig, strict: bool) -> otfs::Result<ExitCode> {
    write_out(&cfg.output.path, &ber_csv(records)?)?;
    let unconverged = records.iter().filter(|r| !r.converged).count();
    if unconverged > 0 {
        eprintln!("warning: {unconverged} point(s) hit the frame cap below {} bit errors", cfg.sweep.min_bit_errors);
        if strict {
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_path(spec: &str) -> otfs::Result<PilotPath> {
    let bad = || otfs::Error::InvalidArgument(format!("bad path '{spec}', expected delta:omega[:gain]"));
    let parts: Vec<&str> = spec.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(bad());
    }
    let delay_shift = parts[0].trim().parse().map_err(|_| bad())?;
    let freq_shift = parts[1].trim().parse().map_err(|_| bad())?;
    let gain = match parts.get(2) {
        Some(g) => g.trim().parse().map_err(|_| bad())?,
        None => 1.0,
    };
    Ok(PilotPath { gain: Complex64::new(gain, 0.0), delay_shift, freq_shift })
}

fn mf_dump(args: &MfArgs) -> otfs::Result<ExitCode> {
    let pilot = PnPilot::new(args.r)?;
    let n_p = pilot.len();
    let model = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            let frame = cfg.frame_config()?;
            let (_, profile) = cfg.channel_profiles().remove(0);
            let ch = otfs::channel::sample_channel(&profile, &frame, &mut frame_rng(args.seed, Stream::Channel, 0))?;
            discretize_channel(&ch, &cfg.pilot_grid(n_p)?)
        }
        None => {
            let paths = args.paths.iter().map(|p| parse_path(p)).collect::<otfs::Result<Vec<_>>>()?;
            for p in &paths {
                if p.delay_shift >= n_p || p.freq_shift >= n_p {
                    return Err(otfs::Error::InvalidArgument(format!("shift outside Z_{n_p}")));
                }
            }
            DiscretePilotModel { grid: PilotGrid::sampled(1.0, n_p)?, guard: 0, paths }
        }
    };
    let sigma2 = args.snr_db.map(|s| pilot_sigma2(s, n_p)).unwrap_or(0.0);
    let rx = simulate_pilot_rx(&pilot, &model, sigma2, &mut frame_rng(args.seed, Stream::Pilot, 0))?;
    let mf = matched_filter_matrix(&rx, &pilot.to_complex())?;
    let mut buf = Vec::new();
    mf.write_csv(&mut buf)?;
    write_out(&args.out, &String::from_utf8(buf).expect("ascii csv"))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> otfs::Result<ExitCode> {
    match cli.command {
        Command::Ber(a) => {
            let cfg = a.load()?;
            finish_ber(&run_ber_sweep(&cfg, &a.options())?, &cfg, a.strict)
        }
        Command::BerEst(a) => {
            let mut cfg = a.load()?;
            cfg.estimation.enabled = true;
            finish_ber(&run_estimated_csi_sweep(&cfg, &a.options())?, &cfg, a.strict)
        }
        Command::EstError(a) => {
            let cfg = a.load()?;
            let recs = run_estimation_error_sweep(&cfg, &a.options())?;
            write_out(&cfg.output.path, &est_error_csv(&recs)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::MfDump(a) => mf_dump(&a),
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
