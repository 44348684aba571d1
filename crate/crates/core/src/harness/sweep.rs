//! Monte-Carlo sweeps.
//!
//! Frames run in fixed-size batches; the stopping rule is checked only
//! between batches and per-frame outcomes are summed in frame order, so the
//! records do not depend on the number of workers.

use log::info;
use rand::Rng;

use super::config::ExperimentConfig;
use super::records::{BerRecord, CsiMode, EstErrorRecord};
use super::rng::{frame_rng, Stream};
use crate::chanest::{pilot_sigma2, ChannelEstimator, PnPilot};
use crate::channel::{add_awgn, apply_channel_dd, build_h, sample_channel, snr_to_sigma2, ChannelProfile};
use crate::detect::{detect, DetectorConfig};
use crate::error::{invalid, Result};
use crate::lattice::{map_bits, Alphabet, FrameConfig};

/// Execution knobs that never change the results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the global default.
    pub threads: usize,
}

struct Workers {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Workers {
    fn new(opts: &RunOptions) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = if opts.threads == 0 {
                None
            } else {
                Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(opts.threads)
                        .build()
                        .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?,
                )
            };
            Ok(Self { pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = opts;
            Ok(Self {})
        }
    }

    /// `f` over `range`, results in index order.
    fn map<T, F>(&self, range: std::ops::Range<u64>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let run = || range.clone().into_par_iter().map(&f).collect::<Result<Vec<T>>>();
            match &self.pool {
                Some(p) => p.install(run),
                None => run(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            range.map(f).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameOutcome {
    bits: u64,
    errors: u64,
    h_err: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct PointTotals {
    frames: u64,
    bits: u64,
    errors: u64,
    h_err_sum: f64,
    converged: bool,
}

fn run_point<F>(cfg: &ExperimentConfig, workers: &Workers, frame: F) -> Result<PointTotals>
where
    F: Fn(u64) -> Result<FrameOutcome> + Sync + Send,
{
    let sw = &cfg.sweep;
    let mut t = PointTotals::default();
    loop {
        let end = (t.frames + sw.batch_frames).min(sw.max_frames);
        for o in workers.map(t.frames..end, &frame)? {
            t.bits += o.bits;
            t.errors += o.errors;
            t.h_err_sum += o.h_err;
        }
        t.frames = end;
        t.converged = t.errors >= sw.min_bit_errors;
        if (t.frames >= sw.min_frames && t.converged) || t.frames >= sw.max_frames {
            return Ok(t);
        }
    }
}

/// Everything a single frame needs, shared read-only across workers.
struct FrameContext<'a> {
    seed: u64,
    frame: FrameConfig,
    alphabet: Alphabet,
    detector: DetectorConfig,
    profile: &'a ChannelProfile,
}

impl FrameContext<'_> {
    /// Channel draw, bits, DD channel, noise, detection. With `estimator`
    /// the detector sees `H_e` from a pilot transmission instead of `H`.
    fn simulate(
        &self,
        idx: u64,
        sigma2: f64,
        estimator: Option<(&ChannelEstimator, f64, bool)>,
    ) -> Result<FrameOutcome> {
        let ch = sample_channel(self.profile, &self.frame, &mut frame_rng(self.seed, Stream::Channel, idx))?;
        let h = build_h(&ch, &self.frame)?;
        let (h_det, h_err) = match estimator {
            None => (None, 0.0),
            Some((_, _, true)) => (None, 0.0),
            Some((est, pilot_s2, false)) => {
                let (h_e, err) = est.estimate_matrix(&ch, &h, pilot_s2, &mut frame_rng(self.seed, Stream::Pilot, idx))?;
                (Some(h_e), err)
            }
        };

        let n_bits = self.frame.len() * self.alphabet.bits_per_symbol();
        let mut rng = frame_rng(self.seed, Stream::Bits, idx);
        let bits: Vec<u8> = (0..n_bits).map(|_| rng.random::<bool>() as u8).collect();
        let x = map_bits(&bits, &self.alphabet, &self.frame)?;
        let y = add_awgn(&apply_channel_dd(&x, &ch)?, sigma2, &mut frame_rng(self.seed, Stream::Noise, idx))?;

        let det = detect(
            y.as_slice(),
            h_det.as_ref().unwrap_or(&h),
            &self.alphabet,
            sigma2,
            &self.detector,
            &mut frame_rng(self.seed, Stream::Detector, idx),
        )?;
        let mut got = Vec::with_capacity(n_bits);
        for &s in &det.symbols {
            self.alphabet.push_bits(s, &mut got);
        }
        let errors = bits.iter().zip(&got).filter(|(a, b)| a != b).count() as u64;
        Ok(FrameOutcome { bits: n_bits as u64, errors, h_err })
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(Option<std::time::Instant>);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start(on: bool) -> Self {
        Self(on.then(std::time::Instant::now))
    }

    fn seconds(&self) -> f64 {
        self.0.map(|t| t.elapsed().as_secs_f64()).unwrap_or(0.0)
    }
}

#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start(_on: bool) -> Self {
        Self
    }

    fn seconds(&self) -> f64 {
        0.0
    }
}

fn record(
    cfg: &ExperimentConfig,
    snr_db: f64,
    doppler_hz: f64,
    csi: CsiMode,
    n_p: Option<usize>,
    t: PointTotals,
    wall_s: f64,
) -> BerRecord {
    if !t.converged {
        log::warn!("point at {snr_db} dB stopped at the frame cap with {} errors", t.errors);
    }
    BerRecord {
        snr_db,
        doppler_hz,
        detector: cfg.detector.mode.as_str().to_string(),
        csi,
        n_p,
        frames: t.frames,
        bits: t.bits,
        bit_errors: t.errors,
        ber: t.errors as f64 / t.bits as f64,
        h_err_f_mean: (csi == CsiMode::Estimated).then(|| t.h_err_sum / t.frames as f64),
        wall_s,
        seed: cfg.detector.seed,
        converged: t.converged,
    }
}

fn perfect_curve(
    cfg: &ExperimentConfig,
    workers: &Workers,
    doppler_hz: f64,
    ctx: &FrameContext,
    out: &mut Vec<BerRecord>,
) -> Result<()> {
    for &snr in &cfg.sweep.snr_db {
        let clock = Stopwatch::start(cfg.output.timing);
        let sigma2 = snr_to_sigma2(snr);
        let t = run_point(cfg, workers, |i| ctx.simulate(i, sigma2, None))?;
        info!("perfect CSI, {doppler_hz} Hz, {snr} dB: {} errors / {} bits", t.errors, t.bits);
        out.push(record(cfg, snr, doppler_hz, CsiMode::Perfect, None, t, clock.seconds()));
    }
    Ok(())
}

fn context<'a>(cfg: &ExperimentConfig, profile: &'a ChannelProfile) -> Result<FrameContext<'a>> {
    Ok(FrameContext {
        seed: cfg.detector.seed,
        frame: cfg.frame_config()?,
        alphabet: cfg.alphabet(),
        detector: cfg.detector_config(),
        profile,
    })
}

/// Perfect-CSI BER, one curve per configured Doppler.
pub fn run_ber_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let workers = Workers::new(opts)?;
    let mut out = Vec::new();
    for (doppler_hz, profile) in cfg.channel_profiles() {
        let ctx = context(cfg, &profile)?;
        perfect_curve(cfg, &workers, doppler_hz, &ctx, &mut out)?;
    }
    Ok(out)
}

fn estimator_for(cfg: &ExperimentConfig, r: u32) -> Result<ChannelEstimator> {
    let pilot = PnPilot::new(r)?;
    let grid = cfg.pilot_grid(pilot.len())?;
    ChannelEstimator::new(pilot, grid, cfg.peak_rule())
}

/// BER with `H` estimated from a pilot in every frame, one curve per pilot
/// length, optionally preceded by the perfect-CSI reference.
pub fn run_estimated_csi_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let est_cfg = &cfg.estimation;
    if !est_cfg.enabled {
        return invalid("estimated-CSI sweep needs estimation.enabled = true");
    }
    if est_cfg.pilot_snr_db.len() > 1 {
        return invalid("estimated-CSI sweep takes at most one pilot SNR (empty tracks the data SNR)");
    }
    let workers = Workers::new(opts)?;
    let mut out = Vec::new();
    for (doppler_hz, profile) in cfg.channel_profiles() {
        let ctx = context(cfg, &profile)?;
        if est_cfg.perfect_reference {
            perfect_curve(cfg, &workers, doppler_hz, &ctx, &mut out)?;
        }
        for &r in &est_cfg.pn_degrees {
            let est = estimator_for(cfg, r)?;
            let n_p = est.pilot().len();
            for &snr in &cfg.sweep.snr_db {
                let clock = Stopwatch::start(cfg.output.timing);
                let sigma2 = snr_to_sigma2(snr);
                let pilot_snr = est_cfg.pilot_snr_db.first().copied().unwrap_or(snr);
                let pilot_s2 = pilot_sigma2(pilot_snr, n_p);
                let t = run_point(cfg, &workers, |i| {
                    ctx.simulate(i, sigma2, Some((&est, pilot_s2, est_cfg.inject_true_channel)))
                })?;
                info!("N_p = {n_p}, {snr} dB: {} errors / {} bits", t.errors, t.bits);
                out.push(record(cfg, snr, doppler_hz, CsiMode::Estimated, Some(n_p), t, clock.seconds()));
            }
        }
    }
    Ok(out)
}

/// Mean `||H - H_e||_F` over `estimation.draws` channels for every
/// (pilot length, pilot SNR) pair.
pub fn run_estimation_error_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<EstErrorRecord>> {
    cfg.validate()?;
    let est_cfg = &cfg.estimation;
    if est_cfg.pilot_snr_db.is_empty() {
        return invalid("estimation-error sweep needs estimation.pilot_snr_db");
    }
    let workers = Workers::new(opts)?;
    let frame = cfg.frame_config()?;
    let seed = cfg.detector.seed;
    let mut out = Vec::new();
    for (doppler_hz, profile) in cfg.channel_profiles() {
        for &r in &est_cfg.pn_degrees {
            let est = estimator_for(cfg, r)?;
            let n_p = est.pilot().len();
            for &snr in &est_cfg.pilot_snr_db {
                let s2 = pilot_sigma2(snr, n_p);
                let draws = workers.map(0..est_cfg.draws, |i| {
                    let ch = sample_channel(&profile, &frame, &mut frame_rng(seed, Stream::Channel, i))?;
                    let h = build_h(&ch, &frame)?;
                    let err = if est_cfg.inject_true_channel {
                        0.0
                    } else {
                        est.estimate_matrix(&ch, &h, s2, &mut frame_rng(seed, Stream::Pilot, i))?.1
                    };
                    Ok((err, h.frobenius_norm()))
                })?;
                let k = draws.len() as f64;
                let rec = EstErrorRecord {
                    pilot_snr_db: snr,
                    doppler_hz,
                    n_p,
                    draws: est_cfg.draws,
                    h_err_f_mean: draws.iter().map(|d| d.0).sum::<f64>() / k,
                    h_norm_f_mean: draws.iter().map(|d| d.1).sum::<f64>() / k,
                    seed,
                };
                info!("N_p = {n_p}, pilot {snr} dB: mean error {:.4}", rec.h_err_f_mean);
                out.push(rec);
            }
        }
    }
    Ok(out)
}
