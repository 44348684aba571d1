//! Discrete pilot channel: each path becomes a cyclic delay shift, a cyclic
//! frequency shift and a complex gain over `Z_{N_p}`.

use std::f64::consts::PI;

use log::debug;
use num_complex::Complex64;
use rand::Rng;

use super::pn::PnPilot;
use crate::channel::{add_awgn_in_place, ChannelRealization};
use crate::error::{invalid, Result};
use crate::lattice::FrameConfig;

const GRID_TOL: f64 = 1e-6;

/// Resolution of the pilot's delay/frequency shift lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotGrid {
    /// Pilot length `N_p`.
    pub len: usize,
    /// Seconds per unit delay shift.
    pub delay_res: f64,
    /// Hz per unit frequency shift.
    pub freq_res: f64,
}

impl PilotGrid {
    /// Pilot sampled at rate `w_hz`: delay step `1/W`, frequency step `W/N_p`.
    pub fn sampled(w_hz: f64, len: usize) -> Result<Self> {
        if !(w_hz > 0.0) || len == 0 {
            return invalid(format!("bad pilot grid: W={w_hz}, N_p={len}"));
        }
        Ok(Self { len, delay_res: 1.0 / w_hz, freq_res: w_hz / len as f64 })
    }

    /// Sampled at the frame bandwidth `M * delta_f`.
    pub fn frame_bandwidth(cfg: &FrameConfig, len: usize) -> Result<Self> {
        Self::sampled(cfg.bandwidth(), len)
    }

    /// Shift lattice identified with the frame's delay-Doppler lattice: delay
    /// step `1/(M delta_f)`, frequency step `delta_f/N`. Shifts then coincide
    /// with frame taps for any `N_p`.
    pub fn frame_aligned(cfg: &FrameConfig, len: usize) -> Result<Self> {
        if len == 0 {
            return invalid("pilot length must be positive");
        }
        Ok(Self { len, delay_res: cfg.delay_resolution(), freq_res: cfg.doppler_resolution() })
    }

    /// Signed frequency shift: values above `N_p/2` are negative.
    pub fn signed_freq_shift(&self, shift: usize) -> i64 {
        if shift > self.len / 2 {
            shift as i64 - self.len as i64
        } else {
            shift as i64
        }
    }
}

/// One path in the discrete pilot model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotPath {
    pub gain: Complex64,
    pub delay_shift: usize,
    pub freq_shift: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePilotModel {
    pub grid: PilotGrid,
    /// Guard length `K = ceil(max delay / delay_res)`.
    pub guard: usize,
    pub paths: Vec<PilotPath>,
}

fn round_logged(x: f64, what: &str) -> i64 {
    let r = x.round();
    if (x - r).abs() > GRID_TOL {
        debug!("{what} {x:.4} is off the pilot grid, rounded to {r}");
    }
    r as i64
}

/// Maps every tap to `(gain h' exp(j 2 pi nu K delay_res), delay / delay_res, nu / freq_res)`.
pub fn discretize_channel(ch: &ChannelRealization, grid: &PilotGrid) -> DiscretePilotModel {
    let max_delay = ch.taps().iter().map(|t| t.delay).fold(0.0, f64::max);
    let guard = (max_delay / grid.delay_res - GRID_TOL).ceil().max(0.0) as usize;
    let n_p = grid.len as i64;
    let paths = ch
        .taps()
        .iter()
        .map(|t| {
            let delay = round_logged(t.delay / grid.delay_res, "delay shift");
            let freq = round_logged(t.doppler / grid.freq_res, "frequency shift");
            PilotPath {
                gain: t.phased_gain
                    * Complex64::from_polar(1.0, 2.0 * PI * t.doppler * guard as f64 * grid.delay_res),
                delay_shift: delay.rem_euclid(n_p) as usize,
                freq_shift: freq.rem_euclid(n_p) as usize,
            }
        })
        .collect();
    DiscretePilotModel { grid: *grid, guard, paths }
}

/// `R[n] = sum_i g_i e(w_i n) S[n - d_i] + v[n]` with cyclic indexing and `CN(0, sigma2)` noise.
pub fn simulate_pilot_rx<R: Rng + ?Sized>(
    pilot: &PnPilot,
    model: &DiscretePilotModel,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let n_p = pilot.len();
    if model.grid.len != n_p {
        return invalid(format!("pilot length {n_p} does not match model grid {}", model.grid.len));
    }
    let s = pilot.values();
    let mut rx = vec![Complex64::new(0.0, 0.0); n_p];
    for path in &model.paths {
        for (n, r) in rx.iter_mut().enumerate() {
            let phase = 2.0 * PI * ((path.freq_shift * n) % n_p) as f64 / n_p as f64;
            let src = (n + n_p - path.delay_shift % n_p) % n_p;
            *r += path.gain * Complex64::from_polar(s[src], phase);
        }
    }
    add_awgn_in_place(&mut rx, sigma2, rng)?;
    Ok(rx)
}

/// Per-sample noise variance for a pilot SNR in dB: a unit-norm pilot carries
/// `1/N_p` energy per sample.
pub fn pilot_sigma2(snr_db: f64, len: usize) -> f64 {
    10f64.powf(-snr_db / 10.0) / len as f64
}
