//! Pilot-based channel estimation in the delay-Doppler domain.
//!
//! A unit-norm m-sequence is sent through the discrete pilot channel; the
//! largest matched-filter cells give each path's delay shift, frequency shift
//! and (phase-rotated) gain, which are mapped back onto the frame lattice to
//! form an estimated channel and its matrix `H_e`.

mod matched;
mod model;
pub mod pn;

use std::f64::consts::PI;

use log::debug;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{build_h, ChannelRealization, ChannelTap, EquivChannelMatrix};
use crate::error::{invalid, Result};
use crate::lattice::FrameConfig;

pub use matched::{
    detect_peaks, matched_filter_matrix, select_peaks, MatchedFilterMatrix, Peak, PeakRule,
    DEFAULT_THRESHOLD_C,
};
pub use model::{discretize_channel, pilot_sigma2, simulate_pilot_rx, DiscretePilotModel, PilotGrid, PilotPath};
pub use pn::{gen_pn_sequence, PnPilot};

/// Maps detected peaks back to a channel on the frame lattice.
///
/// Delays become `delta * delay_res`, Dopplers `omega * freq_res` (upper half
/// of the shift range read as negative), and the gain is de-rotated by
/// `exp(-j 2 pi nu K delay_res)`. Dopplers are then rounded to the nearest
/// integer frame bin, so the result has no inter-Doppler spread.
pub fn params_to_channel(
    peaks: &[Peak],
    grid: &PilotGrid,
    guard: usize,
    cfg: &FrameConfig,
) -> Result<ChannelRealization> {
    if peaks.is_empty() {
        return invalid("no peaks to build a channel from");
    }
    let res = cfg.doppler_resolution();
    let taps = peaks
        .iter()
        .map(|p| {
            let delay = p.delay_shift as f64 * grid.delay_res;
            let nu = grid.signed_freq_shift(p.freq_shift) as f64 * grid.freq_res;
            let phased = p.value * Complex64::from_polar(1.0, -2.0 * PI * nu * guard as f64 * grid.delay_res);
            let bins = nu / res;
            let snapped = bins.round() * res;
            if (bins - bins.round()).abs() > 1e-9 {
                debug!("estimated Doppler {nu:.2} Hz re-quantized to {snapped:.2} Hz");
            }
            ChannelTap::from_phased_gain(phased, delay, snapped, cfg)
        })
        .collect();
    ChannelRealization::new(taps, 0, *cfg)
}

/// `||H - H_e||_F`.
pub fn estimation_error(h: &EquivChannelMatrix, h_e: &EquivChannelMatrix) -> Result<f64> {
    h.frobenius_distance(h_e)
}

/// Outcome of one pilot transmission.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub peaks: Vec<Peak>,
    pub channel: ChannelRealization,
}

/// Pilot, shift lattice and peak rule bundled for repeated use.
#[derive(Debug, Clone)]
pub struct ChannelEstimator {
    pilot: PnPilot,
    pilot_c: Vec<Complex64>,
    grid: PilotGrid,
    rule: PeakRule,
}

impl ChannelEstimator {
    pub fn new(pilot: PnPilot, grid: PilotGrid, rule: PeakRule) -> Result<Self> {
        if grid.len != pilot.len() {
            return invalid(format!("grid length {} does not match pilot length {}", grid.len, pilot.len()));
        }
        let pilot_c = pilot.to_complex();
        Ok(Self { pilot, pilot_c, grid, rule })
    }

    pub fn pilot(&self) -> &PnPilot {
        &self.pilot
    }

    pub fn grid(&self) -> &PilotGrid {
        &self.grid
    }

    /// Sends the pilot through `ch` with per-sample noise `sigma2` and estimates it.
    pub fn estimate<R: Rng + ?Sized>(
        &self,
        ch: &ChannelRealization,
        sigma2: f64,
        rng: &mut R,
    ) -> Result<ChannelEstimate> {
        let model = discretize_channel(ch, &self.grid);
        let rx = simulate_pilot_rx(&self.pilot, &model, sigma2, rng)?;
        let mf = matched_filter_matrix(&rx, &self.pilot_c)?;
        let peaks = select_peaks(&mf, self.rule)?;
        if peaks.is_empty() {
            return invalid("no matched-filter cell above threshold");
        }
        let channel = params_to_channel(&peaks, &self.grid, model.guard, ch.frame())?;
        Ok(ChannelEstimate { peaks, channel })
    }

    /// Estimate plus `H_e` and `||H - H_e||_F` against the true matrix `h`.
    pub fn estimate_matrix<R: Rng + ?Sized>(
        &self,
        ch: &ChannelRealization,
        h: &EquivChannelMatrix,
        sigma2: f64,
        rng: &mut R,
    ) -> Result<(EquivChannelMatrix, f64)> {
        let est = self.estimate(ch, sigma2, rng)?;
        let h_e = build_h(&est.channel, ch.frame())?;
        let err = estimation_error(h, &h_e)?;
        Ok((h_e, err))
    }
}
