//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! [frame]
//! m = 128
//! n = 32
//! delta_f = 3750.0
//! carrier_hz = 4e9
//!
//! [channel]
//! delays_us = [0.0, 2.1, 4.2, 6.3, 8.4]
//! max_doppler_hz = 1851.85
//! idi_half_width = 4
//!
//! [detector]
//! mode = "randomized"
//! n_iter = 3
//! seed = 1
//!
//! [sweep]
//! snr_db = [9.0, 11.0, 13.0]
//! ```
//!
//! Unknown keys are rejected. Every section except `[frame]` has defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{doppler_from_speed, ChannelProfile, DopplerModel, DEFAULT_IDI_HALF_WIDTH};
use crate::chanest::{PeakRule, PilotGrid};
use crate::detect::{DetectorConfig, DetectorMode};
use crate::error::{invalid, Error, Result};
use crate::lattice::{Alphabet, FrameConfig};

/// Smallest error count a point may stop at.
pub const MIN_BIT_ERRORS_FLOOR: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    #[default]
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn alphabet(self) -> Alphabet {
        match self {
            Self::Bpsk => Alphabet::bpsk(),
            Self::Qpsk => Alphabet::qpsk(),
            Self::Qam16 => Alphabet::qam16(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    pub m: usize,
    pub n: usize,
    pub delta_f: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default)]
    pub modulation: Modulation,
}

fn default_carrier() -> f64 {
    4e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Path delays in microseconds.
    #[serde(default = "default_delays_us")]
    pub delays_us: Vec<f64>,
    /// Relative tap powers; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<Vec<f64>>,
    /// Per-tap Dopplers in Hz. When set, Jakes sampling is off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dopplers_hz: Option<Vec<f64>>,
    /// Jakes maximum Doppler in Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_doppler_hz: Option<f64>,
    /// Alternative to `max_doppler_hz`: UE speed in km/h at the frame carrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_kmph: Option<f64>,
    #[serde(default = "default_idi")]
    pub idi_half_width: usize,
    /// Round every Doppler to an integer bin (no inter-Doppler interference).
    #[serde(default)]
    pub integer_doppler: bool,
}

fn default_delays_us() -> Vec<f64> {
    vec![0.0, 2.1, 4.2, 6.3, 8.4]
}

fn default_idi() -> usize {
    DEFAULT_IDI_HALF_WIDTH
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            delays_us: default_delays_us(),
            powers: None,
            dopplers_hz: None,
            max_doppler_hz: None,
            speed_kmph: None,
            idi_half_width: DEFAULT_IDI_HALF_WIDTH,
            integer_doppler: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(default = "default_mode")]
    pub mode: DetectorMode,
    #[serde(default = "default_iters")]
    pub n_iter: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_mix: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_mode() -> DetectorMode {
    DetectorMode::Randomized
}

fn default_iters() -> usize {
    3
}

fn default_temperature() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    1
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            n_iter: default_iters(),
            temperature: default_temperature(),
            r_mix: None,
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_snrs")]
    pub snr_db: Vec<f64>,
    /// One BER curve per entry, each overriding the channel's maximum Doppler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler_hz: Option<Vec<f64>>,
    #[serde(default = "default_min_frames")]
    pub min_frames: u64,
    #[serde(default = "default_min_errors")]
    pub min_bit_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    /// Frames simulated between stopping-rule checks. Fixing it keeps the
    /// frame count of every point independent of the worker count.
    #[serde(default = "default_batch")]
    pub batch_frames: u64,
}

fn default_snrs() -> Vec<f64> {
    vec![9.0, 11.0, 13.0]
}

fn default_min_frames() -> u64 {
    200
}

fn default_min_errors() -> u64 {
    MIN_BIT_ERRORS_FLOOR
}

fn default_max_frames() -> u64 {
    100_000
}

fn default_batch() -> u64 {
    50
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: default_snrs(),
            doppler_hz: None,
            min_frames: default_min_frames(),
            min_bit_errors: default_min_errors(),
            max_frames: default_max_frames(),
            batch_frames: default_batch(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PilotGridKind {
    /// Shift steps equal to the frame's delay and Doppler resolutions.
    #[default]
    FrameAligned,
    /// Pilot sampled at the frame bandwidth `M delta_f`.
    Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    #[serde(default)]
    pub enabled: bool,
    /// LFSR degrees `r`; `N_p = 2^r - 1`.
    #[serde(default = "default_degrees")]
    pub pn_degrees: Vec<u32>,
    /// Pilot SNRs in dB. For estimated-CSI BER sweeps: empty tracks the data
    /// SNR, a single value is used at every point.
    #[serde(default)]
    pub pilot_snr_db: Vec<f64>,
    /// Channel draws per estimation-error point.
    #[serde(default = "default_draws")]
    pub draws: u64,
    #[serde(default)]
    pub grid: PilotGridKind,
    /// Number of peaks kept; defaults to the number of channel taps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peaks: Option<usize>,
    /// Use a threshold `c / sqrt(N_p)` instead of a fixed peak count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_c: Option<f64>,
    /// Also emit the perfect-CSI curve in estimated-CSI sweeps.
    #[serde(default = "default_true")]
    pub perfect_reference: bool,
    /// Debug hook: replace the estimate by the true channel.
    #[serde(default)]
    pub inject_true_channel: bool,
}

fn default_degrees() -> Vec<u32> {
    vec![10]
}

fn default_draws() -> u64 {
    100
}

fn default_true() -> bool {
    true
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self {
            enabled: false,
            pn_degrees: default_degrees(),
            pilot_snr_db: Vec::new(),
            draws: default_draws(),
            grid: PilotGridKind::FrameAligned,
            peaks: None,
            threshold_c: None,
            perfect_reference: true,
            inject_true_channel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub path: PathBuf,
    /// Record wall-clock seconds; off writes 0 so reruns compare byte for byte.
    #[serde(default = "default_true")]
    pub timing: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("results.csv")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { path: default_out(), timing: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub frame: FrameSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            msg: e.message().trim().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config { line: 0, msg: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.frame_config()?;
        let ch = &self.channel;
        if ch.delays_us.is_empty() {
            return invalid("channel.delays_us must list at least one path");
        }
        if ch.delays_us.iter().any(|d| !(*d >= 0.0)) {
            return invalid("channel.delays_us must be non-negative");
        }
        if let Some(p) = &ch.powers {
            if p.len() != ch.delays_us.len() {
                return invalid("channel.powers must have one entry per delay");
            }
        }
        match (&ch.dopplers_hz, ch.max_doppler_hz, ch.speed_kmph) {
            (Some(d), None, None) if d.len() == ch.delays_us.len() => {}
            (Some(_), None, None) => return invalid("channel.dopplers_hz must have one entry per delay"),
            (None, Some(v), None) if v >= 0.0 => {}
            (None, None, Some(v)) if v >= 0.0 => {}
            (None, None, None) if self.sweep.doppler_hz.is_some() => {}
            (None, None, None) => {
                return invalid("channel needs one of dopplers_hz, max_doppler_hz, speed_kmph")
            }
            _ => {
                return invalid(
                    "channel.dopplers_hz, max_doppler_hz and speed_kmph are mutually exclusive and non-negative",
                )
            }
        }
        self.detector_config().validate()?;

        let sw = &self.sweep;
        if sw.snr_db.is_empty() {
            return invalid("sweep.snr_db must not be empty");
        }
        if sw.snr_db.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("sweep.snr_db must be strictly increasing");
        }
        if let Some(d) = &sw.doppler_hz {
            if d.is_empty() || d.iter().any(|v| !(*v >= 0.0)) {
                return invalid("sweep.doppler_hz must be a non-empty list of non-negative values");
            }
            if ch.dopplers_hz.is_some() {
                return invalid("sweep.doppler_hz cannot be combined with channel.dopplers_hz");
            }
        }
        if sw.min_bit_errors < MIN_BIT_ERRORS_FLOOR {
            return invalid(format!("sweep.min_bit_errors must be >= {MIN_BIT_ERRORS_FLOOR}"));
        }
        if sw.min_frames == 0 || sw.batch_frames == 0 {
            return invalid("sweep.min_frames and sweep.batch_frames must be positive");
        }
        if sw.max_frames < sw.min_frames {
            return invalid("sweep.max_frames must be >= sweep.min_frames");
        }

        let est = &self.estimation;
        if est.pn_degrees.is_empty() {
            return invalid("estimation.pn_degrees must not be empty");
        }
        for &r in &est.pn_degrees {
            crate::chanest::pn::feedback_taps(r)?;
        }
        if est.draws == 0 {
            return invalid("estimation.draws must be positive");
        }
        if est.peaks == Some(0) {
            return invalid("estimation.peaks must be positive");
        }
        if let Some(c) = est.threshold_c {
            if !(c > 0.0) {
                return invalid("estimation.threshold_c must be positive");
            }
        }
        Ok(())
    }

    pub fn frame_config(&self) -> Result<FrameConfig> {
        let f = &self.frame;
        FrameConfig::new(f.m, f.n, f.delta_f, f.carrier_hz)
    }

    pub fn alphabet(&self) -> Alphabet {
        self.frame.modulation.alphabet()
    }

    pub fn detector_config(&self) -> DetectorConfig {
        let d = &self.detector;
        DetectorConfig { n_iter: d.n_iter, temperature: d.temperature, mode: d.mode, r_mix: d.r_mix }
    }

    /// Maximum Doppler of the channel section alone (Hz).
    fn base_max_doppler(&self) -> f64 {
        let ch = &self.channel;
        if let Some(d) = &ch.dopplers_hz {
            d.iter().fold(0.0, |a, v| a.max(v.abs()))
        } else if let Some(v) = ch.max_doppler_hz {
            v
        } else if let Some(s) = ch.speed_kmph {
            doppler_from_speed(s, self.frame.carrier_hz)
        } else {
            0.0
        }
    }

    /// `(label Doppler, profile)` for every BER curve.
    pub fn channel_profiles(&self) -> Vec<(f64, ChannelProfile)> {
        let ch = &self.channel;
        let delays: Vec<f64> = ch.delays_us.iter().map(|d| d * 1e-6).collect();
        let make = |doppler: DopplerModel| ChannelProfile {
            delays: delays.clone(),
            doppler,
            powers: ch.powers.clone(),
            idi_half_width: ch.idi_half_width,
            integer_doppler: ch.integer_doppler,
        };
        if let Some(d) = &ch.dopplers_hz {
            return vec![(self.base_max_doppler(), make(DopplerModel::Fixed { hz: d.clone() }))];
        }
        let list = self.sweep.doppler_hz.clone().unwrap_or_else(|| vec![self.base_max_doppler()]);
        list.into_iter().map(|v| (v, make(DopplerModel::Jakes { max_hz: v }))).collect()
    }

    pub fn pilot_grid(&self, n_p: usize) -> Result<PilotGrid> {
        let frame = self.frame_config()?;
        match self.estimation.grid {
            PilotGridKind::FrameAligned => PilotGrid::frame_aligned(&frame, n_p),
            PilotGridKind::Bandwidth => PilotGrid::frame_bandwidth(&frame, n_p),
        }
    }

    pub fn peak_rule(&self) -> PeakRule {
        let est = &self.estimation;
        match (est.threshold_c, est.peaks) {
            (Some(c), _) => PeakRule::Threshold { c },
            (None, Some(p)) => PeakRule::Count(p),
            (None, None) => PeakRule::Count(self.channel.delays_us.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[frame]\nm = 32\nn = 16\ndelta_f = 15000.0\n\n[channel]\nmax_doppler_hz = 100.0\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.detector.n_iter, 3);
        assert_eq!(cfg.sweep.min_frames, 200);
        assert_eq!(cfg.channel.delays_us.len(), 5);
        assert_eq!(cfg.peak_rule(), PeakRule::Count(5));
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        cfg.sweep.doppler_hz = Some(vec![100.0, 444.44]);
        cfg.channel.max_doppler_hz = None;
        cfg.estimation.pilot_snr_db = vec![0.0, 5.0];
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_reports_name_and_line() {
        let text = format!("{MINIMAL}\n[sweep]\nsnrdb = [1.0]\n");
        match ExperimentConfig::from_toml_str(&text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 10);
                assert!(msg.contains("snrdb"), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn semantic_checks() {
        let bad = [
            "[sweep]\nsnr_db = [5.0, 5.0]\n",
            "[sweep]\nmin_bit_errors = 99\n",
            "[estimation]\npn_degrees = [17]\n",
            "[detector]\ntemperature = 0.5\n",
        ];
        for extra in bad {
            let text = format!("{MINIMAL}{extra}");
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{extra}");
        }
        let both = "[frame]\nm = 4\nn = 4\ndelta_f = 1.0\n[channel]\nmax_doppler_hz = 1.0\nspeed_kmph = 3.0\n";
        assert!(ExperimentConfig::from_toml_str(both).is_err());
    }

    #[test]
    fn speed_converts_to_doppler() {
        let text = "[frame]\nm = 4\nn = 4\ndelta_f = 1.0\n[channel]\nspeed_kmph = 500.0\n";
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let (nu, _) = &cfg.channel_profiles()[0];
        assert!((nu - 1851.85).abs() < 0.01);
    }
}
