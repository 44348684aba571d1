//! Sparse delay-Doppler channels.
//!
//! A channel is a handful of taps, each with a complex gain, a delay that
//! sits on the delay lattice and a Doppler that may fall between Doppler
//! bins. Received DD symbols follow
//!
//! ```text
//! y[k,l] = sum_i sum_{q=-E..E} h'_i G(q, gamma_i) x[(k - beta_i + q) mod N, (l - alpha_i) mod M] + v[k,l]
//! ```
//!
//! with `G` the inter-Doppler interference coefficient of [`g_factor`].

mod matrix;

use std::f64::consts::PI;
use std::io::Write;

use log::debug;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{DDFrame, Frame, FrameConfig};

pub use matrix::{build_h, EquivChannelMatrix};

/// Default IDI half-width.
pub const DEFAULT_IDI_HALF_WIDTH: usize = 4;

/// Nominal propagation speed used to turn UE speed into Doppler.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Maximum Doppler `v * f_c / c` for a UE speed in km/h.
pub fn doppler_from_speed(speed_kmph: f64, carrier_hz: f64) -> f64 {
    speed_kmph / 3.6 * carrier_hz / SPEED_OF_LIGHT
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTap {
    /// Path gain `h_i`.
    pub gain: Complex64,
    /// Delay in seconds, on the delay lattice.
    pub delay: f64,
    /// Doppler shift in Hz.
    pub doppler: f64,
    pub delay_tap: usize,
    /// Integer Doppler tap, reduced modulo `N`.
    pub doppler_tap: usize,
    /// Fractional Doppler in `[0, 1)`.
    pub doppler_frac: f64,
    /// `h_i exp(-j 2 pi nu_i tau_i)`.
    pub phased_gain: Complex64,
}

impl ChannelTap {
    /// Quantizes a physical path onto the frame lattice. The delay is snapped to
    /// the nearest delay bin; the Doppler keeps its fractional part.
    pub fn new(gain: Complex64, delay: f64, doppler: f64, cfg: &FrameConfig) -> Self {
        let delay_tap = cfg.delay_to_tap(delay);
        let snapped = (delay * cfg.bandwidth()).round() * cfg.delay_resolution();
        let dt = cfg.doppler_to_tap(doppler);
        Self {
            gain,
            delay: snapped,
            doppler,
            delay_tap,
            doppler_tap: dt.tap,
            doppler_frac: dt.frac,
            phased_gain: gain * Complex64::from_polar(1.0, -2.0 * PI * doppler * snapped),
        }
    }

    /// Builds a tap directly from its phase-rotated gain (as recovered by channel estimation).
    pub fn from_phased_gain(phased_gain: Complex64, delay: f64, doppler: f64, cfg: &FrameConfig) -> Self {
        let mut tap = Self::new(Complex64::new(0.0, 0.0), delay, doppler, cfg);
        tap.phased_gain = phased_gain;
        tap.gain = phased_gain * Complex64::from_polar(1.0, 2.0 * PI * doppler * tap.delay);
        tap
    }
}

/// Doppler assignment for the taps of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerModel {
    /// `nu_i = nu_max cos(theta_i)`, `theta_i ~ U(0, pi)`.
    Jakes { max_hz: f64 },
    /// Tabulated per-tap Dopplers.
    Fixed { hz: Vec<f64> },
}

/// Statistical description of a channel; [`sample_channel`] draws realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    /// Path delays in seconds, one per tap.
    pub delays: Vec<f64>,
    pub doppler: DopplerModel,
    /// Relative tap powers; `None` means uniform. Normalized to unit sum.
    pub powers: Option<Vec<f64>>,
    pub idi_half_width: usize,
    /// Snap every Doppler to the nearest integer bin (no IDI).
    pub integer_doppler: bool,
}

impl ChannelProfile {
    /// Uniform power profile with Jakes Doppler.
    pub fn jakes(delays: Vec<f64>, max_doppler_hz: f64) -> Self {
        Self {
            delays,
            doppler: DopplerModel::Jakes { max_hz: max_doppler_hz },
            powers: None,
            idi_half_width: DEFAULT_IDI_HALF_WIDTH,
            integer_doppler: false,
        }
    }

    /// Uniform power profile with fixed per-tap Dopplers, snapped to integer bins.
    pub fn fixed(delays: Vec<f64>, dopplers_hz: Vec<f64>) -> Self {
        Self {
            delays,
            doppler: DopplerModel::Fixed { hz: dopplers_hz },
            powers: None,
            idi_half_width: DEFAULT_IDI_HALF_WIDTH,
            integer_doppler: true,
        }
    }

    pub fn taps(&self) -> usize {
        self.delays.len()
    }
}

/// Five-tap delay profile spaced 2.1 us (seconds).
pub fn five_tap_delays() -> Vec<f64> {
    vec![0.0, 2.1e-6, 4.2e-6, 6.3e-6, 8.4e-6]
}

/// Five-tap delay-Doppler profile used for the estimation experiments: (seconds, Hz).
pub fn estimation_profile() -> (Vec<f64>, Vec<f64>) {
    (
        vec![2.1e-6, 4.2e-6, 6.3e-6, 8.4e-6, 10.4e-6],
        vec![0.0, 470.0, 940.0, 1410.0, 1880.0],
    )
}

/// One draw of a sparse DD channel, bound to a frame geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    taps: Vec<ChannelTap>,
    idi_half_width: usize,
    frame: FrameConfig,
}

impl ChannelRealization {
    pub fn new(taps: Vec<ChannelTap>, idi_half_width: usize, frame: FrameConfig) -> Result<Self> {
        if taps.is_empty() {
            return invalid("channel needs at least one tap");
        }
        for t in &taps {
            if t.delay_tap >= frame.m() || t.doppler_tap >= frame.n() {
                return invalid(format!(
                    "tap ({}, {}) outside {}x{} lattice",
                    t.doppler_tap,
                    t.delay_tap,
                    frame.n(),
                    frame.m()
                ));
            }
            if !(0.0..1.0).contains(&t.doppler_frac) {
                return invalid(format!("fractional Doppler {} not in [0, 1)", t.doppler_frac));
            }
        }
        Ok(Self { taps, idi_half_width, frame })
    }

    /// Single unit tap at the origin.
    pub fn identity(frame: FrameConfig) -> Self {
        let tap = ChannelTap::new(Complex64::new(1.0, 0.0), 0.0, 0.0, &frame);
        Self::new(vec![tap], 0, frame).unwrap()
    }

    pub fn taps(&self) -> &[ChannelTap] {
        &self.taps
    }

    pub fn frame(&self) -> &FrameConfig {
        &self.frame
    }

    /// Configured IDI half-width `E`.
    pub fn idi_half_width(&self) -> usize {
        self.idi_half_width
    }

    /// `E` clamped so the `2E+1` IDI terms address distinct Doppler bins.
    pub fn effective_half_width(&self) -> usize {
        self.idi_half_width.min((self.frame.n() - 1) / 2)
    }

    pub fn is_integer_doppler(&self) -> bool {
        self.taps.iter().all(|t| t.doppler_frac == 0.0)
    }

    /// `sum_i |h_i|^2`.
    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum()
    }

    /// Nonzero `(q, h'_i G(q, gamma_i))` pairs of tap `i`.
    pub(crate) fn tap_coefficients(&self, tap: &ChannelTap) -> Vec<(i64, Complex64)> {
        let e = self.effective_half_width() as i64;
        let n = self.frame.n();
        (-e..=e)
            .filter_map(|q| {
                let g = g_factor(q, tap.doppler_frac, n);
                (g != Complex64::new(0.0, 0.0)).then(|| (q, tap.phased_gain * g))
            })
            .collect()
    }

    /// CSV dump: `i,re_h,im_h,tau_s,nu_hz,alpha,beta,gamma`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,re_h,im_h,tau_s,nu_hz,alpha,beta,gamma")?;
        for (i, t) in self.taps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{:e},{},{},{},{}",
                i, t.gain.re, t.gain.im, t.delay, t.doppler, t.delay_tap, t.doppler_tap, t.doppler_frac
            )?;
        }
        Ok(())
    }
}

/// Draws taps with gains `CN(0, p_i)` and Dopplers from the profile's model.
pub fn sample_channel<R: Rng + ?Sized>(
    profile: &ChannelProfile,
    frame: &FrameConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let p = profile.taps();
    if p == 0 {
        return invalid("empty delay profile");
    }
    if profile.delays.iter().any(|&d| !(d >= 0.0)) {
        return invalid("delays must be non-negative");
    }
    let powers = match &profile.powers {
        None => vec![1.0 / p as f64; p],
        Some(w) => {
            if w.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: w.len() });
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|&x| x < 0.0) || !(total > 0.0) {
                return invalid("tap powers must be non-negative with positive sum");
            }
            w.iter().map(|x| x / total).collect()
        }
    };
    match &profile.doppler {
        DopplerModel::Jakes { max_hz } if !(*max_hz >= 0.0) => {
            return invalid(format!("max Doppler must be >= 0, got {max_hz}"))
        }
        DopplerModel::Fixed { hz } if hz.len() != p => {
            return Err(Error::DimensionMismatch { expected: p, got: hz.len() })
        }
        _ => {}
    }

    let mut taps = Vec::with_capacity(p);
    for i in 0..p {
        let gain = complex_gaussian(rng) * powers[i].sqrt();
        let mut nu = match &profile.doppler {
            DopplerModel::Jakes { max_hz } => {
                let theta: f64 = rng.random::<f64>() * PI;
                max_hz * theta.cos()
            }
            DopplerModel::Fixed { hz } => hz[i],
        };
        if profile.integer_doppler {
            let res = frame.doppler_resolution();
            let snapped = (nu / res).round() * res;
            if snapped != nu {
                debug!("tap {i}: Doppler {nu} Hz snapped to {snapped} Hz");
            }
            nu = snapped;
        }
        taps.push(ChannelTap::new(gain, profile.delays[i], nu, frame));
    }
    ChannelRealization::new(taps, profile.idi_half_width, *frame)
}

/// Unit-variance circularly-symmetric complex Gaussian.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// IDI coefficient `(1/N) sum_{c<N} exp(j 2 pi (q + gamma) c / N)` in closed form.
///
/// Returns exactly 1 when `q + gamma` is a multiple of `N` and exactly 0 at
/// the other integers.
pub fn g_factor(q: i64, gamma: f64, n: usize) -> Complex64 {
    let x = -(q as f64) - gamma;
    if x.fract() == 0.0 {
        let hit = (x as i64).rem_euclid(n as i64) == 0;
        return Complex64::new(if hit { 1.0 } else { 0.0 }, 0.0);
    }
    let num = Complex64::from_polar(1.0, -2.0 * PI * x) - 1.0;
    let den = Complex64::from_polar(1.0, -2.0 * PI * x / n as f64) - 1.0;
    num / (den * n as f64)
}

/// Delay-axis coupling: `M` when `(l - m - alpha) mod M == 0`, else 0.
pub fn f_factor(l: i64, m: i64, alpha: i64, big_m: usize) -> f64 {
    if (l - m - alpha).rem_euclid(big_m as i64) == 0 {
        big_m as f64
    } else {
        0.0
    }
}

fn check_frame(x: &DDFrame, ch: &ChannelRealization) -> Result<()> {
    if x.n() != ch.frame.n() || x.m() != ch.frame.m() {
        return Err(Error::DimensionMismatch {
            expected: ch.frame.len(),
            got: x.n() * x.m(),
        });
    }
    Ok(())
}

/// Noiseless DD-domain channel output with inter-Doppler interference.
pub fn apply_channel_dd(x: &DDFrame, ch: &ChannelRealization) -> Result<DDFrame> {
    check_frame(x, ch)?;
    let (n, m) = (x.n(), x.m());
    let mut y = DDFrame::zeros(n, m);
    for tap in &ch.taps {
        for (q, coef) in ch.tap_coefficients(tap) {
            let shift_k = (q - tap.doppler_tap as i64).rem_euclid(n as i64) as usize;
            for l in 0..m {
                let src_l = (l + m - tap.delay_tap) % m;
                for k in 0..n {
                    let src_k = (k + shift_k) % n;
                    let v = y.get(k, l) + coef * x.get(src_k, src_l);
                    y.set(k, l, v);
                }
            }
        }
    }
    Ok(y)
}

/// Noiseless output of an integer-Doppler channel: a sum of 2D cyclic shifts.
pub fn apply_channel_integer(x: &DDFrame, ch: &ChannelRealization) -> Result<DDFrame> {
    check_frame(x, ch)?;
    if !ch.is_integer_doppler() {
        return invalid("integer-Doppler relation requires zero fractional Doppler on every tap");
    }
    let (n, m) = (x.n(), x.m());
    Ok(DDFrame::from_fn(n, m, |k, l| {
        ch.taps
            .iter()
            .map(|t| {
                let src_k = (k + n - t.doppler_tap) % n;
                let src_l = (l + m - t.delay_tap) % m;
                t.phased_gain * x.get(src_k, src_l)
            })
            .sum()
    }))
}

/// Adds i.i.d. `CN(0, sigma2)` noise to every cell.
pub fn add_awgn<D: Clone, R: Rng + ?Sized>(y: &Frame<D>, sigma2: f64, rng: &mut R) -> Result<Frame<D>> {
    let mut out = y.clone();
    add_awgn_in_place(out.as_mut_slice(), sigma2, rng)?;
    Ok(out)
}

pub fn add_awgn_in_place<R: Rng + ?Sized>(samples: &mut [Complex64], sigma2: f64, rng: &mut R) -> Result<()> {
    if !(sigma2 >= 0.0) {
        return invalid(format!("noise variance must be >= 0, got {sigma2}"));
    }
    if sigma2 == 0.0 {
        return Ok(());
    }
    let scale = sigma2.sqrt();
    for s in samples.iter_mut() {
        *s += complex_gaussian(rng) * scale;
    }
    Ok(())
}

/// Noise variance for a given SNR in dB.
///
/// SNR is the average received symbol energy over `sigma2`. With a
/// unit-energy alphabet and unit total channel power that energy is 1, so
/// `sigma2 = 10^(-snr/10)`.
pub fn snr_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, m: usize) -> FrameConfig {
        FrameConfig::new(m, n, 15_000.0, 4e9).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn brute_g(q: i64, gamma: f64, n: usize) -> Complex64 {
        (0..n)
            .map(|cc| Complex64::from_polar(1.0, 2.0 * PI * (q as f64 + gamma) * cc as f64 / n as f64))
            .sum::<Complex64>()
            / n as f64
    }

    #[test]
    fn g_factor_special_values() {
        assert_eq!(g_factor(0, 0.0, 32), c(1.0, 0.0));
        for n in [2, 7, 32] {
            assert_eq!(g_factor(1, 0.0, n), c(0.0, 0.0));
        }
        assert_eq!(g_factor(32, 0.0, 32), c(1.0, 0.0));
        assert!((g_factor(0, 0.5, 32) - brute_g(0, 0.5, 32)).norm() < 1e-12);
    }

    #[test]
    fn g_factor_matches_geometric_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.random_range(1..=64usize);
            let q = rng.random_range(-10..=10i64);
            let gamma: f64 = rng.random();
            assert!((g_factor(q, gamma, n) - brute_g(q, gamma, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn g_factor_energy_over_one_period_is_one() {
        for n in [4usize, 7, 16, 32] {
            for gamma in [0.0, 0.1, 0.5, 0.93] {
                let lo = -((n / 2) as i64);
                let hi = (n as i64 + 1) / 2 - 1;
                let brute: f64 = (lo..=hi).map(|q| brute_g(q, gamma, n).norm_sqr()).sum();
                assert!((brute - 1.0).abs() < 1e-12);
                let closed: f64 = (lo..=hi).map(|q| g_factor(q, gamma, n).norm_sqr()).sum();
                assert!((closed - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f_factor_cases() {
        assert_eq!(f_factor(5, 2, 3, 8), 8.0);
        assert_eq!(f_factor(5 + 8, 2, 3, 8), 8.0);
        assert_eq!(f_factor(6, 2, 3, 8), 0.0);
    }

    #[test]
    fn identity_channel_passes_frame() {
        let f = cfg(4, 6);
        let x = DDFrame::from_fn(4, 6, |k, l| c(k as f64, l as f64));
        let mut ch = ChannelRealization::identity(f);
        for e in [0, 1, 4, 10] {
            ch.idi_half_width = e;
            assert_eq!(apply_channel_dd(&x, &ch).unwrap(), x);
        }
    }

    #[test]
    fn pure_delay_is_cyclic_shift() {
        let f = cfg(4, 5);
        let tap = ChannelTap::new(c(1.0, 0.0), f.tap_to_delay(1), 0.0, &f);
        let ch = ChannelRealization::new(vec![tap], 4, f).unwrap();
        let x = DDFrame::from_fn(4, 5, |k, l| c(k as f64, l as f64 * 3.0));
        let y = apply_channel_dd(&x, &ch).unwrap();
        for k in 0..4 {
            for l in 0..5 {
                assert_eq!(y.get(k, l), x.get(k, (l + 4) % 5));
            }
        }
    }

    #[test]
    fn integer_relation_is_double_cyclic_shift() {
        let f = cfg(8, 8);
        let tap = ChannelTap::new(c(1.0, 0.0), f.tap_to_delay(3), 2.0 * f.doppler_resolution(), &f);
        assert_eq!((tap.doppler_tap, tap.delay_tap), (2, 3));
        let ch = ChannelRealization::new(vec![tap], 4, f).unwrap();
        let x = DDFrame::from_fn(8, 8, |k, l| c((k * 8 + l) as f64, 0.0));
        let y = apply_channel_integer(&x, &ch).unwrap();
        for k in 0..8 {
            for l in 0..8 {
                let expect = x.get((k + 6) % 8, (l + 5) % 8) * tap.phased_gain;
                assert!((y.get(k, l) - expect).norm() < 1e-12);
            }
        }
        let z = DDFrame::zeros(8, 8);
        assert_eq!(apply_channel_integer(&z, &ch).unwrap(), z);
    }

    #[test]
    fn integer_relation_rejects_fractional_taps() {
        let f = cfg(8, 8);
        let tap = ChannelTap::new(c(1.0, 0.0), 0.0, 0.4 * f.doppler_resolution(), &f);
        let ch = ChannelRealization::new(vec![tap], 4, f).unwrap();
        assert!(apply_channel_integer(&DDFrame::zeros(8, 8), &ch).is_err());
    }

    #[test]
    fn sampled_taps_follow_profile() {
        let f = FrameConfig::new(128, 32, 3750.0, 4e9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = sample_channel(&ChannelProfile::jakes(five_tap_delays(), 1851.0), &f, &mut rng).unwrap();
        let alphas: Vec<_> = ch.taps().iter().map(|t| t.delay_tap).collect();
        assert_eq!(alphas, vec![0, 1, 2, 3, 4]);
        for t in ch.taps() {
            assert!((t.phased_gain.norm() - t.gain.norm()).abs() < 1e-12);
            assert!(t.doppler.abs() <= 1851.0);
        }

        let ch = sample_channel(&ChannelProfile::jakes(five_tap_delays(), 0.0), &f, &mut rng).unwrap();
        for t in ch.taps() {
            assert_eq!((t.doppler_tap, t.doppler_frac), (0, 0.0));
        }
    }

    #[test]
    fn sample_channel_errors() {
        let f = cfg(8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_channel(&ChannelProfile::jakes(vec![], 10.0), &f, &mut rng).is_err());
        assert!(sample_channel(&ChannelProfile::jakes(vec![0.0], -1.0), &f, &mut rng).is_err());
        let p = ChannelProfile::fixed(vec![0.0, 1e-6], vec![0.0]);
        assert!(sample_channel(&p, &f, &mut rng).is_err());
    }

    #[test]
    fn fixed_profile_snaps_to_integer_bins() {
        let f = FrameConfig::new(32, 32, 15_000.0, 4e9).unwrap();
        let (d, nu) = estimation_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = sample_channel(&ChannelProfile::fixed(d, nu), &f, &mut rng).unwrap();
        assert!(ch.is_integer_doppler());
        let taps: Vec<_> = ch.taps().iter().map(|t| (t.delay_tap, t.doppler_tap)).collect();
        assert_eq!(taps, vec![(1, 0), (2, 1), (3, 2), (4, 3), (5, 4)]);
    }

    #[test]
    fn awgn_zero_variance_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = DDFrame::from_fn(3, 3, |k, l| c(k as f64, l as f64));
        assert_eq!(add_awgn(&y, 0.0, &mut rng).unwrap(), y);
        assert!(add_awgn(&y, -0.1, &mut rng).is_err());
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_sigma2(0.0), 1.0);
        assert!((snr_to_sigma2(10.0) - 0.1).abs() < 1e-15);
        assert!((snr_to_sigma2(13.0) - 0.050_118_7).abs() < 1e-7);
    }

    #[test]
    fn speed_to_doppler() {
        assert!((doppler_from_speed(500.0, 4e9) - 1851.85).abs() < 0.01);
        assert!((doppler_from_speed(120.0, 4e9) - 444.44).abs() < 0.01);
        assert!((doppler_from_speed(27.0, 4e9) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn tap_csv() {
        let f = cfg(4, 4);
        let ch = ChannelRealization::identity(f);
        let mut out = Vec::new();
        ch.write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("i,re_h,im_h,tau_s,nu_hz,alpha,beta,gamma\n0,1,0,"));
    }
}
