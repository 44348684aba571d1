//! Browser bindings: a matched-filter grid, an equivalent-channel view and a
//! small BER measurement, each returning flat arrays for canvas rendering.

use otfs::chanest::{matched_filter_matrix, pilot_sigma2, simulate_pilot_rx, DiscretePilotModel, PilotGrid, PilotPath, PnPilot};
use otfs::channel::{build_h, sample_channel, ChannelProfile};
use otfs::harness::{frame_rng, run_ber_sweep, ExperimentConfig, RunOptions, Stream};
use otfs::num_complex::Complex64;
use otfs::FrameConfig;
use wasm_bindgen::prelude::*;

fn js_err(e: otfs::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `|M[delta, omega]|`, row-major over delta, for a pilot of degree `r` sent
/// through paths `(delays[i], freqs[i], gains[i])`. `snr_db` NaN means noiseless.
#[wasm_bindgen]
pub fn mf_grid(r: u32, delays: Vec<u32>, freqs: Vec<u32>, gains: Vec<f64>, snr_db: f64, seed: u64) -> Result<Vec<f32>, JsError> {
    let pilot = PnPilot::new(r).map_err(js_err)?;
    let n_p = pilot.len();
    if delays.len() != freqs.len() || delays.len() != gains.len() {
        return Err(JsError::new("delays, freqs and gains must have equal length"));
    }
    let paths = delays
        .iter()
        .zip(&freqs)
        .zip(&gains)
        .map(|((&d, &w), &g)| PilotPath {
            gain: Complex64::new(g, 0.0),
            delay_shift: d as usize % n_p,
            freq_shift: w as usize % n_p,
        })
        .collect();
    let model = DiscretePilotModel { grid: PilotGrid::sampled(1.0, n_p).map_err(js_err)?, guard: 0, paths };
    let sigma2 = if snr_db.is_nan() { 0.0 } else { pilot_sigma2(snr_db, n_p) };
    let rx = simulate_pilot_rx(&pilot, &model, sigma2, &mut frame_rng(seed, Stream::Pilot, 0)).map_err(js_err)?;
    let mf = matched_filter_matrix(&rx, &pilot.to_complex()).map_err(js_err)?;
    Ok(mf.as_slice().iter().map(|v| v.norm() as f32).collect())
}

/// Dense `|H|` (row-major, `NM x NM`) for one Jakes draw of the five-tap profile.
#[wasm_bindgen]
pub fn channel_matrix(m: usize, n: usize, delta_f: f64, max_doppler_hz: f64, idi_half_width: usize, seed: u64) -> Result<Vec<f32>, JsError> {
    if m * n > 1024 {
        return Err(JsError::new("frame too large to display (M N must be <= 1024)"));
    }
    let cfg = FrameConfig::new(m, n, delta_f, 4e9).map_err(js_err)?;
    let mut profile = ChannelProfile::jakes(vec![0.0, 2.1e-6, 4.2e-6, 6.3e-6, 8.4e-6], max_doppler_hz);
    profile.idi_half_width = idi_half_width;
    let ch = sample_channel(&profile, &cfg, &mut frame_rng(seed, Stream::Channel, 0)).map_err(js_err)?;
    let h = build_h(&ch, &cfg).map_err(js_err)?;
    Ok(h.to_dense().into_iter().flatten().map(|v| v.norm() as f32).collect())
}

/// `[frames, bits, bit_errors, ber]` for `frames` frames of the randomized
/// Gibbs detector over the five-tap Jakes channel.
#[wasm_bindgen]
pub fn ber_point(
    m: usize,
    n: usize,
    delta_f: f64,
    max_doppler_hz: f64,
    snr_db: f64,
    n_iter: usize,
    frames: u64,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let text = format!(
        "[frame]\nm = {m}\nn = {n}\ndelta_f = {delta_f:?}\n\
         [channel]\nmax_doppler_hz = {max_doppler_hz:?}\n\
         [detector]\nn_iter = {n_iter}\nseed = {seed}\n\
         [sweep]\nsnr_db = [{snr_db:?}]\nmin_frames = {frames}\nmax_frames = {frames}\nbatch_frames = {frames}\n\
         [output]\ntiming = false\n"
    );
    let cfg = ExperimentConfig::from_toml_str(&text).map_err(js_err)?;
    let rec = run_ber_sweep(&cfg, &RunOptions::default()).map_err(js_err)?.remove(0);
    Ok(vec![rec.frames as f64, rec.bits as f64, rec.bit_errors as f64, rec.ber])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mf_grid_peaks_at_the_path() {
        let g = mf_grid(5, vec![3], vec![7], vec![1.0], f64::NAN, 1).unwrap();
        assert_eq!(g.len(), 31 * 31);
        let (best, _) = g.iter().enumerate().fold((0, 0.0f32), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        assert_eq!(best, 3 * 31 + 7);
    }

    #[test]
    fn channel_matrix_shape() {
        let h = channel_matrix(8, 4, 15_000.0, 2000.0, 1, 3).unwrap();
        assert_eq!(h.len(), 32 * 32);
    }

    #[test]
    fn ber_point_counts_bits() {
        let r = ber_point(8, 4, 15_000.0, 500.0, 10.0, 3, 5, 1).unwrap();
        assert_eq!(r[0], 5.0);
        assert_eq!(r[1], 5.0 * 32.0);
    }
}
