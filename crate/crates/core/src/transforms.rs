//! Symplectic finite Fourier transform pair and TF-domain windowing.
//!
//! `isfft`: `X[n,m] = 1/(MN) sum_k sum_l x[k,l] exp(j2pi(nk/N - ml/M))`
//! `sfft`:  `x[k,l] = sum_n sum_m X[n,m] exp(-j2pi(nk/N - ml/M))`
//!
//! Both are evaluated as separable 1D FFTs: the Doppler/time axis and the
//! delay/frequency axis carry opposite transform signs.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{DDFrame, Frame, TFFrame};

/// Delay-Doppler to time-frequency (OTFS pre-processing).
pub fn isfft(x: &DDFrame) -> TFFrame {
    let (n, m) = (x.n(), x.m());
    let mut data = x.as_slice().to_vec();
    transform_axes(&mut data, n, m, FftDirection::Inverse, FftDirection::Forward);
    let scale = 1.0 / (n * m) as f64;
    data.iter_mut().for_each(|z| *z *= scale);
    TFFrame::from_vec(n, m, data).expect("shape preserved")
}

/// Time-frequency to delay-Doppler (OTFS post-processing).
pub fn sfft(y: &TFFrame) -> DDFrame {
    let (n, m) = (y.n(), y.m());
    let mut data = y.as_slice().to_vec();
    transform_axes(&mut data, n, m, FftDirection::Forward, FftDirection::Inverse);
    DDFrame::from_vec(n, m, data).expect("shape preserved")
}

/// Unnormalized 1D DFTs along the `n`-axis (contiguous) then the `m`-axis (stride `n`).
fn transform_axes(data: &mut [Complex64], n: usize, m: usize, dir_n: FftDirection, dir_m: FftDirection) {
    let mut planner = FftPlanner::new();
    if n > 1 {
        let fft = planner.plan_fft(n, dir_n);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
    }
    if m > 1 {
        let fft = planner.plan_fft(m, dir_m);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut row = vec![Complex64::default(); m];
        for k in 0..n {
            for (l, v) in row.iter_mut().enumerate() {
                *v = data[k + n * l];
            }
            fft.process_with_scratch(&mut row, &mut scratch);
            for (l, v) in row.iter().enumerate() {
                data[k + n * l] = *v;
            }
        }
    }
}

/// Transmit/receive window over the TF grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    Rectangular,
    /// Per-cell weights in vectorized order. Not supported by this simulator.
    Custom(Vec<f64>),
}

/// Elementwise windowing; only rectangular windows are supported.
pub fn apply_window(frame: &TFFrame, window: &Window) -> Result<TFFrame> {
    match window {
        Window::Rectangular => Ok(frame.clone()),
        Window::Custom(_) => Err(Error::Unsupported("non-rectangular TF windows".into())),
    }
}

/// Product window seen by the end-to-end relation, `W_tx * W_rx`.
pub fn product_window(tx: &Window, rx: &Window) -> Result<Window> {
    match (tx, rx) {
        (Window::Rectangular, Window::Rectangular) => Ok(Window::Rectangular),
        _ => Err(Error::Unsupported("non-rectangular TF windows".into())),
    }
}

/// Periodization of the received TF grid with period `(N, M)`. A single
/// frame already spans one period, so this is the identity.
pub fn periodize<D: Clone>(frame: &Frame<D>) -> Frame<D> {
    frame.clone()
}

/// OTFS modulation: ISFFT followed by the transmit window.
pub fn modulate(x: &DDFrame, window: &Window) -> Result<TFFrame> {
    apply_window(&isfft(x), window)
}

/// OTFS demodulation: receive window, periodization, SFFT.
pub fn demodulate(y: &TFFrame, window: &Window) -> Result<DDFrame> {
    Ok(sfft(&periodize(&apply_window(y, window)?)))
}
