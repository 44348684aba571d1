//! Matched-filter (cross-ambiguity) grid and peak picking.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{check_len, invalid, Result};

/// Default threshold constant: peaks must exceed `c / sqrt(N_p)`.
pub const DEFAULT_THRESHOLD_C: f64 = 3.0;

/// `M[delta, omega] = sum_n R[n] conj(S[n - delta]) e^{-j 2 pi omega n / N_p}`,
/// stored row-major with `delta` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilterMatrix {
    n_p: usize,
    values: Vec<Complex64>,
}

impl MatchedFilterMatrix {
    pub fn len(&self) -> usize {
        self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.n_p == 0
    }

    pub fn get(&self, delta: usize, omega: usize) -> Complex64 {
        self.values[delta * self.n_p + omega]
    }

    /// Row `delta` over all frequency shifts.
    pub fn row(&self, delta: usize) -> &[Complex64] {
        &self.values[delta * self.n_p..(delta + 1) * self.n_p]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// CSV dump with header `delta,omega,abs,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "delta,omega,abs,re,im")?;
        for d in 0..self.n_p {
            for (o, v) in self.row(d).iter().enumerate() {
                writeln!(w, "{d},{o},{},{},{}", v.norm(), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

fn mf_row(
    rx: &[Complex64],
    pilot: &[Complex64],
    delta: usize,
    fft: &dyn rustfft::Fft<f64>,
    out: &mut [Complex64],
) {
    let n_p = rx.len();
    for (n, o) in out.iter_mut().enumerate() {
        *o = rx[n] * pilot[(n + n_p - delta) % n_p].conj();
    }
    fft.process(out);
}

/// All `N_p^2` matched-filter outputs; one forward FFT per delay hypothesis.
pub fn matched_filter_matrix(rx: &[Complex64], pilot: &[Complex64]) -> Result<MatchedFilterMatrix> {
    check_len(pilot.len(), rx.len())?;
    let n_p = rx.len();
    if n_p == 0 {
        return invalid("empty pilot");
    }
    let fft = FftPlanner::new().plan_fft_forward(n_p);
    let mut values = vec![Complex64::new(0.0, 0.0); n_p * n_p];

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values
            .par_chunks_mut(n_p)
            .enumerate()
            .for_each(|(d, row)| mf_row(rx, pilot, d, fft.as_ref(), row));
    }
    #[cfg(not(feature = "parallel"))]
    for (d, row) in values.chunks_mut(n_p).enumerate() {
        mf_row(rx, pilot, d, fft.as_ref(), row);
    }

    Ok(MatchedFilterMatrix { n_p, values })
}

/// A detected path: shift pair and the grid value taken as its gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub delay_shift: usize,
    pub freq_shift: usize,
    pub value: Complex64,
}

/// How many peaks to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeakRule {
    /// The `P` largest magnitudes.
    Count(usize),
    /// Every cell above `c / sqrt(N_p)`.
    Threshold { c: f64 },
}

/// Descending magnitude, then row-major `(delta, omega)` order.
fn by_rank(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `p` best cells in rank order; linear-time selection, then a sort of the head.
fn top(mf: &MatchedFilterMatrix, p: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<(usize, f64)> = mf.values.iter().map(|v| v.norm()).enumerate().collect();
    if p < idx.len() {
        idx.select_nth_unstable_by(p, by_rank);
        idx.truncate(p);
    }
    idx.sort_unstable_by(by_rank);
    idx
}

fn to_peak(mf: &MatchedFilterMatrix, flat: usize) -> Peak {
    Peak { delay_shift: flat / mf.n_p, freq_shift: flat % mf.n_p, value: mf.values[flat] }
}

/// The `p` entries of largest magnitude, ties broken lexicographically in `(delta, omega)`.
pub fn detect_peaks(mf: &MatchedFilterMatrix, p: usize) -> Result<Vec<Peak>> {
    select_peaks(mf, PeakRule::Count(p))
}

pub fn select_peaks(mf: &MatchedFilterMatrix, rule: PeakRule) -> Result<Vec<Peak>> {
    let cells = mf.n_p * mf.n_p;
    match rule {
        PeakRule::Count(p) => {
            if p == 0 || p > cells {
                return invalid(format!("cannot pick {p} peaks from {cells} cells"));
            }
            Ok(top(mf, p).into_iter().map(|(i, _)| to_peak(mf, i)).collect())
        }
        PeakRule::Threshold { c } => {
            if !(c > 0.0) {
                return invalid(format!("threshold constant must be positive, got {c}"));
            }
            let thr = c / (mf.n_p as f64).sqrt();
            let mut hits: Vec<(usize, f64)> =
                mf.values.iter().map(|v| v.norm()).enumerate().filter(|&(_, a)| a > thr).collect();
            hits.sort_unstable_by(by_rank);
            Ok(hits.into_iter().map(|(i, _)| to_peak(mf, i)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanest::pn::PnPilot;
    use std::f64::consts::PI;

    fn literal(rx: &[Complex64], s: &[Complex64]) -> Vec<Complex64> {
        let n_p = rx.len();
        let mut out = Vec::with_capacity(n_p * n_p);
        for d in 0..n_p {
            for w in 0..n_p {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..n_p {
                    let e = Complex64::from_polar(1.0, 2.0 * PI * (w * n % n_p) as f64 / n_p as f64);
                    acc += rx[n] * (e * s[(n + n_p - d) % n_p]).conj();
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn fft_path_matches_triple_loop() {
        let s = PnPilot::new(5).unwrap().to_complex();
        let rx: Vec<Complex64> =
            (0..31).map(|n| Complex64::new((n as f64 * 0.37).sin(), (n as f64 * 1.3).cos())).collect();
        let mf = matched_filter_matrix(&rx, &s).unwrap();
        for (a, b) in mf.as_slice().iter().zip(literal(&rx, &s)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn autocorrelation_peak_is_one() {
        let s = PnPilot::new(7).unwrap().to_complex();
        let mf = matched_filter_matrix(&s, &s).unwrap();
        assert!((mf.get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let peaks = detect_peaks(&mf, 1).unwrap();
        assert_eq!((peaks[0].delay_shift, peaks[0].freq_shift), (0, 0));
    }

    #[test]
    fn zero_input_and_errors() {
        let s = PnPilot::new(3).unwrap().to_complex();
        let mf = matched_filter_matrix(&[Complex64::new(0.0, 0.0); 7], &s).unwrap();
        assert_eq!(mf.max_abs(), 0.0);
        assert!(detect_peaks(&mf, 50).is_err());
        assert!(detect_peaks(&mf, 0).is_err());
        assert!(matched_filter_matrix(&s[..6], &s).is_err());
        // all-zero ties resolve to the first cells in row-major order
        let p = detect_peaks(&mf, 3).unwrap();
        assert_eq!(
            p.iter().map(|p| (p.delay_shift, p.freq_shift)).collect::<Vec<_>>(),
            vec![(0, 0), (0, 1), (0, 2)]
        );
    }

    #[test]
    fn threshold_mode_finds_strong_cell() {
        let s = PnPilot::new(7).unwrap().to_complex();
        let mf = matched_filter_matrix(&s, &s).unwrap();
        let p = select_peaks(&mf, PeakRule::Threshold { c: DEFAULT_THRESHOLD_C }).unwrap();
        assert_eq!(p.len(), 1);
        assert!(select_peaks(&mf, PeakRule::Threshold { c: 0.0 }).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let s = PnPilot::new(2).unwrap().to_complex();
        let mf = matched_filter_matrix(&s, &s).unwrap();
        let mut buf = Vec::new();
        mf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "delta,omega,abs,re,im");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].starts_with("0,0,1"));
    }
}
