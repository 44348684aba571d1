//! Frame geometry, symbol alphabets and index conventions.
//!
//! Grids are `N x M` with the Doppler index `k` in `[0, N)` and the delay
//! index `l` in `[0, M)`. Storage is the vectorized layout used by the
//! equivalent channel matrix: element `(k, l)` lives at `k + N*l`.

use std::marker::PhantomData;

use log::debug;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};

/// Tolerance under which a value is considered to sit exactly on a lattice point.
const ON_LATTICE_TOL: f64 = 1e-9;

/// Lattice dimensions and numerology of one OTFS frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    m: usize,
    n: usize,
    delta_f: f64,
    carrier_hz: f64,
}

impl FrameConfig {
    /// `m` delay bins (subcarriers), `n` Doppler bins (symbols), subcarrier spacing `delta_f`.
    pub fn new(m: usize, n: usize, delta_f: f64, carrier_hz: f64) -> Result<Self> {
        if m < 1 || n < 1 {
            return invalid(format!("frame dimensions must be >= 1, got M={m}, N={n}"));
        }
        if !(delta_f > 0.0) || !delta_f.is_finite() {
            return invalid(format!("subcarrier spacing must be positive, got {delta_f}"));
        }
        if !(carrier_hz > 0.0) || !carrier_hz.is_finite() {
            return invalid(format!("carrier frequency must be positive, got {carrier_hz}"));
        }
        Ok(Self { m, n, delta_f, carrier_hz })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of symbols per frame, `M*N`.
    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    /// Multicarrier symbol duration `T = 1/delta_f`.
    pub fn symbol_period(&self) -> f64 {
        1.0 / self.delta_f
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    /// Signal bandwidth `M*delta_f`.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 * self.delta_f
    }

    /// Delay bin width `1/(M*delta_f)`.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    /// Doppler bin width `1/(N*T) = delta_f/N`.
    pub fn doppler_resolution(&self) -> f64 {
        self.delta_f / self.n as f64
    }

    /// Frame length `M*N*sample_period`.
    pub fn frame_length(&self, sample_period: f64) -> f64 {
        self.len() as f64 * sample_period
    }

    /// Nearest delay tap for a delay in seconds, reduced modulo `M`.
    pub fn delay_to_tap(&self, tau: f64) -> usize {
        let x = tau * self.bandwidth();
        let tap = x.round();
        if (x - tap).abs() > ON_LATTICE_TOL {
            debug!("delay {tau:e} s is off-lattice ({x:.4} bins), rounded to {tap}");
        }
        let tap = tap as i64;
        if tap < 0 || tap >= self.m as i64 {
            debug!("delay tap {tap} wrapped modulo M={}", self.m);
        }
        tap.rem_euclid(self.m as i64) as usize
    }

    /// Integer Doppler tap (mod `N`) and fractional part in `[0, 1)`.
    pub fn doppler_to_tap(&self, nu: f64) -> DopplerTap {
        let x = nu * self.n as f64 * self.symbol_period();
        let nearest = x.round();
        let (whole, frac) = if (x - nearest).abs() <= ON_LATTICE_TOL {
            (nearest, 0.0)
        } else {
            let f = x.floor();
            (f, x - f)
        };
        let whole = whole as i64;
        if whole < 0 || whole >= self.n as i64 {
            debug!("Doppler tap {whole} wrapped modulo N={}", self.n);
        }
        DopplerTap {
            tap: whole.rem_euclid(self.n as i64) as usize,
            frac,
        }
    }

    pub fn tap_to_delay(&self, tap: usize) -> f64 {
        tap as f64 * self.delay_resolution()
    }

    /// Inverse of [`doppler_to_tap`](Self::doppler_to_tap) for `|nu| < delta_f/2`;
    /// taps in the upper half of the period are read as negative Dopplers.
    pub fn tap_to_doppler(&self, tap: DopplerTap) -> f64 {
        let mut x = tap.tap as f64 + tap.frac;
        if x >= self.n as f64 / 2.0 {
            x -= self.n as f64;
        }
        x * self.doppler_resolution()
    }
}

/// Doppler position in bins: integer tap plus fractional offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerTap {
    pub tap: usize,
    pub frac: f64,
}

/// Row-major (k fastest) position of `(k, l)` in a vectorized frame with `n` Doppler bins.
pub fn vec_index(k: usize, l: usize, n: usize) -> usize {
    assert!(k < n, "Doppler index {k} out of range for N={n}");
    k + n * l
}

/// Inverse of [`vec_index`].
pub fn vec_coords(index: usize, n: usize) -> (usize, usize) {
    (index % n, index / n)
}

/// A finite constellation with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl Alphabet {
    /// Builds an alphabet, normalizing the points to unit average energy.
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        let count = points.len();
        if count < 2 || !count.is_power_of_two() {
            return invalid(format!("alphabet size must be a power of two >= 2, got {count}"));
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / count as f64;
        if !(energy > 0.0) {
            return invalid("alphabet has zero energy");
        }
        let scale = energy.sqrt().recip();
        Ok(Self {
            points: points.into_iter().map(|p| p * scale).collect(),
            bits_per_symbol: count.trailing_zeros() as usize,
        })
    }

    /// `{+1, -1}`; bit 0 maps to `+1`.
    pub fn bpsk() -> Self {
        Self::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap()
    }

    /// Gray-mapped QPSK.
    pub fn qpsk() -> Self {
        let pts = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
        Self::new(pts.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).unwrap()
    }

    /// Gray-mapped square 16-QAM.
    pub fn qam16() -> Self {
        let level = |b: usize| [-3.0, -1.0, 3.0, 1.0][b];
        let pts = (0..16)
            .map(|i| Complex64::new(level(i >> 2), level(i & 3)))
            .collect();
        Self::new(pts).unwrap()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Symbol index of `bits` (most significant bit first).
    pub fn index_of_bits(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    /// Appends the bits of symbol `index` (most significant first).
    pub fn push_bits(&self, index: usize, out: &mut Vec<u8>) {
        for shift in (0..self.bits_per_symbol).rev() {
            out.push(((index >> shift) & 1) as u8);
        }
    }

    /// Index of the constellation point closest to `z`.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Marker for delay-Doppler grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayDoppler;

/// Marker for time-frequency grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFrequency;

/// An `N x M` complex grid stored in vectorized (`k + N*l`) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<D> {
    n: usize,
    m: usize,
    data: Vec<Complex64>,
    _domain: PhantomData<D>,
}

/// Delay-Doppler symbols `x[k, l]`.
pub type DDFrame = Frame<DelayDoppler>;
/// Time-frequency symbols `X[n, m]`.
pub type TFFrame = Frame<TimeFrequency>;

impl<D> Frame<D> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self::from_vec(n, m, vec![Complex64::new(0.0, 0.0); n * m]).unwrap()
    }

    /// Wraps a vectorized frame.
    pub fn from_vec(n: usize, m: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return invalid("frame dimensions must be >= 1");
        }
        check_len(n * m, data.len())?;
        Ok(Self { n, m, data, _domain: PhantomData })
    }

    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let data = (0..n * m).map(|i| f(i % n, i / n)).collect();
        Self { n, m, data, _domain: PhantomData }
    }

    /// Rows (Doppler bins for DD frames, time slots for TF frames).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Columns (delay bins for DD frames, subcarriers for TF frames).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[vec_index(row, col, self.n)]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        let i = vec_index(row, col, self.n);
        self.data[i] = v;
    }

    /// The vectorized form `x_{k + N l} = x[k, l]`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn same_shape<E>(&self, other: &Frame<E>) -> bool {
        self.n == other.n && self.m == other.m
    }
}

/// Fills a DD frame with the symbols for `bits`, in vectorized order.
pub fn map_bits(bits: &[u8], alphabet: &Alphabet, cfg: &FrameConfig) -> Result<DDFrame> {
    let bps = alphabet.bits_per_symbol();
    check_len(cfg.len() * bps, bits.len())?;
    let data = bits
        .chunks(bps)
        .map(|c| alphabet.point(alphabet.index_of_bits(c)))
        .collect();
    DDFrame::from_vec(cfg.n(), cfg.m(), data)
}

/// Hard-decision demapping back to bits (nearest constellation point).
pub fn demap_symbols(frame: &DDFrame, alphabet: &Alphabet) -> Vec<u8> {
    let mut bits = Vec::with_capacity(frame.as_slice().len() * alphabet.bits_per_symbol());
    for &z in frame.as_slice() {
        alphabet.push_bits(alphabet.nearest(z), &mut bits);
    }
    bits
}
