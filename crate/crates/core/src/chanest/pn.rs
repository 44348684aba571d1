//! Maximal-length (m-sequence) pilots.

use num_complex::Complex64;

use crate::error::{invalid, Result};

const TAP_TABLE: &str = include_str!("../../data/primitive_taps.txt");

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 16;

/// Feedback taps for degree `r`, from the shipped primitive polynomial table.
pub fn feedback_taps(r: u32) -> Result<Vec<u32>> {
    for line in TAP_TABLE.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (deg, taps) = line.split_once(':').expect("malformed tap table");
        if deg.trim().parse::<u32>().expect("malformed tap table") == r {
            return Ok(taps
                .split_whitespace()
                .map(|t| t.parse().expect("malformed tap table"))
                .collect());
        }
    }
    invalid(format!("unsupported LFSR degree {r} (supported: {MIN_DEGREE}..={MAX_DEGREE})"))
}

/// Raw output bits of the Fibonacci LFSR of degree `r`, started from the all-ones state.
pub fn m_sequence_bits(r: u32) -> Result<Vec<u8>> {
    let taps = feedback_taps(r)?;
    let len = (1usize << r) - 1;
    let mut state: u32 = (1 << r) - 1;
    let mut bits = Vec::with_capacity(len);
    for _ in 0..len {
        bits.push((state & 1) as u8);
        let fb = taps.iter().fold(0, |acc, &t| acc ^ (state >> (r - t))) & 1;
        state = (state >> 1) | (fb << (r - 1));
    }
    Ok(bits)
}

/// Unit-norm PN pilot of length `N_p = 2^r - 1` with entries `+-1/sqrt(N_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PnPilot {
    degree: u32,
    seq: Vec<f64>,
}

impl PnPilot {
    pub fn new(r: u32) -> Result<Self> {
        let bits = m_sequence_bits(r)?;
        let amp = 1.0 / (bits.len() as f64).sqrt();
        Ok(Self {
            degree: r,
            seq: bits.iter().map(|&b| amp * (1.0 - 2.0 * b as f64)).collect(),
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `N_p`.
    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.seq
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.seq.iter().map(|&s| Complex64::new(s, 0.0)).collect()
    }

    /// Periodic autocorrelation `sum_n S[n] S[n + shift]`.
    pub fn autocorrelation(&self, shift: usize) -> f64 {
        let n = self.seq.len();
        (0..n).map(|i| self.seq[i] * self.seq[(i + shift) % n]).sum()
    }
}

/// Alias kept for call sites that think in terms of the generator.
pub fn gen_pn_sequence(r: u32) -> Result<PnPilot> {
    PnPilot::new(r)
}
