//! Detection over the vectorized model `y = H x + v`.
//!
//! [`ml_detect_bruteforce`] is the exhaustive reference; the Gibbs samplers in
//! [`gibbs`] approximate it at a cost linear in the number of nonzeros of `H`.

mod gibbs;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::EquivChannelMatrix;
use crate::error::{check_len, invalid, Error, Result};
use crate::lattice::Alphabet;

pub use gibbs::{detect, gibbs_conditional, gibbs_detect, randomized_gibbs_detect, run_detector};

/// Largest `NM * bits_per_symbol` the exhaustive search accepts.
pub const BRUTEFORCE_BIT_BUDGET: usize = 20;

/// Sampling rule of the Gibbs detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    /// Plain Gibbs sampling (temperature 1).
    Conventional,
    /// Gibbs sampling with the noise variance scaled by `temperature^2`.
    Temperature,
    /// Gibbs sampling mixed with occasional draws from a random pmf.
    Randomized,
}

impl DetectorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Conventional => "conventional",
            Self::Temperature => "temperature",
            Self::Randomized => "randomized",
        }
    }
}

impl std::str::FromStr for DetectorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(Self::Conventional),
            "temperature" => Ok(Self::Temperature),
            "randomized" => Ok(Self::Randomized),
            other => invalid(format!("unknown detector mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Full sweeps over all `NM` coordinates.
    pub n_iter: usize,
    /// Temperature `alpha >= 1`; ignored in conventional mode.
    pub temperature: f64,
    pub mode: DetectorMode,
    /// Mixing probability for the randomized rule. `None` draws a random
    /// coordinate index per update and mixes when it hits the current one,
    /// which is a mixing probability of `1/(NM)`.
    pub r_mix: Option<f64>,
}

impl DetectorConfig {
    pub fn conventional(n_iter: usize) -> Self {
        Self { n_iter, temperature: 1.0, mode: DetectorMode::Conventional, r_mix: None }
    }

    pub fn temperature(n_iter: usize, temperature: f64) -> Self {
        Self { n_iter, temperature, mode: DetectorMode::Temperature, r_mix: None }
    }

    pub fn randomized(n_iter: usize) -> Self {
        Self { n_iter, temperature: 1.0, mode: DetectorMode::Randomized, r_mix: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter < 1 {
            return invalid("detector needs at least one iteration");
        }
        if !(self.temperature >= 1.0) {
            return invalid(format!("temperature must be >= 1, got {}", self.temperature));
        }
        if let Some(r) = self.r_mix {
            if !(0.0..=1.0).contains(&r) {
                return invalid(format!("mixing probability must be in [0, 1], got {r}"));
            }
        }
        Ok(())
    }

    pub(crate) fn effective_temperature(&self) -> f64 {
        match self.mode {
            DetectorMode::Conventional => 1.0,
            _ => self.temperature,
        }
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self::randomized(3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Alphabet indices of the detected vector.
    pub symbols: Vec<usize>,
    pub x_hat: Vec<Complex64>,
    /// `||y - H x_hat||^2`.
    pub best_cost: f64,
    /// ML cost of the initial vector followed by the cost after each sweep.
    pub cost_trace: Vec<f64>,
    pub iterations_run: usize,
}

/// `||y - H x||^2`, using only the stored entries of `H`.
pub fn ml_cost(x: &[Complex64], y: &[Complex64], h: &EquivChannelMatrix) -> Result<f64> {
    check_len(h.dim(), y.len())?;
    let hx = h.mul_vec(x)?;
    Ok(y.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum())
}

pub(crate) fn symbols_to_vec(symbols: &[usize], alphabet: &Alphabet) -> Vec<Complex64> {
    symbols.iter().map(|&i| alphabet.point(i)).collect()
}

/// Exhaustive ML search over `A^(NM)`.
///
/// Candidates are visited in lexicographic order of their index vectors
/// (coordinate 0 most significant) and only a strictly smaller cost replaces
/// the incumbent, so ties resolve to the first candidate in that order.
pub fn ml_detect_bruteforce(
    y: &[Complex64],
    h: &EquivChannelMatrix,
    alphabet: &Alphabet,
) -> Result<DetectionResult> {
    let dim = h.dim();
    check_len(dim, y.len())?;
    let bits = dim * alphabet.bits_per_symbol();
    if bits > BRUTEFORCE_BIT_BUDGET {
        return Err(Error::BudgetExceeded { bits, limit: BRUTEFORCE_BIT_BUDGET });
    }
    let q = alphabet.len();
    let mut digits = vec![0usize; dim];
    let mut best = digits.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let cost = ml_cost(&symbols_to_vec(&digits, alphabet), y, h)?;
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&digits);
        }
        // odometer increment, last coordinate fastest
        let mut pos = dim;
        loop {
            if pos == 0 {
                let x_hat = symbols_to_vec(&best, alphabet);
                return Ok(DetectionResult {
                    symbols: best,
                    x_hat,
                    best_cost,
                    cost_trace: vec![best_cost],
                    iterations_run: 0,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < q {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cost_examples() {
        let h = EquivChannelMatrix::identity(4);
        let x = vec![c(1.0); 4];
        assert_eq!(ml_cost(&x, &[c(0.0); 4], &h).unwrap(), 4.0);
        assert_eq!(ml_cost(&x, &x, &h).unwrap(), 0.0);
        assert!(ml_cost(&x, &[c(0.0); 3], &h).is_err());
    }

    #[test]
    fn bruteforce_ties_resolve_lexicographically() {
        let h = EquivChannelMatrix::identity(3);
        let r = ml_detect_bruteforce(&[c(0.0); 3], &h, &Alphabet::bpsk()).unwrap();
        assert_eq!(r.symbols, vec![0, 0, 0]);
        assert_eq!(r.best_cost, 3.0);
    }

    #[test]
    fn bruteforce_finds_noiseless_truth() {
        let h = EquivChannelMatrix::from_triplets(
            3,
            vec![(0, 0, c(1.0)), (0, 1, c(0.5)), (1, 1, c(1.0)), (2, 2, c(0.7)), (2, 0, c(0.2))],
        )
        .unwrap();
        let truth = vec![c(-1.0), c(1.0), c(-1.0)];
        let y = h.mul_vec(&truth).unwrap();
        let r = ml_detect_bruteforce(&y, &h, &Alphabet::bpsk()).unwrap();
        assert_eq!(r.symbols, vec![1, 0, 1]);
        assert_eq!(r.best_cost, 0.0);
    }

    #[test]
    fn bruteforce_budget() {
        let h = EquivChannelMatrix::identity(21);
        assert!(matches!(
            ml_detect_bruteforce(&[c(0.0); 21], &h, &Alphabet::bpsk()),
            Err(Error::BudgetExceeded { .. })
        ));
        let h = EquivChannelMatrix::identity(11);
        assert!(ml_detect_bruteforce(&[c(0.0); 11], &h, &Alphabet::qpsk()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::randomized(3).validate().is_ok());
        assert!(DetectorConfig::randomized(0).validate().is_err());
        assert!(DetectorConfig::temperature(3, 0.5).validate().is_err());
        let mut cfg = DetectorConfig::randomized(3);
        cfg.r_mix = Some(1.5);
        assert!(cfg.validate().is_err());
        assert_eq!("temperature".parse::<DetectorMode>().unwrap(), DetectorMode::Temperature);
        assert!("gibbs".parse::<DetectorMode>().is_err());
    }
}
