use num_complex::Complex64;
use rand::Rng;

use super::{ml_cost, symbols_to_vec, DetectionResult, DetectorConfig, DetectorMode};
use crate::channel::EquivChannelMatrix;
use crate::error::{check_len, invalid, Result};
use crate::lattice::Alphabet;

/// Sampler state: current symbols and the residual `r = y - H x`.
struct Chain<'a> {
    h: &'a EquivChannelMatrix,
    y: &'a [Complex64],
    alphabet: &'a Alphabet,
    symbols: Vec<usize>,
    residual: Vec<Complex64>,
    col_energy: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(h: &'a EquivChannelMatrix, y: &'a [Complex64], alphabet: &'a Alphabet, symbols: Vec<usize>) -> Self {
        let col_energy = (0..h.dim())
            .map(|c| h.col(c).1.iter().map(|v| v.norm_sqr()).sum())
            .collect();
        let mut chain = Self { h, y, alphabet, symbols, residual: Vec::new(), col_energy };
        chain.refresh();
        chain
    }

    /// Recomputes the residual from scratch and returns the ML cost.
    fn refresh(&mut self) -> f64 {
        let hx = self.h.mul_vec(&symbols_to_vec(&self.symbols, self.alphabet)).expect("dims checked");
        self.residual = self.y.iter().zip(&hx).map(|(a, b)| a - b).collect();
        self.residual.iter().map(|r| r.norm_sqr()).sum()
    }

    /// Unnormalized log-probabilities of every alphabet point at coordinate `k`,
    /// all others held fixed. Uses only column `k` of `H`.
    fn log_weights(&self, k: usize, inv_scale: f64, out: &mut Vec<f64>) {
        let (rows, vals) = self.h.col(k);
        let corr: Complex64 = rows.iter().zip(vals).map(|(&r, v)| v.conj() * self.residual[r]).sum();
        let current = self.alphabet.point(self.symbols[k]);
        out.clear();
        for &p in self.alphabet.points() {
            let d = p - current;
            // ||r - h_k d||^2 - ||r||^2
            let delta = d.norm_sqr() * self.col_energy[k] - 2.0 * (d.conj() * corr).re;
            out.push(-delta * inv_scale);
        }
    }

    fn set(&mut self, k: usize, index: usize) {
        let old = self.symbols[k];
        if old == index {
            return;
        }
        let d = self.alphabet.point(index) - self.alphabet.point(old);
        let (rows, vals) = self.h.col(k);
        for (&r, v) in rows.iter().zip(vals) {
            self.residual[r] -= v * d;
        }
        self.symbols[k] = index;
    }
}

/// Turns log-weights into a normalized pmf (max-subtracted before exponentiation).
fn normalize_log(weights: &mut [f64]) {
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
}

fn sample_pmf<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pmf.len() - 1
}

fn check_inputs(y: &[Complex64], h: &EquivChannelMatrix, sigma2: f64) -> Result<()> {
    check_len(h.dim(), y.len())?;
    if !(sigma2 > 0.0) {
        return invalid(format!("noise variance must be > 0, got {sigma2}"));
    }
    Ok(())
}

/// Conditional pmf of coordinate `k` given the rest of `x`, proportional to
/// `exp(-||y - H x_(k<-a)||^2 / (temperature^2 sigma2))`.
pub fn gibbs_conditional(
    k: usize,
    x: &[usize],
    y: &[Complex64],
    h: &EquivChannelMatrix,
    alphabet: &Alphabet,
    sigma2: f64,
    temperature: f64,
) -> Result<Vec<f64>> {
    check_inputs(y, h, sigma2)?;
    check_len(h.dim(), x.len())?;
    if k >= x.len() {
        return invalid(format!("coordinate {k} out of range"));
    }
    let chain = Chain::new(h, y, alphabet, x.to_vec());
    let mut pmf = Vec::with_capacity(alphabet.len());
    chain.log_weights(k, 1.0 / (temperature * temperature * sigma2), &mut pmf);
    normalize_log(&mut pmf);
    Ok(pmf)
}

/// Runs the configured sampler from `initial` (or a uniformly random vector).
///
/// After every full sweep the ML cost is recomputed; the lowest-cost vector
/// seen, the initial one included, is returned.
pub fn run_detector<R: Rng + ?Sized>(
    y: &[Complex64],
    h: &EquivChannelMatrix,
    alphabet: &Alphabet,
    sigma2: f64,
    cfg: &DetectorConfig,
    initial: Option<&[usize]>,
    rng: &mut R,
) -> Result<DetectionResult> {
    check_inputs(y, h, sigma2)?;
    cfg.validate()?;
    let dim = h.dim();
    let start = match initial {
        Some(s) => {
            check_len(dim, s.len())?;
            if s.iter().any(|&i| i >= alphabet.len()) {
                return invalid("initial vector has indices outside the alphabet");
            }
            s.to_vec()
        }
        None => (0..dim).map(|_| rng.random_range(0..alphabet.len())).collect(),
    };

    let randomized = cfg.mode == DetectorMode::Randomized;
    let temp = cfg.effective_temperature();
    let inv_scale = 1.0 / (temp * temp * sigma2);
    let mut chain = Chain::new(h, y, alphabet, start);

    let mut best = chain.symbols.clone();
    let mut best_cost = chain.residual.iter().map(|r| r.norm_sqr()).sum::<f64>();
    let mut cost_trace = Vec::with_capacity(cfg.n_iter + 1);
    cost_trace.push(best_cost);
    let mut pmf = Vec::with_capacity(alphabet.len());

    for _ in 0..cfg.n_iter {
        for k in 0..dim {
            let mix = randomized
                && match cfg.r_mix {
                    None => rng.random_range(0..dim) == k,
                    Some(r) if r > 0.0 => rng.random::<f64>() < r,
                    Some(_) => false,
                };
            if mix {
                pmf.clear();
                pmf.extend((0..alphabet.len()).map(|_| rng.random::<f64>()));
                let total: f64 = pmf.iter().sum();
                pmf.iter_mut().for_each(|p| *p /= total);
            } else {
                chain.log_weights(k, inv_scale, &mut pmf);
                normalize_log(&mut pmf);
            }
            let pick = sample_pmf(&pmf, rng);
            chain.set(k, pick);
        }
        let cost = chain.refresh();
        cost_trace.push(cost);
        if cost <= best_cost {
            best_cost = cost;
            best.copy_from_slice(&chain.symbols);
        }
    }

    let x_hat = symbols_to_vec(&best, alphabet);
    debug_assert!((ml_cost(&x_hat, y, h).unwrap() - best_cost).abs() <= 1e-9 * (1.0 + best_cost));
    Ok(DetectionResult {
        symbols: best,
        x_hat,
        best_cost,
        cost_trace,
        iterations_run: cfg.n_iter,
    })
}

/// Conventional or temperature Gibbs detection, per `cfg.mode`.
pub fn gibbs_detect<R: Rng + ?Sized>(
    y: &[Complex64],
    h: &EquivChannelMatrix,
    alphabet: &Alphabet,
    sigma2: f64,
    cfg: &DetectorConfig,
    rng: &mut R,
) -> Result<DetectionResult> {
    let mut cfg = *cfg;
    if cfg.mode == DetectorMode::Randomized {
        cfg.mode = DetectorMode::Temperature;
    }
    run_detector(y, h, alphabet, sigma2, &cfg, None, rng)
}

/// Randomized Gibbs detection.
pub fn randomized_gibbs_detect<R: Rng + ?Sized>(
    y: &[Complex64],
    h: &EquivChannelMatrix,
    alphabet: &Alphabet,
    sigma2: f64,
    cfg: &DetectorConfig,
    rng: &mut R,
) -> Result<DetectionResult> {
    let cfg = DetectorConfig { mode: DetectorMode::Randomized, ..*cfg };
    run_detector(y, h, alphabet, sigma2, &cfg, None, rng)
}

/// Dispatches on `cfg.mode`.
pub fn detect<R: Rng + ?Sized>(
    y: &[Complex64],
    h: &EquivChannelMatrix,
    alphabet: &Alphabet,
    sigma2: f64,
    cfg: &DetectorConfig,
    rng: &mut R,
) -> Result<DetectionResult> {
    run_detector(y, h, alphabet, sigma2, cfg, None, rng)
}
