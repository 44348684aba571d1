//! Quick invariant checks, runnable from the command line.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chanest::{matched_filter_matrix, PnPilot};
use crate::channel::{apply_channel_dd, build_h, sample_channel, ChannelProfile};
use crate::detect::{gibbs_conditional, ml_cost};
use crate::lattice::{vec_coords, vec_index, Alphabet, DDFrame, FrameConfig};
use crate::transforms::{isfft, sfft};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> SelfCheck {
    SelfCheck { name, passed: worst <= tol, detail: format!("worst {worst:.3e} (tol {tol:.0e})") }
}

fn random_frame(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DDFrame {
    DDFrame::from_fn(n, m, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn vectorization() -> SelfCheck {
    let mut ok = true;
    for n in 1..=16 {
        for m in 1..=16 {
            let mut seen = vec![false; n * m];
            for l in 0..m {
                for k in 0..n {
                    let i = vec_index(k, l, n);
                    ok &= i < n * m && !seen[i] && vec_coords(i, n) == (k, l);
                    if i < n * m {
                        seen[i] = true;
                    }
                }
            }
        }
    }
    SelfCheck { name: "vectorization bijection", passed: ok, detail: "N, M in 1..=16".into() }
}

fn transform_round_trip(rng: &mut ChaCha8Rng) -> SelfCheck {
    let mut worst: f64 = 0.0;
    for &(n, m) in &[(4, 4), (8, 16), (32, 8), (16, 32)] {
        let x = random_frame(n, m, rng);
        let back = sfft(&isfft(&x));
        for (a, b) in x.as_slice().iter().zip(back.as_slice()) {
            worst = worst.max((a - b).norm());
        }
    }
    check("sfft(isfft(x)) = x", worst, 1e-12)
}

fn matrix_matches_direct(rng: &mut ChaCha8Rng) -> SelfCheck {
    let cfg = FrameConfig::new(16, 12, 15_000.0, 4e9).unwrap();
    let profile = ChannelProfile::jakes(vec![0.0, 2.1e-6, 4.2e-6, 6.3e-6], 1500.0);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let ch = sample_channel(&profile, &cfg, rng).unwrap();
        let x = random_frame(cfg.n(), cfg.m(), rng);
        let hx = build_h(&ch, &cfg).unwrap().mul_vec(x.as_slice()).unwrap();
        let direct = apply_channel_dd(&x, &ch).unwrap();
        for (a, b) in hx.iter().zip(direct.as_slice()) {
            worst = worst.max((a - b).norm());
        }
    }
    check("H x = direct DD channel", worst, 1e-10)
}

fn conditional_matches_naive(rng: &mut ChaCha8Rng) -> SelfCheck {
    let cfg = FrameConfig::new(4, 4, 15_000.0, 4e9).unwrap();
    let ch = sample_channel(&ChannelProfile::jakes(vec![0.0, 66.7e-6], 2000.0), &cfg, rng).unwrap();
    let h = build_h(&ch, &cfg).unwrap();
    let a = Alphabet::qpsk();
    let y: Vec<Complex64> = (0..16).map(|_| Complex64::new(rng.random(), rng.random())).collect();
    let x: Vec<usize> = (0..16).map(|_| rng.random_range(0..4)).collect();
    let (sigma2, temp) = (0.3, 1.5);
    let mut worst: f64 = 0.0;
    for k in 0..16 {
        let pmf = gibbs_conditional(k, &x, &y, &h, &a, sigma2, temp).unwrap();
        let costs: Vec<f64> = (0..4)
            .map(|s| {
                let mut v: Vec<Complex64> = x.iter().map(|&i| a.point(i)).collect();
                v[k] = a.point(s);
                ml_cost(&v, &y, &h).unwrap()
            })
            .collect();
        let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = costs.iter().map(|c| (-(c - min) / (temp * temp * sigma2)).exp()).collect();
        let total: f64 = w.iter().sum();
        for (p, q) in pmf.iter().zip(&w) {
            worst = worst.max((p - q / total).abs());
        }
    }
    check("incremental Gibbs pmf = naive", worst, 1e-10)
}

fn pn_and_matched_filter() -> SelfCheck {
    let mut worst: f64 = 0.0;
    for r in 2..=10 {
        let pn = PnPilot::new(r).unwrap();
        let n = pn.len();
        for d in 1..n {
            worst = worst.max((pn.autocorrelation(d) + 1.0 / n as f64).abs());
        }
    }
    let s = PnPilot::new(7).unwrap().to_complex();
    let mf = matched_filter_matrix(&s, &s).unwrap();
    worst = worst.max((mf.get(0, 0) - Complex64::new(1.0, 0.0)).norm());
    check("m-sequence ACF and matched-filter peak", worst, 1e-12)
}

/// Runs every check with a fixed seed.
pub fn run_selftest() -> Vec<SelfCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    vec![
        vectorization(),
        transform_round_trip(&mut rng),
        matrix_matches_direct(&mut rng),
        conditional_matches_naive(&mut rng),
        pn_and_matched_filter(),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
