//! Literal reference implementations. Slow on purpose: every formula is
//! evaluated term by term with no shared code from the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use otfs::channel::ChannelRealization;
use otfs::num_complex::Complex64;
use otfs::DDFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_frame<R: Rng>(n: usize, m: usize, rng: &mut R) -> DDFrame {
    DDFrame::from_fn(n, m, |_, _| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `X[n,m] = 1/(MN) sum_k sum_l x[k,l] e^{j2pi(nk/N - ml/M)}`, returned as `X[n][m]`.
pub fn isfft_literal(x: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let (n_big, m_big) = (x.len(), x[0].len());
    let mut out = vec![vec![c(0.0, 0.0); m_big]; n_big];
    for (n, row) in out.iter_mut().enumerate() {
        for (m, o) in row.iter_mut().enumerate() {
            let mut acc = c(0.0, 0.0);
            for (k, xr) in x.iter().enumerate() {
                for (l, v) in xr.iter().enumerate() {
                    let ph = 2.0 * PI * ((n * k) as f64 / n_big as f64 - (m * l) as f64 / m_big as f64);
                    acc += v * Complex64::from_polar(1.0, ph);
                }
            }
            *o = acc / (n_big * m_big) as f64;
        }
    }
    out
}

/// `x[k,l] = sum_n sum_m X[n,m] e^{-j2pi(nk/N - ml/M)}`.
pub fn sfft_literal(y: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let (n_big, m_big) = (y.len(), y[0].len());
    let mut out = vec![vec![c(0.0, 0.0); m_big]; n_big];
    for (k, row) in out.iter_mut().enumerate() {
        for (l, o) in row.iter_mut().enumerate() {
            let mut acc = c(0.0, 0.0);
            for (n, yr) in y.iter().enumerate() {
                for (m, v) in yr.iter().enumerate() {
                    let ph = -2.0 * PI * ((n * k) as f64 / n_big as f64 - (m * l) as f64 / m_big as f64);
                    acc += v * Complex64::from_polar(1.0, ph);
                }
            }
            *o = acc;
        }
    }
    out
}

pub fn to_grid<D>(f: &otfs::lattice::Frame<D>) -> Vec<Vec<Complex64>> {
    (0..f.n()).map(|k| (0..f.m()).map(|l| f.get(k, l)).collect()).collect()
}

pub fn from_grid(g: &[Vec<Complex64>]) -> Vec<Complex64> {
    // k fastest
    let (n, m) = (g.len(), g[0].len());
    let mut v = Vec::with_capacity(n * m);
    for l in 0..m {
        for row in g {
            v.push(row[l]);
        }
    }
    v
}

/// IDI coefficient as the literal geometric sum `(1/N) sum_c e^{-j2pi(-q-gamma)c/N}`.
pub fn g_literal(q: i64, gamma: f64, n: usize) -> Complex64 {
    let x = -(q as f64) - gamma;
    (0..n).map(|cc| Complex64::from_polar(1.0, -2.0 * PI * x * cc as f64 / n as f64)).sum::<Complex64>()
        / n as f64
}

/// Direct channel output, every `(k, l)` summing over taps and `q` with the literal `G`.
pub fn direct_io(x: &DDFrame, ch: &ChannelRealization) -> Vec<Complex64> {
    let (n, m) = (x.n() as i64, x.m() as i64);
    let e = ch.effective_half_width() as i64;
    let mut y = vec![c(0.0, 0.0); (n * m) as usize];
    for l in 0..m {
        for k in 0..n {
            let mut acc = c(0.0, 0.0);
            for t in ch.taps() {
                let h1 = t.gain * Complex64::from_polar(1.0, -2.0 * PI * t.doppler * t.delay);
                for q in -e..=e {
                    let src_k = (k - t.doppler_tap as i64 + q).rem_euclid(n) as usize;
                    let src_l = (l - t.delay_tap as i64).rem_euclid(m) as usize;
                    acc += h1 * g_literal(q, t.doppler_frac, n as usize) * x.get(src_k, src_l);
                }
            }
            y[(k + n * l) as usize] = acc;
        }
    }
    y
}

/// Dense `NM x NM` matrix whose column `j` is the direct output for a unit impulse at `j`.
pub fn dense_h(ch: &ChannelRealization) -> Vec<Vec<Complex64>> {
    let (n, m) = (ch.frame().n(), ch.frame().m());
    let dim = n * m;
    let mut h = vec![vec![c(0.0, 0.0); dim]; dim];
    for j in 0..dim {
        let x = DDFrame::from_fn(n, m, |k, l| if k + n * l == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        for (i, v) in direct_io(&x, ch).into_iter().enumerate() {
            h[i][j] = v;
        }
    }
    h
}

/// `M[delta, omega] = sum_n R[n] conj(e^{j2pi omega n/N_p} S[n - delta])`.
pub fn matched_filter_literal(r: &[Complex64], s: &[Complex64]) -> Vec<Complex64> {
    let n_p = r.len();
    let mut out = Vec::with_capacity(n_p * n_p);
    for d in 0..n_p {
        for w in 0..n_p {
            let mut acc = c(0.0, 0.0);
            for n in 0..n_p {
                let e = Complex64::from_polar(1.0, 2.0 * PI * (w * n) as f64 / n_p as f64);
                acc += r[n] * (e * s[(n + n_p - d) % n_p]).conj();
            }
            out.push(acc);
        }
    }
    out
}

/// `R[n] = sum_i a_i e^{j2pi w_i n/N_p} S[n - d_i]` evaluated directly.
pub fn pilot_rx_literal(s: &[Complex64], paths: &[(Complex64, usize, usize)]) -> Vec<Complex64> {
    let n_p = s.len();
    (0..n_p)
        .map(|n| {
            paths
                .iter()
                .map(|&(a, d, w)| {
                    a * Complex64::from_polar(1.0, 2.0 * PI * (w * n) as f64 / n_p as f64) * s[(n + n_p - d) % n_p]
                })
                .sum()
        })
        .collect()
}

/// Naive conditional pmf: full cost recomputation per candidate, no residual tricks.
pub fn conditional_naive(
    k: usize,
    x: &[usize],
    y: &[Complex64],
    h: &[Vec<Complex64>],
    points: &[Complex64],
    sigma2: f64,
    temperature: f64,
) -> Vec<f64> {
    let costs: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(a, _)| {
            let mut xs: Vec<Complex64> = x.iter().map(|&i| points[i]).collect();
            xs[k] = points[a];
            h.iter()
                .zip(y)
                .map(|(row, yi)| (yi - row.iter().zip(&xs).map(|(hv, xv)| hv * xv).sum::<Complex64>()).norm_sqr())
                .sum()
        })
        .collect();
    let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = costs.iter().map(|cst| (-(cst - min) / (temperature * temperature * sigma2)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Exhaustive ML over BPSK on a dense matrix, first minimum in lexicographic order.
pub fn ml_dense_bpsk(y: &[Complex64], h: &[Vec<Complex64>]) -> Vec<usize> {
    let dim = y.len();
    let pts = [c(1.0, 0.0), c(-1.0, 0.0)];
    let mut best = (f64::INFINITY, vec![]);
    for code in 0..(1usize << dim) {
        let idx: Vec<usize> = (0..dim).map(|i| (code >> (dim - 1 - i)) & 1).collect();
        let cost: f64 = h
            .iter()
            .zip(y)
            .map(|(row, yi)| (yi - row.iter().zip(&idx).map(|(hv, &i)| hv * pts[i]).sum::<Complex64>()).norm_sqr())
            .sum();
        if cost < best.0 {
            best = (cost, idx);
        }
    }
    best.1
}

/// Random channel with `p` distinct delay taps (capped at `M`), `CN(0, 1/p)` gains and fractional Dopplers within half the Doppler span.
pub fn random_channel<R: Rng>(
    p: usize,
    cfg: &otfs::FrameConfig,
    e: usize,
    integer: bool,
    rng: &mut R,
) -> ChannelRealization {
    use otfs::channel::ChannelTap;
    let mut delays: Vec<usize> = (0..cfg.m()).collect();
    for i in 0..p.min(cfg.m()) {
        let j = rng.random_range(i..cfg.m());
        delays.swap(i, j);
    }
    let span = cfg.n() as f64 / 2.0 * cfg.doppler_resolution();
    let taps = (0..p.min(cfg.m()))
        .map(|i| {
            let mut nu = (rng.random::<f64>() * 2.0 - 1.0) * span * 0.9;
            if integer {
                nu = (nu / cfg.doppler_resolution()).round() * cfg.doppler_resolution();
            }
            let g = cn(rng) * (1.0 / p.min(cfg.m()) as f64).sqrt();
            ChannelTap::new(g, cfg.tap_to_delay(delays[i]), nu, cfg)
        })
        .collect();
    ChannelRealization::new(taps, e, *cfg).unwrap()
}

/// Unit-variance circularly-symmetric complex Gaussian.
pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    use rand_distr::{Distribution, StandardNormal};
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
