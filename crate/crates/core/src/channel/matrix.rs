use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::lattice::FrameConfig;

use super::ChannelRealization;

/// Sparse `NM x NM` matrix `H` with `y = H x` over vectorized DD frames.
///
/// Kept in both compressed-row and compressed-column form: the detectors
/// walk columns, cost evaluation walks rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivChannelMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<Complex64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<Complex64>,
}

impl EquivChannelMatrix {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::InvalidArgument(format!("entry ({r}, {c}) outside {dim}x{dim}")));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != Complex64::new(0.0, 0.0));

        let mut row_ptr = vec![0; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let row_cols = merged.iter().map(|t| t.1).collect();
        let row_vals = merged.iter().map(|t| t.2).collect();

        merged.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; dim + 1];
        for &(_, c, _) in &merged {
            col_ptr[c + 1] += 1;
        }
        for i in 0..dim {
            col_ptr[i + 1] += col_ptr[i];
        }
        let col_rows = merged.iter().map(|t| t.0).collect();
        let col_vals = merged.iter().map(|t| t.2).collect();

        Ok(Self { dim, row_ptr, row_cols, row_vals, col_ptr, col_rows, col_vals })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect()).unwrap()
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, Vec::new()).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[Complex64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.row_cols[span.clone()], &self.row_vals[span])
    }

    /// Row indices and values of column `c`.
    pub fn col(&self, c: usize) -> (&[usize], &[Complex64]) {
        let span = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.col_rows[span.clone()], &self.col_vals[span])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn col_nnz(&self, c: usize) -> usize {
        self.col_ptr[c + 1] - self.col_ptr[c]
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.dim).map(|r| self.row_nnz(r)).max().unwrap_or(0)
    }

    pub fn max_col_nnz(&self) -> usize {
        (0..self.dim).map(|c| self.col_nnz(c)).max().unwrap_or(0)
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|i| vals[i]).unwrap_or_default()
    }

    /// `H x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.dim, x.len())?;
        Ok((0..self.dim)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
            })
            .collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.row_vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||self - other||_F`.
    pub fn frobenius_distance(&self, other: &Self) -> Result<f64> {
        check_len(self.dim, other.dim)?;
        let mut acc = 0.0;
        for r in 0..self.dim {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let d = match (ca.get(i), cb.get(j)) {
                    (Some(a), Some(b)) if a == b => {
                        i += 1;
                        j += 1;
                        va[i - 1] - vb[j - 1]
                    }
                    (Some(a), Some(b)) if a < b => {
                        i += 1;
                        va[i - 1]
                    }
                    (Some(_), None) => {
                        i += 1;
                        va[i - 1]
                    }
                    _ => {
                        j += 1;
                        -vb[j - 1]
                    }
                };
                acc += d.norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }

    /// Dense row-major copy, for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::default(); self.dim]; self.dim];
        for (r, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }
}

/// Equivalent channel matrix of a realization. Row `k + N l` holds the
/// coefficients that produce `y[k, l]`.
pub fn build_h(ch: &ChannelRealization, cfg: &FrameConfig) -> Result<EquivChannelMatrix> {
    if ch.frame().n() != cfg.n() || ch.frame().m() != cfg.m() {
        return Err(Error::DimensionMismatch { expected: cfg.len(), got: ch.frame().len() });
    }
    let (n, m) = (cfg.n(), cfg.m());
    let coefs: Vec<_> = ch.taps().iter().map(|t| (t, ch.tap_coefficients(t))).collect();
    let per_row: usize = coefs.iter().map(|(_, c)| c.len()).sum();
    let mut triplets = Vec::with_capacity(n * m * per_row);
    for l in 0..m {
        for k in 0..n {
            let row = k + n * l;
            for (tap, taps) in &coefs {
                let src_l = (l + m - tap.delay_tap) % m;
                for &(q, coef) in taps {
                    let src_k = (k as i64 - tap.doppler_tap as i64 + q).rem_euclid(n as i64) as usize;
                    triplets.push((row, src_k + n * src_l, coef));
                }
            }
        }
    }
    EquivChannelMatrix::from_triplets(n * m, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelTap, ChannelRealization};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let h = EquivChannelMatrix::from_triplets(
            3,
            vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (2, 0, c(1.0)), (2, 0, c(-1.0)), (1, 2, c(5.0))],
        )
        .unwrap();
        assert_eq!(h.nnz(), 2);
        assert_eq!(h.get(0, 1), c(3.0));
        assert_eq!(h.get(2, 0), c(0.0));
        assert_eq!(h.col(2), (&[1usize][..], &[c(5.0)][..]));
        assert!(EquivChannelMatrix::from_triplets(2, vec![(2, 0, c(1.0))]).is_err());
    }

    #[test]
    fn identity_channel_gives_identity_matrix() {
        let cfg = FrameConfig::new(4, 3, 1000.0, 1e9).unwrap();
        let h = build_h(&ChannelRealization::identity(cfg), &cfg).unwrap();
        assert_eq!(h, EquivChannelMatrix::identity(12));
    }

    #[test]
    fn integer_taps_give_p_entries_per_row_and_column() {
        let cfg = FrameConfig::new(16, 8, 1000.0, 1e9).unwrap();
        let taps = (0..5)
            .map(|i| ChannelTap::new(c(0.3 + i as f64), cfg.tap_to_delay(i), (i as f64 - 2.0) * cfg.doppler_resolution(), &cfg))
            .collect();
        let ch = ChannelRealization::new(taps, 4, cfg).unwrap();
        let h = build_h(&ch, &cfg).unwrap();
        for i in 0..h.dim() {
            assert_eq!(h.row_nnz(i), 5);
            assert_eq!(h.col_nnz(i), 5);
        }
    }

    #[test]
    fn frobenius_distance_cases() {
        let a = EquivChannelMatrix::from_triplets(3, vec![(0, 0, c(1.0)), (1, 2, c(2.0))]).unwrap();
        let b = EquivChannelMatrix::from_triplets(3, vec![(0, 0, c(1.0)), (2, 1, c(2.0))]).unwrap();
        assert_eq!(a.frobenius_distance(&a).unwrap(), 0.0);
        assert!((a.frobenius_distance(&b).unwrap() - 8f64.sqrt()).abs() < 1e-15);
        let z = EquivChannelMatrix::zeros(3);
        assert!((a.frobenius_distance(&z).unwrap() - a.frobenius_norm()).abs() < 1e-15);
        assert!(a.frobenius_distance(&EquivChannelMatrix::zeros(2)).is_err());
    }
}
