//! Dense singular value decompositions, backed by faer.

use faer::Mat;

use crate::error::{Error, Result};

/// Thin SVD `A = U diag(s) Vᵀ` with `k = min(rows, cols)` triplets.
pub(crate) struct Svd {
    /// `u[i]` is the i-th left singular vector (length `rows`).
    pub u: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    /// `v[i]` is the i-th right singular vector (length `cols`).
    pub v: Vec<Vec<f64>>,
}

impl Svd {
    pub fn new(rows: usize, cols: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let a = Mat::<f64>::from_fn(rows, cols, entry);
        let svd = a
            .thin_svd()
            .map_err(|e| Error::Internal(format!("singular value decomposition failed: {e:?}")))?;
        let k = rows.min(cols);
        let (u, s, v) = (svd.U(), svd.S(), svd.V());
        Ok(Svd {
            u: (0..k).map(|i| (0..rows).map(|r| u[(r, i)]).collect()).collect(),
            s: (0..k).map(|i| s[i]).collect(),
            v: (0..k).map(|i| (0..cols).map(|c| v[(c, i)]).collect()).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.s.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Minimum-norm least squares solution of `A x = b`, dropping singular
    /// values at or below `rel_tol · s_max`.
    pub fn solve(&self, b: &[f64], rel_tol: f64) -> Vec<f64> {
        let cutoff = rel_tol * self.max();
        let cols = self.v.first().map_or(0, Vec::len);
        let mut x = vec![0.0; cols];
        for ((u, &s), v) in self.u.iter().zip(&self.s).zip(&self.v) {
            if s > cutoff && s > 0.0 {
                let coeff = u.iter().zip(b).map(|(a, b)| a * b).sum::<f64>() / s;
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += coeff * vi;
                }
            }
        }
        x
    }
}
