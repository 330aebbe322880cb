//! Canonical polyadic (CP) factorization of small dense tensors.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Svd;

/// Singular values below `RANK_TOL · σ_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-12;
pub const ALS_MAX_SWEEPS: usize = 500;
pub const ALS_MIN_IMPROVEMENT: f64 = 1e-12;

/// Dense tensor stored in row-major order (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || shape.contains(&0) || len != data.len() {
            return Err(Error::InvalidArgument(format!(
                "tensor shape {shape:?} does not match {} entries",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Multi-index of every entry, in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.data.len()).map(move |mut flat| {
            let mut idx = vec![0; self.shape.len()];
            for k in (0..self.shape.len()).rev() {
                idx[k] = flat % self.shape[k];
                flat /= self.shape[k];
            }
            idx
        })
    }

    /// Rank bound from the matricization along the longest axis.
    pub fn matricization_bound(&self) -> usize {
        let max = *self.shape.iter().max().expect("non-empty shape");
        self.shape.iter().product::<usize>() / max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpMethod {
    Svd,
    Als,
    Matricization,
}

/// `c ≈ Σ_p factors[p][0] ⊗ … ⊗ factors[p][n−1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors {
    pub rank: usize,
    /// `factors[p][k]` has length `shape[k]`.
    pub factors: Vec<Vec<Vec<f64>>>,
    /// Frobenius norm of the reconstruction error.
    pub residual: f64,
    pub method: CpMethod,
}

impl CpFactors {
    pub fn reconstruct(&self, shape: &[usize]) -> Tensor {
        let zero = Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        };
        let data = zero
            .indices()
            .map(|idx| {
                self.factors
                    .iter()
                    .map(|f| idx.iter().enumerate().map(|(k, &i)| f[k][i]).product::<f64>())
                    .sum()
            })
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    fn with_residual(mut self, c: &Tensor) -> Self {
        let rec = self.reconstruct(&c.shape);
        self.residual = rec
            .data
            .iter()
            .zip(&c.data)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        self
    }
}

fn svd_factors(c: &Tensor) -> Result<CpFactors> {
    let (d1, d2) = (c.shape[0], c.shape[1]);
    let svd = Svd::new(d1, d2, |r, k| c.data[r * d2 + k])?;
    let smax = svd.max();
    let mut order: Vec<usize> = (0..svd.s.len()).collect();
    order.sort_by(|&a, &b| svd.s[b].total_cmp(&svd.s[a]));
    let factors: Vec<Vec<Vec<f64>>> = order
        .into_iter()
        .filter(|&p| smax > 0.0 && svd.s[p] > RANK_TOL * smax)
        .map(|p| vec![svd.u[p].iter().map(|v| v * svd.s[p]).collect(), svd.v[p].clone()])
        .collect();
    Ok(CpFactors {
        rank: factors.len(),
        factors,
        residual: 0.0,
        method: CpMethod::Svd,
    }
    .with_residual(c))
}

/// Exact factorization with one term per fibre along the longest axis.
fn matricized_factors(c: &Tensor) -> CpFactors {
    let n = c.order();
    let long = (0..n).max_by_key(|&k| (c.shape[k], usize::MAX - k)).expect("non-empty");
    let others: Vec<usize> = (0..n).filter(|&k| k != long).collect();
    let other_shape: Vec<usize> = others.iter().map(|&k| c.shape[k]).collect();
    let index_space = Tensor {
        shape: other_shape,
        data: vec![0.0; c.shape.iter().product::<usize>() / c.shape[long]],
    };
    let factors = index_space
        .indices()
        .map(|rest| {
            let mut idx = vec![0; n];
            for (j, &k) in others.iter().enumerate() {
                idx[k] = rest[j];
            }
            (0..n)
                .map(|k| {
                    if k == long {
                        (0..c.shape[long])
                            .map(|i| {
                                idx[long] = i;
                                c.get(&idx)
                            })
                            .collect()
                    } else {
                        let mut e = vec![0.0; c.shape[k]];
                        e[idx[k]] = 1.0;
                        e
                    }
                })
                .collect()
        })
        .collect::<Vec<Vec<Vec<f64>>>>();
    CpFactors {
        rank: factors.len(),
        factors,
        residual: 0.0,
        method: CpMethod::Matricization,
    }
    .with_residual(c)
}

/// Alternating least squares at a fixed rank. Returns the factors after
/// convergence or `ALS_MAX_SWEEPS` sweeps.
fn als(c: &Tensor, rank: usize, seed: u64) -> CpFactors {
    let n = c.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rank as u64);
    // a[k] is shape[k] × rank
    let mut a: Vec<DMatrix<f64>> = c
        .shape
        .iter()
        .map(|&d| DMatrix::from_fn(d, rank, |_, _| rng.random::<f64>() * 2.0 - 1.0))
        .collect();
    let indices: Vec<Vec<usize>> = c.indices().collect();
    let residual_of = |a: &[DMatrix<f64>]| -> f64 {
        indices
            .iter()
            .zip(&c.data)
            .map(|(idx, &x)| {
                let rec: f64 = (0..rank)
                    .map(|p| (0..n).map(|k| a[k][(idx[k], p)]).product::<f64>())
                    .sum();
                (rec - x).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut residual = residual_of(&a);
    for _ in 0..ALS_MAX_SWEEPS {
        for k in 0..n {
            let mut gram = DMatrix::from_element(rank, rank, 1.0);
            for (j, aj) in a.iter().enumerate() {
                if j != k {
                    gram.component_mul_assign(&(aj.transpose() * aj));
                }
            }
            let mut rhs = DMatrix::<f64>::zeros(c.shape[k], rank);
            for (idx, &x) in indices.iter().zip(&c.data) {
                for p in 0..rank {
                    let prod: f64 = (0..n).filter(|&j| j != k).map(|j| a[j][(idx[j], p)]).product();
                    rhs[(idx[k], p)] += x * prod;
                }
            }
            // the Gram matrix is symmetric, so each row solves gram·y = rhs_row
            if let Ok(svd) = Svd::new(rank, rank, |r, q| gram[(r, q)]) {
                for r in 0..c.shape[k] {
                    let row: Vec<f64> = (0..rank).map(|q| rhs[(r, q)]).collect();
                    for (q, y) in svd.solve(&row, 1e-14).into_iter().enumerate() {
                        a[k][(r, q)] = y;
                    }
                }
            }
        }
        let next = residual_of(&a);
        let improvement = residual - next;
        residual = next;
        if improvement.abs() <= ALS_MIN_IMPROVEMENT * residual.max(c.frobenius()) {
            break;
        }
    }
    let factors = (0..rank)
        .map(|p| (0..n).map(|k| a[k].column(p).iter().copied().collect()).collect())
        .collect();
    CpFactors {
        rank,
        factors,
        residual: 0.0,
        method: CpMethod::Als,
    }
    .with_residual(c)
}

/// CP factorization of `c`. Order two uses the SVD with numerical rank;
/// higher orders run ALS for increasing rank until the relative residual is
/// at most `target_tol`, falling back to the exact matricized factorization
/// when the rank bound is reached.
pub fn cp_decompose(c: &Tensor, target_tol: f64, seed: u64) -> Result<CpFactors> {
    if c.order() < 2 {
        return Err(Error::InvalidArgument("CP factorization needs a tensor of order >= 2".into()));
    }
    if !(target_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {target_tol}")));
    }
    let norm = c.frobenius();
    if c.order() == 2 {
        let f = svd_factors(c)?;
        // a failed decomposition must not leak into a strict representation
        if f.residual <= target_tol.max(1e-10) * norm {
            return Ok(f);
        }
        return Ok(matricized_factors(c));
    }
    if norm == 0.0 {
        return Ok(CpFactors {
            rank: 0,
            factors: Vec::new(),
            residual: 0.0,
            method: CpMethod::Als,
        });
    }
    let bound = c.matricization_bound();
    for rank in 1..bound {
        let f = als(c, rank, seed);
        if f.residual <= target_tol * norm {
            return Ok(f);
        }
    }
    Ok(matricized_factors(c))
}
