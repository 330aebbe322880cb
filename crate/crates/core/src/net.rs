//! Two-hidden-layer ReLU networks and tensor neural networks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Nonzero entry of the sparse second-layer matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl From<(usize, usize, f64)> for Triplet {
    fn from((row, col, value): (usize, usize, f64)) -> Self {
        Triplet { row, col, value }
    }
}

impl From<Triplet> for (usize, usize, f64) {
    fn from(t: Triplet) -> Self {
        (t.row, t.col, t.value)
    }
}

/// Where a compiled network came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mesh_sha256: String,
    pub epsilon: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub compact_support: bool,
    /// `t0` per mesh cell, in mesh order.
    pub t0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull_t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `x ↦ w3·σ(W2 σ(W1 x + b1) + b2) + output_bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNet2 {
    pub n: usize,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// Row-sorted triplets of `W2` (h2 × h1).
    pub w2: Vec<Triplet>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub output_bias: Option<f64>,
    pub provenance: Option<Provenance>,
}

impl ReluNet2 {
    pub fn h1(&self) -> usize {
        self.b1.len()
    }

    pub fn h2(&self) -> usize {
        self.b2.len()
    }

    /// Shape, index and finiteness checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNetwork(m));
        if self.n == 0 || self.h1() == 0 || self.h2() == 0 {
            return bad(format!("empty layer: n={} h1={} h2={}", self.n, self.h1(), self.h2()));
        }
        if self.w1.len() != self.h1() {
            return bad(format!("W1 has {} rows, b1 has {}", self.w1.len(), self.h1()));
        }
        if let Some((i, r)) = self.w1.iter().enumerate().find(|(_, r)| r.len() != self.n) {
            return bad(format!("W1 row {i} has length {} (n = {})", r.len(), self.n));
        }
        if self.w3.len() != self.h2() {
            return bad(format!("w3 has length {}, b2 has {}", self.w3.len(), self.h2()));
        }
        for t in &self.w2 {
            if t.row >= self.h2() || t.col >= self.h1() {
                return bad(format!(
                    "W2 triplet ({}, {}) out of range for {}x{}",
                    t.row,
                    t.col,
                    self.h2(),
                    self.h1()
                ));
            }
        }
        if self.w2.windows(2).any(|p| p[0].row > p[1].row) {
            return bad("W2 triplets must be sorted by row".into());
        }
        let finite = self.w1.iter().flatten().all(|v| v.is_finite())
            && self.b1.iter().chain(&self.b2).chain(&self.w3).all(|v| v.is_finite())
            && self.w2.iter().all(|t| t.value.is_finite())
            && self.output_bias.is_none_or(f64::is_finite);
        if !finite {
            return bad("non-finite weight".into());
        }
        Ok(())
    }

    /// First hidden layer activations.
    pub fn hidden1(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| relu(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b))
            .collect()
    }

    /// Second hidden layer activations.
    pub fn hidden2(&self, x: &[f64]) -> Vec<f64> {
        let z1 = self.hidden1(x);
        let mut pre = self.b2.clone();
        for t in &self.w2 {
            pre[t.row] += t.value * z1[t.col];
        }
        pre.into_iter().map(relu).collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let z2 = self.hidden2(x);
        let out: f64 = self.w3.iter().zip(&z2).map(|(w, z)| w * z).sum();
        Ok(out + self.output_bias.unwrap_or(0.0))
    }

    pub fn forward_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|x| self.forward(x)).collect()
    }
}

/// Free-function form of [`ReluNet2::forward`].
pub fn fnn_forward(net: &ReluNet2, x: &[f64]) -> Result<f64> {
    net.forward(x)
}

/// One-hidden-layer scalar network per axis: `t ↦ weights[p]·σ(W t + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    /// One row of length `h_k` per rank term.
    pub weights: Vec<Vec<f64>>,
}

impl Branch {
    pub fn width(&self) -> usize {
        self.b.len()
    }

    pub fn hidden(&self, t: f64) -> Vec<f64> {
        self.w.iter().zip(&self.b).map(|(w, b)| relu(w * t + b)).collect()
    }
}

/// `x ↦ Σ_p Π_k weights_k[p]·σ(W_k x_k + b_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorNet {
    pub rank: usize,
    pub branches: Vec<Branch>,
}

impl TensorNet {
    pub fn dimension(&self) -> usize {
        self.branches.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.branches.iter().map(Branch::width).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNetwork(m));
        if self.branches.is_empty() || self.rank == 0 {
            return bad("tensor network needs at least one branch and rank >= 1".into());
        }
        for (k, br) in self.branches.iter().enumerate() {
            let h = br.width();
            if h == 0 || br.w.len() != h {
                return bad(format!("branch {} has W of length {} and b of length {h}", k + 1, br.w.len()));
            }
            if br.weights.len() != self.rank {
                return bad(format!("branch {} has {} weight rows, rank is {}", k + 1, br.weights.len(), self.rank));
            }
            if br.weights.iter().any(|row| row.len() != h) {
                return bad(format!("branch {} weight row length differs from width {h}", k + 1));
            }
            let finite = br.w.iter().chain(&br.b).chain(br.weights.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return bad(format!("branch {} has a non-finite weight", k + 1));
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: x.len(),
            });
        }
        let hidden: Vec<Vec<f64>> = self.branches.iter().zip(x).map(|(br, &t)| br.hidden(t)).collect();
        let total = (0..self.rank)
            .map(|p| {
                self.branches
                    .iter()
                    .zip(&hidden)
                    .map(|(br, z)| br.weights[p].iter().zip(z).map(|(w, v)| w * v).sum::<f64>())
                    .product::<f64>()
            })
            .sum();
        Ok(total)
    }

    pub fn forward_batch(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|x| self.forward(x)).collect()
    }
}

pub fn tnn_forward(tnn: &TensorNet, x: &[f64]) -> Result<f64> {
    tnn.forward(x)
}
