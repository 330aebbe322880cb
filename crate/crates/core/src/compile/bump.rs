//! Per-cell bump networks `φ(x) = σ(w_II·σ(W_I x + b_I) + b_II)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Svd;
use crate::lp::{DenseLp, LpOutcome, Relation, Sense};
use crate::mesh::{dot, norm, ConvexCell};
use crate::net::relu;
use crate::pwl::AffinePiece;

/// Multiplier applied to `t0` to absorb rounding in the exterior inequality.
pub const T0_SAFETY: f64 = 1.0 + 1e-9;

/// SVD of the n × m matrix whose columns are the facet normals.
fn normal_svd(cell: &ConvexCell) -> Result<Svd> {
    Svd::new(cell.dimension(), cell.facet_count(), |r, c| cell.halfspaces[c].normal[r])
}

fn apply_normals(cell: &ConvexCell, coeff: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cell.dimension()];
    for (h, &c) in cell.halfspaces.iter().zip(coeff) {
        for (o, w) in out.iter_mut().zip(&h.normal) {
            *o += c * w;
        }
    }
    out
}

fn combination_residual(cell: &ConvexCell, lambda: &[f64]) -> (f64, f64) {
    let n = cell.dimension();
    let mut sum = vec![0.0; n];
    let mut weight = 0.0;
    for (h, &l) in cell.halfspaces.iter().zip(lambda) {
        for (s, w) in sum.iter_mut().zip(&h.normal) {
            *s += l * w;
        }
        weight += l * h.norm();
    }
    (norm(&sum), weight)
}

/// Positive weights with `Σ λ_i w_i = 0` and `min λ_i ≥ 1`, from the LP
/// `min Σλ s.t. Σ λ_i w_i = 0, λ ≥ 1`, then projected back onto the null
/// space of the normal matrix to remove solver round-off.
pub fn positive_normal_combination(cell: &ConvexCell) -> Result<Vec<f64>> {
    let n = cell.dimension();
    let m = cell.facet_count();
    let mut lp = DenseLp::new(Sense::Minimize, vec![1.0; m]);
    for i in 0..m {
        lp.bound(i, 1.0, f64::INFINITY);
    }
    for j in 0..n {
        let row = cell.halfspaces.iter().map(|h| h.normal[j]).collect();
        lp.constraint(row, Relation::Eq, 0.0);
    }
    let lambda = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => x,
        _ => return Err(Error::NoPositiveCombination { cell: 0 }),
    };

    let correction = normal_svd(cell)?.solve(&apply_normals(cell, &lambda), 1e-14);
    let projected: Vec<f64> = lambda.iter().zip(&correction).map(|(l, c)| l - c).collect();
    let min = projected.iter().copied().fold(f64::INFINITY, f64::min);
    let polished: Vec<f64> = if min > 0.0 {
        projected.iter().map(|v| v / min.min(1.0)).collect()
    } else {
        lambda.clone()
    };

    let best = [polished, lambda]
        .into_iter()
        .map(|l| {
            let (res, weight) = combination_residual(cell, &l);
            (res / weight, l)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("two candidates");
    if !(best.0 <= 1e-10) || best.1.iter().any(|&l| l < 1.0 - 1e-12) {
        return Err(Error::NoPositiveCombination { cell: 0 });
    }
    Ok(best.1.into_iter().map(|l| l.max(1.0)).collect())
}

/// Minimum-norm solution of `Σ μ_i w_i = −a`.
pub fn solve_mu(cell: &ConvexCell, gradient: &[f64]) -> Result<Vec<f64>> {
    let n = cell.dimension();
    if gradient.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: gradient.len(),
        });
    }
    let svd = normal_svd(cell)?;
    if svd.s.len() < n || !(svd.min() > 1e-12 * svd.max()) {
        return Err(Error::RankDeficient { cell: 0 });
    }
    let rhs: Vec<f64> = gradient.iter().map(|g| -g).collect();
    let mu = svd.solve(&rhs, 0.0);
    let reached = apply_normals(cell, &mu);
    let residual = norm(&reached.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    if residual > 1e-10 * (1.0 + norm(&rhs)) {
        return Err(Error::RankDeficient { cell: 0 });
    }
    Ok(mu)
}

/// The shift `s` making every `μ_i + sλ_i` positive, and the scale `t0`
/// (including the rounding safety factor) at which the bump vanishes
/// outside the cell.
pub fn shift_t0(
    cell: &ConvexCell,
    mu: &[f64],
    lambda: &[f64],
    c: f64,
    r: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument("lambda must be strictly positive".into()));
    }
    let s = mu
        .iter()
        .zip(lambda)
        .map(|(m, l)| (m / l).abs())
        .fold(0.0, f64::max)
        + 1.0;
    let mut weighted_offsets = 0.0;
    let mut slack = 0.0;
    let mut denom = f64::INFINITY;
    for ((h, &m), &l) in cell.halfspaces.iter().zip(mu).zip(lambda) {
        let wn = h.norm();
        weighted_offsets += (m + s * l) * h.offset;
        slack += epsilon * m.abs() * wn;
        denom = denom.min(epsilon * l * wn);
    }
    let t0 = (((weighted_offsets + c + r).abs() + slack) / denom).max(s + 1.0);
    Ok((s, t0 * T0_SAFETY))
}

/// Weights of one bump network and the quantities they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellBump {
    #[serde(rename = "W_I")]
    pub w_i: Vec<Vec<f64>>,
    #[serde(rename = "b_I")]
    pub b_i: Vec<f64>,
    #[serde(rename = "w_II")]
    pub w_ii: Vec<f64>,
    #[serde(rename = "b_II")]
    pub b_ii: f64,
    pub cell: usize,
    pub t0: f64,
    pub s: f64,
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl CellBump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let inner: f64 = self
            .w_i
            .iter()
            .zip(&self.b_i)
            .zip(&self.w_ii)
            .map(|((row, b), w)| w * relu(dot(row, x) + b))
            .sum();
        relu(inner + self.b_ii)
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.w_ii.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// Bump weights for a given `t`:
/// `W_I = (w_i)`, `b_I = b_i − ε|w_i|`, `w_II = −(μ + tλ)`,
/// `b_II = Σ(μ_i + tλ_i)(b_i − ε|w_i|) + c + R`.
pub fn assemble_bump(
    cell: &ConvexCell,
    piece: &AffinePiece,
    r: f64,
    epsilon: f64,
    mu: &[f64],
    lambda: &[f64],
    t: f64,
) -> CellBump {
    let shrunk = cell.shrink(epsilon);
    let w_i: Vec<Vec<f64>> = shrunk.halfspaces.iter().map(|h| h.normal.clone()).collect();
    let b_i: Vec<f64> = shrunk.halfspaces.iter().map(|h| h.offset).collect();
    let coeff: Vec<f64> = mu.iter().zip(lambda).map(|(m, l)| m + t * l).collect();
    let w_ii = coeff.iter().map(|c| -c).collect();
    let b_ii = coeff.iter().zip(&b_i).map(|(c, b)| c * b).sum::<f64>() + piece.constant + r;
    CellBump {
        w_i,
        b_i,
        w_ii,
        b_ii,
        cell: 0,
        t0: t,
        s: f64::NAN,
        mu: mu.to_vec(),
        lambda: lambda.to_vec(),
    }
}

/// Bump equal to `v + R` on the shrunk cell, within `[0, 2R]` on the
/// collar and zero outside the cell. Requires `R ≥ sup |v|` on the cell.
pub fn compile_cell_bump(cell: &ConvexCell, piece: &AffinePiece, r: f64, epsilon: f64) -> Result<CellBump> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (_, radius) = cell.chebyshev_center()?;
    if !(radius > epsilon) {
        return Err(Error::EpsilonTooLarge(format!(
            "epsilon {epsilon} is not below the inradius {radius}"
        )));
    }
    let lambda = positive_normal_combination(cell)?;
    let mu = solve_mu(cell, &piece.gradient)?;
    let (s, t0) = shift_t0(cell, &mu, &lambda, piece.constant, r, epsilon)?;
    let mut bump = assemble_bump(cell, piece, r, epsilon, &mu, &lambda, t0);
    bump.s = s;
    Ok(bump)
}
