use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{DenseLp, LpOutcome, Relation, Sense};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The closed halfspace `{x : normal·x + offset >= 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    #[serde(rename = "w")]
    pub normal: Vec<f64>,
    #[serde(rename = "b")]
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let h = Halfspace { normal, offset };
        h.check()?;
        Ok(h)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.normal.is_empty() {
            return Err(Error::InvalidMesh("halfspace normal is empty".into()));
        }
        if !self.offset.is_finite() || self.normal.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("halfspace has non-finite entries".into()));
        }
        if self.norm() <= 0.0 {
            return Err(Error::InvalidMesh("halfspace normal has zero length".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.normal.len()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) + self.offset
    }

    pub fn norm(&self) -> f64 {
        norm(&self.normal)
    }

    /// Signed distance from `x` to the bounding hyperplane, positive inside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        self.eval(x) / self.norm()
    }

    /// Unit normal and the matching offset.
    pub fn canonical(&self) -> (Vec<f64>, f64) {
        let len = self.norm();
        (self.normal.iter().map(|v| v / len).collect(), self.offset / len)
    }

    /// Offset moved inward by `epsilon` times the normal length.
    pub fn shifted(&self, epsilon: f64) -> Halfspace {
        Halfspace {
            normal: self.normal.clone(),
            offset: self.offset - epsilon * self.norm(),
        }
    }
}

/// A closed convex polytope in H-representation. Simplex cells also carry
/// the indices of their vertices in the owning mesh's node list.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCell {
    pub halfspaces: Vec<Halfspace>,
    pub nodes: Option<Vec<usize>>,
}

impl ConvexCell {
    pub fn new(halfspaces: Vec<Halfspace>) -> Self {
        ConvexCell {
            halfspaces,
            nodes: None,
        }
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn bounding_box_cell(lo: &[f64], hi: &[f64]) -> Self {
        let n = lo.len();
        let mut hs = Vec::with_capacity(2 * n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            hs.push(Halfspace {
                normal: e.clone(),
                offset: -lo[j],
            });
            e[j] = -1.0;
            hs.push(Halfspace {
                normal: e,
                offset: hi[j],
            });
        }
        ConvexCell::new(hs)
    }

    /// Simplex from its `n + 1` vertices. Facet `i` is opposite vertex `i`,
    /// and its halfspace is the `i`-th barycentric coordinate function.
    pub fn from_simplex(vertices: &[Vec<f64>]) -> Result<Self> {
        let n = vertices.len().saturating_sub(1);
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidMesh(format!(
                "a simplex in R^n needs n+1 vertices of length n (got {} vertices)",
                vertices.len()
            )));
        }
        let v0 = &vertices[0];
        let edges = DMatrix::from_fn(n, n, |r, c| vertices[c + 1][r] - v0[r]);
        let scale = (0..n)
            .map(|c| edges.column(c).norm())
            .fold(0.0_f64, f64::max);
        let det = edges.determinant();
        if !(det.abs() > 1e-12 * scale.powi(n as i32)) {
            return Err(Error::DegenerateCell {
                cell: 0,
                reason: format!("simplex determinant {det:e} is below tolerance"),
            });
        }
        let inv = edges
            .try_inverse()
            .ok_or_else(|| Error::DegenerateCell {
                cell: 0,
                reason: "singular simplex".into(),
            })?;
        let mut hs = Vec::with_capacity(n + 1);
        let mut g0 = vec![0.0; n];
        let mut d0 = 1.0;
        for j in 0..n {
            let g: Vec<f64> = (0..n).map(|c| inv[(j, c)]).collect();
            let d = -dot(&g, v0);
            for c in 0..n {
                g0[c] -= g[c];
            }
            d0 -= d;
            hs.push(Halfspace {
                normal: g,
                offset: d,
            });
        }
        hs.insert(
            0,
            Halfspace {
                normal: g0,
                offset: d0,
            },
        );
        let cell = ConvexCell::new(hs);
        let centroid = centroid(vertices);
        if cell.halfspaces.iter().any(|h| h.eval(&centroid) <= 0.0) {
            return Err(Error::Internal("simplex facet is not inward oriented".into()));
        }
        Ok(cell)
    }

    pub fn dimension(&self) -> usize {
        self.halfspaces.first().map_or(0, |h| h.dimension())
    }

    pub fn facet_count(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.eval(x) >= -tol)
    }

    /// `min_i (w_i·x + b_i)/|w_i|`: the distance to the boundary for points
    /// inside the cell, negative outside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.signed_distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every offset moved inward by `epsilon·|w_i|`; normals unchanged.
    pub fn shrink(&self, epsilon: f64) -> ConvexCell {
        ConvexCell {
            halfspaces: self.halfspaces.iter().map(|h| h.shifted(epsilon)).collect(),
            nodes: self.nodes.clone(),
        }
    }

    /// Restriction to an additional halfspace.
    pub fn intersect(&self, h: Halfspace) -> ConvexCell {
        let mut halfspaces = self.halfspaces.clone();
        halfspaces.push(h);
        ConvexCell::new(halfspaces)
    }

    /// Structural checks that need no LP: consistent dimension, enough
    /// facets, no facet repeated as a positive multiple.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.dimension();
        if n == 0 {
            return Err(Error::InvalidMesh("cell has no halfspaces".into()));
        }
        for h in &self.halfspaces {
            h.check()?;
            if h.dimension() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: h.dimension(),
                });
            }
        }
        if self.halfspaces.len() < n + 1 {
            return Err(Error::DegenerateCell {
                cell: 0,
                reason: format!("{} halfspaces cannot bound a cell in R^{n}", self.halfspaces.len()),
            });
        }
        let canon: Vec<_> = self.halfspaces.iter().map(|h| h.canonical()).collect();
        for i in 0..canon.len() {
            for j in 0..i {
                let same = canon[i].0.iter().zip(&canon[j].0).all(|(a, b)| (a - b).abs() <= 1e-9)
                    && (canon[i].1 - canon[j].1).abs() <= 1e-9;
                if same {
                    return Err(Error::DegenerateCell {
                        cell: 0,
                        reason: format!("halfspaces {j} and {i} are positive multiples"),
                    });
                }
            }
        }
        Ok(())
    }

    fn lp_over_cell(&self, sense: Sense, objective: &[f64]) -> Result<LpOutcome> {
        let mut lp = DenseLp::new(sense, objective.to_vec());
        for h in &self.halfspaces {
            lp.constraint(h.normal.clone(), Relation::Ge, -h.offset);
        }
        lp.solve()
    }

    /// Maximum (or minimum) of `gradient·x + constant` over the cell.
    pub fn affine_extremum(&self, gradient: &[f64], constant: f64, maximize: bool) -> Result<f64> {
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        match self.lp_over_cell(sense, gradient)? {
            LpOutcome::Optimal { value, .. } => Ok(value + constant),
            LpOutcome::Infeasible => Err(Error::EmptyInterior {
                cell: 0,
                radius: f64::NEG_INFINITY,
            }),
            LpOutcome::Unbounded => Err(Error::UnboundedCell { cell: 0 }),
        }
    }

    /// Coordinate-wise bounds, or an error if the cell is unbounded or empty.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dimension();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            hi[j] = self.affine_extremum(&e, 0.0, true)?;
            lo[j] = self.affine_extremum(&e, 0.0, false)?;
        }
        Ok((lo, hi))
    }

    /// Center and radius of the largest inscribed ball. The radius is
    /// negative when the halfspaces have empty intersection.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.dimension();
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let mut lp = DenseLp::new(Sense::Maximize, objective);
        for h in &self.halfspaces {
            let mut row = h.normal.clone();
            row.push(-h.norm());
            lp.constraint(row, Relation::Ge, -h.offset);
        }
        match lp.solve()? {
            LpOutcome::Optimal { mut x, .. } => {
                let r = x.pop().unwrap_or(0.0);
                Ok((x, r))
            }
            LpOutcome::Unbounded => Err(Error::UnboundedCell { cell: 0 }),
            LpOutcome::Infeasible => Err(Error::Internal("Chebyshev LP infeasible".into())),
        }
    }

    /// Drops halfspaces that do not support a facet.
    pub fn remove_redundant(&self) -> Result<ConvexCell> {
        let mut keep: Vec<bool> = vec![true; self.halfspaces.len()];
        for i in 0..self.halfspaces.len() {
            let others = ConvexCell::new(
                self.halfspaces
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i && keep[*j])
                    .map(|(_, h)| h.clone())
                    .collect(),
            );
            if others.halfspaces.is_empty() {
                continue;
            }
            let h = &self.halfspaces[i];
            let redundant = match others.lp_over_cell(Sense::Minimize, &h.normal)? {
                LpOutcome::Optimal { value, .. } => (value + h.offset) / h.norm() >= -1e-9,
                LpOutcome::Infeasible => true,
                LpOutcome::Unbounded => false,
            };
            if redundant {
                keep[i] = false;
            }
        }
        Ok(ConvexCell {
            halfspaces: self
                .halfspaces
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(h, _)| h.clone())
                .collect(),
            nodes: self.nodes.clone(),
        })
    }

    /// Exact volume by Lasserre's recursive facet formula. Requires a
    /// bounded cell; empty cells give zero.
    pub fn volume(&self) -> Result<f64> {
        let (center, radius) = self.chebyshev_center()?;
        if radius <= 0.0 {
            return Ok(0.0);
        }
        // a·y <= beta with y = x - center, so every beta is positive
        let rows: Vec<(Vec<f64>, f64)> = self
            .halfspaces
            .iter()
            .map(|h| {
                let a: Vec<f64> = h.normal.iter().map(|v| -v).collect();
                let beta = h.eval(&center);
                (a, beta)
            })
            .collect();
        Ok(lasserre_volume(&rows, self.dimension()))
    }
}

pub(crate) fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let mut c = vec![0.0; n];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    c.iter_mut().for_each(|v| *v /= points.len() as f64);
    c
}

/// Volume of a simplex from its vertices, `|det| / n!`.
pub fn simplex_volume(vertices: &[Vec<f64>]) -> f64 {
    let n = vertices.len() - 1;
    let v0 = &vertices[0];
    let m = DMatrix::from_fn(n, n, |r, c| vertices[c + 1][r] - v0[r]);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    m.determinant().abs() / fact
}

/// Volume of `{y : a_i·y <= beta_i}` in `dim` dimensions.
fn lasserre_volume(rows: &[(Vec<f64>, f64)], dim: usize) -> f64 {
    const PARALLEL_TOL: f64 = 1e-12;
    if dim == 1 {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (a, beta) in rows {
            let a = a[0];
            if a.abs() <= PARALLEL_TOL {
                if *beta < -PARALLEL_TOL {
                    return 0.0;
                }
            } else if a > 0.0 {
                hi = hi.min(beta / a);
            } else {
                lo = lo.max(beta / a);
            }
        }
        return (hi - lo).max(0.0);
    }
    let unit: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .filter_map(|(a, beta)| {
            let len = norm(a);
            (len > PARALLEL_TOL).then(|| (a.iter().map(|v| v / len).collect(), beta / len))
        })
        .collect();
    let mut total = 0.0;
    for (i, (ai, bi)) in unit.iter().enumerate() {
        if bi.abs() <= 0.0 {
            continue;
        }
        let k = (0..dim)
            .max_by(|&p, &q| ai[p].abs().total_cmp(&ai[q].abs()))
            .unwrap_or(0);
        let pivot = ai[k];
        let mut reduced = Vec::with_capacity(unit.len());
        let mut empty = false;
        for (j, (aj, bj)) in unit.iter().enumerate() {
            if j == i {
                continue;
            }
            let factor = aj[k] / pivot;
            let a: Vec<f64> = (0..dim)
                .filter(|&l| l != k)
                .map(|l| aj[l] - factor * ai[l])
                .collect();
            let beta = bj - factor * bi;
            if norm(&a) <= PARALLEL_TOL {
                if beta < -PARALLEL_TOL {
                    empty = true;
                    break;
                }
                continue;
            }
            reduced.push((a, beta));
        }
        if empty {
            continue;
        }
        let facet = lasserre_volume(&reduced, dim - 1) / pivot.abs();
        total += bi * facet;
    }
    total / dim as f64
}
