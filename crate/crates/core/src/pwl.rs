//! Piecewise linear functions on a mesh: general, cell-wise constant, and
//! continuous nodal (P1) functions on simplicial meshes.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{dot, PolytopeMesh};

/// Tolerance on facet inequalities when locating a point.
pub const LOCATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    #[serde(rename = "a")]
    pub gradient: Vec<f64>,
    #[serde(rename = "c")]
    pub constant: f64,
}

impl AffinePiece {
    pub fn constant(n: usize, value: f64) -> Self {
        AffinePiece {
            gradient: vec![0.0; n],
            constant: value,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.gradient, x) + self.constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    General,
    Constant,
    NodalLinear,
}

/// One affine piece per mesh cell, in mesh order.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pub kind: FunctionKind,
    pub pieces: Vec<AffinePiece>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub cell: usize,
    /// Some facet inequality of the returned cell is tight at `x`.
    pub on_boundary: bool,
}

impl PiecewiseLinear {
    pub fn new(kind: FunctionKind, pieces: Vec<AffinePiece>) -> Result<Self> {
        if pieces.iter().any(|p| !p.constant.is_finite() || p.gradient.iter().any(|g| !g.is_finite())) {
            return Err(Error::InvalidFunction("non-finite coefficients".into()));
        }
        if kind == FunctionKind::Constant && pieces.iter().any(|p| p.gradient.iter().any(|&g| g != 0.0)) {
            return Err(Error::InvalidFunction("constant pieces must have zero gradient".into()));
        }
        Ok(PiecewiseLinear { kind, pieces })
    }

    pub fn constant(mesh: &PolytopeMesh, values: &[f64]) -> Result<Self> {
        let pieces = values.iter().map(|&v| AffinePiece::constant(mesh.dimension, v)).collect();
        let f = PiecewiseLinear::new(FunctionKind::Constant, pieces)?;
        f.check_mesh(mesh)?;
        Ok(f)
    }

    /// Checks piece count and dimensions against `mesh`.
    pub fn check_mesh(&self, mesh: &PolytopeMesh) -> Result<()> {
        if self.pieces.len() != mesh.cell_count() {
            return Err(Error::InvalidFunction(format!(
                "{} pieces for {} cells",
                self.pieces.len(),
                mesh.cell_count()
            )));
        }
        if let Some(p) = self.pieces.iter().find(|p| p.gradient.len() != mesh.dimension) {
            return Err(Error::DimensionMismatch {
                expected: mesh.dimension,
                actual: p.gradient.len(),
            });
        }
        Ok(())
    }
}

/// Value of `v` at `x`, taken from the first cell that contains `x`.
pub fn eval_pwl(mesh: &PolytopeMesh, v: &PiecewiseLinear, x: &[f64]) -> Result<Evaluation> {
    if x.len() != mesh.dimension {
        return Err(Error::DimensionMismatch {
            expected: mesh.dimension,
            actual: x.len(),
        });
    }
    let cell = mesh.locate(x, LOCATE_TOL).ok_or(Error::OutsideMesh)?;
    let on_boundary = mesh.cells[cell]
        .halfspaces
        .iter()
        .any(|h| h.eval(x) <= LOCATE_TOL);
    Ok(Evaluation {
        value: v.pieces[cell].eval(x),
        cell,
        on_boundary,
    })
}

/// Continuous P1 interpolant of nodal values on a simplicial mesh.
pub fn nodal_linear(mesh: &PolytopeMesh, nodal_values: &[f64]) -> Result<PiecewiseLinear> {
    if !mesh.is_simplicial() {
        return Err(Error::InvalidMesh("nodal interpolation needs a simplicial mesh".into()));
    }
    if nodal_values.len() != mesh.nodes.len() {
        return Err(Error::InvalidFunction(format!(
            "{} nodal values for {} nodes",
            nodal_values.len(),
            mesh.nodes.len()
        )));
    }
    let n = mesh.dimension;
    let pieces = (0..mesh.cell_count())
        .into_par_iter()
        .map(|i| {
            let ids = mesh.cells[i].nodes.as_ref().expect("simplicial");
            let verts: Vec<&Vec<f64>> = ids.iter().map(|&k| &mesh.nodes[k]).collect();
            // rows [x_k | 1] (a; c) = value_k
            let system = DMatrix::from_fn(n + 1, n + 1, |r, c| if c < n { verts[r][c] } else { 1.0 });
            let scale = verts
                .iter()
                .flat_map(|p| p.iter().zip(verts[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0_f64, f64::max);
            let det = system.determinant();
            if !(det.abs() >= 1e-12 * scale.powi(n as i32)) {
                return Err(Error::DegenerateCell {
                    cell: i,
                    reason: format!("interpolation system determinant {det:e}"),
                });
            }
            let rhs = DVector::from_iterator(n + 1, ids.iter().map(|&k| nodal_values[k]));
            let sol = system.lu().solve(&rhs).ok_or_else(|| Error::DegenerateCell {
                cell: i,
                reason: "singular interpolation system".into(),
            })?;
            Ok(AffinePiece {
                gradient: sol.rows(0, n).iter().copied().collect(),
                constant: sol[n],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseLinear::new(FunctionKind::NodalLinear, pieces)
}

/// Largest disagreement between the pieces of cells sharing a node, for
/// simplicial meshes (zero for a continuous function).
pub fn continuity_defect(mesh: &PolytopeMesh, v: &PiecewiseLinear) -> f64 {
    let mut seen: Vec<Option<f64>> = vec![None; mesh.nodes.len()];
    let mut defect: f64 = 0.0;
    for (cell, piece) in mesh.cells.iter().zip(&v.pieces) {
        for &k in cell.nodes.iter().flatten() {
            let val = piece.eval(&mesh.nodes[k]);
            match seen[k] {
                Some(prev) => defect = defect.max((prev - val).abs()),
                None => seen[k] = Some(val),
            }
        }
    }
    defect
}

/// `max_τ max_{x ∈ τ} |a_τ·x + c_τ|`, each extremum from an LP over the cell.
pub fn sup_norm(mesh: &PolytopeMesh, v: &PiecewiseLinear) -> Result<f64> {
    v.check_mesh(mesh)?;
    let per_cell = mesh
        .cells
        .par_iter()
        .zip(&v.pieces)
        .enumerate()
        .map(|(i, (cell, piece))| {
            let hi = cell
                .affine_extremum(&piece.gradient, piece.constant, true)
                .map_err(|e| e.at_cell(i))?;
            let lo = cell
                .affine_extremum(&piece.gradient, piece.constant, false)
                .map_err(|e| e.at_cell(i))?;
            Ok(hi.abs().max(lo.abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_cell.into_iter().fold(0.0, f64::max))
}
