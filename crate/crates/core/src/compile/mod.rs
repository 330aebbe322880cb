//! Compilation of piecewise linear functions into two-hidden-layer ReLU
//! networks.
//!
//! Every cell contributes a bump network supported on the cell. The bumps
//! share a first layer made of the mesh's directed hyperplanes, so the
//! network has `2H^i + H^b` first-layer neurons and one second-layer neuron
//! per cell, plus one neuron carrying the constant `R` (or the domain bump
//! in compact-support mode).

mod bump;
mod merge;

use rayon::prelude::*;

pub use bump::{
    assemble_bump, compile_cell_bump, positive_normal_combination, shift_t0, solve_mu, CellBump,
    T0_SAFETY,
};
pub use merge::{merge_duplicate_neurons, TaggedNet};

use crate::error::{Error, Result};
use crate::mesh::{HyperplaneRegistry, PolytopeMesh};
use crate::net::{Provenance, ReluNet2, Triplet};
use crate::pwl::{sup_norm, AffinePiece, PiecewiseLinear};

/// Second-layer weights above this magnitude trigger a conditioning warning.
pub const WEIGHT_WARNING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `f = −R + Σ φ^τ`; with `output_bias` the constant goes to the output
    /// bias instead of a dedicated second-layer neuron.
    Weak { output_bias: bool },
    /// `f = −φ^Ω + Σ φ^τ`, which vanishes outside the domain hull.
    CompactSupport,
}

/// Everything produced by a compilation run.
#[derive(Debug, Clone)]
pub struct Compilation {
    pub net: ReluNet2,
    /// The network before duplicate first-layer neurons were merged.
    pub unmerged: TaggedNet,
    pub registry: HyperplaneRegistry,
    pub bumps: Vec<CellBump>,
    pub hull_bump: Option<CellBump>,
    pub r: f64,
}

pub fn compile_weak_representation(
    mesh: &PolytopeMesh,
    v: &PiecewiseLinear,
    epsilon: f64,
    use_output_bias: bool,
) -> Result<ReluNet2> {
    Ok(compile(mesh, v, epsilon, Mode::Weak { output_bias: use_output_bias })?.net)
}

pub fn compile_compact_support(mesh: &PolytopeMesh, v: &PiecewiseLinear, epsilon: f64) -> Result<ReluNet2> {
    Ok(compile(mesh, v, epsilon, Mode::CompactSupport)?.net)
}

fn check_hull(mesh: &PolytopeMesh) -> Result<()> {
    let hull = mesh
        .domain_hull
        .as_ref()
        .ok_or_else(|| Error::InvalidMesh("compact support needs a domain hull".into()))?;
    let (lo, hi) = mesh.bounding_box()?;
    let scale = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max).max(1.0);
    mesh.cells
        .par_iter()
        .enumerate()
        .try_for_each(|(i, cell)| -> Result<()> {
            for h in &hull.halfspaces {
                let low = cell.affine_extremum(&h.normal, h.offset, false)?;
                if low < -1e-9 * scale * h.norm() {
                    return Err(Error::InvalidMesh(format!("cell {i} is not contained in the domain hull")));
                }
            }
            Ok(())
        })
}

/// Compiles `v` and returns the merged network together with the
/// intermediate data.
pub fn compile(mesh: &PolytopeMesh, v: &PiecewiseLinear, epsilon: f64, mode: Mode) -> Result<Compilation> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    v.check_mesh(mesh)?;
    if mode == Mode::CompactSupport {
        check_hull(mesh)?;
    }
    let r = sup_norm(mesh, v)?;

    let bumps = mesh
        .cells
        .par_iter()
        .zip(&v.pieces)
        .enumerate()
        .map(|(i, (cell, piece))| {
            let mut b = compile_cell_bump(cell, piece, r, epsilon).map_err(|e| e.at_cell(i))?;
            b.cell = i;
            Ok(b)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut registry = mesh.registry();
    let hull_bump = match mode {
        Mode::CompactSupport => {
            let hull = mesh.domain_hull.as_ref().expect("checked above");
            let piece = AffinePiece::constant(mesh.dimension, r / 2.0);
            let b = compile_cell_bump(hull, &piece, r / 2.0, epsilon)?;
            registry.register_extra(hull);
            Some(b)
        }
        Mode::Weak { .. } => None,
    };

    let mut w1 = Vec::new();
    let mut b1 = Vec::new();
    let mut w2 = Vec::new();
    let mut b2 = Vec::new();
    let mut tags = Vec::new();
    let mut push_bump = |b: &CellBump, row: usize, refs: &[crate::mesh::FacetRef]| {
        let offset = b1.len();
        w1.extend(b.w_i.iter().cloned());
        b1.extend(b.b_i.iter().copied());
        tags.extend_from_slice(refs);
        w2.extend(b.w_ii.iter().enumerate().map(|(k, &value)| Triplet {
            row,
            col: offset + k,
            value,
        }));
        b2.push(b.b_ii);
    };
    for (i, b) in bumps.iter().enumerate() {
        push_bump(b, i, &registry.cell_facets[i]);
    }
    let mut w3 = vec![1.0; bumps.len()];
    let mut output_bias = None;
    match (mode, &hull_bump) {
        (Mode::Weak { output_bias: true }, _) => output_bias = Some(-r),
        (Mode::Weak { output_bias: false }, _) => {
            b2.push(r);
            w3.push(-1.0);
        }
        (Mode::CompactSupport, Some(hb)) => {
            push_bump(hb, bumps.len(), &registry.extra_facets[0]);
            w3.push(-1.0);
        }
        (Mode::CompactSupport, None) => unreachable!(),
    }

    let mut warnings = Vec::new();
    for b in bumps.iter().chain(&hull_bump) {
        let w = b.max_abs_weight();
        if w > WEIGHT_WARNING {
            let what = if hull_bump.as_ref().is_some_and(|h| std::ptr::eq(h, b)) {
                "domain hull".to_string()
            } else {
                format!("cell {}", b.cell)
            };
            warnings.push(format!("{what}: second-layer weight {w:e} exceeds {WEIGHT_WARNING:e}"));
        }
    }
    let provenance = Provenance {
        mesh_sha256: mesh.fingerprint(),
        epsilon,
        r,
        compact_support: mode == Mode::CompactSupport,
        t0: bumps.iter().map(|b| b.t0).collect(),
        hull_t0: hull_bump.as_ref().map(|b| b.t0),
        warnings,
    };
    let unmerged = TaggedNet {
        net: ReluNet2 {
            n: mesh.dimension,
            w1,
            b1,
            w2,
            b2,
            w3,
            output_bias,
            provenance: Some(provenance),
        },
        tags,
        epsilon,
    };
    let net = merge_duplicate_neurons(&unmerged, &registry)?;
    net.validate()?;
    Ok(Compilation {
        net,
        unmerged,
        registry,
        bumps,
        hull_bump,
        r,
    })
}

/// `(h1, h2)` a compiled network must have for `mesh`.
pub fn expected_sizes(mesh: &PolytopeMesh, output_bias: bool) -> (usize, usize) {
    let reg = mesh.registry();
    let h1 = 2 * reg.interior_count() + reg.boundary_count();
    let h2 = mesh.cell_count() + usize::from(!output_bias);
    (h1, h2)
}
