//! Reproducible test meshes: convex polygon subdivisions built by cutting
//! cells, and simplicial meshes with perturbed nodes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{freudenthal_mesh, ConvexCell, Halfspace, PolytopeMesh};
use crate::error::{Error, Result};

/// Convex polygon from counter-clockwise vertices.
pub fn convex_polygon(vertices: &[[f64; 2]]) -> Result<ConvexCell> {
    let k = vertices.len();
    let hs = (0..k)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            // inward (left) normal of the edge a -> b
            let normal = vec![-(b[1] - a[1]), b[0] - a[0]];
            let offset = -(normal[0] * a[0] + normal[1] * a[1]);
            Halfspace::new(normal, offset)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvexCell::new(hs))
}

/// Slightly irregular pentagon inscribed in the unit circle.
pub fn pentagon() -> ConvexCell {
    let angles = [0.05, 1.31, 2.49, 3.80, 5.02];
    let verts: Vec<[f64; 2]> = angles.iter().map(|t: &f64| [t.cos(), t.sin()]).collect();
    convex_polygon(&verts).expect("pentagon is well formed")
}

fn line_through(p: &[f64], angle: f64) -> Halfspace {
    // left side of the directed line through p with the given heading
    let normal = vec![-angle.sin(), angle.cos()];
    let offset = -(normal[0] * p[0] + normal[1] * p[1]);
    Halfspace { normal, offset }
}

fn flip(h: &Halfspace) -> Halfspace {
    Halfspace {
        normal: h.normal.iter().map(|v| -v).collect(),
        offset: -h.offset,
    }
}

/// Splits `cell` by a straight line through its Chebyshev center.
fn straight_split(cell: &ConvexCell, angle: f64) -> Result<[ConvexCell; 2]> {
    let (center, _) = cell.chebyshev_center()?;
    let h = line_through(&center, angle);
    Ok([
        cell.intersect(h.clone()).remove_redundant()?,
        cell.intersect(flip(&h)).remove_redundant()?,
    ])
}

/// Splits `cell` into three convex wedges around its Chebyshev center.
/// The three rays lie on three distinct lines, each carried with both
/// orientations by the neighbouring pieces.
fn y_split(cell: &ConvexCell, angles: [f64; 3]) -> Result<[ConvexCell; 3]> {
    let (center, _) = cell.chebyshev_center()?;
    let piece = |a: f64, b: f64| -> Result<ConvexCell> {
        // left of the ray at angle a, right of the ray at angle b
        cell.intersect(line_through(&center, a))
            .intersect(flip(&line_through(&center, b)))
            .remove_redundant()
    };
    Ok([
        piece(angles[0], angles[1])?,
        piece(angles[1], angles[2])?,
        piece(angles[2], angles[0] + 2.0 * PI)?,
    ])
}

fn largest_cell(cells: &[ConvexCell]) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in cells.iter().enumerate() {
        let v = c.volume()?;
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}

/// Convex polygon mesh of `domain` obtained by `y_splits` three-way splits
/// followed by `straight_splits` two-way cuts, each applied to the currently
/// largest cell. Generic angles keep every new line distinct, so the mesh
/// has `1 + 2 y + s` cells and `3 y + s` interior lines.
pub fn split_polygon_mesh(
    domain: &ConvexCell,
    y_splits: usize,
    straight_splits: usize,
    seed: u64,
) -> Result<PolytopeMesh> {
    if domain.dimension() != 2 {
        return Err(Error::InvalidArgument("polygon splitting is two dimensional".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = vec![domain.remove_redundant()?];
    for k in 0..y_splits + straight_splits {
        let i = largest_cell(&cells)?;
        let cell = cells.swap_remove(i);
        if k < y_splits {
            let base = 2.0 * PI * rng.random::<f64>();
            let jitter = |r: &mut ChaCha8Rng| 0.3 * (r.random::<f64>() - 0.5);
            let angles = [
                base,
                base + 2.0 * PI / 3.0 + jitter(&mut rng),
                base + 4.0 * PI / 3.0 + jitter(&mut rng),
            ];
            cells.extend(y_split(&cell, angles)?);
        } else {
            let angle = PI * rng.random::<f64>();
            cells.extend(straight_split(&cell, angle)?);
        }
    }
    Ok(PolytopeMesh::new(2, cells)?.with_domain_hull(domain.clone()))
}

/// Pentagon split into 18 convex polygons carried by 24 interior lines
/// (7 three-way splits and 3 straight cuts).
pub fn pentagon_polygon_mesh(seed: u64) -> Result<PolytopeMesh> {
    split_polygon_mesh(&pentagon(), 7, 3, seed)
}

/// Freudenthal mesh whose nodes are moved by up to `amplitude·h` per
/// coordinate. Nodes on the boundary of the cube only move within their face.
pub fn perturbed_freudenthal(
    n: usize,
    cells_per_axis: usize,
    amplitude: f64,
    seed: u64,
) -> Result<PolytopeMesh> {
    let base = freudenthal_mesh(n, cells_per_axis)?;
    let h = 1.0 / cells_per_axis as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<Vec<f64>> = base
        .nodes
        .iter()
        .map(|p| {
            p.iter()
                .map(|&x| {
                    let shift = amplitude * h * (2.0 * rng.random::<f64>() - 1.0);
                    if x <= 0.0 || x >= 1.0 {
                        x
                    } else {
                        x + shift
                    }
                })
                .collect()
        })
        .collect();
    let simplices: Vec<Vec<usize>> = base.cells.iter().map(|c| c.nodes.clone().unwrap_or_default()).collect();
    // orientation must be preserved or the cells would overlap
    for s in &simplices {
        let orig: Vec<Vec<f64>> = s.iter().map(|&k| base.nodes[k].clone()).collect();
        let moved: Vec<Vec<f64>> = s.iter().map(|&k| nodes[k].clone()).collect();
        if signed_volume(&orig).signum() != signed_volume(&moved).signum() {
            return Err(Error::InvalidArgument(format!(
                "perturbation amplitude {amplitude} inverts a simplex"
            )));
        }
    }
    let mesh = PolytopeMesh::from_simplices(nodes, simplices)?;
    Ok(mesh.with_domain_hull(base.domain_hull.expect("Freudenthal meshes carry the cube")))
}

fn signed_volume(v: &[Vec<f64>]) -> f64 {
    let n = v.len() - 1;
    nalgebra::DMatrix::from_fn(n, n, |r, c| v[c + 1][r] - v[0][r]).determinant()
}
