//! Convex polytope meshes in H-representation.

mod cell;
mod freudenthal;
mod registry;
pub mod samples;
mod sampling;

use std::collections::HashMap;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use cell::{simplex_volume, ConvexCell, Halfspace};
pub(crate) use cell::{dot, norm};
pub use freudenthal::{freudenthal_counts, freudenthal_mesh};
pub use registry::{DirectedHyperplane, FacetRef, HyperplaneRegistry, MERGE_TOL};
pub use sampling::{
    sample_collar, sample_domain, sample_exterior, sample_shrunk_domain, SampleStream,
};

use crate::error::{Error, Result};

/// A mesh of closed convex cells with pairwise disjoint interiors.
///
/// `nodes` is populated for simplicial meshes; each simplex cell then lists
/// its vertex indices. `domain_hull` optionally describes a convex `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeMesh {
    pub dimension: usize,
    pub cells: Vec<ConvexCell>,
    pub nodes: Vec<Vec<f64>>,
    pub domain_hull: Option<ConvexCell>,
}

impl PolytopeMesh {
    pub fn new(dimension: usize, cells: Vec<ConvexCell>) -> Result<Self> {
        let mesh = PolytopeMesh {
            dimension,
            cells,
            nodes: Vec::new(),
            domain_hull: None,
        };
        mesh.check_structure()?;
        Ok(mesh)
    }

    pub fn from_simplices(nodes: Vec<Vec<f64>>, simplices: Vec<Vec<usize>>) -> Result<Self> {
        let dimension = nodes.first().map_or(0, |p| p.len());
        if dimension == 0 {
            return Err(Error::InvalidMesh("simplicial mesh has no nodes".into()));
        }
        let cells = simplices
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let verts: Vec<Vec<f64>> = s
                    .iter()
                    .map(|&k| {
                        nodes.get(k).cloned().ok_or_else(|| {
                            Error::InvalidMesh(format!("cell {i} references missing node {k}"))
                        })
                    })
                    .collect::<Result<_>>()?;
                let mut cell = ConvexCell::from_simplex(&verts).map_err(|e| e.at_cell(i))?;
                cell.nodes = Some(s);
                Ok(cell)
            })
            .collect::<Result<Vec<_>>>()?;
        let mesh = PolytopeMesh {
            dimension,
            cells,
            nodes,
            domain_hull: None,
        };
        mesh.check_structure()?;
        Ok(mesh)
    }

    pub fn with_domain_hull(mut self, hull: ConvexCell) -> Self {
        self.domain_hull = Some(hull);
        self
    }

    fn check_structure(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        for (i, c) in self.cells.iter().enumerate() {
            c.check_structure().map_err(|e| e.at_cell(i))?;
            if c.dimension() != self.dimension {
                return Err(Error::InvalidMesh(format!(
                    "cell {i} has dimension {} but the mesh has {}",
                    c.dimension(),
                    self.dimension
                )));
            }
        }
        if let Some(h) = &self.domain_hull {
            h.check_structure()?;
            if h.dimension() != self.dimension {
                return Err(Error::InvalidMesh("domain hull dimension mismatch".into()));
            }
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn is_simplicial(&self) -> bool {
        !self.nodes.is_empty() && self.cells.iter().all(|c| c.nodes.is_some())
    }

    pub fn cell_vertices(&self, cell: usize) -> Option<Vec<Vec<f64>>> {
        self.cells[cell]
            .nodes
            .as_ref()
            .map(|ids| ids.iter().map(|&k| self.nodes[k].clone()).collect())
    }

    pub fn registry(&self) -> HyperplaneRegistry {
        HyperplaneRegistry::build(&self.cells)
    }

    /// SHA-256 over the exact bits of every halfspace (and the hull), hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        let feed_cell = |c: &ConvexCell, h: &mut Sha256| {
            h.update((c.halfspaces.len() as u64).to_le_bytes());
            for hs in &c.halfspaces {
                for v in hs.normal.iter().chain(std::iter::once(&hs.offset)) {
                    h.update(v.to_bits().to_le_bytes());
                }
            }
        };
        hasher.update((self.dimension as u64).to_le_bytes());
        for c in &self.cells {
            feed_cell(c, &mut hasher);
        }
        if let Some(hull) = &self.domain_hull {
            hasher.update(b"hull");
            feed_cell(hull, &mut hasher);
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// First cell containing `x` (facet inequalities at least `-tol`).
    pub fn locate(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(x, tol))
    }

    pub fn cell_bounding_boxes(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        self.cells
            .par_iter()
            .enumerate()
            .map(|(i, c)| match self.cell_vertices(i) {
                Some(v) => Ok(vertex_box(&v)),
                None => c.bounding_box().map_err(|e| e.at_cell(i)),
            })
            .collect()
    }

    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let boxes = self.cell_bounding_boxes()?;
        let n = self.dimension;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for (l, h) in &boxes {
            for j in 0..n {
                lo[j] = lo[j].min(l[j]);
                hi[j] = hi[j].max(h[j]);
            }
        }
        Ok((lo, hi))
    }

    pub fn cell_volumes(&self) -> Result<Vec<f64>> {
        self.cells
            .par_iter()
            .enumerate()
            .map(|(i, c)| match self.cell_vertices(i) {
                Some(v) => Ok(simplex_volume(&v)),
                None => c.volume().map_err(|e| e.at_cell(i)),
            })
            .collect()
    }

    pub fn volume(&self) -> Result<f64> {
        Ok(self.cell_volumes()?.iter().sum())
    }

    /// Smallest Chebyshev radius over all cells.
    pub fn min_inradius(&self) -> Result<f64> {
        let radii = self
            .cells
            .par_iter()
            .enumerate()
            .map(|(i, c)| c.chebyshev_center().map(|(_, r)| r).map_err(|e| e.at_cell(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(radii.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Global node index for every distinct simplex vertex (by exact
    /// coordinates). Used when a mesh is read from vertex lists.
    pub(crate) fn index_nodes(vertex_lists: &[Vec<Vec<f64>>]) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
        let mut lookup: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let simplices = vertex_lists
            .iter()
            .map(|verts| {
                verts
                    .iter()
                    .map(|v| {
                        let key: Vec<u64> = v.iter().map(|x| (x + 0.0).to_bits()).collect();
                        *lookup.entry(key).or_insert_with(|| {
                            nodes.push(v.clone());
                            nodes.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        (nodes, simplices)
    }
}

fn vertex_box(verts: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = verts[0].len();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for v in verts {
        for j in 0..n {
            lo[j] = lo[j].min(v[j]);
            hi[j] = hi[j].max(v[j]);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone)]
pub struct CellReport {
    pub center: Vec<f64>,
    pub inradius: f64,
    pub volume: f64,
    pub bounding_box: (Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub cells: Vec<CellReport>,
    pub samples: usize,
    /// Samples strictly inside two or more cells.
    pub overlap_samples: usize,
    /// Samples inside the domain hull but in no cell (0 without a hull).
    pub gap_samples: usize,
    pub union_volume_estimate: f64,
    pub total_cell_volume: f64,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-cell boundedness and interior checks (hard errors), plus Monte Carlo
/// overlap and coverage estimates over the mesh bounding box (reported).
pub fn validate_mesh(mesh: &PolytopeMesh, samples: usize, seed: u64) -> Result<ValidationReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("validation needs at least one sample".into()));
    }
    mesh.check_structure()?;
    let cells = mesh
        .cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let bounding_box = c.bounding_box().map_err(|e| e.at_cell(i))?;
            let (center, inradius) = c.chebyshev_center().map_err(|e| e.at_cell(i))?;
            let scale = bounding_box
                .0
                .iter()
                .zip(&bounding_box.1)
                .map(|(l, h)| h - l)
                .fold(0.0, f64::max);
            if !(inradius > 1e-9 * scale.max(1e-300)) {
                return Err(Error::EmptyInterior {
                    cell: i,
                    radius: inradius,
                });
            }
            let volume = c.volume().map_err(|e| e.at_cell(i))?;
            Ok(CellReport {
                center,
                inradius,
                volume,
                bounding_box,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = mesh.dimension;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for c in &cells {
        for j in 0..n {
            lo[j] = lo[j].min(c.bounding_box.0[j]);
            hi[j] = hi[j].max(c.bounding_box.1[j]);
        }
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let tol = 1e-12 * lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);

    let stream = SampleStream::new(seed);
    let (overlap, gap, inside) = (0..samples)
        .into_par_iter()
        .map(|k| {
            let x = stream.uniform_in_box(k as u64, &lo, &hi);
            let mut strict = 0usize;
            let mut closed = false;
            for (c, rep) in mesh.cells.iter().zip(&cells) {
                let in_box = (0..n).all(|j| {
                    x[j] >= rep.bounding_box.0[j] - tol && x[j] <= rep.bounding_box.1[j] + tol
                });
                if !in_box {
                    continue;
                }
                let d = c.boundary_distance(&x);
                if d > tol {
                    strict += 1;
                }
                if d >= -tol {
                    closed = true;
                }
            }
            let gap = !closed
                && mesh
                    .domain_hull
                    .as_ref()
                    .is_some_and(|h| h.boundary_distance(&x) > tol);
            (usize::from(strict >= 2), usize::from(gap), usize::from(closed))
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));

    let total_cell_volume: f64 = cells.iter().map(|c| c.volume).sum();
    let mut violations = Vec::new();
    if overlap > 0 {
        violations.push(format!("{overlap} of {samples} samples lie in two or more cell interiors"));
    }
    if gap > 0 {
        violations.push(format!("{gap} of {samples} samples lie in the domain hull but in no cell"));
    }
    Ok(ValidationReport {
        cells,
        samples,
        overlap_samples: overlap,
        gap_samples: gap,
        union_volume_estimate: box_volume * inside as f64 / samples as f64,
        total_cell_volume,
        violations,
    })
}
