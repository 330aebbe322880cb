//! Deduplicated directed hyperplanes of a mesh.
//!
//! Two facets share an entry iff one halfspace is a positive multiple of the
//! other. Entries are stored with unit normals; each facet remembers the
//! factor `λ = |w|` relating its own `(w, b)` to the canonical form.

use std::collections::HashMap;

use super::cell::{ConvexCell, Halfspace};

/// Absolute tolerance on unit normals and normalized offsets.
pub const MERGE_TOL: f64 = 1e-9;

const BUCKET: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedHyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl DirectedHyperplane {
    fn matches(&self, normal: &[f64], offset: f64) -> bool {
        (self.offset - offset).abs() <= MERGE_TOL
            && self
                .normal
                .iter()
                .zip(normal)
                .all(|(a, b)| (a - b).abs() <= MERGE_TOL)
    }
}

/// Registry index of one facet plus the positive factor with
/// `facet = scale * canonical`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetRef {
    pub entry: usize,
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct HyperplaneRegistry {
    entries: Vec<DirectedHyperplane>,
    /// Entry with the same hyperplane and the opposite orientation.
    opposite: Vec<Option<usize>>,
    /// Number of entries contributed by mesh cells (extra facets come after).
    cell_entries: usize,
    pub cell_facets: Vec<Vec<FacetRef>>,
    pub extra_facets: Vec<Vec<FacetRef>>,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

fn key_of(normal: &[f64], offset: f64) -> Vec<i64> {
    normal
        .iter()
        .chain(std::iter::once(&offset))
        .map(|v| (v / BUCKET).round() as i64)
        .collect()
}

/// Bucket keys that may hold a match within `MERGE_TOL`.
fn candidate_keys(normal: &[f64], offset: f64) -> Vec<Vec<i64>> {
    let mut keys: Vec<Vec<i64>> = vec![Vec::new()];
    for v in normal.iter().chain(std::iter::once(&offset)) {
        let scaled = v / BUCKET;
        let base = scaled.round();
        let mut options = vec![base as i64];
        let frac = scaled - base;
        if frac + MERGE_TOL / BUCKET >= 0.5 {
            options.push(base as i64 + 1);
        }
        if frac - MERGE_TOL / BUCKET <= -0.5 {
            options.push(base as i64 - 1);
        }
        keys = keys
            .into_iter()
            .flat_map(|k| {
                options.iter().map(move |o| {
                    let mut k = k.clone();
                    k.push(*o);
                    k
                })
            })
            .collect();
    }
    keys
}

impl HyperplaneRegistry {
    fn empty() -> Self {
        HyperplaneRegistry {
            entries: Vec::new(),
            opposite: Vec::new(),
            cell_entries: 0,
            cell_facets: Vec::new(),
            extra_facets: Vec::new(),
            buckets: HashMap::new(),
        }
    }

    /// Registers every facet of every cell, in mesh order.
    pub fn build<'a>(cells: impl IntoIterator<Item = &'a ConvexCell>) -> Self {
        let mut reg = HyperplaneRegistry::empty();
        for cell in cells {
            let refs = cell.halfspaces.iter().map(|h| reg.insert(h)).collect();
            reg.cell_facets.push(refs);
        }
        reg.cell_entries = reg.entries.len();
        reg
    }

    /// Registers facets of a cell that is not part of the mesh (the domain
    /// hull). New entries do not count towards the mesh hyperplane counts.
    pub fn register_extra(&mut self, cell: &ConvexCell) -> usize {
        let refs = cell.halfspaces.iter().map(|h| self.insert(h)).collect();
        self.extra_facets.push(refs);
        self.extra_facets.len() - 1
    }

    fn find(&self, normal: &[f64], offset: f64) -> Option<usize> {
        candidate_keys(normal, offset)
            .iter()
            .filter_map(|k| self.buckets.get(k))
            .flatten()
            .copied()
            .filter(|&e| self.entries[e].matches(normal, offset))
            .min()
    }

    fn insert(&mut self, h: &Halfspace) -> FacetRef {
        let scale = h.norm();
        let (normal, offset) = h.canonical();
        if let Some(entry) = self.find(&normal, offset) {
            return FacetRef { entry, scale };
        }
        let entry = self.entries.len();
        let flipped: Vec<f64> = normal.iter().map(|v| -v).collect();
        let opp = self.find(&flipped, -offset);
        if let Some(o) = opp {
            self.opposite[o] = Some(entry);
        }
        self.buckets
            .entry(key_of(&normal, offset))
            .or_default()
            .push(entry);
        self.entries.push(DirectedHyperplane { normal, offset });
        self.opposite.push(opp);
        FacetRef { entry, scale }
    }

    pub fn entries(&self) -> &[DirectedHyperplane] {
        &self.entries
    }

    /// Number of directed hyperplanes, including extra (hull) facets.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Directed hyperplanes contributed by mesh cells: `2 H^i + H^b`.
    pub fn mesh_len(&self) -> usize {
        self.cell_entries
    }

    pub fn opposite(&self, entry: usize) -> Option<usize> {
        self.opposite[entry]
    }

    /// Undirected hyperplanes carried with both orientations by mesh cells.
    pub fn interior_count(&self) -> usize {
        (0..self.cell_entries)
            .filter(|&e| self.opposite[e].is_some_and(|o| o < self.cell_entries))
            .count()
            / 2
    }

    /// Undirected hyperplanes carried with a single orientation.
    pub fn boundary_count(&self) -> usize {
        (0..self.cell_entries)
            .filter(|&e| !self.opposite[e].is_some_and(|o| o < self.cell_entries))
            .count()
    }

    pub fn undirected_count(&self) -> usize {
        self.interior_count() + self.boundary_count()
    }
}
