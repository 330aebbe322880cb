//! Deterministic point sampling over meshes.
//!
//! Every generator is keyed by `(seed, stream)`, where the stream is a cell
//! index or chunk index, so work can be split across threads without
//! changing the output.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{norm, ConvexCell, PolytopeMesh};
use crate::error::{Error, Result};

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy)]
pub struct SampleStream {
    seed: u64,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        SampleStream { seed }
    }

    /// Derived stream family for a distinct purpose.
    pub fn salted(&self, salt: u64) -> Self {
        SampleStream {
            seed: self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        }
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn uniform_in_box(&self, stream: u64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        let mut rng = self.rng(stream);
        uniform_point(&mut rng, lo, hi)
    }
}

pub(crate) fn uniform_point<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(l, h)| l + (h - l) * rng.random::<f64>())
        .collect()
}

fn rejection_in_cell<R: Rng>(
    rng: &mut R,
    cell: &ConvexCell,
    lo: &[f64],
    hi: &[f64],
    accept: impl Fn(&[f64]) -> bool,
    max_attempts: usize,
) -> Option<Vec<f64>> {
    for _ in 0..max_attempts {
        let x = uniform_point(rng, lo, hi);
        if cell.contains(&x, 0.0) && accept(&x) {
            return Some(x);
        }
    }
    None
}

/// Uniform samples from every shrunk cell `τ^ε = {x ∈ τ : d(x, ∂τ) >= ε}`,
/// `per_cell` points per cell, each tagged with its cell index. Cells whose
/// shrunk interior is empty contribute nothing.
pub fn sample_shrunk_domain(
    mesh: &PolytopeMesh,
    epsilon: f64,
    per_cell: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, usize)>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive (got {epsilon})")));
    }
    if per_cell == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let stream = SampleStream::new(seed).salted(1);
    let per_cell_points = mesh
        .cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let (_, radius) = cell.chebyshev_center().map_err(|e| e.at_cell(i))?;
            if radius <= epsilon {
                return Ok(Vec::new());
            }
            let (lo, hi) = cell.shrink(epsilon).bounding_box().map_err(|e| e.at_cell(i))?;
            let mut rng = stream.rng(i as u64);
            let mut pts = Vec::with_capacity(per_cell);
            for _ in 0..per_cell {
                match rejection_in_cell(
                    &mut rng,
                    cell,
                    &lo,
                    &hi,
                    |x| cell.boundary_distance(x) >= epsilon,
                    10_000,
                ) {
                    Some(x) => pts.push((x, i)),
                    None => break,
                }
            }
            Ok(pts)
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<_> = per_cell_points.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::EpsilonTooLarge(format!(
            "every cell is empty after shrinking by {epsilon}"
        )));
    }
    Ok(points)
}

/// Points of `τ \ τ^ε` for every cell. A uniform point `z` of the cell fixes
/// a ray from the Chebyshev center; the sample sits on that ray within
/// distance `1.5 ε` (in ray length) of the boundary and is kept when its
/// boundary distance is below `ε`.
pub fn sample_collar(
    mesh: &PolytopeMesh,
    epsilon: f64,
    per_cell: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, usize)>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive (got {epsilon})")));
    }
    let stream = SampleStream::new(seed).salted(2);
    let per_cell_points = mesh
        .cells
        .par_iter()
        .enumerate()
        .map(|(i, cell)| {
            let (center, _) = cell.chebyshev_center().map_err(|e| e.at_cell(i))?;
            let (lo, hi) = match mesh.cell_vertices(i) {
                Some(v) => {
                    let n = mesh.dimension;
                    let lo = (0..n).map(|j| v.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min)).collect();
                    let hi = (0..n).map(|j| v.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
                    (lo, hi)
                }
                None => cell.bounding_box().map_err(|e| e.at_cell(i))?,
            };
            let mut rng = stream.rng(i as u64);
            let mut pts = Vec::with_capacity(per_cell);
            let mut attempts = 0;
            while pts.len() < per_cell && attempts < 50 * per_cell + 1000 {
                attempts += 1;
                let Some(z) = rejection_in_cell(&mut rng, cell, &lo, &hi, |_| true, 10_000) else {
                    break;
                };
                let dir: Vec<f64> = z.iter().zip(&center).map(|(a, b)| a - b).collect();
                if norm(&dir) == 0.0 {
                    continue;
                }
                let t_max = cell
                    .halfspaces
                    .iter()
                    .filter_map(|h| {
                        let rate = super::dot(&h.normal, &dir);
                        (rate < 0.0).then(|| h.eval(&center) / -rate)
                    })
                    .fold(f64::INFINITY, f64::min);
                if !t_max.is_finite() {
                    continue;
                }
                let q: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + t_max * d).collect();
                let len = t_max * norm(&dir);
                let s = (1.5 * epsilon / len).min(1.0) * rng.random::<f64>();
                let p: Vec<f64> = q.iter().zip(&center).map(|(qj, cj)| qj + s * (cj - qj)).collect();
                let d = cell.boundary_distance(&p);
                if d < epsilon && d >= 0.0 {
                    pts.push((p, i));
                }
            }
            Ok(pts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell_points.into_iter().flatten().collect())
}

/// Uniform samples over `Ω`: cells are drawn with probability proportional
/// to volume, then points by rejection inside the chosen cell.
pub fn sample_domain(mesh: &PolytopeMesh, count: usize, seed: u64) -> Result<Vec<(Vec<f64>, usize)>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let volumes = mesh.cell_volumes()?;
    let boxes = mesh.cell_bounding_boxes()?;
    let picker = WeightedIndex::new(&volumes)
        .map_err(|e| Error::InvalidMesh(format!("cell volumes cannot be sampled: {e}")))?;
    let stream = SampleStream::new(seed).salted(3);
    let chunks = count.div_ceil(CHUNK);
    let out = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.rng(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            let mut pts = Vec::with_capacity(len);
            while pts.len() < len {
                let i = picker.sample(&mut rng);
                let (lo, hi) = &boxes[i];
                if let Some(x) = rejection_in_cell(&mut rng, &mesh.cells[i], lo, hi, |_| true, 10_000) {
                    pts.push((x, i));
                }
            }
            pts
        })
        .collect::<Vec<_>>();
    Ok(out.into_iter().flatten().collect())
}

/// Points outside every cell: `count` draws from the mesh bounding box
/// inflated threefold about its center, plus `far` points at distance
/// `10·diam` from the center.
pub fn sample_exterior(mesh: &PolytopeMesh, count: usize, far: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = mesh.bounding_box()?;
    let n = mesh.dimension;
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let half: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 1.5 * (h - l)).collect();
    let big_lo: Vec<f64> = center.iter().zip(&half).map(|(c, r)| c - r).collect();
    let big_hi: Vec<f64> = center.iter().zip(&half).map(|(c, r)| c + r).collect();
    let diam = norm(&lo.iter().zip(&hi).map(|(l, h)| h - l).collect::<Vec<_>>());
    let stream = SampleStream::new(seed).salted(4);
    let chunks = count.div_ceil(CHUNK);
    let mut out: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.rng(c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            let mut pts = Vec::with_capacity(len);
            let mut attempts = 0;
            while pts.len() < len && attempts < 100 * len + 1000 {
                attempts += 1;
                let x = uniform_point(&mut rng, &big_lo, &big_hi);
                if mesh.cells.iter().all(|cell| cell.boundary_distance(&x) < 0.0) {
                    pts.push(x);
                }
            }
            pts
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut rng = stream.rng(u64::MAX);
    for _ in 0..far {
        let dir: Vec<f64> = loop {
            let d: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let len = norm(&d);
            if len > 1e-3 && len <= 1.0 {
                break d.iter().map(|v| v / len).collect();
            }
        };
        out.push(center.iter().zip(&dir).map(|(c, d)| c + 10.0 * diam * d).collect());
    }
    Ok(out)
}
