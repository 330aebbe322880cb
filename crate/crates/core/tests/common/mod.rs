#![allow(dead_code)]

use std::f64::consts::PI;

use fenn_core::mesh::samples::{convex_polygon, pentagon_polygon_mesh, perturbed_freudenthal, split_polygon_mesh};
use fenn_core::mesh::{freudenthal_mesh, ConvexCell, Halfspace, PolytopeMesh};
use fenn_core::pwl::{nodal_linear, PiecewiseLinear};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub label: String,
    pub mesh: PolytopeMesh,
    pub v: PiecewiseLinear,
    pub epsilon: f64,
}

/// Convex polygon with `k` vertices on an ellipse at jittered angles.
pub fn random_convex_polygon(rng: &mut ChaCha8Rng) -> ConvexCell {
    let k = rng.random_range(4..=8);
    let (ax, ay) = (rng.random_range(0.6..1.6), rng.random_range(0.6..1.6));
    let (cx, cy) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let start = rng.random_range(0.0..2.0 * PI);
    let verts: Vec<[f64; 2]> = (0..k)
        .map(|i| {
            let t = start + 2.0 * PI * (i as f64 + rng.random_range(-0.25..0.25)) / k as f64;
            [cx + ax * t.cos(), cy + ay * t.sin()]
        })
        .collect();
    convex_polygon(&verts).unwrap()
}

pub fn random_polygon_mesh(rng: &mut ChaCha8Rng) -> PolytopeMesh {
    let domain = random_convex_polygon(rng);
    let y = rng.random_range(0..=3);
    let s = rng.random_range(0..=3);
    split_polygon_mesh(&domain, y, s, rng.random()).unwrap()
}

pub fn random_simplex_mesh(rng: &mut ChaCha8Rng, n: usize) -> PolytopeMesh {
    let cells = match n {
        1 => rng.random_range(1..=8),
        2 => rng.random_range(1..=4),
        _ => rng.random_range(1..=2),
    };
    let amplitude = rng.random_range(0.0..0.2);
    perturbed_freudenthal(n, cells, amplitude, rng.random()).unwrap()
}

/// Constant per cell, or nodal linear when the mesh is simplicial and `nodal` is set.
pub fn random_function(rng: &mut ChaCha8Rng, mesh: &PolytopeMesh, nodal: bool) -> PiecewiseLinear {
    let scale = rng.random_range(0.1..5.0);
    if nodal && mesh.is_simplicial() {
        let values: Vec<f64> = mesh.nodes.iter().map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        nodal_linear(mesh, &values).unwrap()
    } else {
        let values: Vec<f64> = mesh.cells.iter().map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        PiecewiseLinear::constant(mesh, &values).unwrap()
    }
}

/// Case `k` of the randomized weak representation suite.
pub fn weak_case(k: usize, rng: &mut ChaCha8Rng) -> Case {
    let (mesh, kind) = match k % 4 {
        0 => (random_simplex_mesh(rng, 1), "simplex n=1"),
        1 => (random_simplex_mesh(rng, 2), "simplex n=2"),
        2 => (random_simplex_mesh(rng, 3), "simplex n=3"),
        _ => (random_polygon_mesh(rng), "polygon"),
    };
    let nodal = (k / 4).is_multiple_of(2);
    let v = random_function(rng, &mesh, nodal);
    let factor = [1e-1, 1e-2, 1e-3][k % 3];
    let h = mesh.min_inradius().unwrap();
    Case {
        label: format!(
            "case {k}: {kind}, {} cells, {} v, eps = {factor:e} h",
            mesh.cell_count(),
            if nodal && mesh.is_simplicial() { "nodal" } else { "constant" }
        ),
        mesh,
        v,
        epsilon: factor * h,
    }
}

/// Every named mesh used across the suites.
pub fn corpus_meshes() -> Vec<(String, PolytopeMesh)> {
    let mut out = Vec::new();
    for n in 1..=3 {
        for cells in 1..=4 {
            out.push((format!("freudenthal({n},{cells})"), freudenthal_mesh(n, cells).unwrap()));
        }
    }
    out.push(("pentagon polygon mesh".into(), pentagon_polygon_mesh(7).unwrap()));
    out
}

/// Bounded polytope around the unit ball: a positively spanning simplex
/// frame plus extra random facets, all at distance >= 1 from the origin.
pub fn random_polytope(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ConvexCell {
    assert!(m > n);
    let mut normals: Vec<Vec<f64>> = Vec::with_capacity(m);
    loop {
        normals.clear();
        for _ in 0..n {
            normals.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| normals[j][i]);
        if a.determinant().abs() > 0.05 {
            break;
        }
    }
    let mut closing = vec![0.0; n];
    for w in &normals {
        let c: f64 = rng.random_range(0.2..2.0);
        for (z, x) in closing.iter_mut().zip(w) {
            *z -= c * x;
        }
    }
    normals.push(closing);
    while normals.len() < m {
        normals.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    // shuffle so the frame is not always first
    for i in (1..normals.len()).rev() {
        let j = rng.random_range(0..=i);
        normals.swap(i, j);
    }
    let halfspaces = normals
        .into_iter()
        .map(|w| {
            let scale = rng.random_range(0.3..3.0);
            let w: Vec<f64> = w.iter().map(|x| x * scale).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let offset = norm * rng.random_range(1.0..2.0);
            Halfspace::new(w, offset).unwrap()
        })
        .collect();
    ConvexCell::new(halfspaces)
}

/// Sorted grid with spacings in `[min_gap, 1)` starting in `[-5, 5)`.
pub fn random_grid(rng: &mut ChaCha8Rng, nodes: usize, min_gap: f64) -> Vec<f64> {
    let mut t = rng.random_range(-5.0..5.0);
    (0..nodes)
        .map(|_| {
            let here = t;
            t += rng.random_range(min_gap..1.0);
            here
        })
        .collect()
}

/// Rank by Gaussian elimination with full pivoting.
pub fn elimination_rank(rows: usize, cols: usize, data: &[f64], rel_tol: f64) -> usize {
    let mut a = data.to_vec();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    let mut rs: Vec<usize> = (0..rows).collect();
    let mut cs: Vec<usize> = (0..cols).collect();
    while rank < rows.min(cols) {
        let mut best = (0.0, 0, 0);
        for i in rank..rows {
            for j in rank..cols {
                let v = a[rs[i] * cols + cs[j]].abs();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= rel_tol * scale {
            break;
        }
        rs.swap(rank, best.1);
        cs.swap(rank, best.2);
        let p = a[rs[rank] * cols + cs[rank]];
        for i in rank + 1..rows {
            let f = a[rs[i] * cols + cs[rank]] / p;
            for j in rank..cols {
                a[rs[i] * cols + cs[j]] -= f * a[rs[rank] * cols + cs[j]];
            }
        }
        rank += 1;
    }
    rank
}

/// Dense vertex enumeration for `{λ >= 1, Σ λ_i w_i = 0}`: a vertex has `m − n`
/// coordinates pinned at 1 and the rest solved from the equalities.
pub fn enumerate_positive_combination(normals: &[Vec<f64>]) -> Option<Vec<f64>> {
    use itertools::Itertools;
    let m = normals.len();
    let n = normals[0].len();
    for basis in (0..m).combinations(n) {
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| normals[basis[j]][i]);
        let mut rhs = nalgebra::DVector::zeros(n);
        for k in (0..m).filter(|k| !basis.contains(k)) {
            for i in 0..n {
                rhs[i] -= normals[k][i];
            }
        }
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        if sol.iter().all(|&x| x.is_finite() && x >= 1.0 - 1e-9) {
            let mut lambda = vec![1.0; m];
            for (j, &k) in basis.iter().enumerate() {
                lambda[k] = sol[j];
            }
            return Some(lambda);
        }
    }
    None
}
