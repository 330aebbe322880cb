use itertools::Itertools;

use super::{ConvexCell, PolytopeMesh};
use crate::error::{Error, Result};

/// Kuhn/Freudenthal triangulation of `[0,1]^n` with `cells_per_axis`
/// subdivisions per axis. Every subcube with corner `c` is split into `n!`
/// simplices `c = v_0, v_k = v_{k-1} + h e_{π(k)}`, one per permutation π.
pub fn freudenthal_mesh(n: usize, cells_per_axis: usize) -> Result<PolytopeMesh> {
    if n < 1 || cells_per_axis < 1 {
        return Err(Error::InvalidArgument(format!(
            "Freudenthal mesh needs n >= 1 and N >= 1 (got n={n}, N={cells_per_axis})"
        )));
    }
    let big_n = cells_per_axis;
    let side = big_n + 1;
    let h = 1.0 / big_n as f64;
    let node_count = side.pow(n as u32);
    let node_index = |idx: &[usize]| idx.iter().rev().fold(0usize, |acc, &i| acc * side + i);

    let nodes: Vec<Vec<f64>> = (0..node_count)
        .map(|flat| {
            let mut rem = flat;
            (0..n)
                .map(|_| {
                    let i = rem % side;
                    rem /= side;
                    i as f64 * h
                })
                .collect()
        })
        .collect();

    let mut simplices = Vec::with_capacity(big_n.pow(n as u32) * (1..=n).product::<usize>());
    for corner in (0..n).map(|_| 0..big_n).multi_cartesian_product() {
        for perm in (0..n).permutations(n) {
            let mut idx = corner.clone();
            let mut simplex = vec![node_index(&idx)];
            for &axis in &perm {
                idx[axis] += 1;
                simplex.push(node_index(&idx));
            }
            simplices.push(simplex);
        }
    }
    let mesh = PolytopeMesh::from_simplices(nodes, simplices)?;
    Ok(mesh.with_domain_hull(ConvexCell::bounding_box_cell(&vec![0.0; n], &vec![1.0; n])))
}

/// Expected counts `(H^i, H^b, N_T)` for the Freudenthal mesh.
pub fn freudenthal_counts(n: usize, cells_per_axis: usize) -> (usize, usize, usize) {
    let interior = n * n * cells_per_axis - n * (n + 1) / 2;
    let cells = cells_per_axis.pow(n as u32) * (1..=n).product::<usize>();
    (interior, 2 * n, cells)
}
