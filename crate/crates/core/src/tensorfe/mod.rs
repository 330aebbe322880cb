//! Tensor product finite elements and their exact conversion to tensor
//! neural networks.

mod cp;

pub use cp::{cp_decompose, CpFactors, CpMethod, Tensor, ALS_MAX_SWEEPS, ALS_MIN_IMPROVEMENT, RANK_TOL};

use crate::error::{Error, Result};
use crate::net::{Branch, TensorNet};

/// Seed used for ALS initialization unless the caller picks one.
pub const DEFAULT_CP_SEED: u64 = 0x5eed;

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidMesh("a grid needs at least two nodes".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidMesh("grid nodes must be finite".into()));
    }
    if let Some(i) = (1..grid.len()).find(|&i| grid[i] <= grid[i - 1]) {
        return Err(Error::InvalidMesh(format!(
            "grid is not strictly increasing at node {i} ({} after {})",
            grid[i],
            grid[i - 1]
        )));
    }
    Ok(())
}

/// Product of per-axis grids.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorMesh {
    pub grids: Vec<Vec<f64>>,
}

impl TensorMesh {
    pub fn new(grids: Vec<Vec<f64>>) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::InvalidMesh("tensor mesh needs at least one axis".into()));
        }
        grids.iter().try_for_each(|g| check_grid(g))?;
        Ok(TensorMesh { grids })
    }

    pub fn dimension(&self) -> usize {
        self.grids.len()
    }

    /// Node counts `N_k + 1` per axis.
    pub fn shape(&self) -> Vec<usize> {
        self.grids.iter().map(Vec::len).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter().zip(&self.grids).all(|(&t, g)| t >= g[0] && t <= g[g.len() - 1])
    }
}

/// Continuous piecewise multilinear function given by nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFE {
    pub mesh: TensorMesh,
    pub coefficients: Tensor,
}

impl TensorFE {
    pub fn new(mesh: TensorMesh, coefficients: Tensor) -> Result<Self> {
        if coefficients.shape != mesh.shape() {
            return Err(Error::InvalidFunction(format!(
                "coefficient shape {:?} does not match node counts {:?}",
                coefficients.shape,
                mesh.shape()
            )));
        }
        if coefficients.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("non-finite coefficient".into()));
        }
        Ok(TensorFE { mesh, coefficients })
    }
}

/// Multilinear interpolation of the `2^n` corner values of the box containing `x`.
pub fn eval_tensor_fe(u: &TensorFE, x: &[f64]) -> Result<f64> {
    let n = u.mesh.dimension();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if !u.mesh.contains(x) {
        return Err(Error::OutsideMesh);
    }
    let mut lower = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for (g, &t) in u.mesh.grids.iter().zip(x) {
        let i = (g.partition_point(|&s| s <= t) - 1).min(g.len() - 2);
        lower.push(i);
        theta.push((t - g[i]) / (g[i + 1] - g[i]));
    }
    let mut idx = vec![0; n];
    let mut total = 0.0;
    for corner in 0..(1usize << n) {
        let mut weight = 1.0;
        for k in 0..n {
            let up = corner >> k & 1 == 1;
            idx[k] = lower[k] + usize::from(up);
            weight *= if up { theta[k] } else { 1.0 - theta[k] };
        }
        if weight != 0.0 {
            total += weight * u.coefficients.get(&idx);
        }
    }
    Ok(total)
}

/// One-hidden-layer network `l(t) = w·σ(W t + b)` on a 1D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HatNet {
    pub w_in: Vec<f64>,
    pub b: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HatNet {
    pub fn eval(&self, t: f64) -> f64 {
        self.w_in
            .iter()
            .zip(&self.b)
            .zip(&self.weights)
            .map(|((w, b), c)| c * (w * t + b).max(0.0))
            .sum()
    }
}

/// Hidden layer shared by every 1D network on `grid`:
/// `W = (1, …, 1, 0)`, `b = (−t_0, …, −t_{N−1}, 1)`.
pub fn hat_layer(grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_grid(grid)?;
    let n = grid.len() - 1;
    let mut w = vec![1.0; n + 1];
    w[n] = 0.0;
    let mut b: Vec<f64> = grid[..n].iter().map(|t| -t).collect();
    b.push(1.0);
    Ok((w, b))
}

/// Network interpolating `(grid, values)` and affine between nodes. The
/// output weights solve the lower triangular system
/// `Σ_{j<i} (t_i − t_j) w_j + w_N = values_i` by forward substitution.
pub fn compile_1d_hat(grid: &[f64], values: &[f64]) -> Result<HatNet> {
    let (w_in, b) = hat_layer(grid)?;
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let n = grid.len() - 1;
    let mut weights = vec![0.0; n + 1];
    weights[n] = values[0];
    for i in 1..=n {
        let known: f64 = (0..i - 1).map(|j| (grid[i] - grid[j]) * weights[j]).sum();
        weights[i - 1] = (values[i] - weights[n] - known) / (grid[i] - grid[i - 1]);
    }
    Ok(HatNet { w_in, b, weights })
}

/// Result of [`compile_tnn`]: the network and the factorization behind it.
#[derive(Debug, Clone)]
pub struct TnnCompilation {
    pub net: TensorNet,
    pub factors: CpFactors,
}

/// Strict TNN representation of `u`: one rank term per CP term of the
/// coefficient tensor, each axis a 1D hat network. With `whole_space_rank`
/// the rank is padded with zero terms up to the matricization bound, giving
/// one architecture for every function on the mesh.
pub fn compile_tnn(u: &TensorFE, target_tol: f64, whole_space_rank: bool) -> Result<TnnCompilation> {
    let n = u.mesh.dimension();
    let shape = u.mesh.shape();
    let factors = if n == 1 {
        CpFactors {
            rank: 1,
            factors: vec![vec![u.coefficients.data.clone()]],
            residual: 0.0,
            method: CpMethod::Svd,
        }
    } else {
        cp_decompose(&u.coefficients, target_tol, DEFAULT_CP_SEED)?
    };
    let mut terms = factors.factors.clone();
    let target_rank = if whole_space_rank {
        u.coefficients.matricization_bound().max(terms.len())
    } else {
        terms.len().max(1)
    };
    while terms.len() < target_rank {
        terms.push(shape.iter().map(|&d| vec![0.0; d]).collect());
    }

    let branches = (0..n)
        .map(|k| {
            let (w, b) = hat_layer(&u.mesh.grids[k])?;
            let weights = terms
                .iter()
                .map(|term| compile_1d_hat(&u.mesh.grids[k], &term[k]).map(|h| h.weights))
                .collect::<Result<Vec<_>>>()?;
            Ok(Branch { w, b, weights })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = TensorNet {
        rank: target_rank,
        branches,
    };
    net.validate()?;
    Ok(TnnCompilation { net, factors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(grids: Vec<Vec<f64>>, data: Vec<f64>) -> TensorFE {
        let mesh = TensorMesh::new(grids).unwrap();
        let c = Tensor::new(mesh.shape(), data).unwrap();
        TensorFE::new(mesh, c).unwrap()
    }

    #[test]
    fn bilinear_center_value() {
        let u = fe(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![0.0, 0.0, 0.0, 1.0]);
        assert!((eval_tensor_fe(&u, &[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(eval_tensor_fe(&u, &[1.5, 0.5]), Err(Error::OutsideMesh)));
    }

    #[test]
    fn nodal_values_and_partition_of_unity() {
        let grids = vec![vec![0.0, 0.3, 1.0], vec![-1.0, 0.0, 0.5, 2.0]];
        let data: Vec<f64> = (0..12).map(|i| i as f64 * 0.7 - 3.0).collect();
        let u = fe(grids.clone(), data.clone());
        for (i, &x) in grids[0].iter().enumerate() {
            for (j, &y) in grids[1].iter().enumerate() {
                assert_eq!(eval_tensor_fe(&u, &[x, y]).unwrap(), data[i * 4 + j]);
            }
        }
        let ones = fe(grids, vec![1.0; 12]);
        assert!((eval_tensor_fe(&ones, &[0.77, 1.3]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hat_examples() {
        let h = compile_1d_hat(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(h.weights, vec![2.0, -4.0, 0.0]);
        assert_eq!(h.w_in, vec![1.0, 1.0, 0.0]);
        assert_eq!(h.b, vec![-0.0, -0.5, 1.0]);
        assert_eq!(h.eval(0.0), 0.0);
        assert_eq!(h.eval(0.5), 1.0);
        assert_eq!(h.eval(1.0), 0.0);

        let z = compile_1d_hat(&[0.0, 0.2, 0.7, 1.0], &[0.0; 4]).unwrap();
        assert!(z.weights.iter().all(|&w| w == 0.0));
        let one = compile_1d_hat(&[0.0, 0.2, 0.7, 1.0], &[1.0; 4]).unwrap();
        assert_eq!(one.weights, vec![0.0, 0.0, 0.0, 1.0]);

        assert!(compile_1d_hat(&[0.0, 0.5, 0.5], &[0.0; 3]).is_err());
    }

    #[test]
    fn product_of_hats_reproduces_nodes() {
        let g = vec![0.0, 0.5, 1.0];
        let data = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let u = fe(vec![g.clone(), g.clone()], data.clone());
        let t = compile_tnn(&u, 0.0, false).unwrap();
        assert_eq!(t.net.rank, 1);
        for (i, &x) in g.iter().enumerate() {
            for (j, &y) in g.iter().enumerate() {
                assert!((t.net.forward(&[x, y]).unwrap() - data[i * 3 + j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rank_of_simple_functions() {
        let u = fe(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![0.0, 0.0, 0.0, 1.0]);
        let t = compile_tnn(&u, 0.0, false).unwrap();
        assert_eq!(t.net.rank, 1);
        assert!((t.net.forward(&[0.3, 0.6]).unwrap() - 0.18).abs() < 1e-12);

        let ones = fe(vec![vec![0.0, 0.4, 1.0], vec![0.0, 1.0], vec![2.0, 3.0]], vec![1.0; 12]);
        let t = compile_tnn(&ones, 1e-12, false).unwrap();
        assert_eq!(t.net.rank, 1);
        assert!((t.net.forward(&[0.9, 0.1, 2.5]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn whole_space_rank_pads() {
        let u = fe(vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]], vec![1.0; 6]);
        let t = compile_tnn(&u, 0.0, true).unwrap();
        assert_eq!(t.net.rank, 2);
        assert_eq!(t.net.widths(), vec![3, 2]);
        assert!((t.net.forward(&[1.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_function_gets_rank_one() {
        let u = fe(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![0.0; 4]);
        let t = compile_tnn(&u, 0.0, false).unwrap();
        assert_eq!(t.factors.rank, 0);
        assert_eq!(t.net.rank, 1);
        assert_eq!(t.net.forward(&[0.5, 0.5]).unwrap(), 0.0);
    }
}
