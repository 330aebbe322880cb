//! Numerical checks of compiled networks: sampled weak-representation
//! properties, size identities, Monte Carlo `L^p` errors and convergence
//! experiments on Freudenthal meshes.

use rayon::prelude::*;
use serde::Serialize;

use crate::compile::{compile, expected_sizes, Mode};
use crate::error::{Error, Result};
use crate::mesh::{
    freudenthal_mesh, sample_collar, sample_domain, sample_exterior, sample_shrunk_domain, PolytopeMesh,
};
use crate::net::ReluNet2;
use crate::pwl::{nodal_linear, sup_norm, PiecewiseLinear};

/// Number of exterior points drawn far away from the mesh.
pub const FAR_EXTERIOR_POINTS: usize = 100;
pub const MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// `f = v` on the shrunk cells, `|f| ≤ R` on Ω, `f = −R` outside.
    Standard,
    /// `f = v` on the shrunk cells, `|f| ≤ 2R` on Ω, `f = 0` outside.
    CompactSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakRepReport {
    pub mode: CheckMode,
    #[serde(rename = "R")]
    pub r: f64,
    /// `max |f − v|` over samples of the shrunk cells.
    pub interior_mismatch: f64,
    /// `max |f|` over samples of Ω (shrunk cells and collars).
    pub sup_on_domain: f64,
    pub sup_limit: f64,
    /// `max |f − target|` outside Ω, with target `−R` or `0`.
    pub exterior_deviation: f64,
    pub interior_samples: usize,
    pub collar_samples: usize,
    pub exterior_samples: usize,
    pub interior_ok: bool,
    pub bound_ok: bool,
    pub exterior_ok: bool,
}

impl WeakRepReport {
    pub fn passed(&self) -> bool {
        self.interior_ok && self.bound_ok && self.exterior_ok
    }
}

fn max_abs(values: impl ParallelIterator<Item = Result<f64>>) -> Result<f64> {
    values
        .map(|r| r.map(f64::abs))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Samples the shrunk domain, the collars and the exterior, `per_cell`
/// points per cell for the first two regions.
pub fn check_weak_representation(
    net: &ReluNet2,
    v: &PiecewiseLinear,
    mesh: &PolytopeMesh,
    epsilon: f64,
    per_cell: usize,
    seed: u64,
    mode: CheckMode,
) -> Result<WeakRepReport> {
    if net.n != mesh.dimension {
        return Err(Error::DimensionMismatch {
            expected: mesh.dimension,
            actual: net.n,
        });
    }
    v.check_mesh(mesh)?;
    let r = sup_norm(mesh, v)?;

    let interior = sample_shrunk_domain(mesh, epsilon, per_cell, seed)?;
    let collar = sample_collar(mesh, epsilon, per_cell, seed)?;
    let exterior_count = (per_cell * mesh.cell_count()).clamp(1_000, 100_000);
    let exterior = sample_exterior(mesh, exterior_count, FAR_EXTERIOR_POINTS, seed)?;
    if collar.is_empty() || exterior.is_empty() {
        return Err(Error::Verification(format!(
            "no usable samples (collar {}, exterior {})",
            collar.len(),
            exterior.len()
        )));
    }

    let interior_mismatch = max_abs(
        interior
            .par_iter()
            .map(|(x, i)| Ok(net.forward(x)? - v.pieces[*i].eval(x))),
    )?;
    let sup_on_domain = max_abs(
        interior
            .par_iter()
            .chain(collar.par_iter())
            .map(|(x, _)| net.forward(x)),
    )?;
    let target = match mode {
        CheckMode::Standard => -r,
        CheckMode::CompactSupport => 0.0,
    };
    let exterior_deviation = max_abs(exterior.par_iter().map(|x| Ok(net.forward(x)? - target)))?;
    let sup_limit = match mode {
        CheckMode::Standard => r,
        CheckMode::CompactSupport => 2.0 * r,
    };
    Ok(WeakRepReport {
        mode,
        r,
        interior_mismatch,
        sup_on_domain,
        sup_limit,
        exterior_deviation,
        interior_samples: interior.len(),
        collar_samples: collar.len(),
        exterior_samples: exterior.len(),
        interior_ok: interior_mismatch <= MATCH_TOL * (1.0 + r),
        bound_ok: sup_on_domain <= sup_limit + MATCH_TOL,
        exterior_ok: exterior_deviation <= MATCH_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub expected_h1: usize,
    pub expected_h2: usize,
    pub h1: usize,
    pub h2: usize,
    pub interior_hyperplanes: usize,
    pub boundary_hyperplanes: usize,
    pub cells: usize,
}

impl CountReport {
    pub fn passed(&self) -> bool {
        self.h1 == self.expected_h1 && self.h2 == self.expected_h2
    }
}

/// Compares the network sizes with `2H^i + H^b` and `N_T + 1` (or `N_T`
/// when the constant sits in the output bias).
pub fn check_counts(mesh: &PolytopeMesh, net: &ReluNet2) -> CountReport {
    let reg = mesh.registry();
    let (expected_h1, expected_h2) = expected_sizes(mesh, net.output_bias.is_some());
    CountReport {
        expected_h1,
        expected_h2,
        h1: net.h1(),
        h2: net.h2(),
        interior_hyperplanes: reg.interior_count(),
        boundary_hyperplanes: reg.boundary_count(),
        cells: mesh.cell_count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `‖f − v‖_{L^p(Ω)}` from uniform samples of Ω.
/// The standard error is propagated from the sample mean of `|f − v|^p`.
pub fn estimate_lp_error<F, V>(f: F, v: V, mesh: &PolytopeMesh, p: f64, samples: usize, seed: u64) -> Result<LpEstimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    V: Fn(&[f64], usize) -> Result<f64> + Sync,
{
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p must lie in [1, inf), got {p}")));
    }
    let volume = mesh.volume()?;
    let points = sample_domain(mesh, samples, seed)?;
    let terms = points
        .par_iter()
        .map(|(x, i)| Ok((f(x)? - v(x, *i)?).abs().powf(p)))
        .collect::<Result<Vec<f64>>>()?;
    // fixed summation order keeps the estimate bitwise reproducible
    let s = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / s;
    let var = if terms.len() > 1 {
        terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (s - 1.0)
    } else {
        0.0
    };
    let integral = volume * mean;
    let integral_se = volume * (var / s).sqrt();
    let value = integral.powf(1.0 / p);
    let stderr = if integral > 0.0 {
        integral_se * value / (p * integral)
    } else {
        0.0
    };
    Ok(LpEstimate {
        value,
        stderr,
        samples: terms.len(),
    })
}

/// How `ε` depends on `N` in a convergence run: `ε = scale · N^(−power)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonSchedule {
    pub scale: f64,
    pub power: f64,
}

impl EpsilonSchedule {
    pub const DEFAULT: EpsilonSchedule = EpsilonSchedule { scale: 1e-3, power: 1.0 };

    pub fn at(&self, n: usize) -> f64 {
        self.scale * (n as f64).powf(-self.power)
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n_cells: usize,
    pub epsilon: f64,
    pub h1: usize,
    pub h2: usize,
    pub expected_h1: usize,
    pub error: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub dimension: usize,
    pub p: f64,
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,h1,h2,error,stderr\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{:e},{:e}\n", r.n_cells, r.h1, r.h2, r.error, r.stderr));
        }
        s
    }

    pub fn counts_match(&self) -> bool {
        self.rows.iter().all(|r| r.h1 == r.expected_h1)
    }
}

/// Least squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub samples: usize,
    pub seed: u64,
    pub epsilon: EpsilonSchedule,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            samples: 100_000,
            seed: 0,
            epsilon: EpsilonSchedule::DEFAULT,
        }
    }
}

/// For each `N`: Freudenthal mesh of `[0,1]^n`, nodal interpolant of
/// `target`, compiled network at `ε(N)`, and the sampled `L^p` distance
/// between the network and `target`. Reports the fitted log-log slope.
pub fn convergence_experiment<T>(
    target: T,
    p: f64,
    ns: &[usize],
    n: usize,
    options: ConvergenceOptions,
) -> Result<ConvergenceTable>
where
    T: Fn(&[f64]) -> f64 + Sync,
{
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::InvalidArgument(
            "need at least two strictly increasing positive N values".into(),
        ));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &cells in ns {
        let mesh = freudenthal_mesh(n, cells)?;
        let values: Vec<f64> = mesh.nodes.iter().map(|x| target(x)).collect();
        let v = nodal_linear(&mesh, &values)?;
        let epsilon = options.epsilon.at(cells);
        let compiled = compile(&mesh, &v, epsilon, Mode::Weak { output_bias: false })?;
        let net = &compiled.net;
        let est = estimate_lp_error(
            |x| net.forward(x),
            |x, _| Ok(target(x)),
            &mesh,
            p,
            options.samples,
            options.seed,
        )?;
        rows.push(ConvergenceRow {
            n_cells: cells,
            epsilon,
            h1: net.h1(),
            h2: net.h2(),
            expected_h1: 2 * n * n * cells - n * n + n,
            error: est.value,
            stderr: est.stderr,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n_cells as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let slope = loglog_slope(&xs, &ys);
    Ok(ConvergenceTable {
        dimension: n,
        p,
        rows,
        slope,
    })
}
