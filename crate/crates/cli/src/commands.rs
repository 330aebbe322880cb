//! One function per subcommand. Reports go to stdout as `key=value` lines,
//! warnings to stderr. A failed check becomes a verification error.

use std::path::Path;

use fenn_core::compile::{compile, Mode};
use fenn_core::io::{
    function_from_str, mesh_to_string, network_from_str, network_to_string, nodal_function_to_string,
    points_from_str, read_mesh, read_to_string, tensor_fe_from_str, tnn_from_str, tnn_to_string, write_string,
};
use fenn_core::mesh::{freudenthal_mesh, validate_mesh, PolytopeMesh, SampleStream};
use fenn_core::pwl::PiecewiseLinear;
use fenn_core::tensorfe::{compile_tnn, eval_tensor_fe, TensorFE};
use fenn_core::verify::{
    check_counts, check_weak_representation, convergence_experiment, CheckMode, ConvergenceOptions,
    EpsilonSchedule, WeakRepReport,
};
use fenn_core::{Error, Result};

use crate::{
    BuildArgs, ConvergenceArgs, CountsArgs, EvalArgs, FreudenthalArgs, TnnBuildArgs, TnnVerifyArgs, VerifyArgs,
};

fn load(mesh: &Path, function: &Path) -> Result<(PolytopeMesh, PiecewiseLinear)> {
    let mesh = read_mesh(mesh)?;
    let v = function_from_str(&read_to_string(function)?, &mesh)?;
    Ok((mesh, v))
}

fn status(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn print_weak_report(report: &WeakRepReport) {
    println!("R={}", report.r);
    println!("interior_mismatch={:e}", report.interior_mismatch);
    println!("sup_on_domain={}", report.sup_on_domain);
    println!("sup_limit={}", report.sup_limit);
    println!("exterior_deviation={:e}", report.exterior_deviation);
    println!(
        "samples_interior={} samples_collar={} samples_exterior={}",
        report.interior_samples, report.collar_samples, report.exterior_samples
    );
    println!(
        "interior_ok={} bound_ok={} exterior_ok={}",
        report.interior_ok, report.bound_ok, report.exterior_ok
    );
    println!("check={}", status(report.passed()));
}

fn failed_check(what: &str) -> Error {
    Error::Verification(format!("{what} check failed"))
}

pub fn build(a: BuildArgs) -> Result<()> {
    let (mesh, v) = load(&a.mesh, &a.function)?;
    let validation = validate_mesh(&mesh, a.validation_samples, a.sampling.seed)?;
    if !validation.is_clean() {
        return Err(Error::InvalidMesh(validation.violations.join("; ")));
    }
    let mode = if a.compact_support {
        Mode::CompactSupport
    } else {
        Mode::Weak {
            output_bias: a.output_bias,
        }
    };
    let compiled = compile(&mesh, &v, a.epsilon, mode)?;
    let net = &compiled.net;
    if let Some(p) = &net.provenance {
        for w in &p.warnings {
            eprintln!("warning: {w}");
        }
    }
    if let Some(path) = &a.output {
        write_string(path, &network_to_string(net))?;
    }

    let counts = check_counts(&mesh, net);
    println!(
        "h1={} h2={} H^i={} H^b={} N_T={}",
        net.h1(),
        net.h2(),
        counts.interior_hyperplanes,
        counts.boundary_hyperplanes,
        counts.cells
    );
    println!("epsilon={}", a.epsilon);
    println!("mesh_sha256={}", mesh.fingerprint());
    println!("counts={}", status(counts.passed()));
    let check_mode = if a.compact_support {
        CheckMode::CompactSupport
    } else {
        CheckMode::Standard
    };
    let report = check_weak_representation(net, &v, &mesh, a.epsilon, a.sampling.samples, a.sampling.seed, check_mode)?;
    print_weak_report(&report);
    if !counts.passed() {
        return Err(failed_check("size"));
    }
    if !report.passed() {
        return Err(failed_check("weak representation"));
    }
    Ok(())
}

pub fn verify(a: VerifyArgs) -> Result<()> {
    let net = network_from_str(&read_to_string(&a.network)?)?;
    let (mesh, v) = load(&a.mesh, &a.function)?;
    let mode = if a.compact_support {
        CheckMode::CompactSupport
    } else {
        CheckMode::Standard
    };
    let report = check_weak_representation(&net, &v, &mesh, a.epsilon, a.sampling.samples, a.sampling.seed, mode)?;
    print_weak_report(&report);
    if report.passed() {
        Ok(())
    } else {
        Err(failed_check("weak representation"))
    }
}

pub fn counts(a: CountsArgs) -> Result<()> {
    let mesh = read_mesh(&a.mesh)?;
    let net = network_from_str(&read_to_string(&a.network)?)?;
    let c = check_counts(&mesh, &net);
    println!("h1={} expected_h1={}", c.h1, c.expected_h1);
    println!("h2={} expected_h2={}", c.h2, c.expected_h2);
    println!(
        "H^i={} H^b={} N_T={}",
        c.interior_hyperplanes, c.boundary_hyperplanes, c.cells
    );
    println!("check={}", status(c.passed()));
    if c.passed() {
        Ok(())
    } else {
        Err(failed_check("size"))
    }
}

pub fn freudenthal(a: FreudenthalArgs) -> Result<()> {
    let mesh = freudenthal_mesh(a.n, a.cells)?;
    let text = mesh_to_string(&mesh);
    match &a.output {
        Some(path) => {
            write_string(path, &text)?;
            let reg = mesh.registry();
            println!(
                "n={} N={} N_T={} H^i={} H^b={} nodes={}",
                a.n,
                a.cells,
                mesh.cell_count(),
                reg.interior_count(),
                reg.boundary_count(),
                mesh.nodes.len()
            );
        }
        None => println!("{text}"),
    }
    if let Some(path) = &a.function_output {
        let values: Vec<f64> = mesh.nodes.iter().map(|x| a.target.eval(x)).collect();
        write_string(path, &nodal_function_to_string(&values))?;
    }
    Ok(())
}

pub fn convergence(a: ConvergenceArgs) -> Result<()> {
    let target = a.target;
    let options = ConvergenceOptions {
        samples: a.samples,
        seed: a.seed,
        epsilon: EpsilonSchedule {
            scale: a.epsilon_scale,
            power: a.epsilon_power,
        },
    };
    let table = convergence_experiment(move |x: &[f64]| target.eval(x), a.p, &a.ns, a.n, options)?;
    let csv = table.to_csv();
    match &a.csv {
        Some(path) => write_string(path, &csv)?,
        None => print!("{csv}"),
    }
    let in_band = table.slope >= a.slope_min && table.slope <= a.slope_max;
    println!("slope={}", table.slope);
    println!("slope_band=[{},{}]", a.slope_min, a.slope_max);
    println!("counts_match={}", table.counts_match());
    println!("check={}", status(in_band && table.counts_match()));
    if !table.counts_match() {
        return Err(failed_check("first-layer size"));
    }
    if !in_band {
        return Err(failed_check("convergence slope"));
    }
    Ok(())
}

pub fn tnn_build(a: TnnBuildArgs) -> Result<()> {
    let u = tensor_fe_from_str(&read_to_string(&a.tensor_fe)?)?;
    let c = compile_tnn(&u, a.tol, a.whole_space_rank)?;
    if let Some(path) = &a.output {
        write_string(path, &tnn_to_string(&c.net))?;
    }
    let widths: Vec<String> = c.net.widths().iter().map(usize::to_string).collect();
    println!("rank={}", c.net.rank);
    println!("cp_rank={}", c.factors.rank);
    println!("widths={}", widths.join(","));
    println!("cp_method={:?}", c.factors.method);
    println!("cp_residual={:e}", c.factors.residual);
    Ok(())
}

fn grid_nodes(u: &TensorFE) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for g in &u.mesh.grids {
        points = points
            .into_iter()
            .flat_map(|p| {
                g.iter().map(move |&t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    points
}

pub fn tnn_verify(a: TnnVerifyArgs) -> Result<()> {
    let net = tnn_from_str(&read_to_string(&a.tnn)?)?;
    let u = tensor_fe_from_str(&read_to_string(&a.tensor_fe)?)?;
    if net.dimension() != u.mesh.dimension() {
        return Err(Error::DimensionMismatch {
            expected: u.mesh.dimension(),
            actual: net.dimension(),
        });
    }
    let lo: Vec<f64> = u.mesh.grids.iter().map(|g| g[0]).collect();
    let hi: Vec<f64> = u.mesh.grids.iter().map(|g| g[g.len() - 1]).collect();
    let stream = SampleStream::new(a.seed);
    let mut points = grid_nodes(&u);
    let nodes = points.len();
    points.extend((0..a.samples as u64).map(|k| stream.uniform_in_box(k, &lo, &hi)));
    let mut worst = 0.0f64;
    for x in &points {
        worst = worst.max((net.forward(x)? - eval_tensor_fe(&u, x)?).abs());
    }
    let tol = 1e-9 * (1.0 + u.coefficients.max_abs());
    println!("nodes={nodes} random_points={}", a.samples);
    println!("max_error={worst:e}");
    println!("tolerance={tol:e}");
    println!("check={}", status(worst <= tol));
    if worst <= tol {
        Ok(())
    } else {
        Err(failed_check("tensor network"))
    }
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let text = read_to_string(&a.network)?;
    let points = points_from_str(&read_to_string(&a.points)?)?;
    let values = match network_from_str(&text) {
        Ok(net) => net.forward_batch(&points)?,
        Err(fnn_err) => match tnn_from_str(&text) {
            Ok(tnn) => tnn.forward_batch(&points)?,
            Err(_) => return Err(fnn_err),
        },
    };
    for v in values {
        println!("{v}");
    }
    Ok(())
}
