mod common;

use fenn_core::compile::{
    compile, compile_cell_bump, positive_normal_combination, shift_t0, solve_mu, Mode,
};
use fenn_core::io::{mesh_from_str, mesh_to_string, network_from_str, network_to_string, tnn_from_str, tnn_to_string};
use fenn_core::mesh::{sample_collar, sample_shrunk_domain, SampleStream};
use fenn_core::net::{fnn_forward, tnn_forward};
use fenn_core::pwl::{continuity_defect, eval_pwl, nodal_linear, AffinePiece};
use fenn_core::tensorfe::{compile_1d_hat, compile_tnn, cp_decompose, Tensor, TensorFE, TensorMesh};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_function, random_grid, random_polygon_mesh, random_polytope, random_simplex_mesh, weak_case};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn normal_combination_is_positive_and_balanced(seed in any::<u64>(), n in 2usize..=3, extra in 0usize..4) {
        let mut r = rng(seed);
        let cell = random_polytope(&mut r, n, n + 1 + extra);
        let lambda = positive_normal_combination(&cell).unwrap();
        let mut sum = vec![0.0; n];
        let mut weight = 0.0;
        for (l, h) in lambda.iter().zip(&cell.halfspaces) {
            prop_assert!(*l >= 1.0);
            for (s, w) in sum.iter_mut().zip(&h.normal) {
                *s += l * w;
            }
            weight += l * h.norm();
        }
        prop_assert!(sum.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-10 * weight);
    }

    #[test]
    fn shifted_mu_keeps_gradient_and_turns_positive(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let cell = random_polytope(&mut r, n, n + 2);
        let gradient: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let lambda = positive_normal_combination(&cell).unwrap();
        let mu = solve_mu(&cell, &gradient).unwrap();
        let (s, t0) = shift_t0(&cell, &mu, &lambda, 0.5, 2.0, 0.05).unwrap();
        prop_assert!(t0 >= s + 1.0);
        for t in [0.0, s, t0] {
            let coeff: Vec<f64> = mu.iter().zip(&lambda).map(|(m, l)| m + t * l).collect();
            for (j, g) in gradient.iter().enumerate() {
                let combo: f64 = coeff.iter().zip(&cell.halfspaces).map(|(c, h)| c * h.normal[j]).sum();
                prop_assert!((combo + g).abs() <= 1e-9 * (1.0 + g.abs()) * t.max(1.0));
            }
            if t >= s {
                prop_assert!(coeff.iter().all(|&c| c > 0.0));
            }
        }
    }

    #[test]
    fn bump_matches_shifted_piece_and_vanishes_outside(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cell = random_polytope(&mut r, 2, 5);
        let piece = AffinePiece {
            gradient: vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)],
            constant: r.random_range(-1.0..1.0),
        };
        let (lo, hi) = cell.bounding_box().unwrap();
        let mut big = 0.0f64;
        for x in [lo.clone(), hi.clone(), vec![lo[0], hi[1]], vec![hi[0], lo[1]]] {
            big = big.max(piece.eval(&x).abs());
        }
        let rr = big + 0.5;
        let (_, radius) = cell.chebyshev_center().unwrap();
        let eps = 0.05 * radius;
        let bump = compile_cell_bump(&cell, &piece, rr, eps).unwrap();
        let stream = SampleStream::new(seed);
        let pad = [lo[0] - 1.0, lo[1] - 1.0];
        let far = [hi[0] + 1.0, hi[1] + 1.0];
        for k in 0..400 {
            let x = stream.uniform_in_box(k, &pad, &far);
            let phi = bump.eval(&x);
            prop_assert!(phi >= 0.0);
            if !cell.contains(&x, 0.0) {
                prop_assert!(phi == 0.0, "phi = {phi} outside the cell");
            } else if cell.boundary_distance(&x) >= eps {
                prop_assert!((phi - piece.eval(&x) - rr).abs() <= 1e-9 * (1.0 + rr));
            } else {
                prop_assert!(phi <= 2.0 * rr + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn first_layer_size_is_directed_hyperplane_count(seed in any::<u64>(), n in 1usize..=3, bias in any::<bool>()) {
        let mut r = rng(seed);
        let mesh = random_simplex_mesh(&mut r, n);
        let v = random_function(&mut r, &mesh, true);
        let reg = mesh.registry();
        let net = compile(&mesh, &v, 0.1 * mesh.min_inradius().unwrap(), Mode::Weak { output_bias: bias }).unwrap().net;
        prop_assert_eq!(net.h1(), 2 * reg.interior_count() + reg.boundary_count());
        prop_assert_eq!(net.h2(), mesh.cell_count() + usize::from(!bias));
    }

    #[test]
    fn merging_preserves_the_function(seed in any::<u64>()) {
        let mut r = rng(seed);
        let case = weak_case(r.random_range(0..40), &mut r);
        let c = compile(&case.mesh, &case.v, case.epsilon.max(0.01 * case.mesh.min_inradius().unwrap()), Mode::Weak { output_bias: false }).unwrap();
        let (lo, hi) = case.mesh.bounding_box().unwrap();
        let lo: Vec<f64> = lo.iter().map(|x| x - 0.3).collect();
        let hi: Vec<f64> = hi.iter().map(|x| x + 0.3).collect();
        let stream = SampleStream::new(seed);
        for k in 0..200 {
            let x = stream.uniform_in_box(k, &lo, &hi);
            let a = c.unmerged.net.forward(&x).unwrap();
            let b = c.net.forward(&x).unwrap();
            // merging reorders sums, so the allowance scales with the summed magnitudes
            let net = &c.unmerged.net;
            let h = net.hidden1(&x);
            let mut rows: Vec<f64> = net.b2.iter().map(|v| v.abs()).collect();
            for t in &net.w2 {
                rows[t.row] += (t.value * h[t.col]).abs();
            }
            let magnitude: f64 = rows.iter().zip(&net.w3).map(|(r, w)| r * w.abs()).sum();
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + magnitude), "{a} vs {b}");
        }
    }

    #[test]
    fn output_is_homogeneous_in_last_layer(seed in any::<u64>(), alpha in -4.0f64..4.0) {
        let mut r = rng(seed);
        let mesh = random_polygon_mesh(&mut r);
        let v = random_function(&mut r, &mesh, false);
        let net = compile(&mesh, &v, 0.1 * mesh.min_inradius().unwrap(), Mode::Weak { output_bias: true }).unwrap().net;
        let mut scaled = net.clone();
        scaled.w3.iter_mut().for_each(|w| *w *= alpha);
        scaled.output_bias = scaled.output_bias.map(|b| b * alpha);
        let stream = SampleStream::new(seed);
        let (lo, hi) = mesh.bounding_box().unwrap();
        for k in 0..100 {
            let x = stream.uniform_in_box(k, &lo, &hi);
            let base = fnn_forward(&net, &x).unwrap();
            let s = fnn_forward(&scaled, &x).unwrap();
            prop_assert!((s - alpha * base).abs() <= 1e-12 * (1.0 + base.abs()) * (1.0 + alpha.abs()));
        }
    }

    #[test]
    fn compact_support_vanishes_off_the_hull(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mesh = random_polygon_mesh(&mut r);
        let v = random_function(&mut r, &mesh, false);
        let net = compile(&mesh, &v, 0.05 * mesh.min_inradius().unwrap(), Mode::CompactSupport).unwrap().net;
        let hull = mesh.domain_hull.clone().unwrap();
        let stream = SampleStream::new(seed);
        for k in 0..300 {
            let x = stream.uniform_in_box(k, &[-4.0, -4.0], &[4.0, 4.0]);
            if !hull.contains(&x, 0.0) {
                prop_assert_eq!(net.forward(&x).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn network_text_round_trip_is_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mesh = random_simplex_mesh(&mut r, 2);
        let v = random_function(&mut r, &mesh, true);
        let net = compile(&mesh, &v, 0.1 * mesh.min_inradius().unwrap(), Mode::Weak { output_bias: false }).unwrap().net;
        let back = network_from_str(&network_to_string(&net)).unwrap();
        prop_assert_eq!(&back, &net);
        let mesh_back = mesh_from_str(&mesh_to_string(&mesh)).unwrap();
        prop_assert_eq!(mesh_back.fingerprint(), mesh.fingerprint());
    }

    #[test]
    fn nodal_interpolant_is_continuous_and_exact_at_nodes(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let mesh = random_simplex_mesh(&mut r, n);
        let values: Vec<f64> = mesh.nodes.iter().map(|_| r.random_range(-2.0..2.0)).collect();
        let v = nodal_linear(&mesh, &values).unwrap();
        prop_assert!(continuity_defect(&mesh, &v) <= 1e-10);
        for (x, want) in mesh.nodes.iter().zip(&values) {
            let got = eval_pwl(&mesh, &v, x).unwrap().value;
            prop_assert!((got - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn shrunk_and_collar_samples_sit_where_claimed(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mesh = random_polygon_mesh(&mut r);
        let eps = 0.1 * mesh.min_inradius().unwrap();
        for (x, i) in sample_shrunk_domain(&mesh, eps, 50, seed).unwrap() {
            prop_assert!(mesh.cells[i].boundary_distance(&x) >= eps);
        }
        for (x, i) in sample_collar(&mesh, eps, 50, seed).unwrap() {
            let d = mesh.cells[i].boundary_distance(&x);
            prop_assert!((0.0..eps).contains(&d));
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn hat_network_interpolates_and_is_affine_between_nodes(seed in any::<u64>(), nodes in 2usize..25) {
        let mut r = rng(seed);
        let grid = random_grid(&mut r, nodes, 0.01);
        let values: Vec<f64> = (0..nodes).map(|_| r.random_range(-5.0..5.0)).collect();
        let net = compile_1d_hat(&grid, &values).unwrap();
        for (t, v) in grid.iter().zip(&values) {
            prop_assert!((net.eval(*t) - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
        for w in grid.windows(2) {
            let q = 0.3 * w[0] + 0.7 * w[1];
            let lin = 0.3 * net.eval(w[0]) + 0.7 * net.eval(w[1]);
            prop_assert!((net.eval(q) - lin).abs() <= 1e-8);
        }
    }

    #[test]
    fn tnn_is_linear_in_the_coefficients(seed in any::<u64>(), rows in 2usize..6, cols in 2usize..6) {
        let mut r = rng(seed);
        let grids = vec![random_grid(&mut r, rows, 0.1), random_grid(&mut r, cols, 0.1)];
        let mesh = TensorMesh::new(grids.clone()).unwrap();
        let a: Vec<f64> = (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let build = |d: Vec<f64>| {
            let u = TensorFE::new(mesh.clone(), Tensor::new(vec![rows, cols], d).unwrap()).unwrap();
            compile_tnn(&u, 1e-12, false).unwrap().net
        };
        let (na, nb, ns) = (build(a), build(b), build(sum));
        let stream = SampleStream::new(seed);
        let lo = [grids[0][0], grids[1][0]];
        let hi = [grids[0][rows - 1], grids[1][cols - 1]];
        for k in 0..100 {
            let x = stream.uniform_in_box(k, &lo, &hi);
            let lhs = tnn_forward(&ns, &x).unwrap();
            let rhs = tnn_forward(&na, &x).unwrap() + tnn_forward(&nb, &x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
        let back = tnn_from_str(&tnn_to_string(&ns)).unwrap();
        prop_assert_eq!(back, ns);
    }

    #[test]
    fn cp_residual_is_honest(seed in any::<u64>(), order in 2usize..=3) {
        let mut r = rng(seed);
        let shape: Vec<usize> = (0..order).map(|_| r.random_range(2..=4)).collect();
        let len: usize = shape.iter().product();
        let c = Tensor::new(shape.clone(), (0..len).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let f = cp_decompose(&c, 1e-10, seed).unwrap();
        let back = f.reconstruct(&shape);
        let err = back.data.iter().zip(&c.data).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!((err - f.residual).abs() <= 1e-9 * (1.0 + c.frobenius()));
        prop_assert!(err <= 1e-9 * (1.0 + c.frobenius()));
        prop_assert!(f.rank <= c.matricization_bound());
    }
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn tnn_is_exact_on_degenerate_coefficients(
        rows in 2usize..6,
        cols in 2usize..7,
        entries in proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), Just(2.0), Just(-1.0)], 36),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let grids = vec![random_grid(&mut r, rows, 0.1), random_grid(&mut r, cols, 0.1)];
        let data = entries[..rows * cols].to_vec();
        let u = TensorFE::new(TensorMesh::new(grids.clone()).unwrap(), Tensor::new(vec![rows, cols], data).unwrap()).unwrap();
        let c = compile_tnn(&u, 1e-12, false).unwrap();
        prop_assert!(c.factors.residual <= 1e-10 * (1.0 + u.coefficients.frobenius()));
        for (i, &x) in grids[0].iter().enumerate() {
            for (j, &y) in grids[1].iter().enumerate() {
                let got = tnn_forward(&c.net, &[x, y]).unwrap();
                prop_assert!((got - u.coefficients.get(&[i, j])).abs() <= 1e-9 * 3.0);
            }
        }
    }
}
