use fenn_core::io::{tensor_fe_from_str, tensor_fe_to_string, tnn_from_str, tnn_to_string};
use fenn_core::net::tnn_forward;
use fenn_core::tensorfe::{compile_tnn, eval_tensor_fe, Tensor, TensorFE, TensorMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_grid(nodes: usize) -> Vec<f64> {
    (0..nodes).map(|i| i as f64 / (nodes - 1) as f64).collect()
}

fn fe(rows: usize, cols: usize, data: Vec<f64>) -> TensorFE {
    let mesh = TensorMesh::new(vec![uniform_grid(rows), uniform_grid(cols)]).unwrap();
    TensorFE::new(mesh, Tensor::new(vec![rows, cols], data).unwrap()).unwrap()
}

fn max_error(u: &TensorFE, steps: usize) -> f64 {
    let c = compile_tnn(u, 1e-12, false).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = [i as f64 / steps as f64, j as f64 / steps as f64];
            worst = worst.max((tnn_forward(&c.net, &x).unwrap() - eval_tensor_fe(u, &x).unwrap()).abs());
        }
    }
    worst
}

#[test]
fn generic_instances_use_full_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let five_by_six = fe(5, 6, (0..30).map(|_| rng.random_range(-1.0..1.0)).collect());
    let net = compile_tnn(&five_by_six, 1e-12, false).unwrap().net;
    assert_eq!((net.rank, net.widths()), (5, vec![5, 6]));
    assert!(max_error(&five_by_six, 40) < 1e-12);

    let four_by_five = fe(4, 5, (0..20).map(|_| rng.random_range(-1.0..1.0)).collect());
    let net = compile_tnn(&four_by_five, 1e-12, false).unwrap().net;
    assert_eq!((net.rank, net.widths()), (4, vec![4, 5]));
    assert_eq!(net.branches[0].weights.len(), 4);
}

#[test]
fn separable_functions_need_one_term() {
    let one = fe(3, 4, vec![1.0; 12]);
    let c = compile_tnn(&one, 1e-12, false).unwrap();
    assert_eq!(c.net.rank, 1);
    assert!(max_error(&one, 30) < 1e-12);

    let xy = fe(2, 2, vec![0.0, 0.0, 0.0, 1.0]);
    let c = compile_tnn(&xy, 1e-12, false).unwrap();
    assert_eq!(c.net.rank, 1);
    assert!((tnn_forward(&c.net, &[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn whole_space_rank_pads_with_zero_terms() {
    let u = fe(3, 5, vec![2.0; 15]);
    let net = compile_tnn(&u, 1e-12, true).unwrap().net;
    assert_eq!(net.rank, 3);
    let y = tnn_forward(&net, &[0.3, 0.8]).unwrap();
    assert!((y - 2.0).abs() < 1e-12, "{y}");
}

#[test]
fn third_order_instance_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grids = vec![uniform_grid(3), uniform_grid(2), uniform_grid(4)];
    let mesh = TensorMesh::new(grids).unwrap();
    let data: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
    let u = TensorFE::new(mesh, Tensor::new(vec![3, 2, 4], data).unwrap()).unwrap();
    let c = compile_tnn(&u, 1e-12, false).unwrap();
    for _ in 0..500 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
        let want = eval_tensor_fe(&u, &x).unwrap();
        assert!((tnn_forward(&c.net, &x).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn documents_round_trip() {
    let u = fe(3, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 0.1]);
    let back = tensor_fe_from_str(&tensor_fe_to_string(&u)).unwrap();
    assert_eq!(back, u);
    let net = compile_tnn(&u, 1e-12, false).unwrap().net;
    assert_eq!(tnn_from_str(&tnn_to_string(&net)).unwrap(), net);
}
