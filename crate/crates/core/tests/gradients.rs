mod common;

use common::*;

#[test]
fn one_class_gradients_match_finite_differences() {
    for seed in 0..20 {
        let err = oc_gradient_error(&gradient_case(seed));
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn soft_boundary_gradients_match_finite_differences() {
    for seed in 0..20 {
        for nu in [0.05, 0.5] {
            let err = sb_gradient_error(&gradient_case(100 + seed), nu);
            assert!(err < 1e-4, "seed {seed}, nu {nu}: relative error {err}");
        }
    }
}

#[test]
fn reconstruction_gradients_match_finite_differences() {
    for seed in 0..20 {
        let err = reconstruction_gradient_error(&gradient_case(200 + seed));
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn analytic_oracle_agrees_on_a_linear_net() {
    // One linear layer W (1x2), center c: loss = mean (W x - c)^2, dL/dW = 2 mean (Wx - c) x^T.
    use occdyn::linalg::Matrix;
    use occdyn::nn::Mlp;
    let w = Matrix::from_rows(&[vec![0.5, -1.0]]).unwrap();
    let net = Mlp::from_layers(vec![w], 0.1).unwrap();
    let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
    let c = [0.25];
    let (loss, g) = occdyn::svdd::oc_batch_gradients(&net, &c, &x).unwrap();
    // Wx = -1.5 and -1.0, residuals -1.75 and -1.25.
    assert!((loss - (1.75f64.powi(2) + 1.25f64.powi(2)) / 2.0).abs() < 1e-12);
    let expected = [(-1.75 * 1.0 + -1.25 * -1.0), (-1.75 * 2.0 + -1.25 * 0.5)];
    for (k, e) in expected.iter().enumerate() {
        assert!((g[0].as_slice()[k] - e).abs() < 1e-12, "{k}: {} vs {e}", g[0].as_slice()[k]);
    }
}
