mod common;

use bsum::gradients::LayerBlock;
use bsum::upperbounds::{soft_threshold, FnObjective};
use bsum::{
    block_gradient, block_hessian, classify_convexity, closed_form_linear_block, descent_direction_first_order,
    descent_direction_linear, descent_direction_proximal, descent_direction_second_order, evaluate_upperbound,
    objective, project_feasible, prox_l1_step, ActivationKind, Anchor, BlockCurvature, BsumError, Dataset64,
    FeasibleSetKind, InnerSolverConfig, LossKind, Matrix64, Network64, NetworkSpec, RegularizerSpec, UpperboundKind,
};
use common::{invert, positive_definite_above, rng, uniform};
use rand::Rng;

/// Minimizes `λ|v| + (γ/2)(v − a)²` by a grid scan, then bisection on the
/// sign of a central-difference slope inside the best grid cell.
fn brute_prox(a: f64, lambda: f64, gamma: f64) -> f64 {
    let phi = |v: f64| lambda * v.abs() + gamma / 2.0 * (v - a) * (v - a);
    let slope = |v: f64| (phi(v + 1e-4) - phi(v - 1e-4)) / 2e-4;
    let span = a.abs() + 1.0;
    let steps = 4000;
    let h = 2.0 * span / steps as f64;
    let best = (0..=steps)
        .map(|i| -span + i as f64 * h)
        .min_by(|x, y| phi(*x).total_cmp(&phi(*y)))
        .unwrap();
    let (mut lo, mut hi) = (best - h, best + h);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = (lo + hi) / 2.0;
    // the minimizer may sit on the kink at zero
    if phi(0.0) <= phi(v) {
        0.0
    } else {
        v
    }
}

#[test]
fn soft_threshold_examples() {
    assert_eq!(soft_threshold(2.0, 0.5), 1.5);
    assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
    assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
}

#[test]
fn prox_l1_matches_scalar_brute_force() {
    let mut r = rng(21);
    for _ in 0..20 {
        let w = uniform(4, 5, -2.0, 2.0, &mut r);
        let g = uniform(4, 5, -2.0, 2.0, &mut r);
        let gamma = r.random_range(0.5..4.0);
        let lambda = r.random_range(0.0..2.0);
        let d = prox_l1_step(&w, &g, gamma, lambda).unwrap();
        let a = w.add_scaled(-1.0 / gamma, &g);
        for i in 0..20 {
            let ai = a.as_slice()[i];
            let di = d.as_slice()[i];
            let oracle = brute_prox(ai, lambda, gamma);
            assert!(
                (di - oracle).abs() <= 1e-8,
                "a={ai} λ={lambda} γ={gamma}: {di} vs {oracle}"
            );
            if ai.abs() <= lambda / gamma {
                assert_eq!(di.to_bits(), 0.0f64.to_bits());
            }
        }
    }
}

#[test]
fn prox_l1_without_lambda_is_first_order() {
    let mut r = rng(22);
    let w = uniform(3, 3, -1.0, 1.0, &mut r);
    let g = uniform(3, 3, -1.0, 1.0, &mut r);
    let d = prox_l1_step(&w, &g, 2.0, 0.0).unwrap();
    assert_eq!(
        d,
        descent_direction_first_order(&w, &g, 2.0, &FeasibleSetKind::Unconstrained).unwrap()
    );
}

#[test]
fn nonzeros_shrink_as_lambda_grows() {
    let mut r = rng(23);
    for _ in 0..10 {
        let w = uniform(6, 6, -1.0, 1.0, &mut r);
        let g = uniform(6, 6, -1.0, 1.0, &mut r);
        let mut prev = usize::MAX;
        for i in 0..=80 {
            let lambda = 0.05 * i as f64;
            let nz = prox_l1_step(&w, &g, 1.5, lambda).unwrap().count_nonzero();
            assert!(nz <= prev);
            prev = nz;
        }
        assert_eq!(prev, 0);
    }
}

#[test]
fn first_order_direction_examples() {
    let mut r = rng(24);
    let w = uniform(3, 3, -1.0, 1.0, &mut r);
    let g = uniform(3, 3, -1.0, 1.0, &mut r);
    let u = FeasibleSetKind::Unconstrained;
    assert_eq!(
        descent_direction_first_order(&w, &Matrix64::zeros(3, 3), 3.0, &u).unwrap(),
        w
    );
    assert_eq!(descent_direction_first_order(&w, &g, 1.0, &u).unwrap(), &w - &g);
    let d = descent_direction_first_order(&w, &g, 1.0, &FeasibleSetKind::Toeplitz).unwrap();
    assert!(FeasibleSetKind::Toeplitz.contains(&d, 1e-12));
}

#[test]
fn second_order_direction_examples() {
    let mut r = rng(25);
    let w = uniform(2, 3, -1.0, 1.0, &mut r);
    let g = uniform(2, 3, -1.0, 1.0, &mut r);
    let d = descent_direction_second_order(&w, &g, &Matrix64::zeros(6, 6), 4.0).unwrap();
    assert!(d.direction.max_abs_diff(&w.add_scaled(-0.25, &g)) <= 1e-15);

    // f(W) = ‖W − A‖², Hessian 2I, one Newton step lands on A
    let a = uniform(2, 3, -1.0, 1.0, &mut r);
    let grad = (&w - &a).scale(2.0);
    let d = descent_direction_second_order(&w, &grad, &Matrix64::identity(6).scale(2.0), 1e-12).unwrap();
    assert!(d.direction.max_abs_diff(&a) <= 1e-10);
}

#[test]
fn second_order_doubles_gamma_on_indefinite_hessians() {
    let w = Matrix64::zeros(1, 2);
    let g = Matrix64::from_rows(&[&[1.0, 1.0]]);
    let hess = Matrix64::from_rows(&[&[-3.0, 0.0], &[0.0, 1.0]]);
    let step = descent_direction_second_order(&w, &g, &hess, 1.0).unwrap();
    assert_eq!(step.gamma, 4.0);
    let bad = Matrix64::from_rows(&[&[f64::NEG_INFINITY, 0.0], &[0.0, 1.0]]);
    assert!(matches!(
        descent_direction_second_order(&w, &g, &bad, 1.0),
        Err(BsumError::Curvature(_))
    ));
}

fn ridge_problem(seed: u64, lambda: f64) -> (Network64, Dataset64) {
    let mut r = rng(seed);
    let spec = NetworkSpec::uniform(&[5, 3], ActivationKind::Identity, RegularizerSpec::l2(lambda));
    let net = Network64::from_weights(spec, vec![uniform(3, 5, -1.0, 1.0, &mut r)]).unwrap();
    let x = uniform(5, 40, -1.0, 1.0, &mut r);
    let y = uniform(3, 40, -1.0, 1.0, &mut r);
    (net, Dataset64::new(x, y).unwrap())
}

/// `Y Xᵀ (XXᵀ + NλI)⁻¹`
fn textbook_ridge(data: &Dataset64, lambda: f64) -> Matrix64 {
    let x = data.x();
    let n = data.len() as f64;
    let m = &x.matmul_t(x) + &Matrix64::identity(x.rows()).scale(n * lambda);
    data.y().matmul_t(x).matmul(&invert(&m))
}

#[test]
fn second_order_reaches_ridge_solution() {
    let lambda = 0.05;
    let (net, data) = ridge_problem(26, lambda);
    let g = block_gradient(&net, &data, LossKind::L2, 1).unwrap();
    let h = block_hessian(&net, &data, LossKind::L2, 1).unwrap();
    let d = descent_direction_second_order(net.weight(1), &g, &h, 1e-8).unwrap();
    let err = d.direction.max_abs_diff(&textbook_ridge(&data, lambda));
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn closed_form_matches_textbook_ridge() {
    for (seed, lambda) in [(27, 0.1), (28, 1e-3), (29, 2.0)] {
        let (net, data) = ridge_problem(seed, lambda);
        let w = closed_form_linear_block(&net, &data, 1, lambda).unwrap();
        assert!(w.max_abs_diff(&textbook_ridge(&data, lambda)) <= 1e-10);
    }
}

#[test]
fn closed_form_is_a_block_minimizer() {
    let mut r = rng(30);
    let spec = NetworkSpec::uniform(&[4, 3, 3, 2], ActivationKind::Identity, RegularizerSpec::l2(0.05));
    let net: Network64 = bsum::build_network(spec, bsum::InitScheme::default(), 3).unwrap();
    let data = Dataset64::new(uniform(4, 25, -1.0, 1.0, &mut r), uniform(2, 25, -1.0, 1.0, &mut r)).unwrap();
    for layer in 1..=3 {
        let w = closed_form_linear_block(&net, &data, layer, 0.05).unwrap();
        let mut at = net.clone();
        at.set_weight(layer, w.clone()).unwrap();
        assert!(
            block_gradient(&at, &data, LossKind::L2, layer)
                .unwrap()
                .frobenius_norm()
                <= 1e-8
        );
        let best = objective(&at, &data, LossKind::L2).unwrap();
        for _ in 0..100 {
            let mut probe = at.clone();
            let e = uniform(w.rows(), w.cols(), -0.1, 0.1, &mut r);
            probe.set_weight(layer, &w + &e).unwrap();
            assert!(objective(&probe, &data, LossKind::L2).unwrap() >= best);
        }
    }
}

#[test]
fn closed_form_rejects_singular_and_nonlinear() {
    let spec = NetworkSpec::uniform(&[3, 2], ActivationKind::Identity, RegularizerSpec::NONE);
    let net = Network64::from_weights(spec, vec![Matrix64::zeros(2, 3)]).unwrap();
    let data = Dataset64::new(Matrix64::zeros(3, 4), Matrix64::zeros(2, 4)).unwrap();
    assert!(matches!(
        closed_form_linear_block(&net, &data, 1, 0.0),
        Err(BsumError::Singular(_))
    ));
    let spec = NetworkSpec::uniform(&[3, 2], ActivationKind::Tanh, RegularizerSpec::NONE);
    let net = Network64::from_weights(spec, vec![Matrix64::zeros(2, 3)]).unwrap();
    assert!(matches!(
        closed_form_linear_block(&net, &data, 1, 0.1),
        Err(BsumError::Spec(_))
    ));
}

#[test]
fn proximal_examples() {
    let mut r = rng(31);
    let w = uniform(3, 2, -1.0, 1.0, &mut r);
    let a = uniform(3, 2, -1.0, 1.0, &mut r);
    let cfg = InnerSolverConfig::default();
    let u = FeasibleSetKind::Unconstrained;
    let zero = FnObjective::new(
        (3, 2),
        |_: &Matrix64| 0.0,
        |m: &Matrix64| Matrix64::zeros(m.rows(), m.cols()),
    );
    assert_eq!(descent_direction_proximal(&zero, &w, 1.0, &u, &cfg).unwrap().point, w);

    let (av, ag) = (a.clone(), a.clone());
    let quad = FnObjective::new(
        (3, 2),
        move |m: &Matrix64| (m - &av).frobenius_norm_sq(),
        move |m: &Matrix64| (m - &ag).scale(2.0),
    );
    let out = descent_direction_proximal(&quad, &w, 2.0, &u, &cfg).unwrap();
    assert!(out.converged);
    assert!(out.point.max_abs_diff(&(&a + &w).scale(0.5)) <= 1e-8);
}

/// Exponential loss, softplus layers, nonnegative weights and targets below
/// the outputs: the block objective is convex in every layer.
fn c1_problem(dims: &[usize], act: ActivationKind, lambda: f64, n: usize, seed: u64) -> (Network64, Dataset64) {
    let mut r = rng(seed);
    let spec = NetworkSpec::uniform(dims, act, RegularizerSpec::l2(lambda));
    let weights = (1..dims.len())
        .map(|j| uniform(dims[j], dims[j - 1], 0.0, 0.5, &mut r))
        .collect();
    let net = Network64::from_weights(spec, weights).unwrap();
    let x = uniform(dims[0], n, 0.0, 1.0, &mut r);
    let h = bsum::network_output(&net, &x).unwrap();
    let y = h.map(|v| v - 0.5 - v.abs());
    (net, Dataset64::new(x, y).unwrap())
}

#[test]
fn proximal_matches_long_run_oracle_in_c1_regime() {
    let loss = LossKind::Exponential { c: 4.0 };
    let (net, data) = c1_problem(&[3, 4, 2], ActivationKind::Softplus, 0.05, 12, 32);
    let cfg = InnerSolverConfig::default();
    let long = InnerSolverConfig {
        max_iters: cfg.max_iters * 10,
        grad_tol: cfg.grad_tol * 1e-3,
        ..cfg
    };
    for layer in 1..=2 {
        let block = LayerBlock::new(&net, &data, loss, layer).unwrap();
        let w = net.weight(layer);
        let u = FeasibleSetKind::Unconstrained;
        let fast = descent_direction_proximal(&block, w, 1.0, &u, &cfg).unwrap();
        let slow = descent_direction_proximal(&block, w, 1.0, &u, &long).unwrap();
        assert!(fast.converged);
        assert!(fast.point.max_abs_diff(&slow.point) <= 1e-6);
        assert!(fast.value <= bsum::BlockObjective::value(&block, w).unwrap());
    }
}

#[test]
fn linear_direction_examples() {
    let mut r = rng(33);
    let w = uniform(2, 2, -1.0, 1.0, &mut r);
    let g = uniform(2, 2, -1.0, 1.0, &mut r);
    let d = descent_direction_linear(&w, &g).unwrap();
    assert_eq!(d, g.scale(-1.0));
    // convex combination with α = 1 lands on −∇f
    assert_eq!(w.scale(0.0).add_scaled(1.0, &d), g.scale(-1.0));
    // grad = 0 leaves (1 − α)W
    let zero = descent_direction_linear(&w, &Matrix64::zeros(2, 2)).unwrap();
    assert_eq!(w.scale(0.7).add_scaled(0.3, &zero), w.scale(0.7));

    // concave toy block f(W) = −‖W‖² + ⟨C, W⟩
    let c = uniform(2, 2, -0.1, 0.1, &mut r);
    let f = |m: &Matrix64| -m.frobenius_norm_sq() + c.dot(m);
    let grad = &w.scale(-2.0) + &c;
    let next = w
        .scale(0.99)
        .add_scaled(0.01, &descent_direction_linear(&w, &grad).unwrap());
    assert!(f(&next) < f(&w));
}

#[test]
fn upperbound_examples() {
    let mut r = rng(34);
    let w = uniform(2, 3, -1.0, 1.0, &mut r);
    let g = uniform(2, 3, -1.0, 1.0, &mut r);
    let anchor = Anchor::new(w.clone(), 1.25, g.clone()).with_hessian(Matrix64::identity(6));
    for kind in [
        UpperboundKind::first_order(3.0),
        UpperboundKind::second_order(0.5),
        UpperboundKind::Linear,
    ] {
        assert_eq!(evaluate_upperbound(&kind, &w, &anchor, None).unwrap(), 1.25);
    }
    let e = uniform(2, 3, -1.0, 1.0, &mut r);
    let flat = Anchor::new(w.clone(), 1.25, Matrix64::zeros(2, 3));
    let v = evaluate_upperbound(&UpperboundKind::first_order(3.0), &(&w + &e), &flat, None).unwrap();
    assert!((v - (1.25 + 1.5 * e.frobenius_norm_sq())).abs() <= 1e-14);
    let no_hess = Anchor::new(w.clone(), 1.25, g);
    assert!(matches!(
        evaluate_upperbound(&UpperboundKind::second_order(1.0), &w, &no_hess, None),
        Err(BsumError::Spec(_))
    ));
}

#[test]
fn projection_examples() {
    let m = Matrix64::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
    let t = project_feasible(&FeasibleSetKind::Toeplitz, &m);
    assert_eq!(t, Matrix64::from_rows(&[&[2.5, 2.0], &[3.0, 2.5]]));
    assert_eq!(project_feasible(&FeasibleSetKind::Toeplitz, &t), t);
    let big = Matrix64::from_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
    let ball = FeasibleSetKind::FrobeniusBall { radius: 1.0 };
    assert_eq!(project_feasible(&ball, &big).frobenius_norm(), 1.0);
    let mut r = rng(35);
    for set in [FeasibleSetKind::Unconstrained, FeasibleSetKind::Toeplitz, ball] {
        for _ in 0..20 {
            let w = uniform(4, 3, -3.0, 3.0, &mut r);
            let p = project_feasible(&set, &w);
            assert_eq!(project_feasible(&set, &p), p);
        }
    }
}

#[test]
fn classifier_certificates_hold_on_the_hessian() {
    // each strongly convex verdict is checked against λ_min(∇²f_j) ≥ 2λ
    let configs: [(&[usize], ActivationKind, f64); 10] = [
        (&[3, 2], ActivationKind::Softplus, 0.1),
        (&[3, 3, 2], ActivationKind::Softplus, 0.05),
        (&[2, 4, 1], ActivationKind::Softplus, 0.2),
        (&[3, 3, 3, 1], ActivationKind::Softplus, 0.1),
        (&[4, 3, 2], ActivationKind::LeakyReluSmooth(0.1), 0.1),
        (&[3, 4, 2], ActivationKind::LeakyReluSmooth(0.3), 0.05),
        (&[3, 3, 2], ActivationKind::BentIdentity, 0.1),
        (&[2, 3, 3, 2], ActivationKind::BentIdentity, 0.02),
        (&[3, 2, 2], ActivationKind::Identity, 0.1),
        (&[4, 4, 1], ActivationKind::Identity, 0.01),
    ];
    let loss = LossKind::Exponential { c: 4.0 };
    for (i, (dims, act, lambda)) in configs.into_iter().enumerate() {
        let (net, data) = c1_problem(dims, act, lambda, 10, 40 + i as u64);
        for layer in 1..net.depth() + 1 {
            let acts: Vec<_> = (layer..=net.depth()).map(|j| net.activation(j)).collect();
            let verdict = classify_convexity(loss, &acts, net.regularizer(layer));
            assert_eq!(verdict, BlockCurvature::StronglyConvex { modulus: 2.0 * lambda });
            let h = block_hessian(&net, &data, loss, layer).unwrap();
            assert!(
                positive_definite_above(&h, 2.0 * lambda - 1e-6),
                "config {i} layer {layer}"
            );
        }
    }
}

#[test]
fn unknown_curvature_for_bounded_activations() {
    let v = classify_convexity(LossKind::L2, &[ActivationKind::Logistic], &RegularizerSpec::l2(1.0));
    assert_eq!(v, BlockCurvature::Unknown);
}
