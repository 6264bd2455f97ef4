use super::*;
use crate::grid::{fft_forward, prolong, rotate_frame, GridField, MetricSpec, Resolution};
use crate::sampler::{sample_forcing, ForcingSpec, SeededRng};

fn test_config() -> GinoConfig {
    GinoConfig {
        degree: 6,
        lambda_max: 30.0,
        hidden: 4,
        init_gain: 0.6,
        init_weight_std: 0.8,
        init_coeff_std: 0.3,
    }
}

fn random_model(seed: u64, metric: MetricSpec<f64>) -> GinoModel<f64> {
    let mut rng = SeededRng::new(seed);
    let mut m = GinoModel::init(&test_config(), metric, &mut rng).unwrap();
    m.rho
        .b1
        .iter_mut()
        .enumerate()
        .for_each(|(i, b)| *b = 0.1 * i as f64 - 0.15);
    m.rho.b2 = 0.2;
    m
}

fn random_field(res: Resolution, seed: u64, metric: MetricSpec<f64>) -> GridField<f64> {
    let spec = ForcingSpec::new(1.0, 60.0, res, metric).unwrap();
    sample_forcing(&spec, &mut SeededRng::new(seed)).unwrap()
}

fn dot(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn identity_stack_band_limits() {
    let res = Resolution::new(16).unwrap();
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let one = ChebMultiplier::constant(1.0, 3, 20.0).unwrap();
    let model = GinoModel::new(one.clone(), RadialParams::identity(2), one, metric).unwrap();
    let f = random_field(res, 3, MetricSpec::euclidean(1.0).unwrap());
    let expected = fft_forward(&f).multiply(|k1, k2| {
        if metric.symbol(k1, k2) <= 20.0 {
            1.0
        } else {
            0.0
        }
    });
    let expected = crate::grid::fft_inverse(&expected).unwrap();
    let out = model.apply(&f);
    assert!(out.sub(&expected).unwrap().max_abs() < 1e-13);
    assert_eq!(model.apply(&GridField::zeros(res)).max_abs(), 0.0);
}

#[test]
fn multiplier_truncates_above_cutoff() {
    let res = Resolution::new(16).unwrap();
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let f = GridField::from_fn(res, |x: f64, y: f64| {
        [(5.0 * x).cos(), (4.0 * x + 3.0 * y).sin()]
    });
    let m = ChebMultiplier::constant(1.0, 2, 20.0).unwrap();
    assert!(multiplier_apply(&m, &f, &metric).max_abs() < 1e-14);
}

#[test]
fn equivariant_under_frame_rotation() {
    let metric = MetricSpec::anisotropic(0.2, 0.4, 1.0).unwrap();
    let res = Resolution::new(32).unwrap();
    let model = random_model(11, metric);
    let f = random_field(res, 5, metric);
    let base = model.apply(&f);
    for &theta in &[0.3, 1.9, std::f64::consts::PI, -2.2] {
        let lhs = model.apply(&rotate_frame(&f, theta));
        let rhs = rotate_frame(&base, theta);
        let dev = lhs.sub(&rhs).unwrap().l2_norm() / rhs.l2_norm();
        assert!(dev < 1e-12, "theta={theta}: {dev}");
    }
}

#[test]
fn zero_gradient_in_zero_gradient_out() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let res = Resolution::new(8).unwrap();
    let model = random_model(2, metric);
    let (_, cache) = model.forward(&random_field(res, 1, metric));
    let (g, gin) = model.backward(&cache, &GridField::zeros(res)).unwrap();
    assert!(g.flatten().iter().all(|&v| v == 0.0));
    assert_eq!(gin.max_abs(), 0.0);
}

#[test]
fn cache_shape_is_checked() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let res = Resolution::new(8).unwrap();
    let model = random_model(2, metric);
    let (_, cache) = model.forward(&random_field(res, 1, metric));
    let mut other = GinoConfig {
        degree: 3,
        ..test_config()
    };
    other.hidden = 4;
    let small = GinoModel::init(&other, metric, &mut SeededRng::new(1)).unwrap();
    assert!(matches!(
        small.backward(&cache, &GridField::zeros(res)),
        Err(crate::Error::CacheMismatch(_))
    ));
    let wrong_res = GridField::zeros(Resolution::new(16).unwrap());
    assert!(model.backward(&cache, &wrong_res).is_err());
}

#[test]
fn single_stage_mse_gradient_matches_fd() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let res = Resolution::new(16).unwrap();
    let mut model = random_model(4, metric);
    model.rho.gain = 0.0;
    model.mult2 = ChebMultiplier::constant(1.0, 6, 30.0).unwrap();
    let f = random_field(res, 8, metric);
    let target = random_field(res, 9, metric);
    let loss = |m: &GinoModel<f64>| {
        let e = m.apply(&f).sub(&target).unwrap();
        0.5 * e.data().iter().map(|v| v * v).sum::<f64>()
    };
    let (u, cache) = model.forward(&f);
    let (g, _) = model.backward(&cache, &u.sub(&target).unwrap()).unwrap();
    let h = 1e-6;
    for j in 0..model.mult1.coeffs().len() {
        let mut p = model.clone();
        p.mult1.coeffs_mut()[j] += h;
        let lp = loss(&p);
        p.mult1.coeffs_mut()[j] -= 2.0 * h;
        let fd = (lp - loss(&p)) / (2.0 * h);
        assert!(
            rel_err(g.d_coeffs1[j], fd) < 1e-6,
            "theta_{j}: {} vs {fd}",
            g.d_coeffs1[j]
        );
    }
}

fn check_full_gradient(model: &GinoModel<f64>, seed: u64) {
    let metric = *model.metric();
    let res = Resolution::new(16).unwrap();
    let f = random_field(res, seed, metric);
    let probe = random_field(res, seed + 100, metric);
    let loss = |m: &GinoModel<f64>, f: &GridField<f64>| dot(&m.apply(f), &probe);
    let (_, cache) = model.forward(&f);
    let (g, gin) = model.backward(&cache, &probe).unwrap();
    let flat = g.flatten();
    let params = model.params();
    let h = 1e-6;
    for i in 0..params.len() {
        let mut m = model.clone();
        let mut p = params.clone();
        p[i] += h;
        m.set_params(&p).unwrap();
        let lp = loss(&m, &f);
        p[i] -= 2.0 * h;
        m.set_params(&p).unwrap();
        let fd = (lp - loss(&m, &f)) / (2.0 * h);
        assert!(
            rel_err(flat[i], fd) < 1e-5,
            "param {i}: {} vs {fd}",
            flat[i]
        );
    }
    for i in (0..f.data().len()).step_by(37) {
        let mut fp = f.clone();
        fp.data_mut()[i] += h;
        let lp = loss(model, &fp);
        fp.data_mut()[i] -= 2.0 * h;
        let fd = (lp - loss(model, &fp)) / (2.0 * h);
        assert!(rel_err(gin.data()[i], fd) < 1e-5, "input {i}");
    }
}

#[test]
fn full_gradient_matches_fd() {
    let metric = MetricSpec::anisotropic(0.15, 1.1, 0.5).unwrap();
    check_full_gradient(&random_model(21, metric), 30);
}

#[test]
fn gated_gradient_matches_fd() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    check_full_gradient(&random_model(22, metric).with_gate(Some(0.3)), 31);
}

#[test]
fn linear_model_commutes_with_prolongation() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let coarse = Resolution::new(16).unwrap();
    let fine = Resolution::new(32).unwrap();
    let model = random_model(5, metric).linearized();
    let f = random_field(coarse, 12, metric);
    let lhs = prolong(&model.apply(&f), fine).unwrap();
    let rhs = model.apply(&prolong(&f, fine).unwrap());
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-10);
}

#[test]
fn radial_output_bounded_by_gain() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let res = Resolution::new(16).unwrap();
    let model = random_model(6, metric);
    let u = random_field(res, 2, metric).scale(3.0);
    let w = radial_apply(&model.rho, &u);
    let bound = 1.0 + model.rho.gain.abs();
    let p = res.plane();
    for i in 0..p {
        let nu = u.data()[i].hypot(u.data()[p + i]);
        let nw = w.data()[i].hypot(w.data()[p + i]);
        assert!(nw <= bound * nu + 1e-14);
    }
}

#[test]
fn smoothness_gradient_matches_fd() {
    let m = ChebMultiplier::new(vec![0.4, -0.3, 0.25, 0.1, -0.05, 0.08, 0.02], 50.0).unwrap();
    let (_, g) = m.smoothness_penalty();
    let h = 1e-6;
    for j in 0..g.len() {
        let mut p = m.clone();
        p.coeffs_mut()[j] += h;
        let vp = p.smoothness_penalty().0;
        p.coeffs_mut()[j] -= 2.0 * h;
        let fd = (vp - p.smoothness_penalty().0) / (2.0 * h);
        assert!(rel_err(g[j], fd) < 1e-8, "{j}: {} vs {fd}", g[j]);
    }
}

#[test]
fn roughness_matches_dense_fd_slope() {
    let m = ChebMultiplier::new(
        vec![0.3, -0.8, 0.45, 0.2, -0.35, 0.12, 0.3, -0.07, 0.15],
        40.0,
    )
    .unwrap();
    let pts = 200_000;
    let h = 40.0 / pts as f64;
    let mut worst: f64 = 0.0;
    for i in 0..pts {
        let l = i as f64 * h;
        worst = worst.max(((m.eval(l + h) - m.eval(l)) / h).abs());
    }
    assert!(rel_err(m.roughness(), worst) < 1e-2);
}

#[test]
fn hodge_heads_are_gauge_equivariant() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let res = Resolution::new(16).unwrap();
    let model = HodgeGino::new(random_model(7, metric), random_model(8, metric));
    let f = random_field(res, 4, metric);
    let base = model.apply(&f);
    let theta = 0.9;
    let rotated = model
        .with_frame_angle(theta)
        .apply(&rotate_frame(&f, theta));
    for h in 0..2 {
        let rhs = rotate_frame(&base[h], theta);
        assert!(rotated[h].sub(&rhs).unwrap().l2_norm() < 1e-12 * rhs.l2_norm());
    }
}

#[test]
fn hodge_projectors_split_identity() {
    for &(k1, k2) in &[(1, 0), (3, -2), (-5, 7)] {
        let a = head_projector(k1, k2, 0.7, HodgeHead::Exact);
        let b = head_projector(k1, k2, 0.7, HodgeHead::Coexact);
        for i in 0..2 {
            for j in 0..2 {
                let id: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((a[i][j] + b[i][j] - id).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn hodge_gradient_matches_fd() {
    let metric = MetricSpec::euclidean(1.0).unwrap();
    let res = Resolution::new(8).unwrap();
    let model =
        HodgeGino::new(random_model(9, metric), random_model(10, metric)).with_frame_angle(0.3);
    let f = random_field(res, 6, metric);
    let probes = [random_field(res, 60, metric), random_field(res, 61, metric)];
    let loss = |m: &HodgeGino<f64>| {
        let out = m.apply(&f);
        dot(&out[0], &probes[0]) + dot(&out[1], &probes[1])
    };
    let plans = model.plans(res);
    let (_, cache) = model.forward_spectral(&plans, &fft_forward(&f));
    let (flat, _) = model
        .backward_spectral(
            &plans,
            &cache,
            &[fft_forward(&probes[0]), fft_forward(&probes[1])],
        )
        .unwrap();
    let params = model.params();
    let h = 1e-6;
    for i in (0..params.len()).step_by(3) {
        let mut m = model.clone();
        let mut p = params.clone();
        p[i] += h;
        m.set_params(&p).unwrap();
        let lp = loss(&m);
        p[i] -= 2.0 * h;
        m.set_params(&p).unwrap();
        let fd = (lp - loss(&m)) / (2.0 * h);
        assert!(
            rel_err(flat[i], fd) < 1e-5,
            "param {i}: {} vs {fd}",
            flat[i]
        );
    }
}
