use std::f64::consts::PI;

use super::config::ExperimentConfig;
use super::report::{ExperimentReport, SweepSpec};
use crate::cnn::CoordCnnModel;
use crate::error::{Error, Result};
use crate::gino::{GinoConfig, GinoModel, HodgeGino};
use crate::grid::{
    restrict, rotate_frame, GridField, MetricSpec, Resolution, SpectralField, CHANNELS,
};
use crate::oracle::resolvent_apply;
use crate::sampler::{sample_batch_spectral, Forcing, ForcingSpec, SeededRng};
use crate::train::{
    evaluate, heldout_batch, hodge_task, resolvent_task, spectral_metrics, train_operator,
    MetricHistory, Operator, TrainConfig,
};

/// XOR-ed into a run seed to derive model initialization streams.
pub const INIT_SALT: u64 = 0x5DEE_CE66_D1CE_4E5B;
/// XOR-ed into the run seed for the random gauge angles.
pub const E2_SALT: u64 = 0x2545_F491_4F6C_DD1D;
/// XOR-ed into the run seed for the anisotropy axis of the metric sweep.
pub const E3_SALT: u64 = 0xD6E8_FEB8_6659_FD93;
/// XOR-ed into the run seed for the cross-resolution test data.
pub const E4_SALT: u64 = 0xA076_1D64_78BD_642F;

/// Model codes used in the `model` column of reports.
pub const MODEL_GINO: f64 = 0.0;
pub const MODEL_CNN: f64 = 1.0;
pub const MODEL_GINO_LINEAR: f64 = 2.0;

const HISTORY_COLUMNS: [&str; 4] = ["step", "mse", "rel_l2", "rel_energy"];

fn forcing_spec(
    cfg: &ExperimentConfig,
    n: usize,
    metric: MetricSpec<f64>,
) -> Result<ForcingSpec<f64>> {
    ForcingSpec::new(cfg.beta, cfg.lambda_f, Resolution::new(n)?, metric)
}

fn with_steps(t: &TrainConfig, steps: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        steps,
        seed,
        eval_every: t.eval_every.min(steps).max(1),
        ..*t
    }
}

fn train_gino(
    cfg: &ExperimentConfig,
    gino: &GinoConfig,
    train: &TrainConfig,
    n: usize,
) -> Result<(GinoModel<f64>, MetricHistory)> {
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let spec = forcing_spec(cfg, n, metric)?;
    let model = GinoModel::init(gino, metric, &mut SeededRng::new(train.seed ^ INIT_SALT))?;
    train_operator(model, &*resolvent_task(metric), &spec, train)
}

/// The GINO of the base resolvent task, trained with the configured defaults.
pub fn train_base_gino(cfg: &ExperimentConfig) -> Result<(GinoModel<f64>, MetricHistory)> {
    train_gino(cfg, &cfg.gino, &cfg.gino_train(), cfg.n)
}

/// The coordinate CNN baseline of the base resolvent task.
pub fn train_base_cnn(cfg: &ExperimentConfig) -> Result<(CoordCnnModel<f64>, MetricHistory)> {
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let spec = forcing_spec(cfg, cfg.n, metric)?;
    let model = CoordCnnModel::init(&cfg.cnn_plan, &mut SeededRng::new(cfg.seed ^ INIT_SALT))?;
    train_operator(model, &*resolvent_task(metric), &spec, &cfg.cnn_train())
}

fn push_history(report: &mut ExperimentReport, history: &MetricHistory) -> Result<()> {
    for r in &history.records {
        report.push_row(vec![r.step as f64, r.mse, r.rel_l2, r.rel_energy])?;
    }
    if let Some(last) = history.last() {
        report.set("step", last.step as f64);
        report.set("mse", last.mse);
        report.set("rel_l2", last.rel_l2);
        report.set("rel_energy", last.rel_energy);
    }
    Ok(())
}

/// Trains the base GINO and reports its accuracy.
pub fn e1_accuracy(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (model, history) = train_base_gino(cfg)?;
    e1_report(cfg, &model, &history)
}

/// Accuracy report for an already trained base GINO.
pub fn e1_report(
    cfg: &ExperimentConfig,
    model: &GinoModel<f64>,
    history: &MetricHistory,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("e1", cfg, &HISTORY_COLUMNS);
    push_history(&mut report, history)?;
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let spec = forcing_spec(cfg, cfg.n, metric)?;
    let (inputs, _) = heldout_batch(&*resolvent_task(metric), &spec, cfg.seed, 1)?;
    let f = &inputs[0].field;
    let err = model.apply(f).sub(&resolvent_apply(f, &metric))?;
    report.set("max_pointwise_error", err.max_abs());
    Ok(report)
}

fn rel_diff(a: &GridField<f64>, b: &GridField<f64>, reference: f64) -> Result<f64> {
    Ok(a.sub(b)?.l2_norm() / reference)
}

/// `‖F(R f) − R F(f)‖ / ‖F(f)‖` for one input and angle.
pub fn gino_equivariance_error(
    model: &GinoModel<f64>,
    f: &GridField<f64>,
    theta: f64,
) -> Result<f64> {
    let out = model.apply(f);
    let lhs = model.apply(&rotate_frame(f, theta));
    rel_diff(&lhs, &rotate_frame(&out, theta), out.l2_norm())
}

/// Spread of the back-rotated outputs `R⁻¹ F(R f)` across `angles` for one input.
///
/// Returns the normalized standard deviation about their mean and the largest
/// normalized deviation from `F(f)`.
pub fn cnn_gauge_deviation(
    model: &CoordCnnModel<f64>,
    f: &GridField<f64>,
    angles: &[f64],
) -> Result<(f64, f64)> {
    let out = model.apply(f);
    let norm = out.l2_norm();
    let back: Vec<GridField<f64>> = angles
        .iter()
        .map(|&t| rotate_frame(&model.apply(&rotate_frame(f, t)), -t))
        .collect();
    let mut mean = GridField::zeros(f.res());
    for b in &back {
        mean = mean.add(b)?;
    }
    let mean = mean.scale(1.0 / back.len() as f64);
    let mut var = 0.0;
    let mut worst: f64 = 0.0;
    for b in &back {
        var += b.sub(&mean)?.l2_norm().powi(2);
        worst = worst.max(rel_diff(b, &out, norm)?);
    }
    Ok(((var / back.len() as f64).sqrt() / norm, worst))
}

/// Three right angles followed by uniform random angles, `count` in total.
pub fn gauge_angles(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut angles = vec![PI / 2.0, PI, 1.5 * PI];
    let mut stream = SeededRng::new(cfg.seed ^ E2_SALT).next_stream();
    while angles.len() < cfg.e2_angles {
        angles.push(2.0 * PI * stream.uniform());
    }
    angles.truncate(cfg.e2_angles);
    angles
}

fn gauge_inputs(cfg: &ExperimentConfig) -> Result<Vec<Forcing<f64>>> {
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let spec = forcing_spec(cfg, cfg.n, metric)?;
    Ok(heldout_batch(&*resolvent_task(metric), &spec, cfg.seed, cfg.e2_inputs)?.0)
}

/// Gauge equivariance of the GINO and gauge sensitivity of the CNN.
pub fn e2_gauge(
    cfg: &ExperimentConfig,
    gino: &GinoModel<f64>,
    cnn: &CoordCnnModel<f64>,
) -> Result<ExperimentReport> {
    if cfg.e2_angles == 0 || cfg.e2_inputs == 0 {
        return Err(Error::InvalidParameter(
            "e2 needs at least one angle and one input".into(),
        ));
    }
    let angles = gauge_angles(cfg);
    let inputs = gauge_inputs(cfg)?;
    let mut report = ExperimentReport::new("e2", cfg, &["theta", "gino_error", "cnn_deviation"]);
    let cnn_out: Vec<GridField<f64>> = inputs.iter().map(|f| cnn.apply(&f.field)).collect();
    let mut gino_max: f64 = 0.0;
    let mut gino_sum = 0.0;
    let mut cnn_sum = 0.0;
    for &theta in &angles {
        let mut g = 0.0;
        let mut c = 0.0;
        for (f, out) in inputs.iter().zip(&cnn_out) {
            let e = gino_equivariance_error(gino, &f.field, theta)?;
            gino_max = gino_max.max(e);
            g += e;
            let back = rotate_frame(&cnn.apply(&rotate_frame(&f.field, theta)), -theta);
            c += rel_diff(&back, out, out.l2_norm())?;
        }
        let k = inputs.len() as f64;
        report.push_row(vec![theta, g / k, c / k])?;
        gino_sum += g;
        cnn_sum += c;
    }
    let pairs = (angles.len() * inputs.len()) as f64;
    let mut std_sum = 0.0;
    let mut worst: f64 = 0.0;
    for f in &inputs {
        let (s, w) = cnn_gauge_deviation(cnn, &f.field, &angles)?;
        std_sum += s;
        worst = worst.max(w);
    }
    report.set("gino_equivariance_error", gino_sum / pairs);
    report.set("gino_equivariance_max", gino_max);
    report.set("cnn_mean_deviation", cnn_sum / pairs);
    report.set("cnn_normalized_std", std_sum / inputs.len() as f64);
    report.set("cnn_worst_deviation", worst);
    Ok(report)
}

/// Anisotropic metric `R diag(1+δ, 1−δ) Rᵀ` with the seed-fixed axis.
fn sweep_metric(cfg: &ExperimentConfig, delta: f64) -> Result<MetricSpec<f64>> {
    let angle = PI * SeededRng::new(cfg.seed ^ E3_SALT).next_stream().uniform();
    MetricSpec::anisotropic(delta, angle, cfg.alpha)
}

/// Evaluates trained models under perturbed metrics without retraining.
///
/// The GINO is re-bound to each perturbed symbol; the CNN runs unchanged.
pub fn e3_metric_sweep(
    cfg: &ExperimentConfig,
    sweep: &SweepSpec,
    gino: &GinoModel<f64>,
    cnn: Option<&CoordCnnModel<f64>>,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "e3",
        cfg,
        &["delta", "metric_distance", "model", "rel_l2", "rel_energy"],
    );
    let mut gino_rel = Vec::new();
    let mut cnn_rel = Vec::new();
    for &delta in &sweep.values {
        let metric = sweep_metric(cfg, delta)?;
        let spec = forcing_spec(cfg, cfg.n, metric)?;
        let (inputs, targets) = heldout_batch(
            &*resolvent_task(metric),
            &spec,
            cfg.seed,
            cfg.train.eval_batch,
        )?;
        let dist = metric.distance_from_identity();
        let (_, rel_l2, rel_energy) = evaluate(&gino.rebind(metric), &inputs, &targets, &metric)?;
        report.push_row(vec![delta, dist, MODEL_GINO, rel_l2, rel_energy])?;
        gino_rel.push((delta, rel_l2, rel_energy));
        if let Some(cnn) = cnn {
            let (_, rel_l2, rel_energy) = evaluate(cnn, &inputs, &targets, &metric)?;
            report.push_row(vec![delta, dist, MODEL_CNN, rel_l2, rel_energy])?;
            cnn_rel.push((delta, rel_l2));
        }
    }
    let first = gino_rel[0];
    let last = gino_rel[gino_rel.len() - 1];
    report.set("gino_rel_l2_first", first.1);
    report.set("gino_rel_energy_first", first.2);
    report.set("gino_rel_l2_last", last.1);
    report.set(
        "gino_rel_l2_max",
        gino_rel.iter().map(|r| r.1).fold(0.0, f64::max),
    );
    report.set("gino_amplification", last.1 / first.1);
    if !cnn_rel.is_empty() {
        report.set(
            "cnn_rel_l2_max",
            cnn_rel.iter().map(|r| r.1).fold(0.0, f64::max),
        );
        let strong: Vec<f64> = cnn_rel
            .iter()
            .filter(|r| r.0 >= 0.15)
            .map(|r| r.1)
            .collect();
        if !strong.is_empty() {
            report.set(
                "cnn_rel_l2_min_strong",
                strong.iter().copied().fold(f64::INFINITY, f64::min),
            );
        }
    }
    Ok(report)
}

fn mean_commutation<M: Fn(&GridField<f64>) -> GridField<f64>>(
    apply: M,
    fine: &[Forcing<f64>],
    coarse: Resolution,
) -> Result<f64> {
    let mut total = 0.0;
    for f in fine {
        let out = apply(&f.field);
        let a = restrict(&out, coarse)?;
        let b = apply(&restrict(&f.field, coarse)?);
        total += a.sub(&b)?.mean_l2_norm() / out.mean_l2_norm();
    }
    Ok(total / fine.len() as f64)
}

/// Cross-resolution transfer and restriction commutation.
///
/// A GINO is trained at every resolution in the grid; the optional CNN was
/// trained at `cfg.n` and re-runs its kernels at each test resolution.
/// Commutation compares the largest grid against the next smaller one, in the
/// resolution-independent mean-L² norm.
pub fn e4_cross_resolution(
    cfg: &ExperimentConfig,
    cnn: Option<&CoordCnnModel<f64>>,
) -> Result<ExperimentReport> {
    let mut sizes = cfg.e4_resolutions.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter(
            "e4 needs at least two resolutions".into(),
        ));
    }
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let task = resolvent_task(metric);
    let mut data = Vec::new();
    for &n in &sizes {
        let spec = forcing_spec(cfg, n, metric)?;
        let inputs = sample_batch_spectral(
            &spec,
            &mut SeededRng::new(cfg.seed ^ E4_SALT),
            cfg.e4_samples,
        )?;
        let targets: Vec<Vec<SpectralField<f64>>> = inputs.iter().map(&task).collect();
        data.push((n, inputs, targets));
    }
    let fine = &data[data.len() - 1].1;
    let coarse = Resolution::new(sizes[sizes.len() - 2])?;

    let mut report = ExperimentReport::new(
        "e4",
        cfg,
        &[
            "n_train",
            "n_test",
            "model",
            "rel_l2",
            "rel_energy",
            "commutation",
        ],
    );
    let train = with_steps(&cfg.train, cfg.e4_steps, cfg.seed);
    let mut gino_max: (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut linear_commutation = 0.0;
    for &n_train in &sizes {
        let (model, _) = train_gino(cfg, &cfg.gino, &train, n_train)?;
        let comm = mean_commutation(|f| model.apply(f), fine, coarse)?;
        gino_max.2 = gino_max.2.max(comm);
        for (n_test, inputs, targets) in &data {
            let (_, rel_l2, rel_energy) = evaluate(&model, inputs, targets, &metric)?;
            report.push_row(vec![
                n_train as f64,
                *n_test as f64,
                MODEL_GINO,
                rel_l2,
                rel_energy,
                comm,
            ])?;
            gino_max.0 = gino_max.0.max(rel_l2);
            gino_max.1 = gino_max.1.max(rel_energy);
        }
        if n_train == cfg.n {
            let linear = model.linearized();
            linear_commutation = mean_commutation(|f| linear.apply(f), fine, coarse)?;
            for (n_test, inputs, targets) in &data {
                let (_, rel_l2, rel_energy) = evaluate(&linear, inputs, targets, &metric)?;
                report.push_row(vec![
                    n_train as f64,
                    *n_test as f64,
                    MODEL_GINO_LINEAR,
                    rel_l2,
                    rel_energy,
                    linear_commutation,
                ])?;
            }
        }
    }
    report.set("gino_rel_l2_max", gino_max.0);
    report.set("gino_rel_energy_max", gino_max.1);
    report.set("gino_commutation_max", gino_max.2);
    report.set("gino_linear_commutation", linear_commutation);
    if let Some(cnn) = cnn {
        let comm = mean_commutation(|f| cnn.apply(f), fine, coarse)?;
        let mut worst: f64 = 0.0;
        for (n_test, inputs, targets) in &data {
            let (_, rel_l2, rel_energy) = evaluate(cnn, inputs, targets, &metric)?;
            report.push_row(vec![
                cfg.n as f64,
                *n_test as f64,
                MODEL_CNN,
                rel_l2,
                rel_energy,
                comm,
            ])?;
            worst = worst.max(rel_l2);
        }
        report.set("cnn_rel_l2_max", worst);
        report.set("cnn_commutation", comm);
    }
    Ok(report)
}

fn energy(spec: &SpectralField<f64>) -> f64 {
    spec.coeffs().iter().map(|z| z.norm_sqr()).sum()
}

/// Trains the two-headed exact/coexact model and measures accuracy,
/// reconstruction residual and gauge equivariance.
pub fn e5_hodge(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let spec = forcing_spec(cfg, cfg.n, metric)?;
    let mut rng = SeededRng::new(cfg.seed ^ INIT_SALT);
    let model = HodgeGino::new(
        GinoModel::init(&cfg.gino, metric, &mut rng)?,
        GinoModel::init(&cfg.gino, metric, &mut rng)?,
    );
    let task = hodge_task(cfg.e5_alpha_reg);
    let train = with_steps(&cfg.train, cfg.e5_steps, cfg.seed);
    let (model, history) = train_operator(model, &*task, &spec, &train)?;

    let mut report = ExperimentReport::new("e5", cfg, &HISTORY_COLUMNS);
    push_history(&mut report, &history)?;

    let (inputs, targets) = heldout_batch(&*task, &spec, cfg.seed, cfg.train.eval_batch)?;
    let pred = model.predict(&inputs);
    for (h, name) in ["exact", "coexact"].iter().enumerate() {
        let p: Vec<_> = pred.iter().map(|s| vec![s[h].clone()]).collect();
        let t: Vec<_> = targets.iter().map(|s| vec![s[h].clone()]).collect();
        let (_, rel_l2, rel_energy) = spectral_metrics(&p, &t, &metric)?;
        report.set(&format!("rel_l2_{name}"), rel_l2);
        report.set(&format!("rel_energy_{name}"), rel_energy);
    }
    let residual = |heads: &[Vec<SpectralField<f64>>]| -> f64 {
        let mut total = 0.0;
        for (f, h) in inputs.iter().zip(heads) {
            let mut r = f.spectrum.clone();
            let p = r.res().plane();
            let c = r.coeffs_mut();
            for head in h {
                c.iter_mut().zip(head.coeffs()).for_each(|(a, b)| *a -= *b);
            }
            for ch in 0..CHANNELS {
                c[ch * p] = 0.0.into();
            }
            total += (energy(&r) / energy(&f.spectrum)).sqrt();
        }
        total / inputs.len() as f64
    };
    report.set("decomposition_residual", residual(&pred));
    report.set("oracle_residual", residual(&targets));

    let angles = gauge_angles(cfg);
    let gauge_in = gauge_inputs(cfg)?;
    let (mut aware, mut blind) = (0.0, 0.0);
    for f in &gauge_in {
        let out = model.apply(&f.field);
        let norm = (out[0].l2_norm().powi(2) + out[1].l2_norm().powi(2)).sqrt();
        for &theta in &angles {
            let rotated = rotate_frame(&f.field, theta);
            let lhs = model
                .with_frame_angle(model.frame_angle() + theta)
                .apply(&rotated);
            let frozen = model.apply(&rotated);
            let mut e_aware = 0.0;
            let mut e_blind = 0.0;
            for h in 0..2 {
                let rhs = rotate_frame(&out[h], theta);
                e_aware += lhs[h].sub(&rhs)?.l2_norm().powi(2);
                e_blind += frozen[h].sub(&rhs)?.l2_norm().powi(2);
            }
            aware += e_aware.sqrt() / norm;
            blind += e_blind.sqrt() / norm;
        }
    }
    let pairs = (angles.len() * gauge_in.len()) as f64;
    report.set("gauge_error", aware / pairs);
    report.set("frame_blind_gauge_error", blind / pairs);
    Ok(report)
}

/// Expected share of the forcing and target energy above `lambda_max`.
///
/// Returns `(forcing fraction, sqrt of target fraction)`; the second value
/// lower-bounds the relative L² error of any operator that discards those modes.
pub fn truncation_bias(cfg: &ExperimentConfig, lambda_max: f64) -> Result<(f64, f64)> {
    let metric = MetricSpec::euclidean(cfg.alpha)?;
    let spec = forcing_spec(cfg, cfg.n, metric)?;
    let (mut f_cut, mut f_all, mut u_cut, mut u_all) = (0.0, 0.0, 0.0, 0.0);
    for (_, k1, k2) in spec.res.modes() {
        let w = spec.mode_weight(k1, k2);
        let lam = metric.symbol(k1, k2);
        let wu = w / (lam + cfg.alpha).powi(2);
        f_all += w;
        u_all += wu;
        if lam > lambda_max {
            f_cut += w;
            u_cut += wu;
        }
    }
    Ok((f_cut / f_all, (u_cut / u_all).sqrt()))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Trains one GINO per spectral cutoff and seed.
pub fn e6a_lambda_sweep(cfg: &ExperimentConfig, sweep: &SweepSpec) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "e6a",
        cfg,
        &[
            "lambda_max",
            "seed",
            "rel_l2",
            "rel_energy",
            "roughness_first",
            "roughness_second",
            "roughness",
            "truncated_energy",
            "truncation_rel_l2_bound",
        ],
    );
    for &lambda_max in &sweep.values {
        let gino = GinoConfig {
            lambda_max,
            ..cfg.gino
        };
        let (cut, bound) = truncation_bias(cfg, lambda_max)?;
        let (mut rel, mut rough) = (Vec::new(), Vec::new());
        for &offset in &sweep.seeds {
            let seed = cfg.seed.wrapping_add(offset);
            let train = with_steps(&cfg.train, cfg.e6a_steps, seed);
            let (model, history) = train_gino(cfg, &gino, &train, cfg.n)?;
            let last = *history
                .last()
                .ok_or_else(|| Error::ShapeMismatch("empty training history".into()))?;
            report.push_row(vec![
                lambda_max,
                seed as f64,
                last.rel_l2,
                last.rel_energy,
                model.mult1.roughness(),
                model.mult2.roughness(),
                model.roughness(),
                cut,
                bound,
            ])?;
            rel.push(last.rel_l2);
            rough.push(model.roughness());
        }
        report.set(&format!("rel_l2_mean_lambda_{lambda_max}"), mean(&rel));
        report.set(&format!("roughness_mean_lambda_{lambda_max}"), mean(&rough));
    }
    Ok(report)
}

/// Trains with each smoothness weight and measures the metric-sweep amplification.
pub fn e6b_smoothness(
    cfg: &ExperimentConfig,
    weights: &SweepSpec,
    deltas: &SweepSpec,
) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "e6b",
        cfg,
        &[
            "smooth_weight",
            "seed",
            "roughness",
            "rel_l2_first",
            "rel_l2_last",
            "amplification",
        ],
    );
    for &w in &weights.values {
        let (mut amp, mut rough) = (Vec::new(), Vec::new());
        for &offset in &weights.seeds {
            let seed = cfg.seed.wrapping_add(offset);
            let train = TrainConfig {
                smooth_weight: w,
                ..with_steps(&cfg.train, cfg.e6b_steps, seed)
            };
            let (model, _) = train_gino(cfg, &cfg.gino, &train, cfg.n)?;
            let sub = ExperimentConfig {
                seed,
                ..cfg.clone()
            };
            let sweep = e3_metric_sweep(&sub, deltas, &model, None)?;
            let first = sweep.get("gino_rel_l2_first").unwrap_or(f64::NAN);
            let last = sweep.get("gino_rel_l2_last").unwrap_or(f64::NAN);
            let a = last / first;
            report.push_row(vec![w, seed as f64, model.roughness(), first, last, a])?;
            amp.push(a);
            rough.push(model.roughness());
        }
        report.set(&format!("amplification_mean_sw_{w}"), mean(&amp));
        report.set(
            &format!("amplification_max_sw_{w}"),
            amp.iter().copied().fold(0.0, f64::max),
        );
        report.set(&format!("roughness_mean_sw_{w}"), mean(&rough));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.n = 16;
        cfg.lambda_f = 20.0;
        cfg.gino.lambda_max = 20.0;
        cfg.gino.degree = 6;
        cfg.train.steps = 4;
        cfg.train.batch = 2;
        cfg.train.eval_every = 2;
        cfg.train.eval_batch = 4;
        cfg.cnn_plan = vec![4, 3, 2];
        cfg.cnn_train.steps = 2;
        cfg.cnn_train.batch = 2;
        cfg.cnn_train.eval_every = 1;
        cfg.cnn_train.eval_batch = 2;
        cfg.e2_angles = 5;
        cfg.e2_inputs = 2;
        cfg
    }

    #[test]
    fn identity_rotation_contributes_nothing() {
        let cfg = small();
        let (gino, _) = train_base_gino(&cfg).unwrap();
        let (cnn, _) = train_base_cnn(&cfg).unwrap();
        let f = &gauge_inputs(&cfg).unwrap()[0].field;
        assert_eq!(gino_equivariance_error(&gino, f, 0.0).unwrap(), 0.0);
        assert_eq!(cnn_gauge_deviation(&cnn, f, &[0.0]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn gauge_angles_start_with_right_angles() {
        let a = gauge_angles(&ExperimentConfig::default());
        assert_eq!(a.len(), 32);
        assert_eq!(&a[..3], &[PI / 2.0, PI, 1.5 * PI]);
        assert!(a[3..].iter().all(|t| (0.0..2.0 * PI).contains(t)));
    }

    #[test]
    fn sweep_metric_distance_is_sqrt2_delta() {
        let cfg = ExperimentConfig::default();
        for d in [0.0, 0.05, 0.3] {
            let m = sweep_metric(&cfg, d).unwrap();
            assert!((m.distance_from_identity() - 2f64.sqrt() * d).abs() < 1e-14);
        }
        assert_eq!(
            sweep_metric(&cfg, 0.0).unwrap().m(),
            [[1.0, 0.0], [0.0, 1.0]]
        );
    }

    #[test]
    fn e3_first_point_matches_training_heldout() {
        let cfg = small();
        let (gino, history) = train_base_gino(&cfg).unwrap();
        let sweep = SweepSpec::new("delta", vec![0.0, 0.2], vec![0]).unwrap();
        let report = e3_metric_sweep(&cfg, &sweep, &gino, None).unwrap();
        let last = history.last().unwrap();
        assert_eq!(report.get("gino_rel_l2_first"), Some(last.rel_l2));
        assert_eq!(report.get("gino_rel_energy_first"), Some(last.rel_energy));
    }

    #[test]
    fn truncation_bias_matches_direct_sum() {
        let cfg = ExperimentConfig::default();
        assert_eq!(truncation_bias(&cfg, cfg.lambda_f).unwrap(), (0.0, 0.0));
        let (cut, bound) = truncation_bias(&cfg, 25.0).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        let h = (cfg.n / 2) as i64;
        for k1 in -h + 1..h {
            for k2 in -h + 1..h {
                let lam = (k1 * k1 + k2 * k2) as f64;
                if lam <= cfg.lambda_f {
                    let w = (1.0 + lam).powf(-cfg.beta);
                    den += w;
                    if lam > 25.0 {
                        num += w;
                    }
                }
            }
        }
        assert!((cut - num / den).abs() < 1e-14);
        assert!(bound > 0.0 && bound < cut.sqrt());
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = small();
        let a = e1_accuracy(&cfg).unwrap();
        let b = e1_accuracy(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.validate().is_ok());
        assert_eq!(a.get("rel_l2"), a.column("rel_l2").unwrap().last().copied());
    }

    #[test]
    fn small_suite_runs() {
        let mut cfg = small();
        cfg.e4_resolutions = vec![8, 16];
        cfg.e4_steps = 2;
        cfg.e4_samples = 2;
        cfg.e5_steps = 2;
        cfg.e6a_steps = 2;
        cfg.e6b_steps = 2;
        cfg.lambda_f = 10.0;
        let (gino, _) = train_base_gino(&cfg).unwrap();
        let (cnn, _) = train_base_cnn(&cfg).unwrap();
        let e2 = e2_gauge(&cfg, &gino, &cnn).unwrap();
        assert_eq!(e2.rows.len(), 5);
        assert!(e2.get("gino_equivariance_error").unwrap() < 1e-12);
        let e4 = e4_cross_resolution(&cfg, Some(&cnn)).unwrap();
        assert!(e4.get("gino_linear_commutation").unwrap() < 1e-12);
        assert_eq!(e4.rows.len(), 2 * 2 + 2 + 2);
        let e5 = e5_hodge(&cfg).unwrap();
        assert!(e5.get("gauge_error").unwrap() < 1e-12);
        let lam = SweepSpec::new("lambda_max", vec![5.0, 20.0], vec![0]).unwrap();
        assert_eq!(e6a_lambda_sweep(&cfg, &lam).unwrap().rows.len(), 2);
        let w = SweepSpec::new("smooth_weight", vec![0.0, 1e-2], vec![0, 1]).unwrap();
        let d = SweepSpec::new("delta", vec![0.0, 0.3], vec![0]).unwrap();
        let e6b = e6b_smoothness(&cfg, &w, &d).unwrap();
        assert_eq!(e6b.rows.len(), 4);
    }
}
