//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in
//! order and can share the trained base models. Exits non-zero when any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use gino_core::cnn::{cnn_backward, cnn_forward, CoordCnnModel};
use gino_core::diagnostics::*;
use gino_core::gino::{GinoConfig, GinoModel, RadialParams};
use gino_core::grid::{
    fft_forward, fft_inverse, prolong, restrict, GridField, MetricSpec, Resolution,
};
use gino_core::sampler::{sample_forcing, ForcingSpec, SeededRng};
use gino_core::train::MetricHistory;

type Outcome = Result<(bool, String), String>;

struct Shared {
    cfg: ExperimentConfig,
    gino: Option<(GinoModel<f64>, MetricHistory)>,
    cnn: Option<CoordCnnModel<f64>>,
    cnn_time: Duration,
}

impl Shared {
    fn gino(&mut self) -> Result<&GinoModel<f64>, String> {
        if self.gino.is_none() {
            self.gino = Some(train_base_gino(&self.cfg).map_err(|e| e.to_string())?);
        }
        Ok(&self.gino.as_ref().unwrap().0)
    }

    fn cnn(&mut self) -> Result<&CoordCnnModel<f64>, String> {
        if self.cnn.is_none() {
            let t = Instant::now();
            self.cnn = Some(train_base_cnn(&self.cfg).map_err(|e| e.to_string())?.0);
            self.cnn_time = t.elapsed();
        }
        Ok(self.cnn.as_ref().unwrap())
    }
}

fn summary(r: &ExperimentReport, key: &str) -> Result<f64, String> {
    r.get(key)
        .ok_or_else(|| format!("summary key {key} missing"))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1_accuracy(s: &mut Shared) -> Outcome {
    s.gino()?;
    let (model, history) = s.gino.as_ref().unwrap();
    let report = e1_report(&s.cfg, model, history).map_err(err)?;
    let rel = summary(&report, "rel_l2")?;
    let energy = summary(&report, "rel_energy")?;
    Ok((
        rel <= 5e-3 && energy <= 5e-3,
        format!("rel_l2={rel:.3e} rel_energy={energy:.3e}"),
    ))
}

fn c2_equivariance(s: &mut Shared) -> Outcome {
    s.gino()?;
    s.cnn()?;
    let report =
        e2_gauge(&s.cfg, &s.gino.as_ref().unwrap().0, s.cnn.as_ref().unwrap()).map_err(err)?;
    let gino = summary(&report, "gino_equivariance_max")?;
    let cnn = summary(&report, "cnn_normalized_std")?;
    let pairs = report.rows.len() * s.cfg.e2_inputs;
    Ok((
        gino <= 1e-10 && cnn >= 0.1,
        format!(
            "pairs={pairs} gino_max={gino:.3e} cnn_normalized_std={cnn:.3} (cnn training {:.0}s)",
            s.cnn_time.as_secs_f64()
        ),
    ))
}

fn c3_stability(s: &mut Shared) -> Outcome {
    s.gino()?;
    s.cnn()?;
    let sweep = SweepSpec::new("delta", s.cfg.e3_deltas.clone(), vec![s.cfg.seed]).map_err(err)?;
    let report = e3_metric_sweep(&s.cfg, &sweep, &s.gino.as_ref().unwrap().0, s.cnn.as_ref())
        .map_err(err)?;
    let gino = summary(&report, "gino_rel_l2_max")?;
    let cnn = summary(&report, "cnn_rel_l2_min_strong")?;
    Ok((
        gino <= 2e-2 && cnn >= 0.1,
        format!("gino_rel_l2_max={gino:.3e} cnn_rel_l2_min(delta>=0.15)={cnn:.3}"),
    ))
}

fn c4_consistency(s: &mut Shared) -> Outcome {
    s.cnn()?;
    let report = e4_cross_resolution(&s.cfg, s.cnn.as_ref()).map_err(err)?;
    let rel = summary(&report, "gino_rel_l2_max")?;
    let comm = summary(&report, "gino_commutation_max")?;
    let linear = summary(&report, "gino_linear_commutation")?;
    Ok((
        rel <= 2e-2 && comm <= 2e-2 && linear <= 1e-10,
        format!("gino_rel_l2_max={rel:.3e} commutation={comm:.3e} linear_commutation={linear:.3e}"),
    ))
}

fn c5_hodge(s: &mut Shared) -> Outcome {
    let report = e5_hodge(&s.cfg).map_err(err)?;
    let exact = summary(&report, "rel_l2_exact")?;
    let coexact = summary(&report, "rel_l2_coexact")?;
    let residual = summary(&report, "decomposition_residual")?;
    let gauge = summary(&report, "gauge_error")?;
    Ok((
        exact <= 7e-2 && coexact <= 7e-2 && residual <= 5e-2 && gauge <= 1e-10,
        format!("rel_l2 exact={exact:.3e} coexact={coexact:.3e} residual={residual:.3e} gauge={gauge:.3e}"),
    ))
}

fn c6_truncation(s: &mut Shared) -> Outcome {
    let lambdas = s.cfg.e6a_lambdas.clone();
    let sweep =
        SweepSpec::new("lambda_max", lambdas.clone(), s.cfg.e6a_seeds.clone()).map_err(err)?;
    let report = e6a_lambda_sweep(&s.cfg, &sweep).map_err(err)?;
    let rel = |l: f64| summary(&report, &format!("rel_l2_mean_lambda_{l}"));
    let rough: Vec<f64> = lambdas
        .iter()
        .map(|&l| summary(&report, &format!("roughness_mean_lambda_{l}")))
        .collect::<Result<_, _>>()?;
    let (r25, r100) = (rel(25.0)?, rel(100.0)?);
    let pairs = rough.windows(2).filter(|w| w[1] >= w[0]).count();
    let rough_txt: Vec<String> = rough.iter().map(|r| format!("{r:.2}")).collect();
    Ok((
        r100 < r25 && pairs >= 4,
        format!(
            "rel_l2 lambda25={r25:.3e} lambda100={r100:.3e} roughness=[{}] non-decreasing pairs={pairs}/{}",
            rough_txt.join(","),
            rough.len() - 1
        ),
    ))
}

fn c7_smoothness(s: &mut Shared) -> Outcome {
    let weights = SweepSpec::new(
        "smooth_weight",
        s.cfg.e6b_weights.clone(),
        s.cfg.e6b_seeds.clone(),
    )
    .map_err(err)?;
    let deltas = SweepSpec::new("delta", s.cfg.e3_deltas.clone(), vec![s.cfg.seed]).map_err(err)?;
    let report = e6b_smoothness(&s.cfg, &weights, &deltas).map_err(err)?;
    let free = summary(&report, "amplification_mean_sw_0")?;
    let smooth = summary(&report, "amplification_mean_sw_0.01")?;
    Ok((
        free >= 1.5 && free > smooth,
        format!("amplification sw=0: {free:.3} sw=1e-2: {smooth:.3}"),
    ))
}

fn c8_bounds(s: &mut Shared) -> Outcome {
    match bound_checks(&s.cfg) {
        Ok(report) => Ok((
            report.rows.len() == s.cfg.bounds_samples,
            format!(
                "samples={} max ratios truncation={:.3e} multiplier={:.3e} combined={:.3e}",
                report.rows.len(),
                summary(&report, "truncation_max_ratio")?,
                summary(&report, "multiplier_max_ratio")?,
                summary(&report, "combined_max_ratio")?,
            ),
        )),
        Err(e) => Ok((false, e.to_string())),
    }
}

fn forcing(n: usize, cut: f64, seed: u64, metric: MetricSpec<f64>) -> GridField<f64> {
    let spec = ForcingSpec::new(1.0, cut, Resolution::new(n).unwrap(), metric).unwrap();
    sample_forcing(&spec, &mut SeededRng::new(seed)).unwrap()
}

fn white(n: usize, seed: u64) -> GridField<f64> {
    let res = Resolution::new(n).unwrap();
    let mut s = SeededRng::new(seed).next_stream();
    GridField::from_vec(res, (0..res.len()).map(|_| s.normal()).collect()).unwrap()
}

fn dot(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Worst relative gap between analytic and central-difference derivatives on
/// `count` random coordinates.
fn fd_worst(
    params: &[f64],
    grad: &[f64],
    count: usize,
    seed: u64,
    loss: impl Fn(&[f64]) -> f64,
) -> f64 {
    let h = 1e-6;
    let mut rng = SeededRng::new(seed).next_stream();
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let i = (rng.uniform() * params.len() as f64) as usize;
        let mut p = params.to_vec();
        p[i] += h;
        let lp = loss(&p);
        p[i] -= 2.0 * h;
        let fd = (lp - loss(&p)) / (2.0 * h);
        worst = worst.max(rel_err(grad[i], fd));
    }
    worst
}

fn c9_numerics(_: &mut Shared) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, value: f64, tol: f64| {
        ok &= value <= tol;
        notes.push(format!("{name}={value:.2e}"));
    };

    let f = white(32, 1);
    let back = fft_inverse(&fft_forward(&f)).map_err(err)?;
    check(
        "fft_roundtrip",
        back.sub(&f).map_err(err)?.max_abs() / f.max_abs(),
        1e-12,
    );

    let energy = fft_forward(&f).energy();
    let mean_sq = f.mean_l2_norm().powi(2);
    check("parseval", (energy - mean_sq).abs() / mean_sq, 1e-12);

    let euclid = MetricSpec::euclidean(1.0).map_err(err)?;
    let coarse = forcing(32, 150.0, 2, euclid);
    let fine = Resolution::new(64).map_err(err)?;
    let round = restrict(&prolong(&coarse, fine).map_err(err)?, coarse.res()).map_err(err)?;
    check(
        "restrict_prolong",
        round.sub(&coarse).map_err(err)?.max_abs() / coarse.max_abs(),
        1e-12,
    );

    let metric = MetricSpec::anisotropic(0.15, 1.1, 0.5).map_err(err)?;
    let gcfg = GinoConfig {
        degree: 10,
        lambda_max: 60.0,
        hidden: 6,
        ..GinoConfig::default()
    };
    let mut model = GinoModel::init(&gcfg, metric, &mut SeededRng::new(3)).map_err(err)?;
    model.rho.gain = 0.7;
    model.rho.b2 = 0.2;
    let x = forcing(16, 60.0, 4, metric);
    let probe = forcing(16, 60.0, 5, metric);
    let (_, cache) = model.forward(&x);
    let (grads, _) = model.backward(&cache, &probe).map_err(err)?;
    let params = model.params();
    let gino_worst = fd_worst(&params, &grads.flatten(), 24, 6, |p| {
        let mut m = model.clone();
        m.set_params(p).unwrap();
        dot(&m.apply(&x), &probe)
    });
    check("gino_grad", gino_worst, 1e-5);

    let cnn = CoordCnnModel::<f64>::init(&[4, 8, 8, 2], &mut SeededRng::new(7)).map_err(err)?;
    let x = white(8, 8);
    let probe = white(8, 9);
    let (_, cache) = cnn_forward(&cnn, &x);
    let (grads, _) = cnn_backward(&cnn, &cache, &probe).map_err(err)?;
    let cnn_worst = fd_worst(&cnn.params(), &grads.params(), 24, 10, |p| {
        let mut m = cnn.clone();
        m.set_params(p).unwrap();
        dot(&m.apply(&x), &probe)
    });
    check("cnn_grad", cnn_worst, 1e-5);

    let radial = RadialParams::new(
        vec![0.9, -1.3, 0.4, 2.0],
        vec![0.1, -0.2, 0.3, 0.0],
        vec![0.5, 0.7, -0.6, 0.2],
        0.1,
        0.8,
    )
    .map_err(err)?;
    let v = white(16, 11);
    let mut worst: f64 = 0.0;
    for theta in [0.3, 1.0, 2.5, -0.7] {
        let a = radial.apply(&v.rotate_frame(theta));
        let b = radial.apply(&v).rotate_frame(theta);
        worst = worst.max(a.sub(&b).map_err(err)?.max_abs() / b.max_abs());
    }
    check("radial_rotation", worst, 1e-14);

    Ok((ok, notes.join(" ")))
}

fn run_twice(args: &[&str], files: &[&str]) -> Result<bool, String> {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(err)?;
        let out = dir.path().to_str().ok_or("non-utf8 temp path")?.to_string();
        let mut argv = vec!["gino".to_string()];
        argv.extend(args.iter().map(|a| a.to_string()));
        argv.extend(["--out".to_string(), out]);
        let code = gino_cli::run(argv);
        if code != 0 {
            return Err(format!("{} exited {code}", args[0]));
        }
        let read = |p: &str| std::fs::read(Path::new(dir.path()).join(p)).map_err(err);
        outputs.push(
            files
                .iter()
                .map(|f| read(f))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(outputs[0] == outputs[1])
}

fn c10_determinism(_: &mut Shared) -> Outcome {
    let runs: [(&[&str], &[&str]); 5] = [
        (
            &[
                "e1",
                "--seed",
                "5",
                "--set",
                "train.steps=150",
                "--set",
                "train.eval_every=50",
            ],
            &["metrics.csv"],
        ),
        (
            &[
                "e3",
                "--seed",
                "5",
                "--set",
                "train.steps=60",
                "--set",
                "train.eval_every=60",
                "--set",
                "cnn.steps=10",
                "--set",
                "cnn.eval_every=10",
                "--deltas",
                "0,0.15,0.3",
            ],
            &["metrics.csv"],
        ),
        (
            &["e5", "--seed", "5", "--set", "e5.steps=80"],
            &["metrics.csv"],
        ),
        (
            &[
                "bounds",
                "--seed",
                "5",
                "--set",
                "bounds.steps=40",
                "--set",
                "bounds.samples=8",
            ],
            &["metrics.csv"],
        ),
        (
            &["gen-data", "--seed", "5", "--count", "2"],
            &[
                "metrics.csv",
                "data/forcing_0001.gfld",
                "data/solution_0001.gfld",
            ],
        ),
    ];
    let mut same = Vec::new();
    for (args, files) in runs {
        if !run_twice(args, files)? {
            same.push(args[0]);
        }
    }
    if same.is_empty() {
        Ok((true, "e1 e3 e5 bounds gen-data byte-identical".into()))
    } else {
        Ok((false, format!("outputs differ for {}", same.join(" "))))
    }
}

type Criterion = (&'static str, fn(&mut Shared) -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1 e1 accuracy", c1_accuracy),
        ("C2 e2 gauge equivariance", c2_equivariance),
        ("C3 e3 metric stability", c3_stability),
        ("C4 e4 cross-resolution consistency", c4_consistency),
        ("C5 e5 hodge decomposition", c5_hodge),
        ("C6 e6a spectral truncation", c6_truncation),
        ("C7 e6b smoothness regularization", c7_smoothness),
        ("C8 bound suite", c8_bounds),
        ("C9 numerics", c9_numerics),
        ("C10 determinism", c10_determinism),
    ];
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| a.starts_with('C') || a.starts_with('c'))
        .map(|a| a.to_uppercase())
        .collect();
    let mut shared = Shared {
        cfg: ExperimentConfig::default(),
        gino: None,
        cnn: None,
        cnn_time: Duration::ZERO,
    };
    let mut failures = 0;
    for (name, criterion) in criteria {
        let id = name.split(' ').next().unwrap();
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| criterion(&mut shared)))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "{} {name}: {detail} [{secs:.1}s]",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
