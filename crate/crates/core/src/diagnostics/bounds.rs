//! Sample-wise checks of the truncation, multiplier and combined error bounds.

use num_complex::Complex;

use super::config::ExperimentConfig;
use super::experiments::train_base_gino;
use super::report::ExperimentReport;
use crate::error::{Error, Result};
use crate::gino::chebyshev::{clenshaw, derivative_coeffs};
use crate::gino::{ChebMultiplier, GinoModel, RadialParams};
use crate::grid::spectral_sobolev_norm;
use crate::grid::{MetricSpec, Resolution, SobolevIndex, SpectralField};
use crate::sampler::{sample_batch_spectral, ForcingSpec, SeededRng};
use crate::train::TrainConfig;

/// Points of the λ-grid on which the multiplier error is maximized.
pub const EPS_GRID: usize = 4096;

/// Uniform error of a composed multiplier against `1/(λ+α)` on `[0, Λ_model]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierError {
    /// Largest error over the grid.
    pub grid_max: f64,
    /// Bound on the error between grid points.
    pub margin: f64,
    /// Lipschitz bound of the composed multiplier.
    pub lipschitz: f64,
}

impl MultiplierError {
    pub fn bound(&self) -> f64 {
        self.grid_max + self.margin
    }
}

/// Grid maximum of `|m(λ) − 1/(λ+α)|` over `[0, top]` plus a Lipschitz margin.
///
/// The composed multiplier is a polynomial of degree `J₁ + J₂`, so its
/// re-expansion on `[0, top]` is exact. With `|T_j| ≤ 1` there, the
/// coefficient sum of the derivative series bounds the slope.
pub fn multiplier_error(model: &GinoModel<f64>, alpha: f64, top: f64) -> MultiplierError {
    let h = top / (EPS_GRID - 1) as f64;
    let grid_max = (0..EPS_GRID)
        .map(|i| {
            let lam = (i as f64 * h).min(top);
            (model.composed_multiplier(lam) - 1.0 / (lam + alpha)).abs()
        })
        .fold(0.0, f64::max);
    let degree = model.mult1.degree() + model.mult2.degree();
    let lipschitz = ChebMultiplier::interpolate(|l| model.composed_multiplier(l), degree, top)
        .map(|p| {
            derivative_coeffs(p.coeffs())
                .iter()
                .map(|c| c.abs())
                .sum::<f64>()
                * 2.0
                / top
        })
        .unwrap_or(f64::INFINITY);
    MultiplierError {
        grid_max,
        margin: (lipschitz + 1.0 / (alpha * alpha)) * h / 2.0,
        lipschitz,
    }
}

/// Model under test, the cutoff the bounds are stated for, and the range
/// over which its multiplier error is measured.
#[derive(Debug, Clone)]
pub struct BoundsSetup {
    pub model: GinoModel<f64>,
    pub lambda_max: f64,
    pub eps_range: f64,
}

impl BoundsSetup {
    /// A trained base-task model checked at its own cutoff.
    pub fn trained(cfg: &ExperimentConfig) -> Result<Self> {
        let sub = ExperimentConfig {
            train: TrainConfig {
                steps: cfg.bounds_steps,
                eval_every: cfg.train.eval_every.min(cfg.bounds_steps).max(1),
                ..cfg.train
            },
            ..cfg.clone()
        };
        let (model, _) = train_base_gino(&sub)?;
        let lambda_max = model.lambda_max();
        Ok(Self {
            model,
            lambda_max,
            eps_range: lambda_max,
        })
    }

    /// Self-test with broken cutoff bookkeeping: a fit made on `[0, Λ/2]` is
    /// extrapolated over the whole band, while its error is still measured on
    /// `[0, Λ/2]` only. The multiplier bound must fail.
    pub fn faulty(cfg: &ExperimentConfig) -> Result<Self> {
        let lambda_max = cfg.gino.lambda_max;
        let half = lambda_max / 2.0;
        let alpha = cfg.alpha;
        let degree = cfg.gino.degree;
        let fit = ChebMultiplier::interpolate(|l| 1.0 / (l + alpha), degree, half)?;
        let extrapolated = ChebMultiplier::interpolate(
            |l| clenshaw(fit.coeffs(), fit.to_unit(l)),
            degree,
            lambda_max,
        )?;
        let one = ChebMultiplier::constant(1.0, degree, lambda_max)?;
        let model = GinoModel::new(
            extrapolated,
            RadialParams::identity(cfg.gino.hidden),
            one,
            MetricSpec::euclidean(alpha)?,
        )?;
        Ok(Self {
            model,
            lambda_max,
            eps_range: half,
        })
    }
}

/// Runs the bound checks on the configured model (trained, or the faulty self-test).
pub fn bound_checks(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let setup = if cfg.bounds_fault {
        BoundsSetup::faulty(cfg)?
    } else {
        BoundsSetup::trained(cfg)?
    };
    bound_checks_with(cfg, &setup)
}

fn masked(
    spec: &SpectralField<f64>,
    keep: impl Fn(f64) -> bool,
    metric: &MetricSpec<f64>,
) -> SpectralField<f64> {
    spec.multiply(|k1, k2| {
        if keep(metric.symbol(k1, k2)) {
            1.0
        } else {
            0.0
        }
    })
}

/// Checks, per sample, with `C = max(1, 1/α)` and `ε` from [`multiplier_error`]:
///
/// - truncation: `‖S(f − Π f)‖_{s+1} ≤ C (1+Λ)^{−γ/2} ‖f‖_{s−1+γ}`
/// - multiplier: `‖(M − S) Π f‖_{s+1} ≤ (1+Λ) ε ‖f‖_{s−1}`
/// - combined: `‖M f − S f‖_{s+1}` is below the sum of both right-hand sides
///
/// where `S` is the resolvent, `Π` keeps `λ ≤ Λ` and `M` is the gain-zero model.
/// Violations are reported as [`Error::BoundViolation`] after all samples ran.
pub fn bound_checks_with(cfg: &ExperimentConfig, setup: &BoundsSetup) -> Result<ExperimentReport> {
    let alpha = cfg.alpha;
    let metric = MetricSpec::euclidean(alpha)?;
    let res = Resolution::new(cfg.n)?;
    let spec = ForcingSpec::new(cfg.bounds_beta, f64::MAX, res, metric)?;
    let inputs = sample_batch_spectral(&spec, &mut SeededRng::new(cfg.seed), cfg.bounds_samples)?;

    let lam = setup.lambda_max;
    let s = cfg.bounds_s;
    let gamma = cfg.bounds_gamma;
    let c_alpha = 1f64.max(1.0 / alpha);
    let model = setup.model.linearized().rebind(metric);
    let plan = model.plan(res);
    let eps = multiplier_error(&model, alpha, setup.eps_range);
    let resolvent =
        |f: &SpectralField<f64>| f.multiply(|k1, k2| 1.0 / (metric.symbol(k1, k2) + alpha));
    let norm = |f: &SpectralField<f64>, r: f64| spectral_sobolev_norm(f, SobolevIndex(r), &metric);
    let diff = |a: &SpectralField<f64>, b: &SpectralField<f64>| {
        let coeffs: Vec<Complex<f64>> = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| x - y)
            .collect();
        SpectralField::from_vec(a.res(), coeffs).expect("same resolution")
    };

    let mut report = ExperimentReport::new(
        "bounds",
        cfg,
        &[
            "sample",
            "truncation_lhs",
            "truncation_rhs",
            "multiplier_lhs",
            "multiplier_rhs",
            "combined_lhs",
            "combined_rhs",
        ],
    );
    let mut violation = None;
    let mut worst = [0.0f64; 3];
    for (i, f) in inputs.iter().enumerate() {
        let f_hat = &f.spectrum;
        let tail = masked(f_hat, |l| l > lam, &metric);
        let head = masked(f_hat, |l| l <= lam, &metric);
        let lhs_a = norm(&resolvent(&tail), s + 1.0);
        let rhs_a = c_alpha * (1.0 + lam).powf(-gamma / 2.0) * norm(f_hat, s - 1.0 + gamma);
        let predicted_head = model.apply_spectral(&plan, &head);
        let lhs_b = norm(&diff(&predicted_head, &resolvent(&head)), s + 1.0);
        let rhs_b = (1.0 + lam) * eps.bound() * norm(f_hat, s - 1.0);
        let predicted = model.apply_spectral(&plan, f_hat);
        let lhs_c = norm(&diff(&predicted, &resolvent(f_hat)), s + 1.0);
        let rhs_c = rhs_a + rhs_b;
        report.push_row(vec![i as f64, lhs_a, rhs_a, lhs_b, rhs_b, lhs_c, rhs_c])?;
        for (slot, (name, l, r)) in [
            ("truncation_bias", lhs_a, rhs_a),
            ("multiplier_error", lhs_b, rhs_b),
            ("operator_approximation", lhs_c, rhs_c),
        ]
        .into_iter()
        .enumerate()
        {
            worst[slot] = worst[slot].max(l / r);
            if !(l <= r) && violation.is_none() {
                violation = Some(Error::BoundViolation {
                    lemma: name.to_string(),
                    sample: i,
                    lhs: l,
                    rhs: r,
                });
            }
        }
    }
    report.set("lambda_max", lam);
    report.set("eps_grid", eps.grid_max);
    report.set("eps_margin", eps.margin);
    report.set("truncation_max_ratio", worst[0]);
    report.set("multiplier_max_ratio", worst[1]);
    report.set("combined_max_ratio", worst[2]);
    match violation {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.n = 16;
        cfg.bounds_samples = 8;
        cfg.gino.lambda_max = 10.0;
        cfg
    }

    fn fitted(cfg: &ExperimentConfig, degree: usize) -> BoundsSetup {
        let alpha = cfg.alpha;
        let lam = cfg.gino.lambda_max;
        let fit = ChebMultiplier::interpolate(|l| 1.0 / (l + alpha), degree, lam).unwrap();
        let one = ChebMultiplier::constant(1.0, degree, lam).unwrap();
        let model = GinoModel::new(
            fit,
            RadialParams::identity(4),
            one,
            MetricSpec::euclidean(alpha).unwrap(),
        )
        .unwrap();
        BoundsSetup {
            model,
            lambda_max: lam,
            eps_range: lam,
        }
    }

    #[test]
    fn near_exact_fit_has_tiny_multiplier_error() {
        let cfg = small();
        let report = bound_checks_with(&cfg, &fitted(&cfg, 32)).unwrap();
        assert!(report.get("eps_grid").unwrap() < 1e-8);
        let metric = MetricSpec::euclidean(cfg.alpha).unwrap();
        let spec = ForcingSpec::new(
            cfg.bounds_beta,
            f64::MAX,
            Resolution::new(cfg.n).unwrap(),
            metric,
        )
        .unwrap();
        let inputs =
            sample_batch_spectral(&spec, &mut SeededRng::new(cfg.seed), cfg.bounds_samples)
                .unwrap();
        let lhs = report.column("multiplier_lhs").unwrap();
        for (l, f) in lhs.iter().zip(&inputs) {
            let scale =
                spectral_sobolev_norm(&f.spectrum, SobolevIndex(cfg.bounds_s - 1.0), &metric);
            assert!(*l <= 1e-8 * scale, "{l} vs {scale}");
        }
    }

    #[test]
    fn in_band_input_has_zero_truncation_term() {
        let mut cfg = small();
        cfg.gino.lambda_max = 1e6;
        let report = bound_checks_with(&cfg, &fitted(&cfg, 4)).unwrap_or_else(|e| panic!("{e}"));
        assert!(report
            .column("truncation_lhs")
            .unwrap()
            .iter()
            .all(|&l| l == 0.0));
    }

    #[test]
    fn coarse_fit_still_satisfies_bounds() {
        let cfg = small();
        let report = bound_checks_with(&cfg, &fitted(&cfg, 3)).unwrap();
        assert!(report.get("eps_grid").unwrap() > 1e-3);
        assert!(report.get("multiplier_max_ratio").unwrap() <= 1.0);
    }

    #[test]
    fn faulty_bookkeeping_is_caught() {
        let cfg = small();
        match bound_checks_with(&cfg, &BoundsSetup::faulty(&cfg).unwrap()) {
            Err(Error::BoundViolation {
                lemma, lhs, rhs, ..
            }) => {
                assert_eq!(lemma, "multiplier_error");
                assert!(lhs > rhs);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn margin_covers_off_grid_points() {
        let cfg = small();
        let setup = fitted(&cfg, 5);
        let eps = multiplier_error(&setup.model, cfg.alpha, setup.eps_range);
        let fine = (0..200_000)
            .map(|i| {
                let l = cfg.gino.lambda_max * i as f64 / 199_999.0;
                (setup.model.composed_multiplier(l) - 1.0 / (l + cfg.alpha)).abs()
            })
            .fold(0.0, f64::max);
        assert!(fine <= eps.bound());
        assert!(eps.grid_max <= fine + 1e-15);
    }
}
