//! AdamW training against oracle targets with periodic held-out evaluation.

use serde::{Deserialize, Serialize};

use crate::cnn::{cnn_backward, cnn_forward, CoordCnnModel};
use crate::error::{Error, Result};
use crate::gino::{GinoModel, HodgeGino};
use crate::grid::{fft_forward, fft_inverse_hermitian, MetricSpec, SpectralField, CHANNELS};
use crate::oracle::{hodge_spectra, resolvent_spectrum};
use crate::sampler::{sample_batch_spectral, Forcing, ForcingSpec, SeededRng};
use crate::scalar::Real;

/// XOR-ed into the training seed to derive the held-out stream.
pub const HELDOUT_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Spectral weight of the energy term in the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyForm {
    /// `⟨e, (Δ_g + α) e⟩`: each mode weighted by `λ + α`.
    Bilinear,
    /// `‖(Δ_g + α) e‖²`: each mode weighted by `(λ + α)²`, the norm behind `rel_energy`.
    Squared,
}

impl EnergyForm {
    #[inline]
    fn weight<T: Real>(self, shifted: T) -> T {
        match self {
            Self::Bilinear => shifted,
            Self::Squared => shifted * shifted,
        }
    }
}

impl std::str::FromStr for EnergyForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Self::Bilinear),
            "squared" => Ok(Self::Squared),
            other => Err(Error::InvalidParameter(format!(
                "unknown energy form {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
    pub eval_every: usize,
    pub energy_weight: f64,
    pub energy_form: EnergyForm,
    pub smooth_weight: f64,
    pub seed: u64,
    pub eval_batch: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 4000,
            batch: 16,
            lr: 1e-2,
            weight_decay: 1e-4,
            clip_norm: 1.0,
            eval_every: 100,
            energy_weight: 0.0,
            energy_form: EnergyForm::Bilinear,
            smooth_weight: 0.0,
            seed: 0,
            eval_batch: 64,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainConfig {
    /// Defaults for the convolutional baseline.
    pub fn cnn() -> Self {
        Self {
            lr: 1e-3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.batch == 0 || self.eval_batch == 0 {
            return bad("batch sizes must be positive");
        }
        if !(self.lr > 0.0) || !(self.clip_norm > 0.0) {
            return bad("lr and clip_norm must be positive");
        }
        if !(self.weight_decay >= 0.0)
            || !(self.energy_weight >= 0.0)
            || !(self.smooth_weight >= 0.0)
        {
            return bad("weight_decay, energy_weight and smooth_weight must be >= 0");
        }
        if self.eval_every == 0 || (self.steps > 0 && self.eval_every > self.steps) {
            return bad("eval_every must lie in 1..=steps");
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.eps > 0.0)
        {
            return bad("invalid Adam moment parameters");
        }
        Ok(())
    }
}

/// Moment accumulators of AdamW.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> AdamWState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }
}

/// One AdamW update in place; returns the gradient norm before clipping.
pub fn adamw_step<T: Real>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamWState<T>,
    cfg: &TrainConfig,
) -> Result<T> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len()
    {
        return Err(Error::ShapeMismatch(format!(
            "params {}, grads {}, moments {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    let norm = grads.iter().map(|&g| g * g).sum::<T>().sqrt();
    let clip = T::lit(cfg.clip_norm);
    let scale = if norm > clip { clip / norm } else { T::one() };
    state.t += 1;
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let lr = T::lit(cfg.lr);
    let decay = T::one() - lr * T::lit(cfg.weight_decay);
    let c1 = T::one() - b1.powi(state.t as i32);
    let c2 = T::one() - b2.powi(state.t as i32);
    let eps = T::lit(cfg.eps);
    for i in 0..params.len() {
        let g = grads[i] * scale;
        state.m[i] = b1 * state.m[i] + (T::one() - b1) * g;
        state.v[i] = b2 * state.v[i] + (T::one() - b2) * g * g;
        let mhat = state.m[i] / c1;
        let vhat = state.v[i] / c2;
        params[i] = params[i] * decay - lr * mhat / (vhat.sqrt() + eps);
    }
    Ok(norm)
}

/// Per-sample loss callback: predicted head spectra to `(loss, ∂L/∂û)`.
pub type LossFn<'a, T> = dyn Fn(usize, &[SpectralField<T>]) -> (T, Vec<SpectralField<T>>) + 'a;

/// A model that can be trained by [`train_operator`].
pub trait Operator<T: Real>: Clone {
    fn param_count(&self) -> usize;
    fn params(&self) -> Vec<T>;
    fn set_params(&mut self, src: &[T]) -> Result<()>;

    /// Predicted output spectra (one per head) for each input.
    fn predict(&self, inputs: &[Forcing<T>]) -> Vec<Vec<SpectralField<T>>>;

    /// Sum over the batch, in order, of per-sample losses and parameter gradients.
    fn batch_loss_grad(&self, inputs: &[Forcing<T>], loss: &LossFn<'_, T>) -> Result<(T, Vec<T>)>;

    /// Smoothness penalty with its gradient; zero when not applicable.
    fn smoothness(&self) -> (T, Vec<T>) {
        (T::zero(), vec![T::zero(); self.param_count()])
    }

    /// Re-imposes parameter constraints after an update.
    fn project(&mut self) {}
}

fn accumulate<T: Real>(total: &mut [T], part: &[T]) {
    total.iter_mut().zip(part).for_each(|(a, &b)| *a = *a + b);
}

impl<T: Real> Operator<T> for GinoModel<T> {
    fn param_count(&self) -> usize {
        GinoModel::param_count(self)
    }

    fn params(&self) -> Vec<T> {
        GinoModel::params(self)
    }

    fn set_params(&mut self, src: &[T]) -> Result<()> {
        GinoModel::set_params(self, src)
    }

    fn predict(&self, inputs: &[Forcing<T>]) -> Vec<Vec<SpectralField<T>>> {
        let Some(first) = inputs.first() else {
            return Vec::new();
        };
        let mut plan = self.plan(first.field.res());
        inputs
            .iter()
            .map(|f| {
                if plan.res() != f.field.res() {
                    plan = self.plan(f.field.res());
                }
                vec![self.apply_spectral(&plan, &f.spectrum)]
            })
            .collect()
    }

    fn batch_loss_grad(&self, inputs: &[Forcing<T>], loss: &LossFn<'_, T>) -> Result<(T, Vec<T>)> {
        let mut total = T::zero();
        let mut grad = vec![T::zero(); self.param_count()];
        let mut plan = None;
        for (i, f) in inputs.iter().enumerate() {
            let res = f.field.res();
            if plan
                .as_ref()
                .map(|p: &crate::gino::SpectralPlan<T>| p.res())
                != Some(res)
            {
                plan = Some(self.plan(res));
            }
            let plan = plan.as_ref().expect("plan set above");
            let (u, cache) = self.forward_spectral(plan, &f.spectrum);
            let (l, g) = loss(i, std::slice::from_ref(&u));
            let (grads, _) = self.backward_spectral(plan, &cache, &g[0])?;
            total = total + l;
            accumulate(&mut grad, &grads.flatten());
        }
        Ok((total, grad))
    }

    fn smoothness(&self) -> (T, Vec<T>) {
        self.smoothness_penalty()
    }

    fn project(&mut self) {
        GinoModel::project(self)
    }
}

impl<T: Real> Operator<T> for HodgeGino<T> {
    fn param_count(&self) -> usize {
        HodgeGino::param_count(self)
    }

    fn params(&self) -> Vec<T> {
        HodgeGino::params(self)
    }

    fn set_params(&mut self, src: &[T]) -> Result<()> {
        HodgeGino::set_params(self, src)
    }

    fn predict(&self, inputs: &[Forcing<T>]) -> Vec<Vec<SpectralField<T>>> {
        inputs
            .iter()
            .map(|f| {
                let plans = self.plans(f.field.res());
                self.forward_spectral(&plans, &f.spectrum).0.to_vec()
            })
            .collect()
    }

    fn batch_loss_grad(&self, inputs: &[Forcing<T>], loss: &LossFn<'_, T>) -> Result<(T, Vec<T>)> {
        let mut total = T::zero();
        let mut grad = vec![T::zero(); self.param_count()];
        for (i, f) in inputs.iter().enumerate() {
            let plans = self.plans(f.field.res());
            let (u, cache) = self.forward_spectral(&plans, &f.spectrum);
            let (l, g) = loss(i, &u);
            let g: [SpectralField<T>; 2] = g
                .try_into()
                .map_err(|_| Error::ShapeMismatch("two-headed loss needs two gradients".into()))?;
            let (flat, _) = self.backward_spectral(&plans, &cache, &g)?;
            total = total + l;
            accumulate(&mut grad, &flat);
        }
        Ok((total, grad))
    }

    fn smoothness(&self) -> (T, Vec<T>) {
        self.smoothness_penalty()
    }

    fn project(&mut self) {
        self.project_params()
    }
}

impl<T: Real> Operator<T> for CoordCnnModel<T> {
    fn param_count(&self) -> usize {
        CoordCnnModel::param_count(self)
    }

    fn params(&self) -> Vec<T> {
        CoordCnnModel::params(self)
    }

    fn set_params(&mut self, src: &[T]) -> Result<()> {
        CoordCnnModel::set_params(self, src)
    }

    fn predict(&self, inputs: &[Forcing<T>]) -> Vec<Vec<SpectralField<T>>> {
        inputs
            .iter()
            .map(|f| vec![fft_forward(&self.apply(&f.field))])
            .collect()
    }

    fn batch_loss_grad(&self, inputs: &[Forcing<T>], loss: &LossFn<'_, T>) -> Result<(T, Vec<T>)> {
        let mut total = T::zero();
        let mut grad = vec![T::zero(); self.param_count()];
        for (i, f) in inputs.iter().enumerate() {
            let (u, cache) = cnn_forward(self, &f.field);
            let (l, g) = loss(i, &[fft_forward(&u)]);
            let (grads, _) = cnn_backward(self, &cache, &fft_inverse_hermitian(&g[0]))?;
            total = total + l;
            accumulate(&mut grad, &grads.params());
        }
        Ok((total, grad))
    }
}

/// Oracle producing the target head spectra for a forcing.
pub type Task<'a, T> = dyn Fn(&Forcing<T>) -> Vec<SpectralField<T>> + Sync + 'a;

/// Target `(Δ_g + α)^{-1} f` under `metric`.
pub fn resolvent_task<T: Real>(metric: MetricSpec<T>) -> Box<Task<'static, T>> {
    Box::new(move |f: &Forcing<T>| vec![resolvent_spectrum(&f.spectrum, &metric)])
}

/// Targets `(exact, coexact)` of the regularized Hodge split.
pub fn hodge_task<T: Real>(alpha_reg: T) -> Box<Task<'static, T>> {
    Box::new(move |f: &Forcing<T>| {
        let (ex, co, _, _) = hodge_spectra(&f.spectrum, alpha_reg);
        vec![ex, co]
    })
}

/// `½ Σ |ê|² + w · ½ Σ ω(λ) |ê|²` summed over heads, with `ω` given by `form`,
/// and `∂/∂û` in the spectral gradient convention (`∂L/∂u` transformed with
/// the `1/n²` forward FFT).
pub fn data_loss<T: Real>(
    pred: &[SpectralField<T>],
    target: &[SpectralField<T>],
    metric: &MetricSpec<T>,
    energy_weight: T,
    form: EnergyForm,
) -> (T, Vec<SpectralField<T>>) {
    let half = T::lit(0.5);
    let mut loss = T::zero();
    let mut grads = Vec::with_capacity(pred.len());
    for (u, v) in pred.iter().zip(target) {
        let res = u.res();
        let p = res.plane();
        let inv_n2 = T::one() / T::count(p);
        let mut g = SpectralField::zeros(res);
        let (a, b) = (u.coeffs(), v.coeffs());
        let out = g.coeffs_mut();
        for (idx, k1, k2) in res.modes() {
            let w = T::one() + energy_weight * form.weight(metric.symbol(k1, k2) + metric.alpha());
            for ch in 0..CHANNELS {
                let e = a[ch * p + idx] - b[ch * p + idx];
                loss = loss + half * w * e.norm_sqr();
                out[ch * p + idx] = e * (w * inv_n2);
            }
        }
        grads.push(g);
    }
    (loss, grads)
}

/// Mean data loss plus `smooth_weight` times the smoothness penalty.
pub fn loss_and_grad<T: Real, M: Operator<T>>(
    model: &M,
    batch: &[Forcing<T>],
    targets: &[Vec<SpectralField<T>>],
    metric: &MetricSpec<T>,
    cfg: &TrainConfig,
) -> Result<(T, Vec<T>)> {
    if batch.len() != targets.len() || batch.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} inputs but {} targets",
            batch.len(),
            targets.len()
        )));
    }
    let ew = T::lit(cfg.energy_weight);
    let loss =
        |i: usize, u: &[SpectralField<T>]| data_loss(u, &targets[i], metric, ew, cfg.energy_form);
    let (sum, mut grad) = model.batch_loss_grad(batch, &loss)?;
    let inv = T::one() / T::count(batch.len());
    let mut total = sum * inv;
    grad.iter_mut().for_each(|g| *g = *g * inv);
    if cfg.smooth_weight > 0.0 {
        let sw = T::lit(cfg.smooth_weight);
        let (pen, pg) = model.smoothness();
        total = total + sw * pen;
        grad.iter_mut()
            .zip(&pg)
            .for_each(|(g, &v)| *g = *g + sw * v);
    }
    Ok((total, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub step: usize,
    pub mse: f64,
    pub rel_l2: f64,
    pub rel_energy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricHistory {
    pub records: Vec<MetricRecord>,
}

impl MetricHistory {
    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }
}

/// Batch-mean metrics of predicted against reference head spectra.
///
/// Per sample: `mse` is the mean squared grid error over heads and channels,
/// `rel_l2 = sqrt(Σ‖e‖² / Σ‖u‖²)` and `rel_energy` the same with coefficients
/// weighted by `λ_g(k) + α`; sums run over heads.
pub fn spectral_metrics<T: Real>(
    pred: &[Vec<SpectralField<T>>],
    truth: &[Vec<SpectralField<T>>],
    metric: &MetricSpec<T>,
) -> Result<(f64, f64, f64)> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(
            "prediction and reference batch sizes differ".into(),
        ));
    }
    let mut acc = (0.0, 0.0, 0.0);
    for (ps, ts) in pred.iter().zip(truth) {
        let (mut e2, mut u2, mut ee2, mut ue2) = (T::zero(), T::zero(), T::zero(), T::zero());
        for (u, v) in ps.iter().zip(ts) {
            let res = u.res();
            if res != v.res() {
                return Err(Error::ResolutionMismatch {
                    left: res.n(),
                    right: v.res().n(),
                });
            }
            let p = res.plane();
            let (a, b) = (u.coeffs(), v.coeffs());
            for (idx, k1, k2) in res.modes() {
                let w = metric.symbol(k1, k2) + metric.alpha();
                let w2 = w * w;
                for ch in 0..CHANNELS {
                    let e = (a[ch * p + idx] - b[ch * p + idx]).norm_sqr();
                    let t = b[ch * p + idx].norm_sqr();
                    e2 = e2 + e;
                    u2 = u2 + t;
                    ee2 = ee2 + w2 * e;
                    ue2 = ue2 + w2 * t;
                }
            }
        }
        if u2 == T::zero() {
            return Err(Error::DegenerateReference);
        }
        let heads = T::count(ps.len());
        acc.0 += (e2 * T::lit(0.5) / heads).as_f64();
        acc.1 += (e2 / u2).sqrt().as_f64();
        acc.2 += (ee2 / ue2).sqrt().as_f64();
    }
    let count = pred.len() as f64;
    Ok((acc.0 / count, acc.1 / count, acc.2 / count))
}

/// The fixed held-out batch and its targets for a training seed.
pub fn heldout_batch<T: Real>(
    task: &Task<'_, T>,
    spec: &ForcingSpec<T>,
    seed: u64,
    count: usize,
) -> Result<(Vec<Forcing<T>>, Vec<Vec<SpectralField<T>>>)> {
    let inputs = sample_batch_spectral(spec, &mut SeededRng::new(seed ^ HELDOUT_SALT), count)?;
    let targets = inputs.iter().map(task).collect();
    Ok((inputs, targets))
}

/// Evaluates `model` on a prepared batch.
pub fn evaluate<T: Real, M: Operator<T>>(
    model: &M,
    inputs: &[Forcing<T>],
    targets: &[Vec<SpectralField<T>>],
    metric: &MetricSpec<T>,
) -> Result<(f64, f64, f64)> {
    spectral_metrics(&model.predict(inputs), targets, metric)
}

/// Trains `model` on forcings from `spec` against `task`.
///
/// History rows are recorded at step 0, every `eval_every` steps and at the
/// final step, on a held-out batch drawn from `seed ^ HELDOUT_SALT`.
pub fn train_operator<T: Real, M: Operator<T>>(
    mut model: M,
    task: &Task<'_, T>,
    spec: &ForcingSpec<T>,
    cfg: &TrainConfig,
) -> Result<(M, MetricHistory)> {
    cfg.validate()?;
    let metric = spec.metric;
    let (eval_in, eval_tgt) = heldout_batch(task, spec, cfg.seed, cfg.eval_batch)?;
    let mut history = MetricHistory::default();
    let record = |step: usize, m: &M, h: &mut MetricHistory| -> Result<()> {
        let (mse, rel_l2, rel_energy) = evaluate(m, &eval_in, &eval_tgt, &metric)?;
        h.records.push(MetricRecord {
            step,
            mse,
            rel_l2,
            rel_energy,
        });
        Ok(())
    };
    record(0, &model, &mut history)?;
    let mut rng = SeededRng::new(cfg.seed);
    let mut state = AdamWState::new(model.param_count());
    let mut params = model.params();
    for step in 1..=cfg.steps {
        let batch = sample_batch_spectral(spec, &mut rng, cfg.batch)?;
        let targets: Vec<_> = batch.iter().map(task).collect();
        let (loss, grad) = loss_and_grad(&model, &batch, &targets, &metric, cfg)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergenceDetected {
                step,
                history: Box::new(history),
            });
        }
        adamw_step(&mut params, &grad, &mut state, cfg)?;
        model
            .set_params(&params)
            .map_err(|_| Error::DivergenceDetected {
                step,
                history: Box::new(history.clone()),
            })?;
        model.project();
        params = model.params();
        if step % cfg.eval_every == 0 || step == cfg.steps {
            record(step, &model, &mut history)?;
        }
    }
    Ok((model, history))
}
