//! Two-stage operator `f ↦ m₂(λ) · σ(m₁(λ) f)` with analytic gradients.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::chebyshev::{basis_values, ChebMultiplier};
use super::radial::{RadialCache, RadialGrads, RadialParams};
use crate::error::{Error, Result};
use crate::grid::{
    fft_forward, fft_forward_into, fft_inverse_hermitian, GridField, MetricSpec, Resolution,
    SpectralField, CHANNELS,
};
use crate::sampler::SeededRng;
use crate::scalar::Real;

/// Shape and initialization of a fresh [`GinoModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GinoConfig {
    pub degree: usize,
    pub lambda_max: f64,
    pub hidden: usize,
    pub init_gain: f64,
    pub init_weight_std: f64,
    pub init_coeff_std: f64,
}

impl Default for GinoConfig {
    fn default() -> Self {
        Self {
            degree: 16,
            lambda_max: 100.0,
            hidden: super::radial::HIDDEN,
            init_gain: 0.1,
            init_weight_std: 0.5,
            init_coeff_std: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinoModel<T> {
    pub mult1: ChebMultiplier<T>,
    pub rho: RadialParams<T>,
    pub mult2: ChebMultiplier<T>,
    metric: MetricSpec<T>,
    /// Optional pointwise scalar gate `b` added to the first stage: `v = m₁ f + b f`.
    gate: Option<T>,
}

/// Gradients with the layout of [`GinoModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct GinoGradients<T> {
    pub d_coeffs1: Vec<T>,
    pub d_coeffs2: Vec<T>,
    pub d_rho: RadialGrads<T>,
    pub d_gate: Option<T>,
}

impl<T: Real> GinoGradients<T> {
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.d_coeffs1);
        out.extend_from_slice(&self.d_coeffs2);
        self.d_rho.flatten_into(&mut out);
        out.extend(self.d_gate);
        out
    }
}

/// Multiplier values on one lattice, recomputed whenever parameters change.
#[derive(Debug, Clone)]
pub struct SpectralPlan<T> {
    res: Resolution,
    /// `(plane index, unit coordinate t)` of every mode with `λ ≤ Λ`.
    band: Vec<(usize, T)>,
    m1: Vec<T>,
    m2: Vec<T>,
}

impl<T: Real> SpectralPlan<T> {
    pub fn res(&self) -> Resolution {
        self.res
    }

    /// Number of modes inside the truncation band.
    pub fn band_len(&self) -> usize {
        self.band.len()
    }
}

/// Activations saved by the forward pass.
#[derive(Debug, Clone)]
pub struct GinoCache<T> {
    shape: (usize, usize, usize),
    f_hat: SpectralField<T>,
    v: GridField<T>,
    radial: RadialCache<T>,
    w_hat: SpectralField<T>,
}

impl<T: Real> GinoCache<T> {
    pub fn res(&self) -> Resolution {
        self.f_hat.res()
    }
}

fn multiply_plane<T: Real>(spec: &SpectralField<T>, d: &[T]) -> SpectralField<T> {
    let p = spec.res().plane();
    let mut out = spec.clone();
    for block in out.coeffs_mut().chunks_mut(p) {
        block.iter_mut().zip(d).for_each(|(z, &m)| *z = *z * m);
    }
    out
}

/// `n² Σ_c Re(conj(a) b)` restricted to one plane index.
#[inline]
fn mode_correlation<T: Real>(a: &[Complex<T>], b: &[Complex<T>], p: usize, idx: usize) -> T {
    (0..CHANNELS)
        .map(|ch| {
            let (x, y) = (a[ch * p + idx], b[ch * p + idx]);
            x.re * y.re + x.im * y.im
        })
        .sum()
}

impl<T: Real> GinoModel<T> {
    pub fn new(
        mult1: ChebMultiplier<T>,
        rho: RadialParams<T>,
        mult2: ChebMultiplier<T>,
        metric: MetricSpec<T>,
    ) -> Result<Self> {
        if mult1.lambda_max() != mult2.lambda_max() {
            return Err(Error::InvalidParameter(format!(
                "multipliers disagree on lambda_max: {} vs {}",
                mult1.lambda_max(),
                mult2.lambda_max()
            )));
        }
        rho.validate()?;
        Ok(Self {
            mult1,
            rho,
            mult2,
            metric,
            gate: None,
        })
    }

    /// Random initialization near the linear operator `1/α`.
    ///
    /// Each stage starts at `θ₀ = α^{-1/2}` so that the composition has DC gain `1/α`.
    pub fn init(cfg: &GinoConfig, metric: MetricSpec<T>, rng: &mut SeededRng) -> Result<Self> {
        let mut stream = rng.next_stream();
        let lam = T::lit(cfg.lambda_max);
        let base = T::one() / metric.alpha().sqrt();
        let mut coeffs = || {
            let mut c: Vec<T> = (0..=cfg.degree)
                .map(|_| T::lit(cfg.init_coeff_std * stream.normal()))
                .collect();
            c[0] = base;
            c
        };
        let (c1, c2) = (coeffs(), coeffs());
        let h = cfg.hidden;
        let mut weights = |count: usize| -> Vec<T> {
            (0..count)
                .map(|_| T::lit(cfg.init_weight_std * stream.normal()))
                .collect()
        };
        let w1 = weights(h);
        let w2 = weights(h);
        let rho = RadialParams::new(w1, vec![T::zero(); h], w2, T::zero(), T::lit(cfg.init_gain))?;
        Self::new(
            ChebMultiplier::new(c1, lam)?,
            rho,
            ChebMultiplier::new(c2, lam)?,
            metric,
        )
    }

    pub fn metric(&self) -> &MetricSpec<T> {
        &self.metric
    }

    /// Same parameters, multipliers evaluated on another metric's symbol.
    pub fn rebind(&self, metric: MetricSpec<T>) -> Self {
        Self {
            metric,
            ..self.clone()
        }
    }

    pub fn gate(&self) -> Option<T> {
        self.gate
    }

    pub fn with_gate(mut self, gate: Option<T>) -> Self {
        self.gate = gate;
        self
    }

    pub fn lambda_max(&self) -> T {
        self.mult1.lambda_max()
    }

    /// The model with `gain = 0`, i.e. its linear part.
    pub fn linearized(&self) -> Self {
        let mut out = self.clone();
        out.rho.gain = T::zero();
        out
    }

    /// Effective multiplier `(m₁(λ) + b) · m₂(λ)` of the gain-zero model.
    pub fn composed_multiplier(&self, lambda: T) -> T {
        (self.mult1.eval(lambda) + self.gate.unwrap_or(T::zero())) * self.mult2.eval(lambda)
    }

    /// Larger roughness of the two stages.
    pub fn roughness(&self) -> T {
        self.mult1.roughness().max(self.mult2.roughness())
    }

    pub fn param_count(&self) -> usize {
        self.mult1.coeffs().len()
            + self.mult2.coeffs().len()
            + self.rho.param_count()
            + usize::from(self.gate.is_some())
    }

    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        out.extend_from_slice(self.mult1.coeffs());
        out.extend_from_slice(self.mult2.coeffs());
        self.rho.flatten_into(&mut out);
        out.extend(self.gate);
        out
    }

    pub fn set_params(&mut self, src: &[T]) -> Result<()> {
        if src.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                src.len()
            )));
        }
        if src.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let (j1, j2) = (self.mult1.coeffs().len(), self.mult2.coeffs().len());
        self.mult1.coeffs_mut().copy_from_slice(&src[..j1]);
        self.mult2.coeffs_mut().copy_from_slice(&src[j1..j1 + j2]);
        let used = self.rho.assign_from(&src[j1 + j2..]);
        if let Some(g) = self.gate.as_mut() {
            *g = src[j1 + j2 + used];
        }
        Ok(())
    }

    fn shape(&self) -> (usize, usize, usize) {
        (
            self.mult1.coeffs().len(),
            self.mult2.coeffs().len(),
            self.rho.hidden(),
        )
    }

    /// Evaluates both multipliers on the lattice of `res`.
    pub fn plan(&self, res: Resolution) -> SpectralPlan<T> {
        let p = res.plane();
        let lam = self.lambda_max();
        let mut band = Vec::new();
        let mut m1 = vec![T::zero(); p];
        let mut m2 = vec![T::zero(); p];
        for idx in 0..p {
            let (k1, k2) = (res.wavenumber(idx / res.n()), res.wavenumber(idx % res.n()));
            let l = self.metric.symbol(k1, k2);
            if l <= lam {
                let t = self.mult1.to_unit(l);
                band.push((idx, t));
                m1[idx] = super::chebyshev::clenshaw(self.mult1.coeffs(), t);
                m2[idx] = super::chebyshev::clenshaw(self.mult2.coeffs(), t);
            }
        }
        SpectralPlan { res, band, m1, m2 }
    }

    /// Applies one truncated multiplier stage.
    pub fn multiplier_apply(
        mult: &ChebMultiplier<T>,
        f: &GridField<T>,
        metric: &MetricSpec<T>,
    ) -> GridField<T> {
        let spec = fft_forward(f).multiply(|k1, k2| mult.eval(metric.symbol(k1, k2)));
        fft_inverse_hermitian(&spec)
    }

    /// Physical-space forward pass.
    pub fn forward(&self, f: &GridField<T>) -> (GridField<T>, GinoCache<T>) {
        let plan = self.plan(f.res());
        let (u_hat, cache) = self.forward_spectral(&plan, &fft_forward(f));
        (fft_inverse_hermitian(&u_hat), cache)
    }

    /// Output only.
    pub fn apply(&self, f: &GridField<T>) -> GridField<T> {
        self.forward(f).0
    }

    /// Forward pass on Fourier coefficients.
    pub fn forward_spectral(
        &self,
        plan: &SpectralPlan<T>,
        f_hat: &SpectralField<T>,
    ) -> (SpectralField<T>, GinoCache<T>) {
        let mut v_hat = multiply_plane(f_hat, &plan.m1);
        if let Some(b) = self.gate {
            v_hat
                .coeffs_mut()
                .iter_mut()
                .zip(f_hat.coeffs())
                .for_each(|(v, &f)| *v = *v + f * b);
        }
        let v = fft_inverse_hermitian(&v_hat);
        let (w, radial) = self.rho.forward(&v);
        let mut w_hat = SpectralField::zeros(plan.res);
        fft_forward_into(&w, &mut w_hat);
        let u_hat = multiply_plane(&w_hat, &plan.m2);
        let cache = GinoCache {
            shape: self.shape(),
            f_hat: f_hat.clone(),
            v,
            radial,
            w_hat,
        };
        (u_hat, cache)
    }

    /// Output spectrum only.
    pub fn apply_spectral(
        &self,
        plan: &SpectralPlan<T>,
        f_hat: &SpectralField<T>,
    ) -> SpectralField<T> {
        self.forward_spectral(plan, f_hat).0
    }

    /// Physical-space backward pass.
    pub fn backward(
        &self,
        cache: &GinoCache<T>,
        grad_out: &GridField<T>,
    ) -> Result<(GinoGradients<T>, GridField<T>)> {
        if grad_out.res() != cache.res() {
            return Err(Error::CacheMismatch(format!(
                "gradient at n={} but cache at n={}",
                grad_out.res().n(),
                cache.res().n()
            )));
        }
        let plan = self.plan(cache.res());
        let (grads, g_hat) = self.backward_spectral(&plan, cache, &fft_forward(grad_out))?;
        Ok((grads, fft_inverse_hermitian(&g_hat)))
    }

    /// Backward pass on Fourier coefficients of `∂L/∂u`.
    ///
    /// Returns parameter gradients and the coefficients of `∂L/∂f`.
    pub fn backward_spectral(
        &self,
        plan: &SpectralPlan<T>,
        cache: &GinoCache<T>,
        grad_hat: &SpectralField<T>,
    ) -> Result<(GinoGradients<T>, SpectralField<T>)> {
        if cache.shape != self.shape() {
            return Err(Error::CacheMismatch(format!(
                "cache shape {:?} but model shape {:?}",
                cache.shape,
                self.shape()
            )));
        }
        if cache.res() != plan.res || grad_hat.res() != plan.res {
            return Err(Error::CacheMismatch("resolution differs from cache".into()));
        }
        let res = plan.res;
        let p = res.plane();
        let n2 = T::count(p);
        let (j1, j2) = (self.mult1.coeffs().len(), self.mult2.coeffs().len());
        let mut basis = vec![T::zero(); j1.max(j2)];

        let mut d_coeffs2 = vec![T::zero(); j2];
        for &(idx, t) in &plan.band {
            let q = mode_correlation(grad_hat.coeffs(), cache.w_hat.coeffs(), p, idx) * n2;
            basis_values(t, &mut basis[..j2]);
            d_coeffs2
                .iter_mut()
                .zip(&basis)
                .for_each(|(d, &b)| *d = *d + q * b);
        }

        let g_w = fft_inverse_hermitian(&multiply_plane(grad_hat, &plan.m2));
        let (g_v, d_rho) = self.rho.backward(&cache.v, &cache.radial, &g_w)?;
        let mut gv_hat = SpectralField::zeros(res);
        fft_forward_into(&g_v, &mut gv_hat);

        let mut d_coeffs1 = vec![T::zero(); j1];
        for &(idx, t) in &plan.band {
            let q = mode_correlation(gv_hat.coeffs(), cache.f_hat.coeffs(), p, idx) * n2;
            basis_values(t, &mut basis[..j1]);
            d_coeffs1
                .iter_mut()
                .zip(&basis)
                .for_each(|(d, &b)| *d = *d + q * b);
        }

        let mut g_f = multiply_plane(&gv_hat, &plan.m1);
        let d_gate = self.gate.map(|b| {
            let corr: T = gv_hat
                .coeffs()
                .iter()
                .zip(cache.f_hat.coeffs())
                .map(|(x, y)| x.re * y.re + x.im * y.im)
                .sum();
            g_f.coeffs_mut()
                .iter_mut()
                .zip(gv_hat.coeffs())
                .for_each(|(o, &g)| *o = *o + g * b);
            corr * n2
        });
        Ok((
            GinoGradients {
                d_coeffs1,
                d_coeffs2,
                d_rho,
                d_gate,
            },
            g_f,
        ))
    }

    /// Sum of both stages' smoothness penalties with its flat parameter gradient.
    pub fn smoothness_penalty(&self) -> (T, Vec<T>) {
        let (v1, g1) = self.mult1.smoothness_penalty();
        let (v2, g2) = self.mult2.smoothness_penalty();
        let mut grad = vec![T::zero(); self.param_count()];
        grad[..g1.len()].copy_from_slice(&g1);
        grad[g1.len()..g1.len() + g2.len()].copy_from_slice(&g2);
        (v1 + v2, grad)
    }

    /// Restores constraints after an unconstrained parameter update.
    pub fn project(&mut self) {
        self.rho.clamp_gain();
    }
}
