//! Two-headed operator predicting the exact and coexact parts of a 1-form.
//!
//! Each head runs its own multiplier stack and then projects onto gradients
//! (exact) or their perpendiculars (coexact) with the symbol `k̃ k̃ᵀ / |k|²`,
//! where `k̃` is the wavevector expressed in the head's frame.

use serde::{Deserialize, Serialize};

use super::model::{GinoCache, GinoModel, SpectralPlan};
use crate::error::Result;
use crate::grid::{fft_forward, fft_inverse_hermitian, GridField, Resolution, SpectralField};
use crate::oracle::apply_matrix_symbol;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HodgeHead {
    Exact,
    Coexact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HodgeGino<T> {
    pub exact: GinoModel<T>,
    pub coexact: GinoModel<T>,
    frame_angle: T,
}

/// Per-head caches from [`HodgeGino::forward_spectral`].
#[derive(Debug, Clone)]
pub struct HodgeCache<T> {
    heads: [GinoCache<T>; 2],
}

/// Unregularized projector symbol for one head, zero at `k = 0`.
pub fn head_projector<T: Real>(k1: i64, k2: i64, frame_angle: T, head: HodgeHead) -> [[T; 2]; 2] {
    if k1 == 0 && k2 == 0 {
        return [[T::zero(); 2]; 2];
    }
    let (s, c) = frame_angle.sin_cos();
    let (a, b) = (T::lit(k1 as f64), T::lit(k2 as f64));
    let mut kt = [c * a + s * b, c * b - s * a];
    if head == HodgeHead::Coexact {
        kt = [-kt[1], kt[0]];
    }
    let d = a * a + b * b;
    [
        [kt[0] * kt[0] / d, kt[0] * kt[1] / d],
        [kt[1] * kt[0] / d, kt[1] * kt[1] / d],
    ]
}

impl<T: Real> HodgeGino<T> {
    pub fn new(exact: GinoModel<T>, coexact: GinoModel<T>) -> Self {
        Self {
            exact,
            coexact,
            frame_angle: T::zero(),
        }
    }

    pub fn frame_angle(&self) -> T {
        self.frame_angle
    }

    /// Same parameters, expressed in a frame rotated by `angle`.
    pub fn with_frame_angle(&self, angle: T) -> Self {
        Self {
            frame_angle: angle,
            ..self.clone()
        }
    }

    fn project(&self, spec: &SpectralField<T>, head: HodgeHead) -> SpectralField<T> {
        apply_matrix_symbol(spec, |k1, k2| {
            head_projector(k1, k2, self.frame_angle, head)
        })
    }

    pub fn plans(&self, res: Resolution) -> [SpectralPlan<T>; 2] {
        [self.exact.plan(res), self.coexact.plan(res)]
    }

    pub fn forward_spectral(
        &self,
        plans: &[SpectralPlan<T>; 2],
        f_hat: &SpectralField<T>,
    ) -> ([SpectralField<T>; 2], HodgeCache<T>) {
        let (ex, c_ex) = self.exact.forward_spectral(&plans[0], f_hat);
        let (co, c_co) = self.coexact.forward_spectral(&plans[1], f_hat);
        (
            [
                self.project(&ex, HodgeHead::Exact),
                self.project(&co, HodgeHead::Coexact),
            ],
            HodgeCache {
                heads: [c_ex, c_co],
            },
        )
    }

    /// Predicted `(exact, coexact)` fields.
    pub fn apply(&self, f: &GridField<T>) -> [GridField<T>; 2] {
        let plans = self.plans(f.res());
        let (out, _) = self.forward_spectral(&plans, &fft_forward(f));
        out.map(|s| fft_inverse_hermitian(&s))
    }

    /// Flat gradient (exact head first) and the input-gradient spectrum.
    pub fn backward_spectral(
        &self,
        plans: &[SpectralPlan<T>; 2],
        cache: &HodgeCache<T>,
        grads: &[SpectralField<T>; 2],
    ) -> Result<(Vec<T>, SpectralField<T>)> {
        let g_ex = self.project(&grads[0], HodgeHead::Exact);
        let g_co = self.project(&grads[1], HodgeHead::Coexact);
        let (d_ex, gf_ex) = self
            .exact
            .backward_spectral(&plans[0], &cache.heads[0], &g_ex)?;
        let (d_co, gf_co) = self
            .coexact
            .backward_spectral(&plans[1], &cache.heads[1], &g_co)?;
        let mut flat = d_ex.flatten();
        flat.extend(d_co.flatten());
        let mut g_f = gf_ex;
        g_f.coeffs_mut()
            .iter_mut()
            .zip(gf_co.coeffs())
            .for_each(|(a, &b)| *a = *a + b);
        Ok((flat, g_f))
    }

    pub fn param_count(&self) -> usize {
        self.exact.param_count() + self.coexact.param_count()
    }

    pub fn params(&self) -> Vec<T> {
        let mut p = self.exact.params();
        p.extend(self.coexact.params());
        p
    }

    pub fn set_params(&mut self, src: &[T]) -> Result<()> {
        let split = self.exact.param_count();
        if src.len() != self.param_count() {
            return Err(crate::Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                src.len()
            )));
        }
        self.exact.set_params(&src[..split])?;
        self.coexact.set_params(&src[split..])
    }

    pub fn smoothness_penalty(&self) -> (T, Vec<T>) {
        let (a, mut ga) = self.exact.smoothness_penalty();
        let (b, gb) = self.coexact.smoothness_penalty();
        ga.extend(gb);
        (a + b, ga)
    }

    pub fn project_params(&mut self) {
        self.exact.project();
        self.coexact.project();
    }
}
