//! Closed-form Fourier ground truth on the torus.

use crate::error::{Error, Result};
use crate::grid::{
    fft_forward, fft_inverse_hermitian, GridField, MetricSpec, SpectralField, CHANNELS,
};
use crate::scalar::Real;

/// Exact solution of `(Δ_g + α) u = f`: `û(k) = f̂(k) / (λ_g(k) + α)`.
pub fn resolvent_apply<T: Real>(f: &GridField<T>, metric: &MetricSpec<T>) -> GridField<T> {
    fft_inverse_hermitian(&resolvent_spectrum(&fft_forward(f), metric))
}

pub(crate) fn resolvent_spectrum<T: Real>(
    spec: &SpectralField<T>,
    metric: &MetricSpec<T>,
) -> SpectralField<T> {
    spec.multiply(|k1, k2| T::one() / (metric.symbol(k1, k2) + metric.alpha()))
}

/// Forward operator `(Δ_g + α) u`, the inverse of [`resolvent_apply`].
pub fn energy_apply<T: Real>(u: &GridField<T>, metric: &MetricSpec<T>) -> GridField<T> {
    let spec = fft_forward(u).multiply(|k1, k2| metric.symbol(k1, k2) + metric.alpha());
    fft_inverse_hermitian(&spec)
}

/// Regularized Helmholtz–Hodge split of a 1-form under the flat metric.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeParts<T> {
    pub exact: GridField<T>,
    pub coexact: GridField<T>,
    pub harmonic: GridField<T>,
    /// Regularization gap `α_reg / (|k|² + α_reg) · f̂(k)`.
    pub residual: GridField<T>,
}

impl<T: Real> HodgeParts<T> {
    /// Sum of all four parts; reconstructs the input.
    pub fn reconstruct(&self) -> GridField<T> {
        let mut out = self.exact.clone();
        for part in [&self.coexact, &self.harmonic, &self.residual] {
            out.data_mut()
                .iter_mut()
                .zip(part.data())
                .for_each(|(o, &v)| *o = *o + v);
        }
        out
    }
}

/// 2×2 real symbol of the regularized exact projector, `k kᵀ / (|k|² + α_reg)`.
#[inline]
pub(crate) fn exact_symbol<T: Real>(k: [T; 2], alpha_reg: T) -> [[T; 2]; 2] {
    let d = k[0] * k[0] + k[1] * k[1] + alpha_reg;
    [
        [k[0] * k[0] / d, k[0] * k[1] / d],
        [k[1] * k[0] / d, k[1] * k[1] / d],
    ]
}

/// Applies a per-mode 2×2 real matrix symbol to a two-channel spectrum.
pub(crate) fn apply_matrix_symbol<T: Real>(
    spec: &SpectralField<T>,
    symbol: impl Fn(i64, i64) -> [[T; 2]; 2],
) -> SpectralField<T> {
    let res = spec.res();
    let p = res.plane();
    let c = spec.coeffs();
    let mut out = SpectralField::zeros(res);
    let o = out.coeffs_mut();
    for (idx, k1, k2) in res.modes() {
        let s = symbol(k1, k2);
        let (a, b) = (c[idx], c[p + idx]);
        o[idx] = a * s[0][0] + b * s[0][1];
        o[p + idx] = a * s[1][0] + b * s[1][1];
    }
    out
}

/// Splits `f` into exact, coexact, harmonic and regularization-residual parts.
///
/// For `k ≠ 0`: exact uses `k kᵀ/(|k|²+α_reg)`, coexact uses `k⊥ k⊥ᵀ/(|k|²+α_reg)`
/// with `k⊥ = (-k₂, k₁)`, and the residual is `α_reg/(|k|²+α_reg)`. The harmonic
/// part is the mean. The Euclidean metric is assumed.
pub fn hodge_decompose<T: Real>(f: &GridField<T>, alpha_reg: T) -> Result<HodgeParts<T>> {
    if !(alpha_reg > T::zero()) || !alpha_reg.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha_reg must be positive, got {alpha_reg}"
        )));
    }
    let spec = fft_forward(f);
    let (ex, co, harm, resid) = hodge_spectra(&spec, alpha_reg);
    Ok(HodgeParts {
        exact: fft_inverse_hermitian(&ex),
        coexact: fft_inverse_hermitian(&co),
        harmonic: fft_inverse_hermitian(&harm),
        residual: fft_inverse_hermitian(&resid),
    })
}

#[allow(clippy::type_complexity)]
pub(crate) fn hodge_spectra<T: Real>(
    spec: &SpectralField<T>,
    alpha_reg: T,
) -> (
    SpectralField<T>,
    SpectralField<T>,
    SpectralField<T>,
    SpectralField<T>,
) {
    let kv = |k1: i64, k2: i64| [T::lit(k1 as f64), T::lit(k2 as f64)];
    let zero = [[T::zero(); 2]; 2];
    let exact = apply_matrix_symbol(spec, |k1, k2| {
        if k1 == 0 && k2 == 0 {
            zero
        } else {
            exact_symbol(kv(k1, k2), alpha_reg)
        }
    });
    let coexact = apply_matrix_symbol(spec, |k1, k2| {
        if k1 == 0 && k2 == 0 {
            zero
        } else {
            exact_symbol(kv(-k2, k1), alpha_reg)
        }
    });
    let harmonic = spec.multiply(|k1, k2| {
        if k1 == 0 && k2 == 0 {
            T::one()
        } else {
            T::zero()
        }
    });
    let residual = spec.multiply(|k1, k2| {
        if k1 == 0 && k2 == 0 {
            T::zero()
        } else {
            let k2n = T::lit((k1 * k1 + k2 * k2) as f64);
            alpha_reg / (k2n + alpha_reg)
        }
    });
    (exact, coexact, harmonic, residual)
}

/// Energy fraction `Σ_{k∈S} |f̂|² / Σ_k |f̂|²` of the modes selected by `keep`.
pub fn band_energy_fraction<T: Real>(
    spec: &SpectralField<T>,
    keep: impl Fn(i64, i64) -> bool,
) -> T {
    let res = spec.res();
    let p = res.plane();
    let c = spec.coeffs();
    let mut sel = T::zero();
    let mut tot = T::zero();
    for (idx, k1, k2) in res.modes() {
        let e: T = (0..CHANNELS).map(|ch| c[ch * p + idx].norm_sqr()).sum();
        tot = tot + e;
        if keep(k1, k2) {
            sel = sel + e;
        }
    }
    sel / tot
}
