use serde::{Deserialize, Serialize};

use super::{check_same, fft_forward, GridField, MetricSpec, SpectralField, CHANNELS};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sobolev order `r` of the spectral norm `Σ (1+λ)^r |f̂|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex(pub f64);

/// Spectral Sobolev norm `sqrt(Σ_k Σ_c (1+λ_g(k))^r |f̂_c(k)|²)`.
///
/// With the `1/n²` forward normalization the `r = 0` case is the
/// resolution-independent L² norm [`GridField::mean_l2_norm`].
pub fn sobolev_norm<T: Real>(f: &GridField<T>, r: SobolevIndex, metric: &MetricSpec<T>) -> T {
    spectral_sobolev_norm(&fft_forward(f), r, metric)
}

pub(crate) fn spectral_sobolev_norm<T: Real>(
    spec: &SpectralField<T>,
    r: SobolevIndex,
    metric: &MetricSpec<T>,
) -> T {
    let res = spec.res();
    let p = res.plane();
    let c = spec.coeffs();
    let order = T::lit(r.0);
    res.modes()
        .map(|(idx, k1, k2)| {
            let w = (T::one() + metric.symbol(k1, k2)).powf(order);
            w * (0..CHANNELS)
                .map(|ch| c[ch * p + idx].norm_sqr())
                .sum::<T>()
        })
        .sum::<T>()
        .sqrt()
}

/// MSE, relative L² error and relative energy error of a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsTriplet<T> {
    pub mse: T,
    pub rel_l2: T,
    pub rel_energy: T,
}

/// Compares `prediction` against the reference `truth`.
///
/// `rel_energy` weights both fields by `λ_g(k) + α` in Fourier space.
pub fn metrics_triplet<T: Real>(
    prediction: &GridField<T>,
    truth: &GridField<T>,
    metric: &MetricSpec<T>,
) -> Result<MetricsTriplet<T>> {
    check_same(prediction.res(), truth.res())?;
    let err = prediction.sub(truth)?;
    let truth_norm = truth.l2_norm();
    if truth_norm == T::zero() {
        return Err(Error::DegenerateReference);
    }
    let mse = err.data().iter().map(|&e| e * e).sum::<T>() / T::count(err.data().len());
    let rel_l2 = err.l2_norm() / truth_norm;
    let rel_energy = energy_ratio(&fft_forward(&err), &fft_forward(truth), metric);
    Ok(MetricsTriplet {
        mse,
        rel_l2,
        rel_energy,
    })
}

/// `‖(λ+α) e‖ / ‖(λ+α) u‖` evaluated on spectra.
pub(crate) fn energy_ratio<T: Real>(
    err: &SpectralField<T>,
    truth: &SpectralField<T>,
    metric: &MetricSpec<T>,
) -> T {
    let res = err.res();
    let p = res.plane();
    let (e, u) = (err.coeffs(), truth.coeffs());
    let mut num = T::zero();
    let mut den = T::zero();
    for (idx, k1, k2) in res.modes() {
        let w = metric.symbol(k1, k2) + metric.alpha();
        let w2 = w * w;
        for ch in 0..CHANNELS {
            num = num + w2 * e[ch * p + idx].norm_sqr();
            den = den + w2 * u[ch * p + idx].norm_sqr();
        }
    }
    (num / den).sqrt()
}
