//! Spectral restriction and prolongation between grid resolutions.

use num_complex::Complex;

use super::{fft_forward, fft_inverse_hermitian, GridField, Resolution, SpectralField, CHANNELS};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Keeps the modes with `|k₁|, |k₂| < n_coarse/2` and resamples on the coarse
/// grid. Coarse Nyquist modes are dropped so the output stays real.
pub fn restrict<T: Real>(f: &GridField<T>, coarse: Resolution) -> Result<GridField<T>> {
    let fine = f.res();
    if coarse.n() >= fine.n() {
        return Err(Error::InvalidResolutionPair {
            coarse: coarse.n(),
            fine: fine.n(),
        });
    }
    Ok(fft_inverse_hermitian(&restrict_spectrum(
        &fft_forward(f),
        coarse,
    )))
}

pub(crate) fn restrict_spectrum<T: Real>(
    spec: &SpectralField<T>,
    coarse: Resolution,
) -> SpectralField<T> {
    let half = (coarse.n() / 2) as i64;
    let mut out = SpectralField::zeros(coarse);
    for c in 0..CHANNELS {
        for (_, k1, k2) in coarse.modes() {
            if k1.abs() < half && k2.abs() < half {
                out.set(c, k1, k2, spec.get(c, k1, k2));
            }
        }
    }
    out
}

/// Zero-pads the spectrum onto the fine grid.
///
/// A coarse Nyquist coefficient is split evenly between `±n_coarse/2` so the
/// prolonged field is real and interpolates the coarse samples.
pub fn prolong<T: Real>(f: &GridField<T>, fine: Resolution) -> Result<GridField<T>> {
    let coarse = f.res();
    if fine.n() <= coarse.n() {
        return Err(Error::InvalidResolutionPair {
            coarse: coarse.n(),
            fine: fine.n(),
        });
    }
    Ok(fft_inverse_hermitian(&prolong_spectrum(
        &fft_forward(f),
        fine,
    )))
}

pub(crate) fn prolong_spectrum<T: Real>(
    spec: &SpectralField<T>,
    fine: Resolution,
) -> SpectralField<T> {
    let coarse = spec.res();
    let nyq = -((coarse.n() / 2) as i64);
    let half = T::lit(0.5);
    let images = |k: i64| -> Vec<(i64, T)> {
        if k == nyq {
            vec![(k, half), (-k, half)]
        } else {
            vec![(k, T::one())]
        }
    };
    let mut out = SpectralField::zeros(fine);
    for c in 0..CHANNELS {
        for (_, k1, k2) in coarse.modes() {
            let v = spec.get(c, k1, k2);
            if v == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            for (j1, w1) in images(k1) {
                for (j2, w2) in images(k2) {
                    let cur = out.get(c, j1, j2);
                    out.set(c, j1, j2, cur + v * (w1 * w2));
                }
            }
        }
    }
    out
}
