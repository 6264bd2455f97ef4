//! Two-channel 2-D FFTs.
//!
//! Both real channels ride in one complex transform, `z = f₀ + i·f₁`, and
//! are separated afterwards using Hermitian symmetry.

use num_complex::Complex;
use rustfft::FftDirection;

use super::{GridField, SpectralField};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative size of the anti-Hermitian residue tolerated by [`fft_inverse`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

fn transpose<T: Copy>(buf: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2_in_place<T: Real>(buf: &mut [Complex<T>], n: usize, direction: FftDirection) {
    let plan = T::fft_plan(n, direction);
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
    plan.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
}

/// Forward transform, `coeffs(k) = n⁻² Σ_x f(x) e^{-i k·x}` per channel.
pub fn fft_forward<T: Real>(f: &GridField<T>) -> SpectralField<T> {
    let mut out = SpectralField::zeros(f.res());
    fft_forward_into(f, &mut out);
    out
}

pub(crate) fn fft_forward_into<T: Real>(f: &GridField<T>, out: &mut SpectralField<T>) {
    let res = f.res();
    let n = res.n();
    let p = res.plane();
    debug_assert_eq!(out.res(), res);
    let (a, b) = f.data().split_at(p);
    let mut z: Vec<Complex<T>> = a.iter().zip(b).map(|(&x, &y)| Complex::new(x, y)).collect();
    fft2_in_place(&mut z, n, FftDirection::Forward);

    let half_scale = T::lit(0.5) / T::count(p);
    let coeffs = out.coeffs_mut();
    for i1 in 0..n {
        let j1 = res.mirror(i1);
        for i2 in 0..n {
            let j2 = res.mirror(i2);
            let zk = z[i1 * n + i2];
            let zm = z[j1 * n + j2].conj();
            let sum = (zk + zm) * half_scale;
            let diff = (zk - zm) * half_scale;
            coeffs[i1 * n + i2] = sum;
            // (Z(k) - conj Z(-k)) / (2i)
            coeffs[p + i1 * n + i2] = Complex::new(diff.im, -diff.re);
        }
    }
}

/// Inverse transform of a Hermitian-symmetric spectrum.
///
/// The input is projected onto its Hermitian part first; the projection is
/// rejected when the discarded anti-Hermitian residue exceeds
/// [`HERMITIAN_TOLERANCE`] of the spectrum norm.
pub fn fft_inverse<T: Real>(spec: &SpectralField<T>) -> Result<GridField<T>> {
    let residue = spec.anti_hermitian_norm();
    let norm = spec.energy().sqrt();
    let limit = T::lit(HERMITIAN_TOLERANCE) * norm;
    if residue > limit || !residue.is_finite() {
        return Err(Error::NonHermitianInput {
            residue: residue.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(fft_inverse_hermitian(&spec.hermitian_part()))
}

/// Inverse transform without the symmetry check; the spectrum must already
/// be Hermitian up to round-off.
pub(crate) fn fft_inverse_hermitian<T: Real>(spec: &SpectralField<T>) -> GridField<T> {
    let res = spec.res();
    let n = res.n();
    let p = res.plane();
    let c = spec.coeffs();
    let mut z: Vec<Complex<T>> = (0..p)
        .map(|i| c[i] + Complex::new(-c[p + i].im, c[p + i].re))
        .collect();
    fft2_in_place(&mut z, n, FftDirection::Inverse);
    let mut data = Vec::with_capacity(res.len());
    data.extend(z.iter().map(|v| v.re));
    data.extend(z.iter().map(|v| v.im));
    GridField::from_vec_unchecked(res, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Resolution, CHANNELS};

    fn lcg_field(n: usize, seed: u64) -> GridField<f64> {
        let res = Resolution::new(n).unwrap();
        let mut s = seed;
        let data = (0..res.len())
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        GridField::from_vec(res, data).unwrap()
    }

    /// Direct O(n⁴) DFT used as an independent reference.
    fn naive_dft(f: &GridField<f64>) -> Vec<Complex<f64>> {
        let res = f.res();
        let n = res.n();
        let mut out = vec![Complex::new(0.0, 0.0); res.len()];
        for c in 0..CHANNELS {
            for (idx, k1, k2) in res.modes() {
                let mut acc = Complex::new(0.0, 0.0);
                for x1 in 0..n {
                    for x2 in 0..n {
                        let phase = -std::f64::consts::TAU
                            * ((k1 * x1 as i64 + k2 * x2 as i64) as f64)
                            / n as f64;
                        acc += Complex::from_polar(f.get(c, x1, x2), phase);
                    }
                }
                out[c * res.plane() + idx] = acc / (n * n) as f64;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let f = lcg_field(8, 3);
        let fast = fft_forward(&f);
        let slow = naive_dft(&f);
        for (a, b) in fast.coeffs().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_field_is_dc_only() {
        let res = Resolution::new(8).unwrap();
        let spec = fft_forward(&GridField::constant(res, 1.5, 0.0));
        assert!((spec.get(0, 0, 0) - Complex::new(1.5, 0.0)).norm() < 1e-15);
        let rest: f64 = spec.energy() - spec.get(0, 0, 0).norm_sqr();
        assert!(rest.abs() < 1e-28);
    }

    #[test]
    fn cosine_splits_between_plus_minus_one() {
        let res = Resolution::new(8).unwrap();
        let f = GridField::from_fn(res, |x1: f64, _| [x1.cos(), 0.0]);
        let spec = fft_forward(&f);
        assert!((spec.get(0, 1, 0) - Complex::new(0.5, 0.0)).norm() < 1e-15);
        assert!((spec.get(0, -1, 0) - Complex::new(0.5, 0.0)).norm() < 1e-15);
        let rest = spec.energy() - 0.5;
        assert!(rest.abs() < 1e-15);
    }

    #[test]
    fn zero_and_dc_inverse() {
        let res = Resolution::new(8).unwrap();
        let zero = fft_inverse(&SpectralField::<f64>::zeros(res)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let mut s = SpectralField::<f64>::zeros(res);
        s.set(0, 0, 0, Complex::new(1.0, 0.0));
        let f = fft_inverse(&s).unwrap();
        assert!(f.channel(0).iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(f.channel(1).iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn rejects_non_hermitian() {
        let res = Resolution::new(8).unwrap();
        let mut s = SpectralField::<f64>::zeros(res);
        s.set(0, 1, 2, Complex::new(1.0, 0.0));
        assert!(matches!(
            fft_inverse(&s),
            Err(Error::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn round_trip_all_sizes() {
        for (i, n) in [8, 16, 32, 64, 128].into_iter().enumerate() {
            let f = lcg_field(n, i as u64 + 11);
            let back = fft_inverse(&fft_forward(&f)).unwrap();
            let err = back.sub(&f).unwrap().max_abs() / f.max_abs();
            assert!(err < 1e-12, "n={n}: {err}");
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let res = Resolution::new(16).unwrap();
        let f = GridField::<f32>::from_fn(res, |x1, x2| [(x1 + 2.0 * x2).sin(), x2.cos()]);
        let back = fft_inverse(&fft_forward(&f)).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-5);
    }
}
