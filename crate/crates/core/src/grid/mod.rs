//! Periodic-grid fields on the flat torus `[0, 2π)²`.
//!
//! A [`GridField`] holds the two frame components of a 1-form sampled on an
//! `n × n` grid; a [`SpectralField`] holds the matching Fourier coefficients.
//! Both are stored channel-major, then `x₁` rows, with `x₂` fastest.
//!
//! The forward transform carries the `1/n²` factor, so `coeffs(0,0)` is the
//! field mean and a Fourier coefficient means the same thing at every
//! resolution. Integer wavenumbers run over `{-n/2, …, n/2-1}` per axis.

mod fft;
mod metric;
mod norms;
mod transfer;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use fft::{fft_forward, fft_inverse};
pub use metric::{spectral_symbol, MetricSpec};
pub(crate) use norms::spectral_sobolev_norm;
pub use norms::{metrics_triplet, sobolev_norm, MetricsTriplet, SobolevIndex};
pub use transfer::{prolong, restrict};

pub(crate) use fft::{fft_forward_into, fft_inverse_hermitian};

/// Number of channels of a 1-form on a 2-D surface.
pub const CHANNELS: usize = 2;

/// Grid points per axis. Always even and at least 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Resolution {
    n: usize,
}

impl Resolution {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidResolution(n));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n
    }

    /// Points per channel plane, `n²`.
    #[inline]
    pub fn plane(self) -> usize {
        self.n * self.n
    }

    /// Total number of stored values, `2n²`.
    #[inline]
    pub fn len(self) -> usize {
        CHANNELS * self.plane()
    }

    /// Signed wavenumber of storage index `i`.
    #[inline]
    pub fn wavenumber(self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of a signed wavenumber (taken modulo `n`).
    #[inline]
    pub fn index_of(self, k: i64) -> usize {
        let n = self.n as i64;
        (((k % n) + n) % n) as usize
    }

    /// Storage index of `-k` for storage index `i`.
    #[inline]
    pub fn mirror(self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// True when either component of the mode sits on the Nyquist line `-n/2`.
    #[inline]
    pub fn is_nyquist(self, i1: usize, i2: usize) -> bool {
        i1 == self.n / 2 || i2 == self.n / 2
    }

    /// Iterates `(plane_index, k1, k2)` over every mode of one channel plane.
    pub fn modes(self) -> impl Iterator<Item = (usize, i64, i64)> {
        let n = self.n;
        (0..n).flat_map(move |i1| {
            (0..n).map(move |i2| (i1 * n + i2, self.wavenumber(i1), self.wavenumber(i2)))
        })
    }
}

/// Real two-channel field sampled on the periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    res: Resolution,
    data: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn zeros(res: Resolution) -> Self {
        Self {
            res,
            data: vec![T::zero(); res.len()],
        }
    }

    /// Wraps raw channel-major data; fails on wrong length or non-finite entries.
    pub fn from_vec(res: Resolution, data: Vec<T>) -> Result<Self> {
        if data.len() != res.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for n={}, got {}",
                res.len(),
                res.n(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { res, data })
    }

    pub(crate) fn from_vec_unchecked(res: Resolution, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), res.len());
        Self { res, data }
    }

    /// Samples `f(x₁, x₂) -> [c₀, c₁]` at the grid nodes `x = 2π·i/n`.
    pub fn from_fn(res: Resolution, mut f: impl FnMut(T, T) -> [T; 2]) -> Self {
        let n = res.n();
        let h = T::TAU() / T::count(n);
        let mut out = Self::zeros(res);
        for i1 in 0..n {
            for i2 in 0..n {
                let v = f(T::count(i1) * h, T::count(i2) * h);
                out.data[i1 * n + i2] = v[0];
                out.data[res.plane() + i1 * n + i2] = v[1];
            }
        }
        out
    }

    /// Constant field `(c0, c1)`.
    pub fn constant(res: Resolution, c0: T, c1: T) -> Self {
        let mut data = vec![c0; res.len()];
        data[res.plane()..].iter_mut().for_each(|v| *v = c1);
        Self { res, data }
    }

    #[inline]
    pub fn res(&self) -> Resolution {
        self.res
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &[T] {
        let p = self.res.plane();
        &self.data[c * p..(c + 1) * p]
    }

    #[inline]
    pub fn get(&self, c: usize, i1: usize, i2: usize) -> T {
        self.data[c * self.res.plane() + i1 * self.res.n() + i2]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm over all grid values, `‖f‖₂`.
    pub fn l2_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Root mean square over grid points and channels.
    pub fn rms(&self) -> T {
        (self.data.iter().map(|&v| v * v).sum::<T>() / T::count(self.data.len())).sqrt()
    }

    /// Resolution-independent L² norm `sqrt(Σ_x |f(x)|² / n²)`; equals the
    /// spectral norm `sqrt(Σ_k |coeffs(k)|²)`.
    pub fn mean_l2_norm(&self) -> T {
        (self.data.iter().map(|&v| v * v).sum::<T>() / T::count(self.res.plane())).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            res: self.res,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, op: impl Fn(T, T) -> T) -> Result<Self> {
        check_same(self.res, other.res)?;
        Ok(Self {
            res: self.res,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    /// Applies `Rᵀ(theta)` to the channel vector at every point.
    pub fn rotate_frame(&self, theta: T) -> Self {
        rotate_frame(self, theta)
    }
}

/// Gauge action on frame coefficients: `out(x) = R(theta)ᵀ f(x)` with `R` the
/// counter-clockwise rotation by `theta`.
pub fn rotate_frame<T: Real>(f: &GridField<T>, theta: T) -> GridField<T> {
    let (s, c) = theta.sin_cos();
    let p = f.res.plane();
    let (a, b) = f.data.split_at(p);
    let mut out = vec![T::zero(); f.data.len()];
    let (o0, o1) = out.split_at_mut(p);
    for i in 0..p {
        o0[i] = c * a[i] + s * b[i];
        o1[i] = c * b[i] - s * a[i];
    }
    GridField::from_vec_unchecked(f.res, out)
}

pub(crate) fn check_same(a: Resolution, b: Resolution) -> Result<()> {
    if a != b {
        return Err(Error::ResolutionMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    Ok(())
}

/// Complex Fourier coefficients of a two-channel field, same layout as
/// [`GridField`] with storage index `i ↔ k` given by [`Resolution::wavenumber`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    res: Resolution,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(res: Resolution) -> Self {
        Self {
            res,
            coeffs: vec![Complex::new(T::zero(), T::zero()); res.len()],
        }
    }

    pub fn from_vec(res: Resolution, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != res.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients for n={}, got {}",
                res.len(),
                res.n(),
                coeffs.len()
            )));
        }
        Ok(Self { res, coeffs })
    }

    #[inline]
    pub fn res(&self) -> Resolution {
        self.res
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    #[inline]
    fn offset(&self, c: usize, k1: i64, k2: i64) -> usize {
        c * self.res.plane() + self.res.index_of(k1) * self.res.n() + self.res.index_of(k2)
    }

    /// Coefficient of channel `c` at signed wavenumber `(k1, k2)`.
    pub fn get(&self, c: usize, k1: i64, k2: i64) -> Complex<T> {
        self.coeffs[self.offset(c, k1, k2)]
    }

    pub fn set(&mut self, c: usize, k1: i64, k2: i64, v: Complex<T>) {
        let o = self.offset(c, k1, k2);
        self.coeffs[o] = v;
    }

    /// `Σ_k Σ_c |coeffs|²`.
    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Multiplies every mode, on both channels, by `symbol(k1, k2)`.
    pub fn multiply(&self, symbol: impl Fn(i64, i64) -> T) -> Self {
        let mut out = self.clone();
        out.multiply_in_place(symbol);
        out
    }

    pub fn multiply_in_place(&mut self, symbol: impl Fn(i64, i64) -> T) {
        let p = self.res.plane();
        for (idx, k1, k2) in self.res.modes() {
            let s = symbol(k1, k2);
            self.coeffs[idx] = self.coeffs[idx] * s;
            self.coeffs[p + idx] = self.coeffs[p + idx] * s;
        }
    }

    /// Norm of the anti-Hermitian part, `sqrt(Σ |F(k) - conj F(-k)|² / 4)`.
    pub fn anti_hermitian_norm(&self) -> T {
        let n = self.res.n();
        let p = self.res.plane();
        let quarter = T::lit(0.25);
        let mut acc = T::zero();
        for c in 0..CHANNELS {
            for i1 in 0..n {
                let j1 = self.res.mirror(i1);
                for i2 in 0..n {
                    let j2 = self.res.mirror(i2);
                    let a = self.coeffs[c * p + i1 * n + i2];
                    let b = self.coeffs[c * p + j1 * n + j2].conj();
                    acc = acc + (a - b).norm_sqr() * quarter;
                }
            }
        }
        acc.sqrt()
    }

    /// Projects onto the Hermitian-symmetric subspace, `(F(k) + conj F(-k)) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.res.n();
        let p = self.res.plane();
        let half = T::lit(0.5);
        let mut out = self.clone();
        for c in 0..CHANNELS {
            for i1 in 0..n {
                let j1 = self.res.mirror(i1);
                for i2 in 0..n {
                    let j2 = self.res.mirror(i2);
                    let a = self.coeffs[c * p + i1 * n + i2];
                    let b = self.coeffs[c * p + j1 * n + j2].conj();
                    out.coeffs[c * p + i1 * n + i2] = (a + b) * half;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_rejects_odd_and_small() {
        assert!(Resolution::new(2).is_err());
        assert!(Resolution::new(7).is_err());
        assert!(Resolution::new(0).is_err());
        assert_eq!(Resolution::new(8).unwrap().n(), 8);
    }

    #[test]
    fn wavenumber_layout() {
        let r = Resolution::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| r.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for k in -4..4 {
            assert_eq!(r.wavenumber(r.index_of(k)), k);
        }
        assert_eq!(r.mirror(0), 0);
        assert_eq!(r.mirror(4), 4);
        assert_eq!(r.mirror(1), 7);
    }

    #[test]
    fn rotate_quarter_turn_and_inverse() {
        let r = Resolution::new(4).unwrap();
        let f = GridField::<f64>::constant(r, 2.0, 3.0);
        let g = rotate_frame(&f, std::f64::consts::FRAC_PI_2);
        for i in 0..r.plane() {
            assert!((g.channel(0)[i] - 3.0).abs() < 1e-15);
            assert!((g.channel(1)[i] + 2.0).abs() < 1e-15);
        }
        let back = rotate_frame(&rotate_frame(&f, 0.7), -0.7);
        assert!(back.sub(&f).unwrap().max_abs() < 1e-14);
        assert_eq!(rotate_frame(&f, 0.0), f);
    }

    #[test]
    fn from_vec_validates() {
        let r = Resolution::new(4).unwrap();
        assert!(GridField::<f64>::from_vec(r, vec![0.0; 31]).is_err());
        let mut v = vec![0.0; 32];
        v[3] = f64::NAN;
        assert_eq!(GridField::from_vec(r, v), Err(Error::NonFinite));
    }
}
