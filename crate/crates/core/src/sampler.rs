//! Seeded band-limited random forcings.
//!
//! Recipe per sample: complex Gaussian white noise on every mode and channel,
//! power-law scaling `(1 + λ_g(k))^{-β/2}` with a hard cutoff `λ_g(k) ≤ λ_f`,
//! Hermitian symmetrization, inverse FFT, then division by the grid RMS.

use num_complex::Complex;
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{fft_inverse_hermitian, GridField, MetricSpec, Resolution, SpectralField};
use crate::scalar::Real;

/// Spectral shape of the forcing distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingSpec<T> {
    pub beta: T,
    pub lambda_cut: T,
    pub res: Resolution,
    pub metric: MetricSpec<T>,
}

impl<T: Real> ForcingSpec<T> {
    pub const DEFAULT_BETA: f64 = 2.0;
    pub const DEFAULT_LAMBDA_CUT: f64 = 100.0;

    pub fn new(beta: T, lambda_cut: T, res: Resolution, metric: MetricSpec<T>) -> Result<Self> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        if !(lambda_cut > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lambda_cut must be positive, got {lambda_cut}"
            )));
        }
        Ok(Self {
            beta,
            lambda_cut,
            res,
            metric,
        })
    }

    /// Default decay `β = 2` and cutoff `λ_f = 100`.
    pub fn with_defaults(res: Resolution, metric: MetricSpec<T>) -> Self {
        Self {
            beta: T::lit(Self::DEFAULT_BETA),
            lambda_cut: T::lit(Self::DEFAULT_LAMBDA_CUT),
            res,
            metric,
        }
    }

    /// Whether mode `(k1, k2)` belongs to the forcing band. Nyquist modes never do.
    pub fn in_band(&self, k1: i64, k2: i64) -> bool {
        let half = (self.res.n() / 2) as i64;
        k1 != -half && k2 != -half && self.metric.symbol(k1, k2) <= self.lambda_cut
    }

    /// Expected `|f̂(k)|²` per channel before RMS normalization, up to a constant.
    pub fn mode_weight(&self, k1: i64, k2: i64) -> T {
        if self.in_band(k1, k2) {
            (T::one() + self.metric.symbol(k1, k2)).powf(-self.beta)
        } else {
            T::zero()
        }
    }
}

/// Counter-based seeded generator: each draw of a sample opens a fresh
/// ChaCha stream `(seed, counter)`, so sample `i` depends only on the seed
/// and its index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
    counter: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Opens the next independent stream and advances the counter.
    pub fn next_stream(&mut self) -> GaussianStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.counter);
        self.counter += 1;
        GaussianStream { rng, spare: None }
    }
}

/// Standard normal variates by the Box–Muller transform.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// One forcing sample and its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing<T> {
    pub field: GridField<T>,
    pub spectrum: SpectralField<T>,
}

pub(crate) fn draw_forcing<T: Real>(
    spec: &ForcingSpec<T>,
    stream: &mut GaussianStream,
) -> Result<Forcing<T>> {
    let res = spec.res;
    let p = res.plane();
    let mut raw = SpectralField::zeros(res);
    let mut any = false;
    {
        let c = raw.coeffs_mut();
        for (idx, k1, k2) in res.modes() {
            if !spec.in_band(k1, k2) {
                continue;
            }
            any = true;
            let amp = (T::one() + spec.metric.symbol(k1, k2)).powf(-spec.beta / T::lit(2.0));
            for ch in 0..2 {
                let re = T::lit(stream.normal());
                let im = T::lit(stream.normal());
                c[ch * p + idx] = Complex::new(re, im) * amp;
            }
        }
    }
    if !any {
        return Err(Error::EmptyBand {
            lambda_cut: spec.lambda_cut.as_f64(),
        });
    }
    let herm = raw.hermitian_part();
    let field = fft_inverse_hermitian(&herm);
    let rms = field.rms();
    if !(rms > T::zero()) {
        return Err(Error::EmptyBand {
            lambda_cut: spec.lambda_cut.as_f64(),
        });
    }
    let inv = T::one() / rms;
    let mut spectrum = herm;
    spectrum.coeffs_mut().iter_mut().for_each(|z| *z = *z * inv);
    Ok(Forcing {
        field: field.scale(inv),
        spectrum,
    })
}

/// Draws one RMS-normalized band-limited forcing.
pub fn sample_forcing<T: Real>(spec: &ForcingSpec<T>, rng: &mut SeededRng) -> Result<GridField<T>> {
    Ok(draw_forcing(spec, &mut rng.next_stream())?.field)
}

/// Draws `count` forcings; sample `i` uses stream `counter + i`.
pub fn sample_batch<T: Real>(
    spec: &ForcingSpec<T>,
    rng: &mut SeededRng,
    count: usize,
) -> Result<Vec<GridField<T>>> {
    Ok(sample_batch_spectral(spec, rng, count)?
        .into_iter()
        .map(|s| s.field)
        .collect())
}

/// Like [`sample_batch`] but keeps the spectra alongside the fields.
pub fn sample_batch_spectral<T: Real>(
    spec: &ForcingSpec<T>,
    rng: &mut SeededRng,
    count: usize,
) -> Result<Vec<Forcing<T>>> {
    if count == 0 {
        return Err(Error::InvalidParameter("batch count must be >= 1".into()));
    }
    (0..count)
        .map(|_| draw_forcing(spec, &mut rng.next_stream()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fft_forward;

    fn spec(n: usize, cut: f64) -> ForcingSpec<f64> {
        ForcingSpec::new(
            2.0,
            cut,
            Resolution::new(n).unwrap(),
            MetricSpec::euclidean(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn unit_rms_and_band_limit() {
        let s = spec(32, 30.0);
        let mut rng = SeededRng::new(5);
        for f in sample_batch(&s, &mut rng, 4).unwrap() {
            assert!((f.rms() - 1.0).abs() < 1e-12);
            let c = fft_forward(&f);
            for (idx, k1, k2) in s.res.modes() {
                if !s.in_band(k1, k2) {
                    let p = s.res.plane();
                    assert!(c.coeffs()[idx].norm() < 1e-14);
                    assert!(c.coeffs()[p + idx].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn dc_only_band_is_constant() {
        let s = spec(16, 0.5);
        let f = sample_forcing(&s, &mut SeededRng::new(1)).unwrap();
        for ch in 0..2 {
            let c = f.channel(ch);
            assert!(c.iter().all(|&v| (v - c[0]).abs() < 1e-13));
        }
    }

    #[test]
    fn determinism_and_distinct_seeds() {
        let s = spec(16, 100.0);
        let a = sample_forcing(&s, &mut SeededRng::new(42)).unwrap();
        let b = sample_forcing(&s, &mut SeededRng::new(42)).unwrap();
        assert_eq!(a.data(), b.data());
        let c = sample_forcing(&s, &mut SeededRng::new(43)).unwrap();
        assert!(a.data().iter().zip(c.data()).any(|(x, y)| x != y));

        let mut r = SeededRng::new(42);
        let batch = sample_batch(&s, &mut r, 1).unwrap();
        assert_eq!(batch[0], a);
        assert_eq!(r.counter(), 1);
    }

    #[test]
    fn rejects_bad_specs() {
        let res = Resolution::new(8).unwrap();
        let id = MetricSpec::euclidean(1.0).unwrap();
        assert!(ForcingSpec::new(-1.0, 10.0, res, id).is_err());
        assert!(ForcingSpec::new(2.0, 0.0, res, id).is_err());
        let s = spec(8, 10.0);
        assert!(sample_batch(&s, &mut SeededRng::new(0), 0).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let mut g = SeededRng::new(9).next_stream();
        let xs: Vec<f64> = (0..20000).map(|_| g.normal()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }
}
