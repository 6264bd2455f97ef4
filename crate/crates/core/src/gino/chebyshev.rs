//! Chebyshev-parameterized spectral multipliers on `[0, Λ]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Points of the uniform λ-grid used by [`ChebMultiplier::roughness`].
pub const ROUGHNESS_GRID: usize = 1024;
/// Trapezoid nodes used by [`ChebMultiplier::smoothness_penalty`].
pub const PENALTY_NODES: usize = 256;

/// `m(λ) = Σ_j θ_j T_j(2λ/Λ - 1)` for `λ ≤ Λ`, and `0` beyond the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebMultiplier<T> {
    coeffs: Vec<T>,
    lambda_max: T,
}

/// Clenshaw evaluation of `Σ c_j T_j(t)`.
#[inline]
pub fn clenshaw<T: Real>(coeffs: &[T], t: T) -> T {
    let two_t = t + t;
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = two_t * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(&c0) => c0 + t * b1 - b2,
        None => T::zero(),
    }
}

/// Chebyshev coefficients of `d/dt Σ c_j T_j(t)`.
pub fn derivative_coeffs<T: Real>(coeffs: &[T]) -> Vec<T> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return vec![T::zero()];
    }
    let mut d = vec![T::zero(); deg + 1];
    for j in (1..=deg).rev() {
        d[j - 1] = d.get(j + 1).copied().unwrap_or(T::zero()) + T::count(2 * j) * coeffs[j];
    }
    d[0] = d[0] * T::lit(0.5);
    d.truncate(deg);
    d
}

/// Fills `out[j] = T_j(t)`.
#[inline]
pub fn basis_values<T: Real>(t: T, out: &mut [T]) {
    let mut prev = T::one();
    let mut cur = t;
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = match j {
            0 => T::one(),
            1 => t,
            _ => {
                let next = (t + t) * cur - prev;
                prev = cur;
                cur = next;
                next
            }
        };
    }
}

/// Fills `out[j] = T_j'(t)` via `T'_{j+1} = 2 T_j + 2t T'_j - T'_{j-1}`.
pub fn basis_derivatives<T: Real>(t: T, out: &mut [T]) {
    let mut tv = vec![T::zero(); out.len()];
    basis_values(t, &mut tv);
    for j in 0..out.len() {
        out[j] = match j {
            0 => T::zero(),
            1 => T::one(),
            _ => T::lit(2.0) * tv[j - 1] + (t + t) * out[j - 1] - out[j - 2],
        };
    }
}

impl<T: Real> ChebMultiplier<T> {
    pub fn new(coeffs: Vec<T>, lambda_max: T) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "multiplier needs at least one coefficient".into(),
            ));
        }
        if !(lambda_max > T::zero()) || !lambda_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, got {lambda_max}"
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite multiplier coefficient".into(),
            ));
        }
        Ok(Self { coeffs, lambda_max })
    }

    /// Constant multiplier `m ≡ value` on the band.
    pub fn constant(value: T, degree: usize, lambda_max: T) -> Result<Self> {
        let mut c = vec![T::zero(); degree + 1];
        c[0] = value;
        Self::new(c, lambda_max)
    }

    /// Chebyshev interpolant of `f` on `[0, Λ]` at `degree + 1` Gauss nodes.
    pub fn interpolate(f: impl Fn(T) -> T, degree: usize, lambda_max: T) -> Result<Self> {
        let count = degree + 1;
        let nodes: Vec<(f64, T)> = (0..count)
            .map(|i| {
                let angle = std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                let t = T::lit(angle.cos());
                (angle, f((t + T::one()) * lambda_max / T::lit(2.0)))
            })
            .collect();
        let coeffs = (0..count)
            .map(|j| {
                let s: T = nodes
                    .iter()
                    .map(|&(a, v)| v * T::lit((j as f64 * a).cos()))
                    .sum();
                let scale = if j == 0 { 1.0 } else { 2.0 };
                s * T::lit(scale / count as f64)
            })
            .collect();
        Self::new(coeffs, lambda_max)
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    #[inline]
    pub fn lambda_max(&self) -> T {
        self.lambda_max
    }

    /// Polynomial degree `J`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn to_unit(&self, lambda: T) -> T {
        (lambda + lambda) / self.lambda_max - T::one()
    }

    /// Truncated multiplier value.
    #[inline]
    pub fn eval(&self, lambda: T) -> T {
        if lambda > self.lambda_max {
            T::zero()
        } else {
            clenshaw(&self.coeffs, self.to_unit(lambda))
        }
    }

    /// `dm/dλ` on `[0, Λ]` by exact coefficient differentiation.
    pub fn derivative(&self, lambda: T) -> T {
        let d = derivative_coeffs(&self.coeffs);
        clenshaw(&d, self.to_unit(lambda)) * T::lit(2.0) / self.lambda_max
    }

    /// `max |m'(λ)|` over a uniform 1024-point grid on `[0, Λ]`.
    pub fn roughness(&self) -> T {
        let d = derivative_coeffs(&self.coeffs);
        let scale = T::lit(2.0) / self.lambda_max;
        (0..ROUGHNESS_GRID)
            .map(|i| {
                let t = T::lit(2.0 * i as f64 / (ROUGHNESS_GRID - 1) as f64 - 1.0);
                (clenshaw(&d, t) * scale).abs()
            })
            .fold(T::zero(), T::max)
    }

    /// `∫₀^Λ m'(λ)² dλ` by a 256-node composite trapezoid rule, with its exact
    /// gradient in the coefficients.
    pub fn smoothness_penalty(&self) -> (T, Vec<T>) {
        let len = self.coeffs.len();
        let h = self.lambda_max / T::count(PENALTY_NODES - 1);
        let scale = T::lit(2.0) / self.lambda_max;
        let mut value = T::zero();
        let mut grad = vec![T::zero(); len];
        let mut dbasis = vec![T::zero(); len];
        for i in 0..PENALTY_NODES {
            let t = T::lit(2.0 * i as f64 / (PENALTY_NODES - 1) as f64 - 1.0);
            basis_derivatives(t, &mut dbasis);
            let slope: T = self
                .coeffs
                .iter()
                .zip(&dbasis)
                .map(|(&c, &b)| c * b)
                .sum::<T>()
                * scale;
            let w = if i == 0 || i == PENALTY_NODES - 1 {
                h * T::lit(0.5)
            } else {
                h
            };
            value = value + w * slope * slope;
            let gs = T::lit(2.0) * w * slope * scale;
            grad.iter_mut()
                .zip(&dbasis)
                .for_each(|(g, &b)| *g = *g + gs * b);
        }
        (value, grad)
    }
}

/// Free-function form of [`ChebMultiplier::eval`].
pub fn cheb_eval<T: Real>(mult: &ChebMultiplier<T>, lambda: T) -> T {
    mult.eval(lambda)
}
