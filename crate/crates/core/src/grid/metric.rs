use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Constant metric on the torus: tensor `M`, its inverse `A`, and the
/// resolvent shift `alpha`. The Laplacian symbol is `λ_g(k) = kᵀ A k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec<T> {
    m: [[T; 2]; 2],
    a: [[T; 2]; 2],
    alpha: T,
}

fn inverse2<T: Real>(m: [[T; 2]; 2]) -> [[T; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

fn tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

impl<T: Real> MetricSpec<T> {
    /// Builds the metric from `M`, computing `A = M⁻¹`.
    pub fn new(m: [[T; 2]; 2], alpha: T) -> Result<Self> {
        Self::validate_spd(&m, "metric tensor")?;
        Self::with_inverse(m, inverse2(m), alpha)
    }

    /// Builds the metric from both `M` and `A`, checking `A·M = I`.
    pub fn with_inverse(m: [[T; 2]; 2], a: [[T; 2]; 2], alpha: T) -> Result<Self> {
        Self::validate_spd(&m, "metric tensor")?;
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidMetric(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let tol = tolerance::<T>();
        for i in 0..2 {
            for j in 0..2 {
                let prod = a[i][0] * m[0][j] + a[i][1] * m[1][j];
                let id = if i == j { T::one() } else { T::zero() };
                if (prod - id).abs() > tol {
                    return Err(Error::InvalidMetric(format!(
                        "A·M deviates from the identity at ({i},{j}) by {}",
                        (prod - id).abs()
                    )));
                }
            }
        }
        Ok(Self { m, a, alpha })
    }

    fn validate_spd(m: &[[T; 2]; 2], what: &str) -> Result<()> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric(format!(
                "{what} has non-finite entries"
            )));
        }
        let scale = m.iter().flatten().fold(T::zero(), |s, v| s.max(v.abs()));
        if (m[0][1] - m[1][0]).abs() > tolerance::<T>() * scale.max(T::one()) {
            return Err(Error::InvalidMetric(format!("{what} is not symmetric")));
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !(m[0][0] > T::zero()) || !(det > T::zero()) {
            return Err(Error::InvalidMetric(format!(
                "{what} is not positive definite"
            )));
        }
        Ok(())
    }

    /// Flat metric `M = A = I`.
    pub fn euclidean(alpha: T) -> Result<Self> {
        let id = [[T::one(), T::zero()], [T::zero(), T::one()]];
        Self::with_inverse(id, id, alpha)
    }

    /// `M(δ) = R diag(1+δ, 1-δ) Rᵀ` with `R` the rotation by `angle`, written as
    /// `I + δ·R diag(1,-1) Rᵀ` so that `δ = 0` gives the identity bit-exactly.
    pub fn anisotropic(delta: T, angle: T, alpha: T) -> Result<Self> {
        if !(delta.abs() < T::one()) {
            return Err(Error::InvalidMetric(format!(
                "|delta| must be < 1, got {delta}"
            )));
        }
        let two = T::lit(2.0);
        let (s2, c2) = (two * angle).sin_cos();
        let m = [
            [T::one() + delta * c2, delta * s2],
            [delta * s2, T::one() - delta * c2],
        ];
        Self::new(m, alpha)
    }

    #[inline]
    pub fn m(&self) -> [[T; 2]; 2] {
        self.m
    }

    #[inline]
    pub fn a(&self) -> [[T; 2]; 2] {
        self.a
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: T) -> Result<Self> {
        Self::with_inverse(self.m, self.a, alpha)
    }

    /// `λ_g(k) = kᵀ A k`.
    #[inline]
    pub fn symbol(&self, k1: i64, k2: i64) -> T {
        let x = T::lit(k1 as f64);
        let y = T::lit(k2 as f64);
        self.a[0][0] * x * x + (self.a[0][1] + self.a[1][0]) * x * y + self.a[1][1] * y * y
    }

    /// `‖M - I‖_F`.
    pub fn distance_from_identity(&self) -> T {
        let d00 = self.m[0][0] - T::one();
        let d11 = self.m[1][1] - T::one();
        (d00 * d00 + d11 * d11 + self.m[0][1] * self.m[0][1] + self.m[1][0] * self.m[1][0]).sqrt()
    }
}

/// Spectral symbol `λ_g(k) = kᵀ A k` of the metric Laplacian.
pub fn spectral_symbol<T: Real>(k: [i64; 2], metric: &MetricSpec<T>) -> T {
    metric.symbol(k[0], k[1])
}
