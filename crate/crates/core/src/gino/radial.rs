//! Pointwise radial nonlinearity `w(x) = ρ(|v(x)|) v(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, CHANNELS};
use crate::scalar::Real;

/// Upper bound on `|gain|`, keeping `ρ` within `[0.1, 1.9]`.
pub const GAIN_LIMIT: f64 = 0.9;
/// Default hidden width.
pub const HIDDEN: usize = 16;
const SMALL_RADIUS: f64 = 1e-12;

/// `ρ(r) = 1 + gain · tanh(Σ_h w2_h tanh(w1_h r + b1_h) + b2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialParams<T> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
    pub gain: T,
}

/// Gradients with the same layout as [`RadialParams`].
pub type RadialGrads<T> = RadialParams<T>;

/// Per-point activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct RadialCache<T> {
    radius: Vec<T>,
    hidden: Vec<T>,
    outer: Vec<T>,
}

impl<T: Real> RadialParams<T> {
    pub fn new(w1: Vec<T>, b1: Vec<T>, w2: Vec<T>, b2: T, gain: T) -> Result<Self> {
        let p = Self {
            w1,
            b1,
            w2,
            b2,
            gain,
        };
        p.validate()?;
        Ok(p)
    }

    /// The identity nonlinearity `ρ ≡ 1`.
    pub fn identity(hidden: usize) -> Self {
        Self {
            w1: vec![T::zero(); hidden],
            b1: vec![T::zero(); hidden],
            w2: vec![T::zero(); hidden],
            b2: T::zero(),
            gain: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.w1.len();
        if h == 0 || self.b1.len() != h || self.w2.len() != h {
            return Err(Error::ShapeMismatch(format!(
                "radial widths w1={} b1={} w2={}",
                self.w1.len(),
                self.b1.len(),
                self.w2.len()
            )));
        }
        if self.gain.abs() > T::lit(GAIN_LIMIT) {
            return Err(Error::InvalidParameter(format!(
                "radial gain {} exceeds {GAIN_LIMIT}",
                self.gain
            )));
        }
        let all = self.w1.iter().chain(&self.b1).chain(&self.w2);
        if all.chain([&self.b2, &self.gain]).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    pub fn param_count(&self) -> usize {
        3 * self.hidden() + 2
    }

    /// Clamps `gain` back into `[-0.9, 0.9]`.
    pub fn clamp_gain(&mut self) {
        let lim = T::lit(GAIN_LIMIT);
        self.gain = self.gain.max(-lim).min(lim);
    }

    #[inline]
    fn inner(&self, r: T) -> T {
        let mut z = self.b2;
        for h in 0..self.w1.len() {
            z = z + self.w2[h] * (self.w1[h] * r + self.b1[h]).tanh();
        }
        z
    }

    /// `ρ(r)`.
    #[inline]
    pub fn rho(&self, r: T) -> T {
        T::one() + self.gain * self.inner(r).tanh()
    }

    /// `ρ'(r)`.
    pub fn rho_prime(&self, r: T) -> T {
        let tz = self.inner(r).tanh();
        let mut dz = T::zero();
        for h in 0..self.w1.len() {
            let t = (self.w1[h] * r + self.b1[h]).tanh();
            dz = dz + self.w2[h] * (T::one() - t * t) * self.w1[h];
        }
        self.gain * (T::one() - tz * tz) * dz
    }

    /// Applies `v ↦ ρ(|v|) v` pointwise.
    pub fn apply(&self, v: &GridField<T>) -> GridField<T> {
        self.forward(v).0
    }

    /// Forward pass with the cache needed by [`RadialParams::backward`].
    pub fn forward(&self, v: &GridField<T>) -> (GridField<T>, RadialCache<T>) {
        let plane = v.res().plane();
        let hid = self.hidden();
        let src = v.data();
        let mut out = vec![T::zero(); CHANNELS * plane];
        let mut radius = Vec::with_capacity(plane);
        let mut hidden = vec![T::zero(); plane * hid];
        let mut outer = Vec::with_capacity(plane);
        for p in 0..plane {
            let (a, b) = (src[p], src[plane + p]);
            let r = (a * a + b * b).sqrt();
            let hs = &mut hidden[p * hid..(p + 1) * hid];
            let mut z = self.b2;
            for h in 0..hid {
                let t = (self.w1[h] * r + self.b1[h]).tanh();
                hs[h] = t;
                z = z + self.w2[h] * t;
            }
            let tz = z.tanh();
            let rho = T::one() + self.gain * tz;
            out[p] = rho * a;
            out[plane + p] = rho * b;
            radius.push(r);
            outer.push(tz);
        }
        (
            GridField::from_vec_unchecked(v.res(), out),
            RadialCache {
                radius,
                hidden,
                outer,
            },
        )
    }

    /// Given `v`, its cache and `∂L/∂w`, returns `∂L/∂v` and the parameter gradient.
    ///
    /// `∂L/∂v = ρ g + ρ'(r) (v·g) v / r`, with the `r → 0` limit `ρ(0) g`.
    pub fn backward(
        &self,
        v: &GridField<T>,
        cache: &RadialCache<T>,
        grad_out: &GridField<T>,
    ) -> Result<(GridField<T>, RadialGrads<T>)> {
        let plane = v.res().plane();
        let hid = self.hidden();
        if grad_out.res() != v.res()
            || cache.radius.len() != plane
            || cache.hidden.len() != plane * hid
        {
            return Err(Error::CacheMismatch(
                "radial cache does not match input".into(),
            ));
        }
        let src = v.data();
        let g = grad_out.data();
        let mut gin = vec![T::zero(); CHANNELS * plane];
        let mut grads = Self::identity(hid);
        let small = T::lit(SMALL_RADIUS);
        for p in 0..plane {
            let (a, b) = (src[p], src[plane + p]);
            let (ga, gb) = (g[p], g[plane + p]);
            let r = cache.radius[p];
            let tz = cache.outer[p];
            let hs = &cache.hidden[p * hid..(p + 1) * hid];
            let rho = T::one() + self.gain * tz;
            let sz = self.gain * (T::one() - tz * tz);
            let q = a * ga + b * gb;
            let qsz = q * sz;
            grads.gain = grads.gain + q * tz;
            grads.b2 = grads.b2 + qsz;
            let mut dz_dr = T::zero();
            for h in 0..hid {
                let t = hs[h];
                let dt = T::one() - t * t;
                grads.w2[h] = grads.w2[h] + qsz * t;
                let back = qsz * self.w2[h] * dt;
                grads.b1[h] = grads.b1[h] + back;
                grads.w1[h] = grads.w1[h] + back * r;
                dz_dr = dz_dr + self.w2[h] * dt * self.w1[h];
            }
            let (mut da, mut db) = (rho * ga, rho * gb);
            if r >= small {
                let k = sz * dz_dr * q / r;
                da = da + k * a;
                db = db + k * b;
            }
            gin[p] = da;
            gin[plane + p] = db;
        }
        Ok((GridField::from_vec_unchecked(v.res(), gin), grads))
    }

    pub(crate) fn flatten_into(&self, out: &mut Vec<T>) {
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.push(self.b2);
        out.push(self.gain);
    }

    /// Reads parameters laid out as by `flatten_into`; returns the count consumed.
    pub(crate) fn assign_from(&mut self, src: &[T]) -> usize {
        let h = self.hidden();
        self.w1.copy_from_slice(&src[..h]);
        self.b1.copy_from_slice(&src[h..2 * h]);
        self.w2.copy_from_slice(&src[2 * h..3 * h]);
        self.b2 = src[3 * h];
        self.gain = src[3 * h + 1];
        3 * h + 2
    }
}
