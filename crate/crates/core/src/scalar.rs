//! Scalar abstraction shared by every numerical module.
//!
//! All field, oracle and model code is written against [`Real`], which is
//! implemented for `f32` and `f64`. The experiment drivers use `f64`.

use std::collections::HashMap;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{Float, FloatConst};
use rustfft::{Fft, FftDirection, FftNum, FftPlanner};

/// Floating-point scalar usable by the spectral machinery.
pub trait Real:
    Float + FloatConst + FftNum + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self;

    /// Widens the value to `f64`.
    fn as_f64(self) -> f64;

    /// Returns a cached 1-D FFT plan of length `n`.
    fn fft_plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<Self>>;

    /// Row-major `c ← op(a)·op(b) + beta·c` where `op(a)` is `m×k` and `op(b)` is `k×n`.
    ///
    /// With `a_t` set, `a` is stored as `k×m`; with `b_t`, `b` is stored as `n×k`.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        a_t: bool,
        b: &[Self],
        b_t: bool,
        c: &mut [Self],
        beta: Self,
    );

    /// Converts a count or index into the scalar type.
    fn count(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

type PlanCache<T> = Mutex<(FftPlanner<T>, HashMap<(usize, bool), Arc<dyn Fft<T>>>)>;

macro_rules! impl_real {
    ($t:ty, $gemm:path) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                a_t: bool,
                b: &[Self],
                b_t: bool,
                c: &mut [Self],
                beta: Self,
            ) {
                assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
                let (rsa, csa) = if a_t {
                    (1, m as isize)
                } else {
                    (k as isize, 1)
                };
                let (rsb, csb) = if b_t {
                    (1, k as isize)
                } else {
                    (n as isize, 1)
                };
                // SAFETY: the strides address at most m·k, k·n and m·n elements,
                // which the assertion above guarantees are in bounds.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }

            fn fft_plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<Self>> {
                static CACHE: OnceLock<PlanCache<$t>> = OnceLock::new();
                let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
                let mut guard = cache.lock().expect("fft plan cache poisoned");
                let key = (n, direction == FftDirection::Forward);
                if let Some(plan) = guard.1.get(&key) {
                    return Arc::clone(plan);
                }
                let plan = guard.0.plan_fft(n, direction);
                guard.1.insert(key, Arc::clone(&plan));
                plan
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm);
impl_real!(f64, matrixmultiply::dgemm);
