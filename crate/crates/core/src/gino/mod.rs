//! Gauge-equivariant spectral operator: truncated Chebyshev multipliers around
//! a radial pointwise nonlinearity.

pub mod chebyshev;
mod hodge;
mod model;
pub mod radial;

pub use chebyshev::{cheb_eval, ChebMultiplier};
pub use hodge::{head_projector, HodgeCache, HodgeGino, HodgeHead};
pub use model::{GinoCache, GinoConfig, GinoGradients, GinoModel, SpectralPlan};
pub use radial::{RadialCache, RadialGrads, RadialParams};

/// Applies one truncated multiplier stage, `û(k) = m(λ_g(k)) f̂(k)`.
pub fn multiplier_apply<T: crate::Real>(
    mult: &ChebMultiplier<T>,
    f: &crate::grid::GridField<T>,
    metric: &crate::grid::MetricSpec<T>,
) -> crate::grid::GridField<T> {
    GinoModel::multiplier_apply(mult, f, metric)
}

/// `ρ(|u|) u` pointwise.
pub fn radial_apply<T: crate::Real>(
    rho: &RadialParams<T>,
    u: &crate::grid::GridField<T>,
) -> crate::grid::GridField<T> {
    rho.apply(u)
}

#[cfg(test)]
mod tests;
