//! Deterministic quadrature for radial and planar integrals.

mod quad;
mod radial;

pub use quad::{quad_1d, quad_1d_points, QuadratureResult, MAX_DEPTH};
pub use radial::{
    angular_average_min_one_abs_x1, pv_quadrature, pv_ratio, stationary_expectation_planar,
    RadialFunctional, StationaryExpectation, TailEnvelope, DEFAULT_BOUND_TOL,
    DEFAULT_EXPECTATION_TOL, R_MAX, R_MIN,
};
