//! Convergence-rate bounds and the numerical audits of their certificates.

mod certificates;
mod shift;
mod uniform;

use serde::Serialize;

pub use certificates::{
    case1_ratio_bound, certificate_theorem2, check_stationary_v, drift_constant_m1, minorization_crossover,
    minorization_mass_closed_form, planar_pv_cap, proof_constants_planar, stationary_v_bound,
    verify_drift_planar, verify_minorization_planar, DriftAudit, DriftCertificate, DriftGrid,
    MinorizationAudit, MinorizationCertificate, ProofConstants, RegimeSummary, SmallSet, StationaryVCheck,
    M1_FLOOR, M1_PRIME_FLOOR, M2_FLOOR, PLANAR_EPSILON, PLANAR_LAMBDA, PLANAR_SMALL_SET,
};
pub use shift::{
    admissibility_factor, admissible_r_limit, optimize_r, shift_coupling_bound, shift_coupling_coefficient,
    OptimizedR,
};
pub use uniform::{
    epsilon_for_params, epsilon_theorem1, floor_to_decimals, iterations_for_tolerance, tv_bound_uniform,
    uniform_report, UniformBoundReport, ATTRACTION_EXPONENT, REPULSION_EXPONENT, SEPARATED_VOLUME,
};

use crate::error::Result;

/// One admissibility evaluation, for tracing how close `r` is to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityPoint {
    pub r: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftCouplingReport {
    pub minorization: MinorizationCertificate,
    pub drift: DriftCertificate,
    pub e_nu_v: f64,
    pub r: f64,
    pub admissibility_factor: f64,
    /// Bound at `n` is `coefficient / n`.
    pub coefficient: f64,
    pub stationary_v_bound: f64,
    pub optimized: OptimizedR,
    pub admissible_r_limit: Option<f64>,
    pub admissibility_trace: Vec<AdmissibilityPoint>,
}

/// A computed bound with its inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundReport {
    Uniform(UniformBoundReport),
    ShiftCoupling(ShiftCouplingReport),
}

/// Evaluates the shift-coupling coefficient at `r`, the optimized `r`, and the
/// admissibility factor on a short log grid through `r`.
pub fn shift_coupling_report(
    mc: &MinorizationCertificate,
    dc: &DriftCertificate,
    e_nu_v: f64,
    r: f64,
) -> Result<ShiftCouplingReport> {
    let coefficient = shift_coupling_coefficient(mc, dc, e_nu_v, r)?;
    let optimized = optimize_r(mc, dc, e_nu_v)?;
    let admissibility_trace = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&s| r * s)
        .filter(|&x| x < 1.0)
        .map(|x| AdmissibilityPoint { r: x, factor: admissibility_factor(mc, dc, x) })
        .collect();
    Ok(ShiftCouplingReport {
        minorization: mc.clone(),
        drift: dc.clone(),
        e_nu_v,
        r,
        admissibility_factor: admissibility_factor(mc, dc, r),
        coefficient,
        stationary_v_bound: stationary_v_bound(dc.lambda, dc.b)?,
        optimized,
        admissible_r_limit: admissible_r_limit(mc, dc),
        admissibility_trace,
    })
}
