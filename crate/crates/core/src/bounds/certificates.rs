//! Minorization and drift certificates for the planar sampler, with the
//! numerical audits that back them.
//!
//! Certified constants: two-step minorization with `ε = 3.5e-5` on the radial
//! band `C = {1/4 ≤ r ≤ 4}`, and drift `PV ≤ 0.995 V + (e^{2.7} − 0.995) 1_C`
//! for `V = exp(H/2)`, with `sup_C PV ≤ e^{2.7}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{f_radial, f_radial_minimizer, v_lyapunov};
use crate::numerics::{
    pv_ratio, quad_1d, quad_1d_points, stationary_expectation_planar, QuadratureResult,
    RadialFunctional, DEFAULT_BOUND_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmallSet {
    WholeSpace,
    /// Constants supplied without a description of the small set.
    Unspecified,
    RadialBand { r_lo: f64, r_hi: f64 },
}

impl SmallSet {
    pub fn contains_radius(&self, r: f64) -> bool {
        match *self {
            SmallSet::WholeSpace => true,
            SmallSet::Unspecified => false,
            SmallSet::RadialBand { r_lo, r_hi } => r_lo <= r && r <= r_hi,
        }
    }
}

/// `P^{n0}(x, ·) ≥ ε Q(·)` for `x` in the small set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationCertificate {
    pub n0: u64,
    pub epsilon: f64,
    pub small_set: SmallSet,
    pub minorizing_measure: String,
}

impl MinorizationCertificate {
    pub fn new(n0: u64, epsilon: f64, small_set: SmallSet, minorizing_measure: impl Into<String>) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidInput("n0 must be at least 1".into()));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Domain { what: "epsilon must lie in (0, 1]", value: epsilon });
        }
        Ok(Self { n0, epsilon, small_set, minorizing_measure: minorizing_measure.into() })
    }
}

/// `PV ≤ λV + b 1_C` with `C = {V ≤ d}` and `A = sup_C PV`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCertificate {
    pub lambda: f64,
    pub b: f64,
    pub d: f64,
    pub a: f64,
    pub v_description: String,
}

impl DriftCertificate {
    pub fn new(lambda: f64, b: f64, d: f64, a: f64, v_description: impl Into<String>) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Domain { what: "lambda must lie in (0, 1)", value: lambda });
        }
        for (what, v) in [("b must be positive", b), ("d must be positive", d), ("A must be positive", a)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain { what, value: v });
            }
        }
        // A ≤ λd + b, up to rounding in the inputs
        if a > (lambda * d + b) * (1.0 + 1e-12) {
            return Err(Error::CertificateViolation(format!(
                "A = {a} exceeds lambda*d + b = {}",
                lambda * d + b
            )));
        }
        Ok(Self { lambda, b, d, a, v_description: v_description.into() })
    }
}

pub const PLANAR_EPSILON: f64 = 3.5e-5;
pub const PLANAR_LAMBDA: f64 = 0.995;
pub const PLANAR_SMALL_SET: SmallSet = SmallSet::RadialBand { r_lo: 0.25, r_hi: 4.0 };
/// `sup_C PV ≤ e^{2.7}`.
pub fn planar_pv_cap() -> f64 {
    2.7f64.exp()
}

/// The certified planar constants: `n0 = 2`, `ε = 3.5e-5`, `C = [1/4, 4]`;
/// `λ = 0.995`, `b = e^{2.7} − 0.995`, `d = e^{17/8}`, `A = e^{2.7}`.
pub fn certificate_theorem2() -> (MinorizationCertificate, DriftCertificate) {
    let mc = MinorizationCertificate {
        n0: 2,
        epsilon: PLANAR_EPSILON,
        small_set: PLANAR_SMALL_SET,
        minorizing_measure: "normalized density proportional to min{0.13(9/4 - |y|), 0.1(|y| - 2)} on 2 <= |y| <= 9/4"
            .into(),
    };
    let dc = DriftCertificate {
        lambda: PLANAR_LAMBDA,
        b: planar_pv_cap() - PLANAR_LAMBDA,
        d: (17.0f64 / 8.0).exp(),
        a: planar_pv_cap(),
        v_description: "V(x) = exp((|x| + 1/|x|)/2)".into(),
    };
    (mc, dc)
}

/// Radius where the two linear pieces of the overlap density cross:
/// `0.13(9/4 − r) = 0.1(r − 2)`.
pub fn minorization_crossover() -> f64 {
    0.4925 / 0.23
}

/// Radial integrand of the overlap density: `(1/16π)·min{…}` integrated over
/// the angle contributes `2π r`, leaving `min{…}·r/8`.
fn overlap_radial_density(r: f64) -> f64 {
    (0.13 * (2.25 - r)).min(0.1 * (r - 2.0)) * r / 8.0
}

/// Mass of the overlap density by exact antiderivatives on each linear piece.
pub fn minorization_mass_closed_form() -> f64 {
    let rc = minorization_crossover();
    let rising = |r: f64| 0.1 * (r.powi(3) / 3.0 - r * r) / 8.0;
    let falling = |r: f64| 0.13 * (9.0 * r * r / 8.0 - r.powi(3) / 3.0) / 8.0;
    (rising(rc) - rising(2.0)) + (falling(2.25) - falling(rc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationAudit {
    pub mass: QuadratureResult,
    pub mass_closed_form: f64,
    pub crossover_radius: f64,
    pub certified_epsilon: f64,
    /// `mass − certified_epsilon`.
    pub margin: f64,
}

/// Integrates the two-step overlap density over `D = {2 ≤ r ≤ 9/4}` and
/// checks its mass covers the certified `ε`.
pub fn verify_minorization_planar(tol: f64) -> Result<MinorizationAudit> {
    let rc = minorization_crossover();
    let mass = quad_1d_points(overlap_radial_density, 2.0, 2.25, &[rc], tol)?;
    let audit = MinorizationAudit {
        mass,
        mass_closed_form: minorization_mass_closed_form(),
        crossover_radius: rc,
        certified_epsilon: PLANAR_EPSILON,
        margin: mass.value - PLANAR_EPSILON,
    };
    if audit.mass.value < PLANAR_EPSILON {
        return Err(Error::CertificateViolation(format!(
            "overlap mass {} is below epsilon {PLANAR_EPSILON}",
            audit.mass.value
        )));
    }
    Ok(audit)
}

/// The four acceptance-ratio constants of the two-step minorization argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProofConstants {
    /// `min α` over `C1 × E1`: `f((√5−1)/2) / f(5/4)`.
    pub m1: f64,
    /// `min α` over `C2 × E2`: `f(2) / f(13/4)`.
    pub m2: f64,
    /// `min α` over `E1 × D`: `f(1) / f(9/4)`.
    pub m1_prime: f64,
    /// `min α` over `E2 × D`: `min{f(3)/f(9/4), 1}`.
    pub m2_prime: f64,
}

pub const M1_FLOOR: f64 = 0.59;
pub const M2_FLOOR: f64 = 0.21;
pub const M1_PRIME_FLOOR: f64 = 0.22;

pub fn proof_constants_planar() -> Result<ProofConstants> {
    let f = |r: f64| f_radial(r).expect("positive radius");
    let c = ProofConstants {
        m1: f(f_radial_minimizer()) / f(1.25),
        m2: f(2.0) / f(3.25),
        m1_prime: f(1.0) / f(2.25),
        m2_prime: (f(3.0) / f(2.25)).min(1.0),
    };
    let checks = [
        ("m1", c.m1, c.m1 >= M1_FLOOR, ">= 0.59"),
        ("m2", c.m2, c.m2 >= M2_FLOOR, ">= 0.21"),
        ("m1'", c.m1_prime, c.m1_prime >= M1_PRIME_FLOOR, ">= 0.22"),
        ("m2'", c.m2_prime, c.m2_prime == 1.0, "== 1"),
    ];
    for (name, value, ok, claim) in checks {
        if !ok {
            return Err(Error::CertificateViolation(format!("{name} = {value} fails {claim}")));
        }
    }
    Ok(c)
}

/// Closed-form upper bound on `PV/V` for `r_x > 4`:
/// `½(1 + 1/(2r) + m1 + m2 + m3/r)` with the drift-proof constants.
pub fn case1_ratio_bound(r_x: f64) -> f64 {
    let a = 11.0f64 / 24.0;
    let m1 = 1.0 + (-1.0f64).exp() - 2.0 * (-0.5f64).exp();
    let m2 = (840.0 * (-a).exp() - 576.0) / 121.0;
    let m3 = 24.0 * (1.0 - (-a).exp()) / 11.0;
    0.5 * (1.0 + 1.0 / (2.0 * r_x) + m1 + m2 + m3 / r_x)
}

/// Grid layout for the drift audit. Open regimes exclude their endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftGrid {
    pub points_per_regime: usize,
    /// Open interval below the small set.
    pub below: (f64, f64),
    /// Closed small set.
    pub inside: (f64, f64),
    /// Open interval above the small set, up to `R_check`.
    pub beyond: (f64, f64),
}

impl Default for DriftGrid {
    fn default() -> Self {
        Self { points_per_regime: 2000, below: (0.001, 0.25), inside: (0.25, 4.0), beyond: (4.0, 50.0) }
    }
}

fn open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

fn closed_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub points: usize,
    /// Largest audited quantity (`PV/V` off the small set, `PV` on it).
    pub max_value: f64,
    pub argmax_radius: f64,
    pub threshold: f64,
    /// Largest change of the audited quantity between adjacent grid points.
    pub continuity_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftAudit {
    pub grid: DriftGrid,
    pub tol: f64,
    pub below: RegimeSummary,
    pub inside: RegimeSummary,
    pub beyond: RegimeSummary,
    /// Closed-form `PV/V` bound valid for every `r > 4`, covering radii past the grid.
    pub case1_closed_form_sup: f64,
}

fn summarize(radii: &[f64], values: &[f64], threshold: f64) -> RegimeSummary {
    let (k, &max_value) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    let continuity_modulus = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    RegimeSummary { points: radii.len(), max_value, argmax_radius: radii[k], threshold, continuity_modulus }
}

fn ratios(radii: &[f64], tol: f64) -> Result<Vec<f64>> {
    radii.par_iter().map(|&r| pv_ratio(r, tol)).collect()
}

/// Audits the drift condition on a radial grid: `PV/V ≤ λ` off the small set
/// and `PV ≤ e^{2.7}` on it. Fails with the first offending radius.
pub fn verify_drift_planar(grid: &DriftGrid, tol: f64) -> Result<DriftAudit> {
    if grid.points_per_regime < 2 {
        return Err(Error::InvalidInput("drift grid needs at least 2 points per regime".into()));
    }
    let n = grid.points_per_regime;
    let below_r = open_grid(grid.below.0, grid.below.1, n);
    let inside_r = closed_grid(grid.inside.0, grid.inside.1, n);
    let beyond_r = open_grid(grid.beyond.0, grid.beyond.1, n);

    let below_v = ratios(&below_r, tol)?;
    let beyond_v = ratios(&beyond_r, tol)?;
    let inside_v: Vec<f64> = inside_r
        .par_iter()
        .map(|&r| Ok(pv_ratio(r, tol)? * v_lyapunov(r)?))
        .collect::<Result<_>>()?;

    let cap = planar_pv_cap();
    for (radii, values, limit, what) in [
        (&below_r, &below_v, PLANAR_LAMBDA, "PV/V"),
        (&beyond_r, &beyond_v, PLANAR_LAMBDA, "PV/V"),
        (&inside_r, &inside_v, cap, "PV"),
    ] {
        if let Some((r, v)) = radii.iter().zip(values.iter()).find(|(_, v)| **v > limit) {
            return Err(Error::CertificateViolation(format!("{what} = {v} exceeds {limit} at radius {r}")));
        }
    }
    let case1_closed_form_sup = case1_ratio_bound(grid.beyond.0);
    if case1_closed_form_sup > PLANAR_LAMBDA {
        return Err(Error::CertificateViolation(format!(
            "closed-form PV/V bound {case1_closed_form_sup} exceeds {PLANAR_LAMBDA} beyond r = {}",
            grid.beyond.0
        )));
    }
    Ok(DriftAudit {
        grid: *grid,
        tol,
        below: summarize(&below_r, &below_v, PLANAR_LAMBDA),
        inside: summarize(&inside_r, &inside_v, cap),
        beyond: summarize(&beyond_r, &beyond_v, PLANAR_LAMBDA),
        case1_closed_form_sup,
    })
}

/// `E_π(V) ≤ b/(1 − λ)` for any drift certificate.
pub fn stationary_v_bound(lambda: f64, b: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain { what: "lambda must lie in (0, 1)", value: lambda });
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain { what: "b must be positive", value: b });
    }
    Ok(b / (1.0 - lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryVCheck {
    pub quadrature: f64,
    pub bound: f64,
}

/// Compares the quadrature value of `E_π(V)` with the certified bound.
pub fn check_stationary_v() -> Result<StationaryVCheck> {
    let (_, dc) = certificate_theorem2();
    let bound = stationary_v_bound(dc.lambda, dc.b)?;
    let quadrature = stationary_expectation_planar(&RadialFunctional::lyapunov(), DEFAULT_BOUND_TOL)?.value;
    if !(quadrature < bound) {
        return Err(Error::CertificateViolation(format!("E_pi(V) = {quadrature} is not below {bound}")));
    }
    Ok(StationaryVCheck { quadrature, bound })
}

/// `∫_0^1 (e^{−t/2} − e^{−t}) dt`, the first drift-proof constant, by quadrature.
pub fn drift_constant_m1(tol: f64) -> Result<QuadratureResult> {
    quad_1d(|t| (-t / 2.0).exp() - (-t).exp(), 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn certified_constants() {
        let (mc, dc) = certificate_theorem2();
        assert_eq!((mc.n0, mc.epsilon), (2, 3.5e-5));
        assert_eq!(dc.lambda, 0.995);
        assert!(dc.a <= dc.lambda * dc.d + dc.b);
        assert!(MinorizationCertificate::new(mc.n0, mc.epsilon, mc.small_set, "Q").is_ok());
        assert!(DriftCertificate::new(dc.lambda, dc.b, dc.d, dc.a, "V").is_ok());
        assert!(mc.small_set.contains_radius(1.0) && !mc.small_set.contains_radius(4.5));
    }

    #[test]
    fn certificate_constructors_validate() {
        assert!(MinorizationCertificate::new(0, 0.1, SmallSet::WholeSpace, "Q").is_err());
        assert!(MinorizationCertificate::new(1, 1.5, SmallSet::WholeSpace, "Q").is_err());
        assert!(DriftCertificate::new(1.0, 1.0, 1.0, 1.0, "V").is_err());
        assert!(matches!(
            DriftCertificate::new(0.5, 1.0, 1.0, 10.0, "V"),
            Err(Error::CertificateViolation(_))
        ));
    }

    #[test]
    fn minorization_mass() {
        let a = verify_minorization_planar(1e-13).unwrap();
        assert!(a.mass.value >= 3.5e-5);
        assert!((a.mass.value - a.mass_closed_form).abs() < 1e-12);
        assert!(a.crossover_radius > 2.0 && a.crossover_radius < 2.25);
        let rc = a.crossover_radius;
        assert!((0.13 * (2.25 - rc) - 0.1 * (rc - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn proof_constants() {
        let c = proof_constants_planar().unwrap();
        assert!(c.m1 >= 0.59 && c.m2 >= 0.21 && c.m1_prime >= 0.22);
        assert_eq!(c.m2_prime, 1.0);
        // direct evaluation: f(1)/f(9/4) = e^2 / (2.25 e^{2.25 + 4/9})
        let direct = E.powi(2) / (2.25 * (2.25f64 + 4.0 / 9.0).exp());
        assert!((c.m1_prime - direct).abs() < 1e-14);
        assert!((c.m1_prime - 0.2219).abs() < 1e-4);
    }

    #[test]
    fn case1_bound_is_below_lambda() {
        assert!(case1_ratio_bound(4.0) < 0.995);
        assert!(case1_ratio_bound(100.0) < case1_ratio_bound(4.0));
    }

    #[test]
    fn drift_reference_points() {
        assert!(pv_ratio(10.0, 1e-10).unwrap() <= 0.995);
        assert!(pv_ratio(0.1, 1e-10).unwrap() <= (-13.0f64 / 12.0).exp());
        assert!(pv_ratio(1.0, 1e-10).unwrap() * E <= planar_pv_cap());
    }

    #[test]
    fn drift_audit_on_coarse_grid() {
        let grid = DriftGrid { points_per_regime: 200, ..DriftGrid::default() };
        let audit = verify_drift_planar(&grid, 1e-10).unwrap();
        assert!(audit.beyond.max_value < 0.995);
        assert!(audit.inside.max_value < planar_pv_cap());
        assert!(audit.below.max_value < (-13.0f64 / 12.0).exp());
    }

    #[test]
    fn drift_audit_reports_violations() {
        // PV/V exceeds λ on the small set itself, e.g. near r = 1
        let grid = DriftGrid { points_per_regime: 10, below: (0.5, 1.5), ..DriftGrid::default() };
        assert!(matches!(verify_drift_planar(&grid, 1e-10), Err(Error::CertificateViolation(_))));
    }

    #[test]
    fn stationary_bound() {
        assert_eq!(stationary_v_bound(0.5, 1.0).unwrap(), 2.0);
        let b = stationary_v_bound(0.995, 2.7f64.exp() - 0.995).unwrap();
        assert!((b - 2777.1).abs() < 0.5);
        assert!(stationary_v_bound(1.0, 1.0).is_err());
        let c = check_stationary_v().unwrap();
        assert!(c.quadrature < c.bound);
    }

    #[test]
    fn m1_by_quadrature() {
        let q = drift_constant_m1(1e-12).unwrap();
        assert!((q.value - (1.0 + (-1.0f64).exp() - 2.0 * (-0.5f64).exp())).abs() < 1e-14);
    }
}
