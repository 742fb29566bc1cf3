//! Radial integrals for the planar model: stationary expectations and the
//! drift operator `PV`.
//!
//! The planar target `exp(-(r + 1/r))` and the annulus proposal are both
//! rotation invariant, so every integral here reduces to one dimension in `r`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use super::quad::{quad_1d, quad_1d_points};
use crate::error::{Error, Result};
use crate::functional::RadialForm;
use crate::model::{annulus_of_radius, f_radial_minimizer, h_radial, ln_f_radial, v_lyapunov};

/// Lower integration limit; the discarded piece is below `e^{-1/R_MIN}`.
pub const R_MIN: f64 = 1e-6;
/// Default upper integration limit.
pub const R_MAX: f64 = 50.0;

pub const DEFAULT_EXPECTATION_TOL: f64 = 1e-8;
pub const DEFAULT_BOUND_TOL: f64 = 1e-10;

/// Growth bound on `|g|`, used to bound the truncated tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailEnvelope {
    /// `|g(r)| ≤ sup` everywhere.
    Bounded(f64),
    /// `|g(r)| ≤ exp(H(r)/2)`, the growth of the Lyapunov function.
    HalfEnergy,
}

impl TailEnvelope {
    /// Bound on `∫_{r_max}^∞ |g(r)| r e^{-H(r)} dr`.
    pub fn upper_tail(&self, r_max: f64) -> f64 {
        match *self {
            TailEnvelope::Bounded(sup) => (r_max + 1.0) * (-r_max).exp() * sup,
            TailEnvelope::HalfEnergy => 2.0 * (r_max + 2.0) * (-r_max / 2.0).exp(),
        }
    }

    /// Bound on `∫_0^{r_min} |g(r)| r e^{-H(r)} dr`.
    pub fn lower_tail(&self, r_min: f64) -> f64 {
        match *self {
            TailEnvelope::Bounded(sup) => r_min * (-1.0 / r_min).exp() * sup,
            TailEnvelope::HalfEnergy => r_min * (-0.5 / r_min).exp(),
        }
    }
}

/// A planar functional reduced to its circular average `g(r)`.
pub struct RadialFunctional {
    pub name: String,
    g: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub breakpoints: Vec<f64>,
    pub envelope: TailEnvelope,
}

impl std::fmt::Debug for RadialFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialFunctional")
            .field("name", &self.name)
            .field("breakpoints", &self.breakpoints)
            .field("envelope", &self.envelope)
            .finish()
    }
}

impl RadialFunctional {
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        breakpoints: Vec<f64>,
        envelope: TailEnvelope,
    ) -> Self {
        Self { name: name.into(), g: Box::new(g), breakpoints, envelope }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant {c}"), move |_| c, vec![], TailEnvelope::Bounded(c.abs()))
    }

    pub fn from_form(name: &str, form: &RadialForm) -> Self {
        Self::new(name, form.average, form.breakpoints.to_vec(), TailEnvelope::Bounded(form.sup_abs))
    }

    /// `V(r) = exp(H(r)/2)`.
    pub fn lyapunov() -> Self {
        Self::new("V", |r| (0.5 * (r + 1.0 / r)).exp(), vec![], TailEnvelope::HalfEnergy)
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.g)(r)
    }
}

/// Stationary weight `r·e^{-H(r)}` of the radial density (without the 2π).
fn stationary_weight(r: f64) -> f64 {
    r * (-(r + 1.0 / r)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryExpectation {
    /// `2π ∫ g(r) r e^{-H(r)} dr`.
    pub numerator: f64,
    /// `2π ∫ r e^{-H(r)} dr`, the normalizing constant.
    pub denominator: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub tail_bound: f64,
}

/// `E_π[g]` for the planar model by quadrature on `[R_MIN, r_max]`, with
/// `r_max ≥ R_MAX` widened in steps of 10 until the analytic tail bound is
/// below `tol`.
pub fn stationary_expectation_planar(fun: &RadialFunctional, tol: f64) -> Result<StationaryExpectation> {
    let mut r_max = R_MAX;
    while fun.envelope.upper_tail(r_max) > tol {
        r_max += 10.0;
        if r_max > 2000.0 {
            return Err(Error::InvalidInput(format!("tail of {} cannot be bounded below {tol}", fun.name)));
        }
    }
    let tail_bound = fun.envelope.upper_tail(r_max) + fun.envelope.lower_tail(R_MIN);
    let den = quad_1d(stationary_weight, R_MIN, r_max, tol)?;
    let num = quad_1d_points(
        |r| {
            let w = stationary_weight(r);
            if w == 0.0 {
                0.0
            } else {
                fun.eval(r) * w
            }
        },
        R_MIN,
        r_max,
        &fun.breakpoints,
        tol,
    )?;
    let numerator = TAU * num.value;
    let denominator = TAU * den.value;
    Ok(StationaryExpectation {
        numerator,
        denominator,
        value: numerator / denominator,
        error_estimate: TAU * (num.error_estimate + den.error_estimate) / denominator,
        r_min: R_MIN,
        r_max,
        tail_bound,
    })
}

/// Radius on the opposite side of the minimizer of `f` with the same `f`
/// value; `α(r_x, ·)` has its second kink there. Found by bisection on `ln f`.
fn mirror_radius(r_x: f64) -> Option<f64> {
    let r_star = f_radial_minimizer();
    let target = ln_f_radial(r_x).ok()?;
    let lf = |r: f64| ln_f_radial(r).unwrap_or(f64::INFINITY);
    // f is unbounded on both sides of r_star, so a bracket always exists
    let (mut lo, mut hi, decreasing) = if r_x > r_star {
        let mut lo = 0.5 * r_star;
        while lf(lo) < target {
            lo *= 0.5;
        }
        (lo, r_star, true)
    } else if r_x < r_star {
        let mut hi = 2.0 * r_star;
        while lf(hi) < target {
            hi *= 2.0;
        }
        (r_star, hi, false)
    } else {
        return None;
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let above = lf(mid) > target;
        if above == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `PV(r_x)/V(r_x)`, integrated in the normalized form
/// `(1/(2 r_x)) ∫ [α(r_x, r)·V(r)/V(r_x) + 1 − α(r_x, r)] r dr` over the
/// proposal annulus. `tol` is an absolute tolerance on this ratio.
pub fn pv_ratio(r_x: f64, tol: f64) -> Result<f64> {
    let ann = annulus_of_radius(r_x)?;
    let lf_x = ln_f_radial(r_x)?;
    let h_x = h_radial(r_x)?;
    let integrand = |r: f64| {
        let lf_y = r.ln() + r + 1.0 / r;
        let log_alpha = (lf_x - lf_y).min(0.0);
        let moved = (log_alpha + 0.5 * (r + 1.0 / r - h_x)).exp();
        (moved + 1.0 - log_alpha.exp()) * r
    };
    let mut cuts = vec![r_x];
    cuts.extend(mirror_radius(r_x));
    // the 1/(2 r_x) prefactor scales the error, so share the tolerance accordingly
    let q = quad_1d_points(integrand, ann.inner, ann.outer, &cuts, tol * 2.0 * r_x)?;
    Ok(q.value / (2.0 * r_x))
}

/// `PV(r_x) = E[V(X_1) | X_0 = x]` for the planar kernel.
pub fn pv_quadrature(r_x: f64, tol: f64) -> Result<f64> {
    Ok(pv_ratio(r_x, tol)? * v_lyapunov(r_x)?)
}

/// Circular average of `min(1, |x₁|)` at radius `r`, by nested quadrature of
/// `(2/π) ∫_0^{π/2} min(1, r cos θ) dθ`.
pub fn angular_average_min_one_abs_x1(r: f64) -> f64 {
    if r <= 1.0 {
        return 2.0 * r / PI;
    }
    let kink = (1.0 / r).acos();
    let inner = quad_1d_points(|t: f64| (r * t.cos()).min(1.0), 0.0, FRAC_PI_2, &[kink], 1e-13);
    let v = match inner {
        Ok(q) => q.value,
        Err(Error::Quadrature { best, .. }) => best,
        Err(_) => f64::NAN,
    };
    2.0 * v / PI
}
