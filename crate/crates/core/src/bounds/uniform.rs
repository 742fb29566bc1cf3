//! Uniform-ergodicity bound for the three-particle square model.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Lower bound on the Lebesgue volume of the well-separated configurations.
pub const SEPARATED_VOLUME: f64 = 0.48;
/// `2·3√2` rounded up: bounds twice the attraction spread.
pub const ATTRACTION_EXPONENT: f64 = 8.49;
/// `2·(12 − 3/√2)` rounded up: bounds twice the repulsion spread.
pub const REPULSION_EXPONENT: f64 = 19.76;

/// Minorization constant `0.48·exp(−8.49 c1 − 19.76 c2)` of the three-particle
/// square sampler (with `n0 = 1`, small set the whole space).
pub fn epsilon_theorem1(c1: f64, c2: f64) -> Result<f64> {
    if !(c1 >= 0.0 && c1.is_finite()) {
        return Err(Error::Domain { what: "c1 must be a finite nonnegative real", value: c1 });
    }
    if !(c2 >= 0.0 && c2.is_finite()) {
        return Err(Error::Domain { what: "c2 must be a finite nonnegative real", value: c2 });
    }
    Ok(SEPARATED_VOLUME * (-ATTRACTION_EXPONENT * c1 - REPULSION_EXPONENT * c2).exp())
}

/// As [`epsilon_theorem1`], but checks the model has exactly three particles;
/// the constants are derived for that case only.
pub fn epsilon_for_params(params: &ModelParams) -> Result<f64> {
    if params.n_particles != 3 {
        return Err(Error::InvalidInput(format!(
            "the uniform minorization constant is only derived for 3 particles, got {}",
            params.n_particles
        )));
    }
    epsilon_theorem1(params.c1, params.c2)
}

/// Rounds `eps` down to `decimals` decimal places. A smaller minorization
/// constant is still a valid one, so this keeps the certificate sound.
pub fn floor_to_decimals(eps: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let floored = (eps * scale).floor() / scale;
    // guard against the division landing a hair above eps
    if floored > eps {
        ((eps * scale).floor() - 1.0) / scale
    } else {
        floored
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: "epsilon must lie in (0, 1]", value: eps })
    }
}

/// `(1 − ε)^⌊n/n0⌋`.
pub fn tv_bound_uniform(epsilon: f64, n0: u64, n: u64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if n0 == 0 {
        return Err(Error::InvalidInput("n0 must be at least 1".into()));
    }
    let blocks = n / n0;
    Ok((1.0 - epsilon).powf(blocks as f64))
}

/// Smallest `n` with `(1 − ε)^⌊n/n0⌋ ≤ δ`.
pub fn iterations_for_tolerance(epsilon: f64, n0: u64, delta: f64) -> Result<u64> {
    if epsilon == 0.0 {
        return Err(Error::InvalidInput("epsilon = 0 gives no finite iteration count".into()));
    }
    check_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain { what: "delta must lie in (0, 1)", value: delta });
    }
    if n0 == 0 {
        return Err(Error::InvalidInput("n0 must be at least 1".into()));
    }
    if epsilon == 1.0 {
        return Ok(n0);
    }
    let estimate = (delta.ln() / (1.0 - epsilon).ln()).ceil().max(1.0) as u64;
    // settle rounding at the boundary with the exact power
    let mut blocks = estimate.saturating_sub(1).max(1);
    while (1.0 - epsilon).powf(blocks as f64) > delta {
        blocks += 1;
    }
    while blocks > 1 && (1.0 - epsilon).powf((blocks - 1) as f64) <= delta {
        blocks -= 1;
    }
    Ok(blocks * n0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBoundReport {
    pub c1: f64,
    pub c2: f64,
    pub epsilon_exact: f64,
    /// `epsilon_exact` floored to the reported precision; used for the bound.
    pub epsilon: f64,
    pub epsilon_decimals: u32,
    pub n0: u64,
    pub n: u64,
    pub bound_at_n: f64,
    pub delta: f64,
    pub iterations_for_delta: u64,
}

/// Full uniform-ergodicity calculation for given strengths.
pub fn uniform_report(c1: f64, c2: f64, epsilon_decimals: u32, n: u64, delta: f64) -> Result<UniformBoundReport> {
    let exact = epsilon_theorem1(c1, c2)?;
    let eps = floor_to_decimals(exact, epsilon_decimals);
    if eps <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "epsilon {exact} rounds to zero at {epsilon_decimals} decimals"
        )));
    }
    Ok(UniformBoundReport {
        c1,
        c2,
        epsilon_exact: exact,
        epsilon: eps,
        epsilon_decimals,
        n0: 1,
        n,
        bound_at_n: tv_bound_uniform(eps, 1, n)?,
        delta,
        iterations_for_delta: iterations_for_tolerance(eps, 1, delta)?,
    })
}
