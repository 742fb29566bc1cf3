//! Quantitative shift-coupling bound from a minorization and a drift
//! certificate: `‖(1/n)Σ P^k(x,·) − π‖ ≤ coefficient / n`.

use serde::Serialize;

use super::certificates::{DriftCertificate, MinorizationCertificate};
use crate::error::{Error, Result};

/// `λ^{1 − n0 r} A^r`; the bound requires this below 1.
pub fn admissibility_factor(mc: &MinorizationCertificate, dc: &DriftCertificate, r: f64) -> f64 {
    let n0 = mc.n0 as f64;
    ((1.0 - n0 * r) * dc.lambda.ln() + r * dc.a.ln()).exp()
}

/// The `n`-independent coefficient
/// `2q/(1 − q) + λ^{−n0+1−n0 r} A^r / (1 − λ^{1−n0 r} A^r) · (E_ν V + b/(1 − λ))`
/// with `q = (1 − ε)^r`.
pub fn shift_coupling_coefficient(
    mc: &MinorizationCertificate,
    dc: &DriftCertificate,
    e_nu_v: f64,
    r: f64,
) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InadmissibleParameter(format!("r must lie in (0, 1), got {r}")));
    }
    if !(e_nu_v >= 1.0 && e_nu_v.is_finite()) {
        return Err(Error::Domain { what: "E_nu V must be finite and at least 1", value: e_nu_v });
    }
    let factor = admissibility_factor(mc, dc, r);
    if !(factor < 1.0) {
        return Err(Error::InadmissibleParameter(format!(
            "lambda^(1-n0 r) A^r = {factor} is not below 1 at r = {r}"
        )));
    }
    let n0 = mc.n0 as f64;
    // q/(1 − q) via expm1 keeps precision for tiny r·ln(1 − ε)
    let log_q = r * (-mc.epsilon).ln_1p();
    let minor = if mc.epsilon == 1.0 { 0.0 } else { 2.0 * log_q.exp() / -log_q.exp_m1() };
    let lead = ((-n0 + 1.0 - n0 * r) * dc.lambda.ln() + r * dc.a.ln()).exp();
    let drift = lead / (1.0 - factor) * (e_nu_v + dc.b / (1.0 - dc.lambda));
    Ok(minor + drift)
}

/// `coefficient / n`.
pub fn shift_coupling_bound(
    mc: &MinorizationCertificate,
    dc: &DriftCertificate,
    e_nu_v: f64,
    r: f64,
    n: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    Ok(shift_coupling_coefficient(mc, dc, e_nu_v, r)? / n as f64)
}

/// Largest `r` for which the admissibility factor can be below 1, or `None`
/// if every `r` in `(0, 1)` is admissible.
pub fn admissible_r_limit(mc: &MinorizationCertificate, dc: &DriftCertificate) -> Option<f64> {
    // (1 − n0 r) ln λ + r ln A < 0  ⇔  r (ln A − n0 ln λ) < −ln λ
    let slope = dc.a.ln() - mc.n0 as f64 * dc.lambda.ln();
    if slope <= 0.0 {
        return None;
    }
    let limit = -dc.lambda.ln() / slope;
    (limit < 1.0).then_some(limit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizedR {
    pub r: f64,
    pub coefficient: f64,
    pub admissibility_factor: f64,
}

const GRID_LO: f64 = 1e-5;
const GRID_HI: f64 = 0.5;
const GRID_POINTS: usize = 400;

/// Minimizes the coefficient over admissible `r`: a logarithmic grid on
/// `[1e-5, 0.5]`, then golden-section refinement around the best grid point.
/// Ties go to the smaller `r`.
pub fn optimize_r(mc: &MinorizationCertificate, dc: &DriftCertificate, e_nu_v: f64) -> Result<OptimizedR> {
    let coef = |r: f64| shift_coupling_coefficient(mc, dc, e_nu_v, r).ok();
    let ratio = (GRID_HI / GRID_LO).ln();
    let grid: Vec<f64> =
        (0..GRID_POINTS).map(|k| GRID_LO * (ratio * k as f64 / (GRID_POINTS - 1) as f64).exp()).collect();
    let mut best: Option<(usize, f64)> = None;
    for (k, &r) in grid.iter().enumerate() {
        if let Some(c) = coef(r) {
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((k, c));
            }
        }
    }
    let (k, mut best_c) = best.ok_or_else(|| {
        Error::InadmissibleParameter("no admissible r on the search grid".into())
    })?;
    let mut best_r = grid[k];

    let mut lo = if k == 0 { grid[0] * 0.5 } else { grid[k - 1] };
    let mut hi = if k + 1 < grid.len() { grid[k + 1] } else { grid[k] };
    if let Some(limit) = admissible_r_limit(mc, dc) {
        hi = hi.min(limit * (1.0 - 1e-12));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let score = |r: f64| coef(r).unwrap_or(f64::INFINITY);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = score(x1);
    let mut f2 = score(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = score(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = score(x2);
        }
    }
    for (r, c) in [(x1, f1), (x2, f2)] {
        if c < best_c || (c == best_c && r < best_r) {
            best_r = r;
            best_c = c;
        }
    }
    Ok(OptimizedR { r: best_r, coefficient: best_c, admissibility_factor: admissibility_factor(mc, dc, best_r) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::certificates::{certificate_theorem2, SmallSet};
    use std::f64::consts::E;

    #[test]
    fn plug_in_at_certified_constants() {
        let (mc, dc) = certificate_theorem2();
        let c = shift_coupling_coefficient(&mc, &dc, E, 0.0016).unwrap();
        assert!((3.95e7..=4.05e7).contains(&c), "{c}");
        let f = admissibility_factor(&mc, &dc, 0.0016);
        assert!((0.9992..=0.9994).contains(&f), "{f}");
    }

    #[test]
    fn coefficient_against_direct_formula() {
        let (mc, dc) = certificate_theorem2();
        let r = 0.0016;
        let q = (1.0 - mc.epsilon).powf(r);
        let adm = dc.lambda.powf(1.0 - 2.0 * r) * dc.a.powf(r);
        let direct = 2.0 * q / (1.0 - q)
            + dc.lambda.powf(-2.0 + 1.0 - 2.0 * r) * dc.a.powf(r) / (1.0 - adm) * (E + dc.b / (1.0 - dc.lambda));
        let c = shift_coupling_coefficient(&mc, &dc, E, r).unwrap();
        assert!((c / direct - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inadmissible_r() {
        let (mc, dc) = certificate_theorem2();
        assert!(matches!(
            shift_coupling_coefficient(&mc, &dc, E, 0.9),
            Err(Error::InadmissibleParameter(_))
        ));
        assert!(shift_coupling_coefficient(&mc, &dc, E, 0.0).is_err());
        let limit = admissible_r_limit(&mc, &dc).unwrap();
        assert!(shift_coupling_coefficient(&mc, &dc, E, limit * 0.999).is_ok());
        assert!(shift_coupling_coefficient(&mc, &dc, E, limit * 1.001).is_err());
    }

    #[test]
    fn bound_scales_as_one_over_n() {
        let (mc, dc) = certificate_theorem2();
        let c = shift_coupling_coefficient(&mc, &dc, E, 0.0016).unwrap();
        for n in [1u64, 7, 1000, 123_456] {
            assert_eq!(shift_coupling_bound(&mc, &dc, E, 0.0016, n).unwrap(), c / n as f64);
        }
        assert!(shift_coupling_bound(&mc, &dc, E, 0.0016, 0).is_err());
    }

    #[test]
    fn optimizer_improves_on_hand_choice() {
        let (mc, dc) = certificate_theorem2();
        let opt = optimize_r(&mc, &dc, E).unwrap();
        let hand = shift_coupling_coefficient(&mc, &dc, E, 0.0016).unwrap();
        assert!(opt.coefficient <= hand);
        assert!(opt.admissibility_factor < 1.0);
        // refinement lands on a local minimum
        for r in [opt.r * 0.99, opt.r * 1.01] {
            if let Ok(c) = shift_coupling_coefficient(&mc, &dc, E, r) {
                assert!(c >= opt.coefficient);
            }
        }
    }

    #[test]
    fn benign_regime_converges() {
        let mc = MinorizationCertificate::new(1, 0.999, SmallSet::WholeSpace, "Q").unwrap();
        let dc = DriftCertificate::new(0.01, 1.0, 10.0, 1.1, "V").unwrap();
        let opt = optimize_r(&mc, &dc, 1.0).unwrap();
        assert!(opt.coefficient.is_finite() && opt.r > 0.0 && opt.r < 1.0);
    }

    #[test]
    fn larger_epsilon_never_hurts() {
        let (_, dc) = certificate_theorem2();
        let mut prev = f64::INFINITY;
        for eps in [1e-5, 1e-4, 1e-3] {
            let mc = MinorizationCertificate::new(2, eps, SmallSet::WholeSpace, "Q").unwrap();
            let c = optimize_r(&mc, &dc, E).unwrap().coefficient;
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn empty_admissible_set() {
        let mc = MinorizationCertificate::new(1, 0.1, SmallSet::WholeSpace, "Q").unwrap();
        // A huge relative to λ: admissible only for r below ~1e-7
        let dc = DriftCertificate { lambda: 0.9999999, b: 1e300, d: 1.0, a: 1e300, v_description: "V".into() };
        assert!(optimize_r(&mc, &dc, 1.0).is_err());
    }
}
