//! Between/within-chain variances and the potential scale reduction factor.
//!
//! Series are indexed by iteration `t = 1..=n` (the initial state is not
//! part of a series). The first `n_star` values are burn-in; all formulas use
//! the post-burn-in length `L = n − n_star`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{Functional, RadialForm};
use crate::model::{PlanarPoint, SquareConfig};
use crate::sampler::{observe_ensemble, ChainTrace, EnsembleSpec, Model, Observer};

fn sum_of_radii(s: &SquareConfig) -> f64 {
    s.points().iter().map(|p| p[0].hypot(p[1])).sum()
}

fn sum_of_coordinates(s: &SquareConfig) -> f64 {
    s.points().iter().map(|p| p[0] + p[1]).sum()
}

fn sum_of_products(s: &SquareConfig) -> f64 {
    s.points().iter().map(|p| p[0] * p[1]).sum()
}

fn planar_radius(x: &PlanarPoint) -> f64 {
    x.radius()
}

fn planar_l1(x: &PlanarPoint) -> f64 {
    x.x1.abs() + x.x2.abs()
}

fn in_band(r: f64) -> f64 {
    if (0.5..1.5).contains(&r) {
        1.0
    } else {
        0.0
    }
}

fn planar_band(x: &PlanarPoint) -> f64 {
    in_band(x.radius())
}

/// `1[0.5 ≤ ‖x‖ < 1.5]` for the planar model.
pub const PLANAR_BAND: Functional<PlanarPoint> = Functional::new("phi2", planar_band)
    .with_range(0.0, 1.0)
    .with_radial(RadialForm { average: in_band, breakpoints: &[0.5, 1.5], sup_abs: 1.0 });

/// `psi` (sum of radii), `phi1` (sum of coordinates), `phi2` (sum of `x_i1·x_i2`).
pub fn builtin_functionals_square() -> Vec<Functional<SquareConfig>> {
    vec![
        Functional::new("psi", sum_of_radii),
        Functional::new("phi1", sum_of_coordinates),
        Functional::new("phi2", sum_of_products),
    ]
}

/// `psi = ‖x‖`, `phi1 = |x1| + |x2|`, `phi2 = 1[0.5 ≤ ‖x‖ < 1.5]`.
pub fn builtin_functionals_planar() -> Vec<Functional<PlanarPoint>> {
    vec![Functional::new("psi", planar_radius), Functional::new("phi1", planar_l1), PLANAR_BAND]
}

/// Values of `fun` at iterations `1..=n` of each trace.
pub fn functional_series<S>(traces: &[ChainTrace<S>], fun: &Functional<S>) -> Vec<Vec<f64>> {
    traces.iter().map(|t| t.states[1..].iter().map(|s| fun.evaluate(s)).collect()).collect()
}

struct SeriesRecorder<'a, S> {
    funs: &'a [Functional<S>],
    series: Vec<Vec<f64>>,
}

impl<S> Observer<S> for SeriesRecorder<'_, S> {
    fn observe(&mut self, iteration: usize, state: &S, _accepted: &[bool]) {
        if iteration > 0 {
            for (f, out) in self.funs.iter().zip(self.series.iter_mut()) {
                out.push(f.evaluate(state));
            }
        }
    }
}

/// Runs an ensemble keeping only functional values: `result[f][j][t − 1]` is
/// functional `f` on chain `j` at iteration `t`.
pub fn record_series<M: Model>(
    model: &M,
    spec: &EnsembleSpec<M::State>,
    funs: &[Functional<M::State>],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let per_chain = observe_ensemble(model, spec, |_| SeriesRecorder {
        funs,
        series: vec![Vec::with_capacity(spec.iterations); funs.len()],
    })?;
    let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(spec.m_chains); funs.len()];
    for rec in per_chain {
        for (k, s) in rec.series.into_iter().enumerate() {
            out[k].push(s);
        }
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with divisor `len − 1`.
fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

fn sample_cov(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() - 1) as f64
}

struct ChainMoments {
    means: Vec<f64>,
    variances: Vec<f64>,
    len: usize,
}

fn chain_moments(series: &[Vec<f64>], n_star: usize) -> Result<ChainMoments> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 chains, got {}", series.len())));
    }
    let n = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != n) {
        return Err(Error::InvalidInput(format!("chains have unequal lengths {n} and {}", bad.len())));
    }
    if n < n_star + 2 {
        return Err(Error::InvalidInput(format!(
            "post-burn-in length {} is below 2 (n = {n}, n_star = {n_star})",
            n.saturating_sub(n_star)
        )));
    }
    let post: Vec<&[f64]> = series.iter().map(|s| &s[n_star..]).collect();
    Ok(ChainMoments {
        means: post.iter().map(|p| mean(p)).collect(),
        variances: post.iter().map(|p| sample_var(p)).collect(),
        len: n - n_star,
    })
}

/// `B = L·var(chain means)` and `W = mean of within-chain variances`, both
/// with divisor `count − 1`, over the post-burn-in values.
pub fn between_within(series: &[Vec<f64>], n_star: usize) -> Result<(f64, f64)> {
    let cm = chain_moments(series, n_star)?;
    Ok((cm.len as f64 * sample_var(&cm.means), mean(&cm.variances)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DfMode {
    /// `(d + 3)/(d + 1)` taken as exactly 1.
    Unit,
    /// `d = 2V̂²/var(V̂)` with the moment estimate of `var(V̂)`.
    MomentEstimated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsrfReport {
    pub functional: String,
    pub b: f64,
    pub w: f64,
    pub sigma2_hat: f64,
    pub v_hat: f64,
    /// `factor · V̂/W` for the requested mode.
    pub r: f64,
    pub df_mode: DfMode,
    pub r_unit: f64,
    /// Moment-estimated degrees of freedom; infinite when `var(V̂)` vanishes.
    pub d_hat: f64,
    pub r_moment: f64,
    pub m: usize,
    pub n: usize,
    pub n_star: usize,
}

impl PsrfReport {
    /// Rechecks `σ̂² = B/L + (L−1)/L·W` and `V̂ = σ̂² + B/(mL)` as computed.
    pub fn identities_hold(&self) -> bool {
        let l = (self.n - self.n_star) as f64;
        let sigma2 = self.b / l + (l - 1.0) / l * self.w;
        let v = sigma2 + self.b / (self.m as f64 * l);
        sigma2 == self.sigma2_hat && v == self.v_hat
    }
}

/// Potential scale reduction factor of the post-burn-in series.
pub fn psrf(series: &[Vec<f64>], n_star: usize, df_mode: DfMode, functional: &str) -> Result<PsrfReport> {
    let cm = chain_moments(series, n_star)?;
    let m = series.len();
    let n = series[0].len();
    let l = cm.len as f64;
    let mf = m as f64;
    let b = l * sample_var(&cm.means);
    let w = mean(&cm.variances);
    if !(w > 0.0) {
        return Err(Error::DegenerateDiagnostic(format!(
            "within-chain variance of {functional} is zero; R is undefined"
        )));
    }
    let sigma2_hat = b / l + (l - 1.0) / l * w;
    let v_hat = sigma2_hat + b / (mf * l);
    let r_unit = v_hat / w;

    let grand = mean(&cm.means);
    let means_sq: Vec<f64> = cm.means.iter().map(|x| x * x).collect();
    let var_v = ((l - 1.0) / l).powi(2) / mf * sample_var(&cm.variances)
        + ((mf + 1.0) / (mf * l)).powi(2) * 2.0 / (mf - 1.0) * b * b
        + 2.0 * (mf + 1.0) * (l - 1.0) / (mf * l * l) * (l / mf)
            * (sample_cov(&cm.variances, &means_sq) - 2.0 * grand * sample_cov(&cm.variances, &cm.means));
    let d_hat = if var_v > 0.0 { 2.0 * v_hat * v_hat / var_v } else { f64::INFINITY };
    let factor = if d_hat.is_finite() { (d_hat + 3.0) / (d_hat + 1.0) } else { 1.0 };
    let r_moment = factor * r_unit;

    Ok(PsrfReport {
        functional: functional.to_string(),
        b,
        w,
        sigma2_hat,
        v_hat,
        r: match df_mode {
            DfMode::Unit => r_unit,
            DfMode::MomentEstimated => r_moment,
        },
        df_mode,
        r_unit,
        d_hat,
        r_moment,
        m,
        n,
        n_star,
    })
}

/// Runs the ensemble and reports the PSRF of every functional.
pub fn diagnose<M: Model>(
    model: &M,
    spec: &EnsembleSpec<M::State>,
    funs: &[Functional<M::State>],
    n_star: usize,
    df_mode: DfMode,
) -> Result<Vec<PsrfReport>> {
    if spec.m_chains < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 chains, got {}", spec.m_chains)));
    }
    if n_star + 2 > spec.iterations {
        return Err(Error::InvalidInput(format!(
            "burn-in {n_star} leaves fewer than 2 of {} iterations",
            spec.iterations
        )));
    }
    let series = record_series(model, spec, funs)?;
    funs.iter().zip(series.iter()).map(|(f, s)| psrf(s, n_star, df_mode, f.name)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_example() {
        let (b, w) = between_within(&[vec![0.0, 2.0], vec![1.0, 3.0]], 0).unwrap();
        assert_eq!((b, w), (1.0, 2.0));
    }

    #[test]
    fn constant_chains() {
        let s = vec![vec![4.0; 10]; 3];
        assert_eq!(between_within(&s, 2).unwrap(), (0.0, 0.0));
        assert!(matches!(psrf(&s, 2, DfMode::Unit, "c"), Err(Error::DegenerateDiagnostic(_))));
    }

    #[test]
    fn identical_chains_have_no_between_variance() {
        let c: Vec<f64> = (0..20).map(|t| (t % 5) as f64).collect();
        let r = psrf(&[c.clone(), c.clone(), c], 4, DfMode::Unit, "x").unwrap();
        assert_eq!(r.b, 0.0);
        assert!((r.r - 15.0 / 16.0).abs() < 1e-15);
        assert!(r.identities_hold());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(between_within(&[vec![1.0, 2.0, 3.0]], 0).is_err());
        assert!(between_within(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0]], 0).is_err());
        assert!(between_within(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]], 2).is_err());
    }

    #[test]
    fn reproduces_reference_summary_arithmetic() {
        // B = 0.4899, W = 0.19 over L = 30 gives σ̂² ≈ 0.200 and V̂ ≈ 0.2033
        let (b, w, l, m): (f64, f64, f64, f64) = (0.4899, 0.19, 30.0, 5.0);
        let sigma2 = b / l + (l - 1.0) / l * w;
        let v = sigma2 + b / (m * l);
        assert!((sigma2 - 0.200).abs() < 5e-4);
        assert!((v - 0.2033).abs() < 5e-4);
        assert!((v / w - 1.07).abs() < 5e-3);
    }

    #[test]
    fn builtin_values() {
        let sq = builtin_functionals_square();
        let mid = SquareConfig::filled(3, [0.5, 0.5]).unwrap();
        assert!((sq[0].evaluate(&mid) - 3.0 * 0.5f64.sqrt()).abs() < 1e-15);
        let ones = SquareConfig::filled(3, [1.0, 1.0]).unwrap();
        assert_eq!(sq[2].evaluate(&ones), 3.0);
        assert_eq!(sq[1].evaluate(&ones), 6.0);
        let pl = builtin_functionals_planar();
        assert_eq!(pl[2].evaluate(&PlanarPoint::new(1.0, 0.0)), 1.0);
        assert_eq!(pl[2].evaluate(&PlanarPoint::new(1.5, 0.0)), 0.0);
        assert_eq!(pl[1].evaluate(&PlanarPoint::new(-1.0, 2.0)), 3.0);
    }

    // m and L are powers of two so every mean of small integers is exact
    fn dyadic_chains() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
        (0u32..3, 1u32..5, 0usize..6).prop_flat_map(|(mk, lk, n_star)| {
            let m = 2usize << mk;
            let n = n_star + (1usize << lk);
            proptest::collection::vec(proptest::collection::vec(-64i32..64, n), m).prop_map(move |v| {
                (v.into_iter().map(|c| c.into_iter().map(f64::from).collect()).collect(), n_star)
            })
        })
    }

    proptest! {
        // integer shifts and power-of-two scales keep every operation exact
        #[test]
        fn shift_invariance((s, n_star) in dyadic_chains(), c in -1000i32..1000) {
            let shifted: Vec<Vec<f64>> = s.iter().map(|ch| ch.iter().map(|x| x + c as f64).collect()).collect();
            let a = psrf(&s, n_star, DfMode::Unit, "x");
            let b = psrf(&shifted, n_star, DfMode::Unit, "x");
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert_eq!(a.b, b.b);
                prop_assert_eq!(a.w, b.w);
                prop_assert_eq!(a.sigma2_hat, b.sigma2_hat);
                prop_assert_eq!(a.v_hat, b.v_hat);
                prop_assert_eq!(a.r, b.r);
            }
        }

        #[test]
        fn scale_equivariance((s, n_star) in dyadic_chains(), k in -4i32..5) {
            let f = 2f64.powi(k);
            let scaled: Vec<Vec<f64>> = s.iter().map(|ch| ch.iter().map(|x| x * f).collect()).collect();
            if let (Ok(a), Ok(b)) = (psrf(&s, n_star, DfMode::MomentEstimated, "x"), psrf(&scaled, n_star, DfMode::MomentEstimated, "x")) {
                prop_assert_eq!(a.b * f * f, b.b);
                prop_assert_eq!(a.w * f * f, b.w);
                prop_assert_eq!(a.v_hat * f * f, b.v_hat);
                prop_assert_eq!(a.r_unit, b.r_unit);
                prop_assert_eq!(a.r_moment, b.r_moment);
            }
        }

        #[test]
        fn report_identities((s, n_star) in dyadic_chains()) {
            if let Ok(r) = psrf(&s, n_star, DfMode::Unit, "x") {
                prop_assert!(r.identities_hold());
                prop_assert!(r.b >= 0.0 && r.w > 0.0 && r.sigma2_hat >= 0.0 && r.v_hat >= 0.0);
            }
        }
    }
}
