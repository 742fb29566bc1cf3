//! Functional-based estimates of the total variation distance to
//! stationarity, and occupation fractions.
//!
//! For a functional `f` with range `[a, b]`, `|E_π f − E f(X_i)| / (b − a)`
//! is a lower bound on the distance from `L(X_i)` to `π`. Curves computed
//! here are estimates of that lower bound from one functional, never the
//! distance itself.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{Functional, RadialForm};
use crate::model::{PlanarPoint, SquareConfig};
use crate::numerics::{
    angular_average_min_one_abs_x1, stationary_expectation_planar, RadialFunctional, DEFAULT_EXPECTATION_TOL,
};
use crate::rng::AUXILIARY_STREAM_OFFSET;
use crate::sampler::{observe_ensemble, EnsembleSpec, InitialPolicy, Model, ModelKind, Observer};

fn radius_of(p: &[f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

fn sq_f(s: &SquareConfig) -> f64 {
    s.points().iter().map(radius_of).sum()
}

fn sq_g(s: &SquareConfig) -> f64 {
    s.points()[0][0]
}

fn sq_h(s: &SquareConfig) -> f64 {
    let p = s.points();
    (p[0][0] - p[1][0]).hypot(p[0][1] - p[1][1])
}

fn sq_p(s: &SquareConfig) -> f64 {
    radius_of(&s.points()[2]).exp()
}

fn sq_l(s: &SquareConfig) -> f64 {
    s.points().iter().map(radius_of).fold(0.0, f64::max)
}

/// Square-model functionals `f, g, h, p, l` with their ranges. They read
/// particles 1 to 3, so the model must have at least three particles.
pub fn builtin_tv_functionals_square() -> Vec<Functional<SquareConfig>> {
    vec![
        Functional::new("f", sq_f).with_range(0.0, 3.0 * SQRT_2),
        Functional::new("g", sq_g).with_range(0.0, 1.0),
        Functional::new("h", sq_h).with_range(0.0, SQRT_2),
        // e^{√2} rounded up so the range contains every value
        Functional::new("p", sq_p).with_range(1.0, 4.113250378782929),
        Functional::new("l", sq_l).with_range(0.0, SQRT_2),
    ]
}

fn exp_neg(r: f64) -> f64 {
    (-r).exp()
}

fn half(_r: f64) -> f64 {
    0.5
}

fn min_one_inv(r: f64) -> f64 {
    (1.0 / r).min(1.0)
}

fn pl_f(x: &PlanarPoint) -> f64 {
    exp_neg(x.radius())
}

fn pl_g(x: &PlanarPoint) -> f64 {
    let r2 = x.x1 * x.x1 + x.x2 * x.x2;
    // the origin has zero stationary mass; 0 keeps the value in range
    if r2 > 0.0 {
        (x.x1 * x.x1 / r2).min(1.0)
    } else {
        0.0
    }
}

fn pl_h(x: &PlanarPoint) -> f64 {
    min_one_inv(x.radius())
}

fn pl_p(x: &PlanarPoint) -> f64 {
    x.x1.abs().min(1.0)
}

fn pl_l(x: &PlanarPoint) -> f64 {
    x.radius().sin()
}

/// Planar-model functionals `f, g, h, p, l`, each with its circular average
/// so the stationary value is a one-dimensional integral.
pub fn builtin_tv_functionals_planar() -> Vec<Functional<PlanarPoint>> {
    vec![
        Functional::new("f", pl_f)
            .with_range(0.0, 1.0)
            .with_radial(RadialForm { average: exp_neg, breakpoints: &[], sup_abs: 1.0 }),
        Functional::new("g", pl_g)
            .with_range(0.0, 1.0)
            .with_radial(RadialForm { average: half, breakpoints: &[], sup_abs: 1.0 }),
        Functional::new("h", pl_h)
            .with_range(0.0, 1.0)
            .with_radial(RadialForm { average: min_one_inv, breakpoints: &[1.0], sup_abs: 1.0 }),
        Functional::new("p", pl_p).with_range(0.0, 1.0).with_radial(RadialForm {
            average: angular_average_min_one_abs_x1,
            breakpoints: &[1.0],
            sup_abs: 1.0,
        }),
        Functional::new("l", pl_l)
            .with_range(-1.0, 1.0)
            .with_radial(RadialForm { average: f64::sin, breakpoints: &[], sup_abs: 1.0 }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ReferenceMethod {
    Quadrature { numerator: f64, denominator: f64, r_max: f64, tail_bound: f64 },
    Ensemble { m_chains: usize, iterations: usize, seed: u64, stream_offset: u64 },
}

/// A stationary expectation with its uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    /// Quadrature error estimate, or the Monte Carlo standard error.
    pub std_error: f64,
    #[serde(flatten)]
    pub method: ReferenceMethod,
}

fn require_range<S>(fun: &Functional<S>) -> Result<(f64, f64)> {
    fun.range.ok_or_else(|| Error::InvalidInput(format!("functional {} has no declared range", fun.name)))
}

/// `E_π f` for a planar functional by quadrature of its circular average.
pub fn reference_planar(fun: &Functional<PlanarPoint>, tol: f64) -> Result<Reference> {
    require_range(fun)?;
    let form = fun
        .radial
        .ok_or_else(|| Error::InvalidInput(format!("functional {} has no radial form", fun.name)))?;
    let e = stationary_expectation_planar(&RadialFunctional::from_form(fun.name, &form), tol)?;
    Ok(Reference {
        value: e.value,
        std_error: e.error_estimate,
        method: ReferenceMethod::Quadrature {
            numerator: e.numerator,
            denominator: e.denominator,
            r_max: e.r_max,
            tail_bound: e.tail_bound,
        },
    })
}

/// Default iteration at which ensemble references are read off.
pub const REFERENCE_ITERATION: usize = 500;

/// `E_π f` estimated by an ensemble mean at `iterations`, on streams offset
/// by [`AUXILIARY_STREAM_OFFSET`] so the reference is independent of any
/// ensemble with the same seed that it is compared against.
pub fn reference_ensemble<M: Model>(
    model: &M,
    fun: &Functional<M::State>,
    m_chains: usize,
    iterations: usize,
    seed: u64,
    init: InitialPolicy<M::State>,
) -> Result<Reference> {
    require_range(fun)?;
    if m_chains < 2 {
        return Err(Error::InvalidInput("an ensemble reference needs at least 2 chains".into()));
    }
    let spec = EnsembleSpec::new(m_chains, iterations, seed, init).with_stream_offset(AUXILIARY_STREAM_OFFSET);
    let finals = observe_ensemble(model, &spec, |_| LastValue { fun, at: iterations, value: f64::NAN })?;
    let xs: Vec<f64> = finals.iter().map(|o| o.value).collect();
    let (mean, sd) = mean_sd(&xs);
    Ok(Reference {
        value: mean,
        std_error: sd / (m_chains as f64).sqrt(),
        method: ReferenceMethod::Ensemble { m_chains, iterations, seed, stream_offset: AUXILIARY_STREAM_OFFSET },
    })
}

/// Square-model reference: ensemble mean at iteration 500 from the fixed
/// centre start `(0.5, …, 0.5)`.
pub fn reference_square<M: Model<State = SquareConfig>>(
    model: &M,
    fun: &Functional<SquareConfig>,
    n_particles: usize,
    m_chains: usize,
    seed: u64,
) -> Result<Reference> {
    let init = SquareConfig::filled(n_particles, [0.5, 0.5])?;
    reference_ensemble(model, fun, m_chains, REFERENCE_ITERATION, seed, InitialPolicy::Fixed(init))
}

struct LastValue<'a, S> {
    fun: &'a Functional<S>,
    at: usize,
    value: f64,
}

impl<S> Observer<S> for LastValue<'_, S> {
    fn observe(&mut self, iteration: usize, state: &S, _accepted: &[bool]) {
        if iteration == self.at {
            self.value = self.fun.evaluate(state);
        }
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Default checkpoints `{1, …, 50} ∪ {60, 70, …, 500}`.
pub fn default_checkpoints() -> Vec<usize> {
    (1..=50).chain((60..=500).step_by(10)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvPoint {
    pub checkpoint: usize,
    /// `|reference − mean| / (b − a)`.
    pub estimate: f64,
    /// Standard error of the estimate, including the reference's own error.
    pub std_error: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvCurve {
    pub model: ModelKind,
    pub functional: String,
    pub range: (f64, f64),
    pub reference: Reference,
    pub m_chains: usize,
    pub seed: u64,
    pub points: Vec<TvPoint>,
}

impl TvCurve {
    pub fn at(&self, checkpoint: usize) -> Option<&TvPoint> {
        self.points.iter().find(|p| p.checkpoint == checkpoint)
    }
}

/// Keeps functional values at checkpoints only: O(functionals · checkpoints)
/// memory per chain.
struct CheckpointRecorder<'a, S> {
    funs: &'a [Functional<S>],
    checkpoints: &'a [usize],
    next: usize,
    values: Vec<Vec<f64>>,
}

impl<S> Observer<S> for CheckpointRecorder<'_, S> {
    fn observe(&mut self, iteration: usize, state: &S, _accepted: &[bool]) {
        while self.next < self.checkpoints.len() && self.checkpoints[self.next] == iteration {
            for (f, out) in self.funs.iter().zip(self.values.iter_mut()) {
                out.push(f.evaluate(state));
            }
            self.next += 1;
        }
    }
}

/// Curves for several functionals from one ensemble run. `checkpoints` must
/// be nondecreasing and at most the ensemble's iteration count.
pub fn tv_curves<M: Model>(
    model: &M,
    funs: &[Functional<M::State>],
    references: &[Reference],
    spec: &EnsembleSpec<M::State>,
    checkpoints: &[usize],
) -> Result<Vec<TvCurve>> {
    if funs.len() != references.len() {
        return Err(Error::InvalidInput("one reference is needed per functional".into()));
    }
    let ranges = funs.iter().map(require_range).collect::<Result<Vec<_>>>()?;
    if let Some(&(a, b)) = ranges.iter().find(|(a, b)| !(b > a)) {
        return Err(Error::InvalidInput(format!("empty functional range [{a}, {b}]")));
    }
    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("checkpoints must be nondecreasing".into()));
    }
    if let Some(&c) = checkpoints.iter().find(|&&c| c > spec.iterations) {
        return Err(Error::InvalidInput(format!(
            "checkpoint {c} exceeds the ensemble's {} iterations",
            spec.iterations
        )));
    }
    let per_chain = observe_ensemble(model, spec, |_| CheckpointRecorder {
        funs,
        checkpoints,
        next: 0,
        values: vec![Vec::with_capacity(checkpoints.len()); funs.len()],
    })?;
    let m = spec.m_chains as f64;
    let mut curves = Vec::with_capacity(funs.len());
    for (k, ((fun, reference), &(a, b))) in funs.iter().zip(references).zip(&ranges).enumerate() {
        let width = b - a;
        let mut xs = vec![0.0; per_chain.len()];
        let points = checkpoints
            .iter()
            .enumerate()
            .map(|(c, &checkpoint)| {
                for (x, rec) in xs.iter_mut().zip(&per_chain) {
                    *x = rec.values[k][c];
                }
                let (mean, sd) = mean_sd(&xs);
                let se_mean = sd / m.sqrt();
                TvPoint {
                    checkpoint,
                    estimate: ((reference.value - mean).abs() / width).min(1.0),
                    std_error: se_mean.hypot(reference.std_error) / width,
                    mean,
                }
            })
            .collect();
        curves.push(TvCurve {
            model: model.kind(),
            functional: fun.name.to_string(),
            range: (a, b),
            reference: reference.clone(),
            m_chains: spec.m_chains,
            seed: spec.seed,
            points,
        });
    }
    Ok(curves)
}

pub fn tv_curve<M: Model>(
    model: &M,
    fun: &Functional<M::State>,
    reference: &Reference,
    spec: &EnsembleSpec<M::State>,
    checkpoints: &[usize],
) -> Result<TvCurve> {
    Ok(tv_curves(model, std::slice::from_ref(fun), std::slice::from_ref(reference), spec, checkpoints)?.remove(0))
}

/// Planar curve with the quadrature reference at the default tolerance.
pub fn tv_curve_planar<M: Model<State = PlanarPoint>>(
    model: &M,
    fun: &Functional<PlanarPoint>,
    spec: &EnsembleSpec<PlanarPoint>,
    checkpoints: &[usize],
) -> Result<TvCurve> {
    let reference = reference_planar(fun, DEFAULT_EXPECTATION_TOL)?;
    tv_curve(model, fun, &reference, spec, checkpoints)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationReport {
    pub n: usize,
    pub m_chains: usize,
    /// Mean over chains of the fraction of iterations `1..=n` spent in `S`.
    pub f_n: f64,
    pub pi_s: f64,
    pub abs_diff: f64,
    /// Standard error of `f_n` across chains.
    pub std_error: f64,
    /// `(1/n) Σ_k |p̂_k − π(S)|` with `p̂_k` the fraction of chains in `S` at `k`.
    pub mean_tv_estimate: f64,
}

impl OccupationReport {
    /// Whether `|F_n − π(S)|` is within `k` standard errors.
    pub fn within_std_errors(&self, k: f64) -> bool {
        self.abs_diff <= k * self.std_error
    }

    /// The averaged-TV inequality `|F_n − π(S)| ≤ (1/n) Σ_k |p̂_k − π(S)|`.
    pub fn averaged_tv_bound_holds(&self) -> bool {
        self.abs_diff <= self.mean_tv_estimate
    }
}

/// Occupation fraction of `S` over iterations `1..=n`, given the indicator
/// series `indicators[j][t − 1]` of each chain.
pub fn occupation_fraction(indicators: &[Vec<f64>], n: usize, pi_s: f64) -> Result<OccupationReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if indicators.is_empty() {
        return Err(Error::InvalidInput("need at least one chain".into()));
    }
    if let Some(s) = indicators.iter().find(|s| s.len() < n) {
        return Err(Error::InvalidInput(format!("a chain has {} iterations, fewer than n = {n}", s.len())));
    }
    if indicators.iter().any(|s| s[..n].iter().any(|&v| v != 0.0 && v != 1.0)) {
        return Err(Error::InvalidInput("indicator values must be 0 or 1".into()));
    }
    let m = indicators.len();
    let fractions: Vec<f64> = indicators.iter().map(|s| s[..n].iter().sum::<f64>() / n as f64).collect();
    let (f_n, sd) = mean_sd(&fractions);
    let mean_tv_estimate = (0..n)
        .map(|t| {
            let p = indicators.iter().map(|s| s[t]).sum::<f64>() / m as f64;
            (p - pi_s).abs()
        })
        .sum::<f64>()
        / n as f64;
    Ok(OccupationReport {
        n,
        m_chains: m,
        f_n,
        pi_s,
        abs_diff: (f_n - pi_s).abs(),
        std_error: sd / (m as f64).sqrt(),
        mean_tv_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::find;
    use crate::numerics::RadialFunctional;
    use crate::sampler::PlanarModel;

    #[test]
    fn tv_functional_examples() {
        let sq = builtin_tv_functionals_square();
        let cfg = SquareConfig::new(vec![[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(find(&sq, "l").unwrap().evaluate(&cfg), 1.0);
        assert_eq!(find(&sq, "h").unwrap().evaluate(&cfg), 1.0);
        assert!(find(&sq, "p").unwrap().range.unwrap().1 >= SQRT_2.exp());
        let pl = builtin_tv_functionals_planar();
        assert_eq!(find(&pl, "h").unwrap().evaluate(&PlanarPoint::new(4.0, 0.0)), 0.25);
        let l = find(&pl, "l").unwrap().evaluate(&PlanarPoint::from_polar(std::f64::consts::FRAC_PI_2, 0.3));
        assert!((l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_forms_match_circle_averages() {
        for fun in builtin_tv_functionals_planar() {
            let form = fun.radial.unwrap();
            for r in [0.3, 0.9, 1.0, 1.7, 4.0] {
                let k = 20_000;
                let avg = (0..k)
                    .map(|i| fun.evaluate(&PlanarPoint::from_polar(r, std::f64::consts::TAU * (i as f64 + 0.5) / k as f64)))
                    .sum::<f64>()
                    / k as f64;
                assert!((avg - (form.average)(r)).abs() < 1e-4, "{} at {r}", fun.name);
            }
        }
    }

    #[test]
    fn planar_f_reference() {
        let pl = builtin_tv_functionals_planar();
        let r = reference_planar(find(&pl, "f").unwrap(), 1e-10).unwrap();
        assert!((r.value - 0.15240).abs() < 5e-4);
        let g = reference_planar(find(&pl, "g").unwrap(), 1e-10).unwrap();
        assert!((g.value - 0.5).abs() < 1e-9);
        let c = stationary_expectation_planar(&RadialFunctional::constant(3.0), 1e-10).unwrap();
        assert!((c.value - 3.0).abs() < 1e-9);
        let missing = Functional::<PlanarPoint>::new("r", |x| x.radius());
        assert!(reference_planar(&missing, 1e-8).is_err());
    }

    #[test]
    fn checkpoint_zero_is_exact() {
        let pl = builtin_tv_functionals_planar();
        let f = find(&pl, "f").unwrap();
        let x0 = PlanarPoint::new(1.0, 0.0);
        let spec = EnsembleSpec::new(8, 3, 1, InitialPolicy::Fixed(x0));
        let reference = reference_planar(f, 1e-10).unwrap();
        let curve = tv_curve(&PlanarModel, f, &reference, &spec, &[0, 2]).unwrap();
        let p0 = curve.at(0).unwrap();
        assert_eq!(p0.estimate, (reference.value - f.evaluate(&x0)).abs());
        assert_eq!(p0.mean, f.evaluate(&x0));
    }

    #[test]
    fn curve_preconditions() {
        let pl = builtin_tv_functionals_planar();
        let f = find(&pl, "f").unwrap();
        let reference = reference_planar(f, 1e-8).unwrap();
        let spec = EnsembleSpec::new(2, 5, 1, InitialPolicy::Fixed(PlanarPoint::new(1.0, 0.0)));
        assert!(tv_curve(&PlanarModel, f, &reference, &spec, &[6]).is_err());
        assert!(tv_curve(&PlanarModel, f, &reference, &spec, &[3, 2]).is_err());
    }

    #[test]
    fn occupation_of_whole_space() {
        let ind = vec![vec![1.0; 10]; 4];
        let r = occupation_fraction(&ind, 10, 1.0).unwrap();
        assert_eq!((r.f_n, r.abs_diff, r.mean_tv_estimate), (1.0, 0.0, 0.0));
        assert!(occupation_fraction(&[vec![0.5]], 1, 0.5).is_err());
    }

    #[test]
    fn occupation_hand_example() {
        // chain 1 in S at t = 1, 2; chain 2 at t = 2 only
        let ind = vec![vec![1.0, 1.0], vec![0.0, 1.0]];
        let r = occupation_fraction(&ind, 2, 0.5).unwrap();
        assert_eq!(r.f_n, 0.75);
        assert_eq!(r.mean_tv_estimate, 0.25);
        assert!(r.averaged_tv_bound_holds());
    }
}
