//! The two Metropolis kernels and reproducible chain/ensemble execution.
//!
//! Square model: componentwise Metropolis with systematic scan; each particle
//! in turn gets a proposal uniform on `[0, 1]²`. One iteration is one full
//! sweep over all particles.
//!
//! Planar model: Metropolis–Hastings with a proposal uniform on the annulus
//! `B_x = {z : |r_x − 1| < ‖z‖ < r_x + 1}`; the acceptance probability is
//! `min{1, f(r_x)/f(r_y)}` with `f(r) = r·exp(r + 1/r)`.
//!
//! Chain `j` of an ensemble always draws from stream `(seed, j)`, initial state
//! first, so results do not depend on scheduling or thread count.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    annulus_of_radius, ln_f_radial, local_energy, ModelParams, PlanarPoint, SquareConfig,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Square,
    Planar,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Square => "square",
            ModelKind::Planar => "planar",
        })
    }
}

/// A Markov kernel over some state space, one call to `step` per iteration.
pub trait Model: Sync {
    type State: Clone + Send + Sync + std::fmt::Debug;

    fn kind(&self) -> ModelKind;

    /// Number of accept/reject decisions per iteration.
    fn accept_slots(&self) -> usize;

    fn validate(&self, state: &Self::State) -> Result<()>;

    /// Advances `state` by one iteration, writing one flag per accept slot.
    fn step<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R, accepted: &mut [bool]);

    /// Draws a state uniformly from the coordinate box `[lo, hi]^d`.
    fn uniform_box<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Result<Self::State>;
}

/// The square model with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareModel {
    pub params: ModelParams,
}

impl SquareModel {
    pub fn new(params: ModelParams) -> Self {
        Self { params }
    }
}

/// The planar one-particle model (no free parameters).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanarModel;

/// Updates particle `i` of `state` in place; returns whether it moved.
///
/// A state whose current density is zero (possible only at a user-supplied
/// start with coincident particles) accepts every proposal.
fn update_particle<R: Rng + ?Sized>(
    state: &mut SquareConfig,
    params: &ModelParams,
    i: usize,
    rng: &mut R,
) -> bool {
    let proposal = [rng.random::<f64>(), rng.random::<f64>()];
    let u: f64 = rng.random();
    let current = local_energy(state, params, i, state.points()[i]);
    let accept = if current.is_infinite() {
        true
    } else {
        let log_ratio = current - local_energy(state, params, i, proposal);
        u < log_ratio.min(0.0).exp()
    };
    if accept {
        state.set(i, proposal);
    }
    accept
}

/// One systematic-scan sweep over all particles.
pub fn metropolis_sweep_square<R: Rng + ?Sized>(
    state: &SquareConfig,
    params: &ModelParams,
    rng: &mut R,
) -> SquareConfig {
    let mut next = state.clone();
    for i in 0..next.len() {
        update_particle(&mut next, params, i, rng);
    }
    next
}

impl Model for SquareModel {
    type State = SquareConfig;

    fn kind(&self) -> ModelKind {
        ModelKind::Square
    }

    fn accept_slots(&self) -> usize {
        self.params.n_particles
    }

    fn validate(&self, state: &SquareConfig) -> Result<()> {
        state.validate_for(&self.params)
    }

    fn step<R: Rng + ?Sized>(&self, state: &mut SquareConfig, rng: &mut R, accepted: &mut [bool]) {
        for (i, flag) in accepted.iter_mut().enumerate().take(state.len()) {
            *flag = update_particle(state, &self.params, i, rng);
        }
    }

    fn uniform_box<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Result<SquareConfig> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "square-model initial box [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
            )));
        }
        let points = (0..self.params.n_particles)
            .map(|_| [lo + (hi - lo) * rng.random::<f64>(), lo + (hi - lo) * rng.random::<f64>()])
            .collect();
        SquareConfig::new(points)
    }
}

/// Draws a point uniformly from the annulus around `x`.
pub fn propose_planar<R: Rng + ?Sized>(x: &PlanarPoint, rng: &mut R) -> Result<PlanarPoint> {
    let a = annulus_of_radius(x.radius())?;
    let (i2, o2) = (a.inner * a.inner, a.outer * a.outer);
    loop {
        let u: f64 = rng.random();
        let theta = TAU * rng.random::<f64>();
        let r = (i2 + u * (o2 - i2)).sqrt();
        if r > 0.0 {
            return Ok(PlanarPoint::from_polar(r, theta));
        }
    }
}

/// `min{1, f(r_x)/f(r_y)}`, evaluated in log space.
pub fn accept_prob_planar(x: &PlanarPoint, y: &PlanarPoint) -> Result<f64> {
    accept_prob_radial(x.radius(), y.radius())
}

pub(crate) fn accept_prob_radial(rx: f64, ry: f64) -> Result<f64> {
    let log_ratio = ln_f_radial(rx)? - ln_f_radial(ry)?;
    Ok(log_ratio.min(0.0).exp())
}

/// One Metropolis–Hastings step; returns the new point and whether it moved.
pub fn step_planar_with_flag<R: Rng + ?Sized>(
    x: &PlanarPoint,
    rng: &mut R,
) -> Result<(PlanarPoint, bool)> {
    let y = propose_planar(x, rng)?;
    let u: f64 = rng.random();
    let alpha = accept_prob_planar(x, &y)?;
    Ok(if u < alpha { (y, true) } else { (*x, false) })
}

pub fn step_planar<R: Rng + ?Sized>(x: &PlanarPoint, rng: &mut R) -> Result<PlanarPoint> {
    Ok(step_planar_with_flag(x, rng)?.0)
}

impl Model for PlanarModel {
    type State = PlanarPoint;

    fn kind(&self) -> ModelKind {
        ModelKind::Planar
    }

    fn accept_slots(&self) -> usize {
        1
    }

    fn validate(&self, state: &PlanarPoint) -> Result<()> {
        let r = state.radius();
        if r > 0.0 && r.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidState(format!("planar state must have positive finite radius, got {r}")))
        }
    }

    fn step<R: Rng + ?Sized>(&self, state: &mut PlanarPoint, rng: &mut R, accepted: &mut [bool]) {
        // validated states always have positive radius, so proposals cannot fail
        let (next, moved) = step_planar_with_flag(state, rng).expect("planar state has positive radius");
        *state = next;
        accepted[0] = moved;
    }

    fn uniform_box<R: Rng + ?Sized>(&self, lo: f64, hi: f64, rng: &mut R) -> Result<PlanarPoint> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid initial box [{lo}, {hi}]")));
        }
        loop {
            let p = PlanarPoint::new(
                lo + (hi - lo) * rng.random::<f64>(),
                lo + (hi - lo) * rng.random::<f64>(),
            );
            if p.radius() > 0.0 {
                return Ok(p);
            }
        }
    }
}

/// One chain's recorded history: `states[t]` is the state after `t` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace<S> {
    pub kind: ModelKind,
    pub states: Vec<S>,
    slots: usize,
    accepted: Vec<bool>,
}

impl<S> ChainTrace<S> {
    pub fn initial(&self) -> &S {
        &self.states[0]
    }

    /// Accept/reject decisions per iteration.
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn iterations(&self) -> usize {
        self.states.len() - 1
    }

    /// Accept flags of iteration `t` (1-based); empty for `t = 0`.
    pub fn accepted_at(&self, t: usize) -> &[bool] {
        if t == 0 {
            &[]
        } else {
            &self.accepted[(t - 1) * self.slots..t * self.slots]
        }
    }

    /// Per-slot acceptance tallies.
    pub fn accept_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.slots];
        for row in self.accepted.chunks_exact(self.slots.max(1)) {
            for (c, &a) in counts.iter_mut().zip(row) {
                *c += a as usize;
            }
        }
        counts
    }

    pub fn acceptance_rate(&self) -> f64 {
        let total = self.accepted.len();
        if total == 0 {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / total as f64
    }

    pub fn values<F: Fn(&S) -> f64>(&self, f: F) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }
}

/// Receives each state of a chain as it is produced (iteration 0 first).
pub trait Observer<S> {
    fn observe(&mut self, iteration: usize, state: &S, accepted: &[bool]);
}

struct TraceRecorder<S> {
    states: Vec<S>,
    accepted: Vec<bool>,
}

impl<S: Clone> Observer<S> for TraceRecorder<S> {
    fn observe(&mut self, _iteration: usize, state: &S, accepted: &[bool]) {
        self.states.push(state.clone());
        self.accepted.extend_from_slice(accepted);
    }
}

fn drive<M: Model, R: Rng + ?Sized, O: Observer<M::State>>(
    model: &M,
    mut state: M::State,
    iterations: usize,
    rng: &mut R,
    observer: &mut O,
) {
    let mut flags = vec![false; model.accept_slots()];
    observer.observe(0, &state, &[]);
    for t in 1..=iterations {
        model.step(&mut state, rng, &mut flags);
        observer.observe(t, &state, &flags);
    }
}

/// Runs `iterations` kernel applications from `init`, recording every state.
pub fn run_chain<M: Model>(
    model: &M,
    init: M::State,
    iterations: usize,
    stream: RngStream,
) -> Result<ChainTrace<M::State>> {
    model.validate(&init)?;
    let mut rng = stream.generator();
    let mut rec = TraceRecorder {
        states: Vec::with_capacity(iterations + 1),
        accepted: Vec::with_capacity(iterations * model.accept_slots()),
    };
    drive(model, init, iterations, &mut rng, &mut rec);
    Ok(ChainTrace { kind: model.kind(), states: rec.states, slots: model.accept_slots(), accepted: rec.accepted })
}

/// How each chain of an ensemble is started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialPolicy<S> {
    Fixed(S),
    /// Every coordinate uniform on `[lo, hi]`.
    UniformBox { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec<S> {
    pub m_chains: usize,
    pub iterations: usize,
    pub seed: u64,
    pub init: InitialPolicy<S>,
    /// Added to the chain index to form the stream id.
    #[serde(default)]
    pub stream_offset: u64,
}

impl<S> EnsembleSpec<S> {
    pub fn new(m_chains: usize, iterations: usize, seed: u64, init: InitialPolicy<S>) -> Self {
        Self { m_chains, iterations, seed, init, stream_offset: 0 }
    }

    pub fn with_stream_offset(mut self, offset: u64) -> Self {
        self.stream_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_chains == 0 {
            return Err(Error::InvalidInput("m_chains must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stream(&self, chain: usize) -> RngStream {
        RngStream::new(self.seed, self.stream_offset + chain as u64)
    }
}

/// Runs every chain of the ensemble, feeding states to one observer per chain.
/// Chains run in parallel on the current rayon pool; the returned observers are
/// in chain order.
pub fn observe_ensemble<M, O, F>(model: &M, spec: &EnsembleSpec<M::State>, make: F) -> Result<Vec<O>>
where
    M: Model,
    O: Observer<M::State> + Send,
    F: Fn(usize) -> O + Sync,
{
    spec.validate()?;
    if let InitialPolicy::Fixed(s) = &spec.init {
        model.validate(s)?;
    }
    (0..spec.m_chains)
        .into_par_iter()
        .map(|j| {
            let mut rng = spec.stream(j).generator();
            let init = match &spec.init {
                InitialPolicy::Fixed(s) => s.clone(),
                InitialPolicy::UniformBox { lo, hi } => model.uniform_box(*lo, *hi, &mut rng)?,
            };
            let mut obs = make(j);
            drive(model, init, spec.iterations, &mut rng, &mut obs);
            Ok(obs)
        })
        .collect()
}

/// Runs the ensemble and keeps full traces.
pub fn run_ensemble<M: Model>(model: &M, spec: &EnsembleSpec<M::State>) -> Result<Vec<ChainTrace<M::State>>> {
    let cap = spec.iterations + 1;
    let slots = model.accept_slots();
    let recs = observe_ensemble(model, spec, |_| TraceRecorder {
        states: Vec::with_capacity(cap),
        accepted: Vec::with_capacity(spec.iterations * slots),
    })?;
    Ok(recs
        .into_iter()
        .map(|r| ChainTrace { kind: model.kind(), states: r.states, slots, accepted: r.accepted })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{annulus_of, f_radial, log_density_square};

    fn flat() -> SquareModel {
        SquareModel::new(ModelParams::new(0.0, 0.0, 3).unwrap())
    }

    fn interacting_square() -> SquareModel {
        SquareModel::new(ModelParams::new(0.1, 0.1, 3).unwrap())
    }

    fn centre() -> SquareConfig {
        SquareConfig::filled(3, [0.5, 0.5]).unwrap()
    }

    #[test]
    fn zero_iterations_keeps_only_init() {
        let t = run_chain(&PlanarModel, PlanarPoint::new(1.0, 0.0), 0, RngStream::new(1, 0)).unwrap();
        assert_eq!(t.states, vec![PlanarPoint::new(1.0, 0.0)]);
        assert_eq!(t.iterations(), 0);
    }

    #[test]
    fn traces_are_reproducible() {
        let a = run_chain(&interacting_square(), centre(), 50, RngStream::new(9, 2)).unwrap();
        let b = run_chain(&interacting_square(), centre(), 50, RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 51);
    }

    #[test]
    fn invalid_initial_state_is_rejected() {
        assert!(run_chain(&PlanarModel, PlanarPoint::new(0.0, 0.0), 5, RngStream::new(1, 0)).is_err());
        let one = SquareConfig::filled(1, [0.5, 0.5]).unwrap();
        assert!(run_chain(&interacting_square(), one, 5, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn flat_target_accepts_everything() {
        let t = run_chain(&flat(), centre(), 2000, RngStream::new(3, 0)).unwrap();
        assert_eq!(t.acceptance_rate(), 1.0);
        assert_eq!(t.accept_counts(), vec![2000; 3]);
    }

    #[test]
    fn coincident_start_leaves_zero_density_after_one_sweep() {
        let t = run_chain(&interacting_square(), centre(), 1, RngStream::new(5, 0)).unwrap();
        assert_eq!(t.accepted_at(1)[..2], [true, true]);
        assert!(log_density_square(&t.states[1], &interacting_square().params).is_finite());
    }

    #[test]
    fn coincident_proposal_is_never_accepted() {
        // particle 1 proposed exactly onto particle 2: log-ratio is −∞
        let p = interacting_square().params;
        let state = SquareConfig::new(vec![[0.2, 0.2], [0.7, 0.7], [0.1, 0.9]]).unwrap();
        let current = local_energy(&state, &p, 0, [0.2, 0.2]);
        let proposed = local_energy(&state, &p, 0, [0.7, 0.7]);
        assert!(current.is_finite() && proposed.is_infinite());
        assert_eq!((current - proposed).min(0.0).exp(), 0.0);
    }

    #[test]
    fn sweep_function_matches_model_step() {
        let p = interacting_square().params;
        let s0 = SquareConfig::new(vec![[0.2, 0.2], [0.7, 0.7], [0.1, 0.9]]).unwrap();
        let mut g1 = RngStream::new(11, 0).generator();
        let mut g2 = RngStream::new(11, 0).generator();
        let a = metropolis_sweep_square(&s0, &p, &mut g1);
        let mut b = s0.clone();
        interacting_square().step(&mut b, &mut g2, &mut [false; 3]);
        assert_eq!(a, b);
    }

    #[test]
    fn square_detailed_balance_reduced_form() {
        // α(x,y)π(x) = α(y,x)π(y) for single-particle moves
        let p = interacting_square().params;
        let mut g = RngStream::new(21, 0).generator();
        for _ in 0..10_000 {
            let x = interacting_square().uniform_box(0.0, 1.0, &mut g).unwrap();
            let mut y = x.clone();
            let i = g.random_range(0..3);
            y.set(i, [g.random(), g.random()]);
            let (lx, ly) = (log_density_square(&x, &p).value(), log_density_square(&y, &p).value());
            let axy = (ly - lx).min(0.0).exp();
            let ayx = (lx - ly).min(0.0).exp();
            let lhs = axy * lx.exp();
            let rhs = ayx * ly.exp();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(rhs));
        }
    }

    #[test]
    fn planar_acceptance_reference_values() {
        let x = PlanarPoint::new(0.25, 0.0);
        let y = PlanarPoint::new(0.0, 1.25);
        assert_eq!(accept_prob_planar(&x, &PlanarPoint::new(0.0, 0.25)).unwrap(), 1.0);
        assert_eq!(accept_prob_planar(&x, &y).unwrap(), 1.0);
        let back = accept_prob_planar(&y, &x).unwrap();
        let expected = f_radial(1.25).unwrap() / f_radial(0.25).unwrap();
        assert!((back - expected).abs() < 1e-14);
        assert!((back - 0.55402).abs() < 1e-5);
    }

    #[test]
    fn proposals_stay_in_the_annulus() {
        let mut g = RngStream::new(4, 0).generator();
        for r in [0.3, 1.0, 2.0, 7.5] {
            let x = PlanarPoint::new(r, 0.0);
            let a = annulus_of(&x).unwrap();
            for _ in 0..20_000 {
                let y = propose_planar(&x, &mut g).unwrap();
                assert!(a.contains(&y) || y.radius() == a.inner || y.radius() == a.outer);
                if r == 0.3 {
                    assert!(y.radius() > 0.7 - 1e-12 && y.radius() < 1.3 + 1e-12);
                }
            }
        }
        assert!(propose_planar(&PlanarPoint::new(0.0, 0.0), &mut g).is_err());
    }

    #[test]
    fn proposal_second_moment_matches_area_uniform_law() {
        // E‖y‖² = (inner² + outer²)/2 = 5 for r_x = 2
        let mut g = RngStream::new(8, 0).generator();
        let x = PlanarPoint::new(2.0, 0.0);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let r2 = propose_planar(&x, &mut g).unwrap().radius().powi(2);
            s += r2;
            s2 += r2 * r2;
        }
        let mean = s / n as f64;
        let sd = (s2 / n as f64 - mean * mean).sqrt();
        assert!((mean - 5.0).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn planar_chain_never_reaches_origin() {
        let t = run_chain(&PlanarModel, PlanarPoint::new(1.0, 0.0), 1_000_000, RngStream::new(2, 0)).unwrap();
        let min_r = t.states.iter().map(PlanarPoint::radius).fold(f64::INFINITY, f64::min);
        assert!(min_r > 0.0);
    }

    #[test]
    fn ensemble_of_one_equals_run_chain() {
        let spec = EnsembleSpec::new(1, 40, 77, InitialPolicy::Fixed(centre()));
        let e = run_ensemble(&interacting_square(), &spec).unwrap();
        let c = run_chain(&interacting_square(), centre(), 40, RngStream::new(77, 0)).unwrap();
        assert_eq!(e[0], c);
    }

    #[test]
    fn ensemble_is_independent_of_thread_count() {
        let spec = EnsembleSpec::new(10, 100, 5, InitialPolicy::UniformBox { lo: -10.0, hi: 10.0 });
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&PlanarModel, &spec).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn uniform_box_initial_states() {
        let spec = EnsembleSpec::new(5, 1, 3, InitialPolicy::UniformBox { lo: 0.0, hi: 1.0 });
        let e = run_ensemble(&interacting_square(), &spec).unwrap();
        assert!(e.windows(2).all(|w| w[0].initial() != w[1].initial()));
        let bad = EnsembleSpec::new(5, 1, 3, InitialPolicy::UniformBox { lo: -1.0, hi: 1.0 });
        assert!(run_ensemble(&interacting_square(), &bad).is_err());
        let empty = EnsembleSpec::new(0, 1, 3, InitialPolicy::UniformBox { lo: 0.0, hi: 1.0 });
        assert!(run_ensemble(&interacting_square(), &empty).is_err());
    }
}
