//! Command implementations. Each returns a JSON summary for the manifest and
//! writes its outputs through an [`OutputDir`].

use serde::Serialize;
use serde_json::{json, Value};

use armcmc::bounds::{
    certificate_theorem2, check_stationary_v, epsilon_for_params, proof_constants_planar, shift_coupling_report, uniform_report,
    verify_drift_planar, verify_minorization_planar, BoundReport, DriftCertificate, DriftGrid,
    MinorizationCertificate, SmallSet,
};
use armcmc::diagnostics::{
    builtin_functionals_planar, builtin_functionals_square, psrf, record_series, DfMode, PsrfReport,
};
use armcmc::functional::find;
use armcmc::sampler::{run_ensemble, ChainTrace};
use armcmc::tv::{
    builtin_tv_functionals_planar, builtin_tv_functionals_square, reference_planar, reference_square, tv_curves,
    TvCurve,
};
use armcmc::numerics::DEFAULT_EXPECTATION_TOL;
use armcmc::{
    EnsembleSpec, Functional, InitialPolicy, Model, ModelParams, PlanarModel, PlanarPoint, SquareConfig,
    SquareModel,
};

use crate::config::{DfChoice, ExperimentConfig, InitKind, ModelChoice};
use crate::error::CliError;
use crate::output::{fmt_f64, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Uniform,
    ShiftCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyKind {
    Drift,
    Minorization,
    ProofConstants,
}

/// A resolved command, as recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "command", content = "kind", rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Bound(BoundKind),
    Verify(VerifyKind),
    Diagnose,
    TvCurve,
}

impl Command {
    pub fn words(&self) -> Vec<&'static str> {
        match self {
            Command::Simulate => vec!["simulate"],
            Command::Bound(BoundKind::Uniform) => vec!["bound", "uniform"],
            Command::Bound(BoundKind::ShiftCoupling) => vec!["bound", "shift-coupling"],
            Command::Verify(VerifyKind::Drift) => vec!["verify", "drift"],
            Command::Verify(VerifyKind::Minorization) => vec!["verify", "minorization"],
            Command::Verify(VerifyKind::ProofConstants) => vec!["verify", "proof-constants"],
            Command::Diagnose => vec!["diagnose"],
            Command::TvCurve => vec!["tv-curve"],
        }
    }

    pub fn from_words(words: &[&str]) -> Option<Self> {
        Some(match words {
            ["simulate"] => Command::Simulate,
            ["bound", "uniform"] => Command::Bound(BoundKind::Uniform),
            ["bound", "shift-coupling"] => Command::Bound(BoundKind::ShiftCoupling),
            ["verify", "drift"] => Command::Verify(VerifyKind::Drift),
            ["verify", "minorization"] => Command::Verify(VerifyKind::Minorization),
            ["verify", "proof-constants"] => Command::Verify(VerifyKind::ProofConstants),
            ["diagnose"] => Command::Diagnose,
            ["tv-curve"] => Command::TvCurve,
            _ => return None,
        })
    }
}

fn square_model(cfg: &ExperimentConfig) -> Result<SquareModel, CliError> {
    let s = &cfg.square;
    Ok(SquareModel::new(ModelParams::new(s.c1.unwrap(), s.c2.unwrap(), s.n_particles.unwrap())?))
}

fn ensemble_spec<S>(cfg: &ExperimentConfig, fixed: impl FnOnce(&[f64]) -> Result<S, CliError>) -> Result<EnsembleSpec<S>, CliError> {
    let e = &cfg.ensemble;
    let init = match e.init.unwrap() {
        InitKind::Fixed => {
            let start = e.start.as_deref().ok_or_else(|| CliError::Usage("fixed init needs a start".into()))?;
            InitialPolicy::Fixed(fixed(start)?)
        }
        InitKind::Uniform => {
            let (lo, hi) = (e.lo.unwrap(), e.hi.unwrap());
            if !(lo < hi) {
                return Err(CliError::Usage(format!("uniform init needs lo < hi, got [{lo}, {hi}]")));
            }
            InitialPolicy::UniformBox { lo, hi }
        }
    };
    let spec = EnsembleSpec::new(e.m_chains.unwrap(), e.iterations.unwrap(), cfg.seed(), init);
    spec.validate()?;
    Ok(spec)
}

fn square_spec(cfg: &ExperimentConfig) -> Result<EnsembleSpec<SquareConfig>, CliError> {
    ensemble_spec(cfg, |s| Ok(SquareConfig::from_flat(s)?))
}

fn planar_spec(cfg: &ExperimentConfig) -> Result<EnsembleSpec<PlanarPoint>, CliError> {
    ensemble_spec(cfg, |s| match s {
        [x1, x2] => Ok(PlanarPoint::new(*x1, *x2)),
        _ => Err(CliError::Usage(format!("planar start needs 2 coordinates, got {}", s.len()))),
    })
}

fn select<S>(all: &[Functional<S>], names: &[String]) -> Result<Vec<Functional<S>>, CliError> {
    names
        .iter()
        .map(|n| {
            find(all, n).copied().ok_or_else(|| {
                let known: Vec<&str> = all.iter().map(|f| f.name).collect();
                CliError::Usage(format!("unknown functional {n:?}; known: {}", known.join(", ")))
            })
        })
        .collect()
}

// ---------------------------------------------------------------- simulate

fn trace_rows<S>(trace: &ChainTrace<S>, coords: impl Fn(&S) -> Vec<f64>) -> Vec<Vec<String>> {
    trace
        .states
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let mut row = vec![t.to_string()];
            row.extend(coords(s).into_iter().map(fmt_f64));
            if t == 0 {
                row.extend(std::iter::repeat_n("0".to_string(), trace.slots()));
            } else {
                row.extend(trace.accepted_at(t).iter().map(|&a| if a { "1" } else { "0" }.to_string()));
            }
            row
        })
        .collect()
}

fn write_traces<S>(
    out: &mut OutputDir,
    traces: &[ChainTrace<S>],
    header: Vec<String>,
    coords: impl Fn(&S) -> Vec<f64> + Copy,
) -> Result<Value, CliError> {
    let width = traces.len().saturating_sub(1).to_string().len().max(4);
    let mut rates = Vec::with_capacity(traces.len());
    for (j, tr) in traces.iter().enumerate() {
        out.write_csv(&format!("chain_{j:0width$}.csv"), &header, &trace_rows(tr, coords))?;
        rates.push(tr.acceptance_rate());
    }
    let finals: Vec<Vec<f64>> = traces.iter().map(|t| coords(t.states.last().unwrap())).collect();
    Ok(json!({ "chains": traces.len(), "acceptance_rates": rates, "final_states": finals }))
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    match cfg.model() {
        ModelChoice::Square => {
            let model = square_model(cfg)?;
            let traces = run_ensemble(&model, &square_spec(cfg)?)?;
            let n = model.params.n_particles;
            let mut header = vec!["iter".to_string()];
            for i in 1..=n {
                header.push(format!("x{i}1"));
                header.push(format!("x{i}2"));
            }
            header.extend((1..=n).map(|i| format!("accepted{i}")));
            write_traces(out, &traces, header, |s: &SquareConfig| s.flat().collect())
        }
        ModelChoice::Planar => {
            let traces = run_ensemble(&PlanarModel, &planar_spec(cfg)?)?;
            let header = ["iter", "x1", "x2", "accepted"].map(String::from).to_vec();
            write_traces(out, &traces, header, |x: &PlanarPoint| vec![x.x1, x.x2])
        }
    }
}

// ---------------------------------------------------------------- bound

pub fn bound(kind: BoundKind, cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let report = match kind {
        BoundKind::Uniform => {
            let s = &cfg.square;
            let params = ModelParams::new(s.c1.unwrap(), s.c2.unwrap(), s.n_particles.unwrap())?;
            epsilon_for_params(&params)?;
            let u = &cfg.uniform;
            BoundReport::Uniform(uniform_report(
                params.c1,
                params.c2,
                u.epsilon_decimals.unwrap(),
                u.n.unwrap(),
                u.delta.unwrap(),
            )?)
        }
        BoundKind::ShiftCoupling => {
            let s = &cfg.shift;
            let mc = MinorizationCertificate::new(s.n0.unwrap(), s.epsilon.unwrap(), SmallSet::Unspecified, "Q")?;
            let dc = DriftCertificate::new(s.lambda.unwrap(), s.b.unwrap(), s.d.unwrap(), s.a.unwrap(), "V")?;
            // the certified planar constants keep their descriptions
            let (pm, pd) = certificate_theorem2();
            let same = (mc.n0, mc.epsilon, dc.lambda, dc.b, dc.d, dc.a) == (pm.n0, pm.epsilon, pd.lambda, pd.b, pd.d, pd.a);
            let (mc, dc) = if same { (pm, pd) } else { (mc, dc) };
            BoundReport::ShiftCoupling(shift_coupling_report(&mc, &dc, s.e_nu_v.unwrap(), s.r.unwrap())?)
        }
    };
    let value = serde_json::to_value(&report)?;
    out.write_json("bound.json", &value)?;
    Ok(value)
}

// ---------------------------------------------------------------- verify

pub fn verify(kind: VerifyKind, cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let v = &cfg.verify;
    let value = match kind {
        VerifyKind::Drift => {
            let r_check = v.r_check.unwrap();
            if !(r_check > 4.0) {
                return Err(CliError::Usage(format!("r_check must exceed 4, got {r_check}")));
            }
            let grid = DriftGrid { points_per_regime: v.points_per_regime.unwrap(), beyond: (4.0, r_check), ..DriftGrid::default() };
            let audit = verify_drift_planar(&grid, v.tol.unwrap())?;
            let stationary_v = check_stationary_v()?;
            json!({ "status": "pass", "drift": audit, "stationary_v": stationary_v })
        }
        VerifyKind::Minorization => {
            json!({ "status": "pass", "minorization": verify_minorization_planar(v.tol.unwrap().min(1e-12))? })
        }
        VerifyKind::ProofConstants => json!({ "status": "pass", "proof_constants": proof_constants_planar()? }),
    };
    out.write_json("verify.json", &value)?;
    Ok(value)
}

// ---------------------------------------------------------------- diagnose

fn df_mode(c: DfChoice) -> DfMode {
    match c {
        DfChoice::Unit => DfMode::Unit,
        DfChoice::MomentEstimated => DfMode::MomentEstimated,
    }
}

fn diagnose_with<M: Model>(
    model: &M,
    spec: &EnsembleSpec<M::State>,
    funs: &[Functional<M::State>],
    cfg: &ExperimentConfig,
) -> Result<Vec<PsrfReport>, CliError> {
    let n_star = cfg.diagnose.burn_in.unwrap();
    let mode = df_mode(cfg.diagnose.df_mode.unwrap());
    let series = record_series(model, spec, funs)?;
    funs.iter()
        .zip(&series)
        .map(|(f, s)| psrf(s, n_star, mode, f.name).map_err(CliError::from))
        .collect()
}

pub fn diagnose(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let m = cfg.ensemble.m_chains.unwrap();
    if m < 2 {
        return Err(CliError::Usage(format!("diagnose needs at least 2 chains, got {m}")));
    }
    let names = cfg.diagnose.functionals.as_deref().unwrap();
    let reports = match cfg.model() {
        ModelChoice::Square => {
            let funs = select(&builtin_functionals_square(), names)?;
            diagnose_with(&square_model(cfg)?, &square_spec(cfg)?, &funs, cfg)?
        }
        ModelChoice::Planar => {
            let funs = select(&builtin_functionals_planar(), names)?;
            diagnose_with(&PlanarModel, &planar_spec(cfg)?, &funs, cfg)?
        }
    };
    let header = ["functional", "B", "W", "sigma2_hat", "V_hat", "R", "df_mode", "R_unit", "d_hat", "R_moment", "m", "n", "n_star"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.functional.clone(),
                fmt_f64(r.b),
                fmt_f64(r.w),
                fmt_f64(r.sigma2_hat),
                fmt_f64(r.v_hat),
                fmt_f64(r.r),
                match r.df_mode {
                    DfMode::Unit => "unit".into(),
                    DfMode::MomentEstimated => "moment-estimated".into(),
                },
                fmt_f64(r.r_unit),
                fmt_f64(r.d_hat),
                fmt_f64(r.r_moment),
                r.m.to_string(),
                r.n.to_string(),
                r.n_star.to_string(),
            ]
        })
        .collect();
    out.write_csv("psrf.csv", &header, &rows)?;
    let value = serde_json::to_value(&reports)?;
    out.write_json("psrf.json", &value)?;
    Ok(value)
}

// ---------------------------------------------------------------- tv-curve

pub fn tv_curve(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let names = cfg.tv.functionals.as_deref().unwrap();
    let checkpoints = cfg.tv.checkpoints.as_deref().unwrap();
    let curves: Vec<TvCurve> = match cfg.model() {
        ModelChoice::Square => {
            let model = square_model(cfg)?;
            if model.params.n_particles < 3 {
                return Err(CliError::Usage("square TV functionals need at least 3 particles".into()));
            }
            let funs = select(&builtin_tv_functionals_square(), names)?;
            let refs = funs
                .iter()
                .map(|f| {
                    reference_square(&model, f, model.params.n_particles, cfg.tv.reference_chains.unwrap(), cfg.seed())
                })
                .collect::<Result<Vec<_>, _>>()?;
            tv_curves(&model, &funs, &refs, &square_spec(cfg)?, checkpoints)?
        }
        ModelChoice::Planar => {
            let funs = select(&builtin_tv_functionals_planar(), names)?;
            let refs = funs
                .iter()
                .map(|f| reference_planar(f, DEFAULT_EXPECTATION_TOL))
                .collect::<Result<Vec<_>, _>>()?;
            tv_curves(&PlanarModel, &funs, &refs, &planar_spec(cfg)?, checkpoints)?
        }
    };
    let header = ["checkpoint", "estimate", "stderr", "reference", "functional", "seed"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for c in &curves {
        for p in &c.points {
            rows.push(vec![
                p.checkpoint.to_string(),
                fmt_f64(p.estimate),
                fmt_f64(p.std_error),
                fmt_f64(c.reference.value),
                c.functional.clone(),
                c.seed.to_string(),
            ]);
        }
    }
    out.write_csv("tv_curve.csv", &header, &rows)?;
    out.write_json("tv_curve.json", &curves)?;
    let summary: Vec<Value> = curves
        .iter()
        .map(|c| {
            let last = c.points.last();
            json!({
                "functional": c.functional,
                "reference": c.reference,
                "final_checkpoint": last.map(|p| p.checkpoint),
                "final_estimate": last.map(|p| p.estimate),
            })
        })
        .collect();
    Ok(Value::Array(summary))
}

pub fn execute(command: Command, cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    match command {
        Command::Simulate => simulate(cfg, out),
        Command::Bound(k) => bound(k, cfg, out),
        Command::Verify(k) => verify(k, cfg, out),
        Command::Diagnose => diagnose(cfg, out),
        Command::TvCurve => tv_curve(cfg, out),
    }
}
