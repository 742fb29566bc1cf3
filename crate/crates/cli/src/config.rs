//! Experiment configuration: TOML with one section per concern. Every field
//! is optional in the file; `resolve` fills model- and command-specific
//! defaults so the manifest can record a complete configuration.

use serde::{Deserialize, Serialize};

use armcmc::tv::default_checkpoints;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Square,
    Planar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DfChoice {
    Unit,
    MomentEstimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Fixed,
    Uniform,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareSection {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub n_particles: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub m_chains: Option<usize>,
    pub iterations: Option<usize>,
    pub init: Option<InitKind>,
    /// Flat coordinates of the fixed start.
    pub start: Option<Vec<f64>>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    pub burn_in: Option<usize>,
    pub functionals: Option<Vec<String>>,
    pub df_mode: Option<DfChoice>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSection {
    pub functionals: Option<Vec<String>>,
    pub checkpoints: Option<Vec<usize>>,
    /// Chains in the square model's Monte Carlo reference ensemble.
    pub reference_chains: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformSection {
    pub n: Option<u64>,
    pub delta: Option<f64>,
    pub epsilon_decimals: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSection {
    pub r: Option<f64>,
    pub e_nu_v: Option<f64>,
    pub epsilon: Option<f64>,
    pub n0: Option<u64>,
    pub lambda: Option<f64>,
    pub b: Option<f64>,
    pub d: Option<f64>,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub points_per_regime: Option<usize>,
    pub tol: Option<f64>,
    pub r_check: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelChoice>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub square: SquareSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub diagnose: DiagnoseSection,
    #[serde(default)]
    pub tv: TvSection,
    #[serde(default)]
    pub uniform: UniformSection,
    #[serde(default)]
    pub shift: ShiftSection,
    #[serde(default)]
    pub verify: VerifySection,
}

/// Which command the defaults are resolved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Simulate,
    Diagnose,
    TvCurve,
    Other,
}

pub const DEFAULT_SEED: u64 = 42;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills every unset field with its default for `purpose`.
    pub fn resolve(mut self, purpose: Purpose) -> Result<Self, CliError> {
        let model = *self.model.get_or_insert(ModelChoice::Square);
        self.seed.get_or_insert(DEFAULT_SEED);

        let sq = &mut self.square;
        sq.c1.get_or_insert(0.1);
        sq.c2.get_or_insert(0.1);
        let n_particles = *sq.n_particles.get_or_insert(3);

        // ensemble defaults are the reference experiment setups for each model
        let (m, iters, init, lo, hi) = match (model, purpose) {
            (ModelChoice::Square, Purpose::TvCurve) => (5000, 500, InitKind::Fixed, 0.0, 1.0),
            (ModelChoice::Planar, Purpose::TvCurve) => (3000, 300, InitKind::Fixed, -10.0, 10.0),
            (ModelChoice::Square, _) => (5, 60, InitKind::Uniform, 0.0, 1.0),
            (ModelChoice::Planar, _) => (10, 600, InitKind::Uniform, -10.0, 10.0),
        };
        let e = &mut self.ensemble;
        e.m_chains.get_or_insert(m);
        let iterations = *e.iterations.get_or_insert(iters);
        let init = *e.init.get_or_insert(init);
        e.lo.get_or_insert(lo);
        e.hi.get_or_insert(hi);
        if init == InitKind::Fixed && e.start.is_none() {
            e.start = Some(match model {
                ModelChoice::Square => vec![0.5; 2 * n_particles],
                ModelChoice::Planar => vec![1.0, 0.0],
            });
        }

        let d = &mut self.diagnose;
        d.burn_in.get_or_insert(iterations / 2);
        d.functionals.get_or_insert_with(|| vec!["psi".into(), "phi1".into(), "phi2".into()]);
        d.df_mode.get_or_insert(DfChoice::Unit);

        let t = &mut self.tv;
        t.functionals.get_or_insert_with(|| vec!["f".into()]);
        t.checkpoints
            .get_or_insert_with(|| default_checkpoints().into_iter().filter(|&c| c <= iterations).collect());
        t.reference_chains.get_or_insert(5000);

        let u = &mut self.uniform;
        u.n.get_or_insert(163);
        u.delta.get_or_insert(0.01);
        u.epsilon_decimals.get_or_insert(3);

        let s = &mut self.shift;
        s.r.get_or_insert(0.0016);
        s.e_nu_v.get_or_insert(std::f64::consts::E);
        s.epsilon.get_or_insert(3.5e-5);
        s.n0.get_or_insert(2);
        s.lambda.get_or_insert(0.995);
        s.b.get_or_insert(2.7f64.exp() - 0.995);
        s.d.get_or_insert((17.0f64 / 8.0).exp());
        s.a.get_or_insert(2.7f64.exp());

        let v = &mut self.verify;
        v.points_per_regime.get_or_insert(2000);
        v.tol.get_or_insert(1e-10);
        v.r_check.get_or_insert(50.0);

        if matches!(purpose, Purpose::Diagnose) && self.diagnose.burn_in.unwrap() >= iterations {
            return Err(CliError::Usage(format!(
                "burn_in {} must be below iterations {iterations}",
                self.diagnose.burn_in.unwrap()
            )));
        }
        Ok(self)
    }

    pub fn model(&self) -> ModelChoice {
        self.model.unwrap_or(ModelChoice::Square)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_reference_setups() {
        let c = ExperimentConfig::default().resolve(Purpose::Diagnose).unwrap();
        assert_eq!(c.ensemble.m_chains, Some(5));
        assert_eq!(c.ensemble.iterations, Some(60));
        assert_eq!(c.diagnose.burn_in, Some(30));
        let p = ExperimentConfig { model: Some(ModelChoice::Planar), ..Default::default() }
            .resolve(Purpose::TvCurve)
            .unwrap();
        assert_eq!(p.ensemble.start, Some(vec![1.0, 0.0]));
        assert_eq!(p.ensemble.m_chains, Some(3000));
        assert_eq!(*p.tv.checkpoints.as_ref().unwrap().last().unwrap(), 300);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = ExperimentConfig::default().resolve(Purpose::TvCurve).unwrap();
        let back = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, back);
        assert_eq!(back.clone().resolve(Purpose::TvCurve).unwrap(), back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("[ensemble]\nchains = 3\n").is_err());
        let c = ExperimentConfig::parse("model = \"planar\"\nseed = 7\n[ensemble]\nm_chains = 3\n").unwrap();
        assert_eq!((c.model(), c.seed(), c.ensemble.m_chains), (ModelChoice::Planar, 7, Some(3)));
    }

    #[test]
    fn burn_in_must_leave_iterations() {
        let c = ExperimentConfig::parse("[ensemble]\niterations = 10\n[diagnose]\nburn_in = 10\n").unwrap();
        assert!(c.resolve(Purpose::Diagnose).is_err());
    }
}
