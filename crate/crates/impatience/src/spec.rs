//! Experiment specification: the TOML configuration file and its defaults.
//!
//! Every section and key is optional; missing keys take the defaults below.
//!
//! ```toml
//! name = "baseline"
//! seed = 42
//! out_dir = "out"
//! checkpoint = "out/train/checkpoint.json"   # needed by the learned feed
//!
//! [system]
//! lambda_set = [3, 5, 7, 9, 11, 13, 15]
//! delta_fraction = 0.8      # delta_lambda ~ U(+-fraction * lambda/2)
//! # delta = 0.5             # fixed delta_lambda instead
//! patience = { kind = "constant", value = 2.0 }   # or { kind = "exponential", mean = 2.0 }
//! t_local = 1.0
//! lambda_tar = 0.0
//! router = "split"          # or "join-shorter"
//! landing = "tail"          # or "poisson-ahead"
//!
//! [feed]
//! renege_threshold = 0.5
//! jockey_threshold = 0.5
//!
//! [simulate]
//! feeds = ["markov"]
//! horizon = 200.0
//! warmup_fraction = 0.1
//! replications = 4
//! samples = 100
//! trace = false
//! profile_grid = [1, 2, 4, 8, 16, 32, 64, 128, 256]
//! profile_reps = 200
//!
//! [train]
//! episodes = 100
//! epochs_per_episode = 100
//! learning_rate = 0.001
//! gamma = 0.99
//! tau = 1.0
//! delta = 1.0
//! hidden = [128, 128]
//! max_initial_backlog = 30
//!
//! [asymptotics]
//! grid = [1, 2, 4, 8, 16, 32, 64, 128, 256]
//! reps = 2000
//! m = 3
//! mu_1 = 1.0
//! mu_2 = 2.0
//! patience = 2.0
//! confidence = 0.95
//! error_reps = 2000
//! agreement_reps = 200
//! chernoff_reps = 100000
//! ```

use std::path::PathBuf;

use impatience_core::actor_critic::TrainerConfig;
use impatience_core::config::{LandingMode, PatienceModel, Router, SystemConfig, LAMBDA_SET};
use impatience_core::env::TenantEnvConfig;
use impatience_core::sim::MarkovFeed;
use serde::{Deserialize, Serialize};

use crate::error::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedKind {
    Markov,
    Learned,
    Baseline,
    DebugZero,
}

impl FeedKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedKind::Markov => "markov",
            FeedKind::Learned => "learned",
            FeedKind::Baseline => "baseline",
            FeedKind::DebugZero => "debug-zero",
        }
    }

    pub fn parse(s: &str) -> Result<Self, AppError> {
        Ok(match s {
            "markov" => FeedKind::Markov,
            "learned" => FeedKind::Learned,
            "baseline" => FeedKind::Baseline,
            "debug-zero" => FeedKind::DebugZero,
            _ => {
                return Err(AppError::Usage(format!(
                    "unknown feed `{s}` (expected markov, learned, baseline or debug-zero)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PatienceSpec {
    Constant { value: f64 },
    Exponential { mean: f64 },
}

impl PatienceSpec {
    pub fn model(self) -> PatienceModel {
        match self {
            PatienceSpec::Constant { value } => PatienceModel::Constant(value),
            PatienceSpec::Exponential { mean } => PatienceModel::Exponential { mean },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouterSpec {
    Split,
    JoinShorter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandingSpec {
    Tail,
    PoissonAhead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub lambda_set: Vec<f64>,
    pub delta_fraction: f64,
    pub delta: Option<f64>,
    pub patience: PatienceSpec,
    pub t_local: f64,
    pub lambda_tar: f64,
    pub router: RouterSpec,
    pub landing: LandingSpec,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            lambda_set: LAMBDA_SET.to_vec(),
            delta_fraction: 0.8,
            delta: None,
            patience: PatienceSpec::Constant { value: 2.0 },
            t_local: 1.0,
            lambda_tar: 0.0,
            router: RouterSpec::Split,
            landing: LandingSpec::Tail,
        }
    }
}

impl SystemSpec {
    /// Evenly split system at total rate `lambda` with the given offset.
    pub fn system(&self, lambda: f64, delta: f64, seed: u64) -> Result<SystemConfig, AppError> {
        let half = lambda / 2.0;
        let cfg = SystemConfig::derived(half, half, delta)?
            .patience(self.patience.model())
            .t_local(self.t_local)
            .lambda_tar(self.lambda_tar)
            .seed(seed)
            .router(match self.router {
                RouterSpec::Split => Router::Split,
                RouterSpec::JoinShorter => Router::JoinShorter,
            })
            .landing(match self.landing {
                LandingSpec::Tail => LandingMode::Tail,
                LandingSpec::PoissonAhead => LandingMode::PoissonAhead,
            });
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.lambda_set.is_empty() || self.lambda_set.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(AppError::Usage("system.lambda_set needs positive arrival rates".into()));
        }
        if !(0.0..1.0).contains(&self.delta_fraction) {
            return Err(AppError::Usage("system.delta_fraction must lie in [0, 1)".into()));
        }
        self.patience.model().validate()?;
        for &l in &self.lambda_set {
            self.system(l, self.delta.unwrap_or(0.0), 0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedSpec {
    pub renege_threshold: f64,
    pub jockey_threshold: f64,
}

impl Default for FeedSpec {
    fn default() -> Self {
        let d = MarkovFeed::default();
        Self {
            renege_threshold: d.renege_threshold,
            jockey_threshold: d.jockey_threshold,
        }
    }
}

impl FeedSpec {
    pub fn markov(&self) -> MarkovFeed {
        MarkovFeed::new(self.renege_threshold, self.jockey_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    pub feeds: Vec<FeedKind>,
    pub horizon: f64,
    pub warmup_fraction: f64,
    pub replications: u64,
    /// Series samples per run.
    pub samples: u64,
    pub trace: bool,
    pub profile_grid: Vec<u64>,
    /// Replications per backlog of the rate profile; 0 skips it.
    pub profile_reps: u64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            feeds: vec![FeedKind::Markov],
            horizon: 200.0,
            warmup_fraction: 0.1,
            replications: 4,
            samples: 100,
            trace: false,
            profile_grid: powers_of_two(8),
            profile_reps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub episodes: usize,
    pub epochs_per_episode: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub tau: f64,
    pub delta: f64,
    pub hidden: Vec<usize>,
    pub max_initial_backlog: usize,
}

impl Default for TrainSpec {
    fn default() -> Self {
        let d = TrainerConfig::default();
        Self {
            episodes: d.episodes,
            epochs_per_episode: d.epochs_per_episode,
            learning_rate: d.learning_rate,
            gamma: d.gamma,
            tau: d.tau,
            delta: d.delta,
            hidden: d.hidden,
            max_initial_backlog: TenantEnvConfig::default().max_initial_backlog,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSpec {
    pub grid: Vec<u64>,
    pub reps: u64,
    pub m: u64,
    /// Use the stationary law of queue 2 instead of a fixed `m`.
    pub stationary_m: bool,
    pub mu_1: f64,
    pub mu_2: f64,
    pub patience: f64,
    pub confidence: f64,
    pub error_reps: u64,
    pub agreement_reps: u64,
    pub chernoff_reps: u64,
}

impl Default for AsymptoticsSpec {
    fn default() -> Self {
        Self {
            grid: powers_of_two(8),
            reps: 2000,
            m: 3,
            stationary_m: false,
            mu_1: 1.0,
            mu_2: 2.0,
            patience: 2.0,
            confidence: 0.95,
            error_reps: 2000,
            agreement_reps: 200,
            chernoff_reps: 100_000,
        }
    }
}

/// `1, 2, 4, ..., 2^max_exp`.
pub fn powers_of_two(max_exp: u32) -> Vec<u64> {
    (0..=max_exp).map(|e| 1u64 << e).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Trained model for the learned feed.
    pub checkpoint: Option<PathBuf>,
    pub system: SystemSpec,
    pub feed: FeedSpec,
    pub simulate: SimulateSpec,
    pub train: TrainSpec,
    pub asymptotics: AsymptoticsSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 0,
            out_dir: None,
            checkpoint: None,
            system: SystemSpec::default(),
            feed: FeedSpec::default(),
            simulate: SimulateSpec::default(),
            train: TrainSpec::default(),
            asymptotics: AsymptoticsSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Fails for integers beyond `i64::MAX`, which TOML cannot hold.
    pub fn to_toml(&self) -> Result<String, AppError> {
        toml::to_string(self).map_err(|e| AppError::Usage(format!("config: {e}")))
    }

    pub fn trainer(&self) -> TrainerConfig {
        let t = &self.train;
        TrainerConfig {
            learning_rate: t.learning_rate,
            gamma: t.gamma,
            episodes: t.episodes,
            epochs_per_episode: t.epochs_per_episode,
            tau: t.tau,
            delta: t.delta,
            hidden: t.hidden.clone(),
            seed: self.seed,
            ..TrainerConfig::default()
        }
    }

    pub fn tenant_env(&self) -> TenantEnvConfig {
        TenantEnvConfig {
            lambda_set: self.system.lambda_set.clone(),
            delta_fraction: self.system.delta_fraction,
            patience: self.system.patience.model(),
            max_initial_backlog: self.train.max_initial_backlog,
        }
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if i64::try_from(self.seed).is_err() {
            return Err(AppError::Usage("seed must be at most 2^63 - 1".into()));
        }
        self.system.validate()?;
        self.trainer().validate()?;
        self.tenant_env().validate()?;
        let s = &self.simulate;
        if !(s.horizon > 0.0 && s.horizon.is_finite()) || !(0.0..1.0).contains(&s.warmup_fraction) {
            return Err(AppError::Usage("simulate.horizon must be positive and warmup_fraction in [0, 1)".into()));
        }
        if s.replications == 0 || s.feeds.is_empty() {
            return Err(AppError::Usage("simulate needs at least one feed and one replication".into()));
        }
        let a = &self.asymptotics;
        if a.grid.is_empty() || a.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AppError::Usage("asymptotics.grid must be strictly increasing".into()));
        }
        if a.mu_1 == a.mu_2 || !(a.mu_1 > 0.0 && a.mu_2 > 0.0) {
            return Err(AppError::Usage("asymptotics needs distinct positive mu_1 and mu_2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let spec = ExperimentSpec::default();
        let back = ExperimentSpec::from_toml(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(back, spec);
        spec.validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let spec = ExperimentSpec::from_toml(
            r#"
            seed = 7
            [system]
            patience = { kind = "exponential", mean = 3.0 }
            router = "join-shorter"
            [simulate]
            feeds = ["markov", "baseline"]
            "#,
        )
        .unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.system.patience, PatienceSpec::Exponential { mean: 3.0 });
        assert_eq!(spec.system.router, RouterSpec::JoinShorter);
        assert_eq!(spec.simulate.feeds, vec![FeedKind::Markov, FeedKind::Baseline]);
        assert_eq!(spec.train, TrainSpec::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentSpec::from_toml("[system]\nlambda = 3").is_err());
    }

    #[test]
    fn infeasible_delta_is_a_config_error() {
        let mut spec = ExperimentSpec::default();
        spec.system.delta = Some(10.0);
        assert_eq!(spec.validate().unwrap_err().exit_code(), 1);
    }

    #[test]
    fn feed_names_round_trip() {
        for f in [FeedKind::Markov, FeedKind::Learned, FeedKind::Baseline, FeedKind::DebugZero] {
            assert_eq!(FeedKind::parse(f.as_str()).unwrap(), f);
        }
        assert!(FeedKind::parse("oracle").is_err());
    }
}
