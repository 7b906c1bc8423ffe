//! Experiment configuration files (JSON).
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "stationary-gaussian",
//!   "horizon": 100000,
//!   "replications": 100,
//!   "seed": 1,
//!   "record": "thinned",
//!   "tie_break": "lowest",
//!   "environment": { "kind": "gaussian", "arms": 10, "means": "random", "seed": 7 },
//!   "policies": ["fe:constant:sqrt", "fe:linear", "fe:expauto", "ucb1", "epsgreedy"]
//! }
//! ```
//!
//! `environment.means` is either `"random"` (means, and Gaussian scales,
//! drawn from U(0, 1) with `environment.seed`) or an explicit list. Random
//! environments with `phases > 1` are split into equal-length phases. An
//! explicit piecewise environment is given as `environment.schedule`, a list
//! of `{ "start", "means", "sigmas" }` entries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{generate_piecewise, generate_random_instance, ArmDistribution, Environment, Phase, RewardKind};
use crate::policy::{BuildContext, PolicySpec, TieBreak};
use crate::runner::Recording;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(serde_json::Error),
    #[error("config field `{field}`: {reason}")]
    Field { field: String, reason: String },
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        Self::Syntax(e)
    }
}

fn field_err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeansKeyword {
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeansConfig {
    Explicit(Vec<f64>),
    Keyword(MeansKeyword),
}

impl Default for MeansConfig {
    fn default() -> Self {
        Self::Keyword(MeansKeyword::Random)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub start: u64,
    pub means: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub kind: RewardKind,
    pub arms: usize,
    #[serde(default)]
    pub means: MeansConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub phases: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<PhaseConfig>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Sub-gaussian parameter used by the bound evaluators; defaults to the
    /// largest arm noise scale of the environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub name: String,
    pub horizon: u64,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub record: Recording,
    #[serde(default)]
    pub tie_break: TieBreak,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub environment: EnvironmentConfig,
    pub policies: Vec<PolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
}

fn arms_from(
    kind: RewardKind,
    means: &[f64],
    sigmas: Option<&[f64]>,
    field: &str,
) -> Result<Vec<ArmDistribution>, ConfigError> {
    if let Some(s) = sigmas {
        if s.len() != means.len() {
            return Err(field_err(
                field,
                format!("{} sigmas for {} means", s.len(), means.len()),
            ));
        }
    }
    means
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let arm = match kind {
                RewardKind::Gaussian => {
                    let sigma = sigmas
                        .map(|s| s[i])
                        .ok_or_else(|| field_err(field, "gaussian arms need `sigmas`"))?;
                    if !(sigma.is_finite() && sigma >= 0.0 && mu.is_finite()) {
                        return Err(field_err(field, format!("arm {i}: invalid mean {mu} or sigma {sigma}")));
                    }
                    ArmDistribution::Gaussian { mu, sigma }
                }
                RewardKind::Bernoulli => {
                    if !(0.0..=1.0).contains(&mu) {
                        return Err(field_err(field, format!("arm {i}: Bernoulli mean {mu} outside [0, 1]")));
                    }
                    ArmDistribution::Bernoulli { p: mu }
                }
                RewardKind::Deterministic => {
                    if !mu.is_finite() {
                        return Err(field_err(field, format!("arm {i}: invalid mean {mu}")));
                    }
                    ArmDistribution::Deterministic { mu }
                }
            };
            Ok(arm)
        })
        .collect()
}

impl EnvironmentConfig {
    /// Builds the environment for a horizon; random instances are drawn from
    /// `seed` and are the same for every policy and replication.
    pub fn build(&self, horizon: u64) -> Result<Environment, ConfigError> {
        if self.arms == 0 {
            return Err(field_err("environment.arms", "must be at least 1"));
        }
        let invalid = |e: crate::env::EnvError| field_err("environment", e.to_string());
        if let Some(schedule) = &self.schedule {
            if !matches!(self.means, MeansConfig::Keyword(_)) || self.sigmas.is_some() || self.phases != 1 {
                return Err(field_err(
                    "environment.schedule",
                    "an explicit schedule replaces `means`, `sigmas` and `phases`",
                ));
            }
            let phases = schedule
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let field = format!("environment.schedule[{j}]");
                    if p.means.len() != self.arms {
                        return Err(field_err(&field, format!("expected {} means", self.arms)));
                    }
                    Ok(Phase {
                        start: p.start,
                        arms: arms_from(self.kind, &p.means, p.sigmas.as_deref(), &field)?,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Environment::piecewise(phases, horizon).map_err(invalid);
        }
        if self.phases == 0 || self.phases as u64 > horizon {
            return Err(field_err("environment.phases", format!("must lie in 1..={horizon}")));
        }
        match &self.means {
            MeansConfig::Keyword(MeansKeyword::Random) => {
                if self.sigmas.is_some() {
                    return Err(field_err(
                        "environment.sigmas",
                        "random instances draw their own sigmas",
                    ));
                }
                if self.arms < 2 {
                    return Err(field_err("environment.arms", "random instances need at least 2 arms"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                if self.phases == 1 {
                    generate_random_instance(self.arms, self.kind, horizon, &mut rng).map_err(invalid)
                } else {
                    generate_piecewise(self.arms, self.phases, horizon, self.kind, &mut rng).map_err(invalid)
                }
            }
            MeansConfig::Explicit(means) => {
                if means.len() != self.arms {
                    return Err(field_err("environment.means", format!("expected {} values", self.arms)));
                }
                if self.phases != 1 {
                    return Err(field_err(
                        "environment.phases",
                        "explicit piecewise means go in `schedule`",
                    ));
                }
                let arms = arms_from(self.kind, means, self.sigmas.as_deref(), "environment.means")?;
                Environment::stationary(arms, horizon).map_err(invalid)
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses and fully validates a config.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validated_environment().map(|_| ())
    }

    /// Validates every field and returns the environment.
    pub fn validated_environment(&self) -> Result<Environment, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.horizon == 0 {
            return Err(field_err("horizon", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(field_err("replications", "must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(field_err("policies", "at least one policy is required"));
        }
        if let Some(BoundsConfig { sigma: Some(s) }) = &self.bounds {
            if !(s.is_finite() && *s > 0.0) {
                return Err(field_err("bounds.sigma", "must be positive"));
            }
        }
        let env = self.environment.build(self.horizon)?;
        let ctx = self.context(&env);
        for (i, policy) in self.policies.iter().enumerate() {
            let field = format!("policies[{i}]");
            if let Some(tau) = policy.window(&ctx) {
                if tau > self.horizon {
                    return Err(field_err(&field, format!("window {tau} exceeds the horizon")));
                }
            }
            policy.build(&ctx).map_err(|e| field_err(&field, e.to_string()))?;
        }
        Ok(env)
    }

    pub fn context(&self, env: &Environment) -> BuildContext {
        BuildContext {
            arms: env.num_arms(),
            horizon: self.horizon,
            breakpoints: env.breakpoints() as u64,
            tie_break: self.tie_break,
        }
    }
}
