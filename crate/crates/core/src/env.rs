//! Reward processes: stationary and piecewise-stationary arm sets.
//!
//! Arms are indexed from 0 and time steps from 1. A piecewise environment is
//! an ordered list of phases; phase `j` is active from its `start` until the
//! step before the next phase starts.
//!
//! Gaussian rewards are drawn with `rand_distr::StandardNormal` (ziggurat),
//! Bernoulli rewards by comparing one uniform draw with `p`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("time step {t} outside 1..={horizon}")]
    TimeOutOfRange { t: u64, horizon: u64 },
    #[error("arm {arm} outside 0..{k}")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("arm {0} is optimal in every phase")]
    AlwaysOptimal(usize),
    #[error("invalid environment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArmDistribution {
    Gaussian { mu: f64, sigma: f64 },
    Bernoulli { p: f64 },
    Deterministic { mu: f64 },
}

impl ArmDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mu, .. } | Self::Deterministic { mu } => mu,
            Self::Bernoulli { p } => p,
        }
    }

    /// Sub-gaussian parameter of the reward noise.
    pub fn subgaussian_sigma(&self) -> f64 {
        match *self {
            Self::Gaussian { sigma, .. } => sigma,
            Self::Bernoulli { .. } => 0.5,
            Self::Deterministic { .. } => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            Self::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Deterministic { mu } => mu,
        }
    }

    fn validate(&self) -> Result<(), EnvError> {
        match *self {
            Self::Gaussian { mu, sigma } if mu.is_finite() && sigma.is_finite() && sigma >= 0.0 => Ok(()),
            Self::Bernoulli { p } if (0.0..=1.0).contains(&p) => Ok(()),
            Self::Deterministic { mu } if mu.is_finite() => Ok(()),
            other => Err(EnvError::Invalid(format!("bad arm parameters {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Gaussian,
    Bernoulli,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start: u64,
    pub arms: Vec<ArmDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    k: usize,
    horizon: u64,
    phases: Vec<Phase>,
}

impl Environment {
    pub fn stationary(arms: Vec<ArmDistribution>, horizon: u64) -> Result<Self, EnvError> {
        Self::piecewise(vec![Phase { start: 1, arms }], horizon)
    }

    pub fn piecewise(phases: Vec<Phase>, horizon: u64) -> Result<Self, EnvError> {
        if horizon == 0 {
            return Err(EnvError::Invalid("horizon must be positive".into()));
        }
        let first = phases.first().ok_or_else(|| EnvError::Invalid("no phases".into()))?;
        if first.start != 1 {
            return Err(EnvError::Invalid("the first phase must start at t = 1".into()));
        }
        let k = first.arms.len();
        if k == 0 {
            return Err(EnvError::Invalid("at least one arm is required".into()));
        }
        for (j, phase) in phases.iter().enumerate() {
            if phase.arms.len() != k {
                return Err(EnvError::Invalid(format!(
                    "phase {j} has {} arms, expected {k}",
                    phase.arms.len()
                )));
            }
            if j > 0 && phase.start <= phases[j - 1].start {
                return Err(EnvError::Invalid("phase starts must be strictly increasing".into()));
            }
            if phase.start > horizon {
                return Err(EnvError::Invalid(format!("phase {j} starts after the horizon")));
            }
            for arm in &phase.arms {
                arm.validate()?;
            }
        }
        Ok(Self { k, horizon, phases })
    }

    pub fn num_arms(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn is_stationary(&self) -> bool {
        self.phases.len() == 1
    }

    /// Length of each phase; the lengths sum to the horizon.
    pub fn phase_lengths(&self) -> Vec<u64> {
        self.phases
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let end = self.phases.get(j + 1).map_or(self.horizon + 1, |q| q.start);
                end - p.start
            })
            .collect()
    }

    /// Number of steps `t < T` where some arm's mean changes between `t` and `t + 1`.
    pub fn breakpoints(&self) -> usize {
        self.phases
            .windows(2)
            .filter(|w| w[0].arms.iter().zip(&w[1].arms).any(|(a, b)| a.mean() != b.mean()))
            .count()
    }

    pub fn phase_index(&self, t: u64) -> Result<usize, EnvError> {
        self.check_t(t)?;
        Ok(self.phases.partition_point(|p| p.start <= t) - 1)
    }

    fn check_t(&self, t: u64) -> Result<(), EnvError> {
        if t == 0 || t > self.horizon {
            return Err(EnvError::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    fn check_arm(&self, arm: usize) -> Result<(), EnvError> {
        if arm >= self.k {
            return Err(EnvError::ArmOutOfRange { arm, k: self.k });
        }
        Ok(())
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, t: u64, arm: usize, rng: &mut R) -> Result<f64, EnvError> {
        self.check_arm(arm)?;
        let j = self.phase_index(t)?;
        Ok(self.phases[j].arms[arm].sample(rng))
    }

    pub fn true_mean(&self, t: u64, arm: usize) -> Result<f64, EnvError> {
        self.check_arm(arm)?;
        let j = self.phase_index(t)?;
        Ok(self.phases[j].arms[arm].mean())
    }

    pub fn oracle_mean(&self, t: u64) -> Result<f64, EnvError> {
        let j = self.phase_index(t)?;
        Ok(phase_max(&self.phases[j]))
    }

    /// Smallest gap of `arm` over the phases where it is not a best arm.
    pub fn min_gap(&self, arm: usize) -> Result<f64, EnvError> {
        self.check_arm(arm)?;
        self.phases
            .iter()
            .map(|p| phase_max(p) - p.arms[arm].mean())
            .filter(|&gap| gap > 0.0)
            .min_by(f64::total_cmp)
            .ok_or(EnvError::AlwaysOptimal(arm))
    }

    /// Largest sub-gaussian parameter over all arms and phases.
    pub fn max_subgaussian_sigma(&self) -> f64 {
        self.phases
            .iter()
            .flat_map(|p| p.arms.iter())
            .map(ArmDistribution::subgaussian_sigma)
            .fold(0.0, f64::max)
    }

    /// Largest gap between the best and worst arm in any phase.
    pub fn max_gap(&self) -> f64 {
        self.phases
            .iter()
            .map(|p| {
                let lo = p.arms.iter().map(ArmDistribution::mean).fold(f64::INFINITY, f64::min);
                phase_max(p) - lo
            })
            .fold(0.0, f64::max)
    }
}

fn phase_max(phase: &Phase) -> f64 {
    phase
        .arms
        .iter()
        .map(ArmDistribution::mean)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Draws from U(0, 1) excluding the endpoint 0.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn random_arms<R: Rng + ?Sized>(k: usize, kind: RewardKind, rng: &mut R) -> Vec<ArmDistribution> {
    (0..k)
        .map(|_| match kind {
            RewardKind::Gaussian => {
                let mu = open_unit(rng);
                let sigma = open_unit(rng);
                ArmDistribution::Gaussian { mu, sigma }
            }
            RewardKind::Bernoulli => ArmDistribution::Bernoulli { p: open_unit(rng) },
            RewardKind::Deterministic => ArmDistribution::Deterministic { mu: open_unit(rng) },
        })
        .collect()
}

/// Stationary instance with means (and Gaussian scales) drawn i.i.d. from U(0, 1).
pub fn generate_random_instance<R: Rng + ?Sized>(
    k: usize,
    kind: RewardKind,
    horizon: u64,
    rng: &mut R,
) -> Result<Environment, EnvError> {
    if k < 2 {
        return Err(EnvError::Invalid("random instances need at least two arms".into()));
    }
    Environment::stationary(random_arms(k, kind, rng), horizon)
}

/// `num_phases` equal-length phases, each regenerated like a random instance.
/// Phase `j` starts at `1 + j * floor(T / num_phases)`; the last phase absorbs
/// the remainder.
pub fn generate_piecewise<R: Rng + ?Sized>(
    k: usize,
    num_phases: usize,
    horizon: u64,
    kind: RewardKind,
    rng: &mut R,
) -> Result<Environment, EnvError> {
    if k < 2 {
        return Err(EnvError::Invalid("random instances need at least two arms".into()));
    }
    if num_phases == 0 || horizon < num_phases as u64 {
        return Err(EnvError::Invalid(format!(
            "cannot split horizon {horizon} into {num_phases} phases"
        )));
    }
    let len = horizon / num_phases as u64;
    let phases = (0..num_phases as u64)
        .map(|j| Phase {
            start: 1 + j * len,
            arms: random_arms(k, kind, rng),
        })
        .collect();
    Environment::piecewise(phases, horizon)
}
