//! Monte-Carlo engine: single trajectories, seeded replications and
//! confidence-interval aggregation.
//!
//! Regret is pseudo-regret: the gap between the best and the chosen arm's
//! true mean at each step. Sums are exact, so the cumulative regret of a run
//! equals `sum_i gap(i) * k_T(i)` bit for bit on stationary instances, and
//! aggregates do not depend on the order in which replications finish.
//!
//! Each replication `j` draws its seed from [`derive_stream`]`(master, j)`
//! and uses two ChaCha8 streams from that seed: stream 0 for rewards and
//! stream 1 for policy randomness. Reward draws are therefore identical for
//! every policy evaluated with the same master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Environment;
use crate::exact::ExactSum;
use crate::policy::{BuildContext, Policy, PolicyError, PolicySpec, TieBreak};

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;
/// Log-spaced checkpoints in thinned recording (before adding `T`).
pub const THINNED_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("horizon {horizon} does not fit the environment horizon {env}")]
    HorizonMismatch { horizon: u64, env: u64 },
    #[error("policy has {policy} arms but the environment has {env}")]
    ArmMismatch { policy: usize, env: usize },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid run plan: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recording {
    /// 200 log-spaced steps plus `T`.
    #[default]
    Thinned,
    /// Every step.
    Full,
}

/// Recorded steps, strictly increasing and ending at `horizon`.
pub fn checkpoints(horizon: u64, recording: Recording) -> Vec<u64> {
    if horizon == 0 {
        return Vec::new();
    }
    match recording {
        Recording::Full => (1..=horizon).collect(),
        Recording::Thinned => {
            let ln_t = (horizon as f64).ln();
            let last = (THINNED_POINTS - 1) as f64;
            let mut out: Vec<u64> = (0..THINNED_POINTS)
                .map(|j| ((j as f64 * ln_t / last).exp().round() as u64).clamp(1, horizon))
                .collect();
            out.dedup();
            if out.last() != Some(&horizon) {
                out.push(horizon);
            }
            out
        }
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `index`: `mix64(mix64(master) + (index + 1) * gamma)`.
///
/// For a fixed master the map is a bijection of `index`, so distinct
/// replications never share a seed.
pub fn derive_stream(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Reward and policy generators of one replication.
pub struct Streams {
    pub env: ChaCha8Rng,
    pub policy: ChaCha8Rng,
}

impl Streams {
    pub fn from_seed(seed: u64) -> Self {
        let mut env = ChaCha8Rng::seed_from_u64(seed);
        let mut policy = env.clone();
        env.set_stream(0);
        policy.set_stream(1);
        Self { env, policy }
    }

    pub fn for_replication(master: u64, index: u64) -> Self {
        Self::from_seed(derive_stream(master, index))
    }
}

/// One trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub checkpoints: Vec<u64>,
    /// Cumulative pseudo-regret at each checkpoint.
    pub cum_regret: Vec<f64>,
    pub final_regret: f64,
    /// Regret accrued inside each phase.
    pub phase_regret: Vec<f64>,
    /// Total pulls per arm.
    pub pulls: Vec<u64>,
    /// `k_T(i)`: pulls at steps where arm `i` was strictly suboptimal.
    pub suboptimal_pulls: Vec<u64>,
    /// `h_T(i)` for forced-exploration policies.
    pub forced: Option<Vec<u64>>,
    /// Chosen arm at every step, when requested.
    pub actions: Option<Vec<u32>>,
}

/// Runs exactly `horizon` select/update cycles.
pub fn simulate(
    policy: &mut dyn Policy,
    env: &Environment,
    horizon: u64,
    checkpoints: &[u64],
    record_actions: bool,
    streams: &mut Streams,
) -> Result<RunResult, RunError> {
    if horizon == 0 || horizon > env.horizon() {
        return Err(RunError::HorizonMismatch {
            horizon,
            env: env.horizon(),
        });
    }
    let k = env.num_arms();
    if policy.num_arms() != k {
        return Err(RunError::ArmMismatch {
            policy: policy.num_arms(),
            env: k,
        });
    }
    let phases = env.phases();
    let gaps: Vec<Vec<f64>> = phases
        .iter()
        .map(|p| {
            let best = p.arms.iter().map(|a| a.mean()).fold(f64::NEG_INFINITY, f64::max);
            p.arms.iter().map(|a| best - a.mean()).collect()
        })
        .collect();
    let mut phase = 0;
    let mut next_start = phases.get(1).map_or(u64::MAX, |p| p.start);
    let mut total = ExactSum::new();
    let mut per_phase = vec![ExactSum::new(); phases.len()];
    let mut pulls = vec![0u64; k];
    let mut suboptimal = vec![0u64; k];
    let mut actions = record_actions.then(|| Vec::with_capacity(horizon as usize));
    let mut recorded = Vec::with_capacity(checkpoints.len());
    let mut cp = checkpoints.iter().copied().filter(|&c| c <= horizon).peekable();
    for t in 1..=horizon {
        while t >= next_start {
            phase += 1;
            next_start = phases.get(phase + 1).map_or(u64::MAX, |p| p.start);
        }
        let arm = policy.select(&mut streams.policy);
        let reward = phases[phase].arms[arm].sample(&mut streams.env);
        policy.update(arm, reward);
        pulls[arm] += 1;
        let gap = gaps[phase][arm];
        if gap > 0.0 {
            suboptimal[arm] += 1;
            total.add(gap);
            per_phase[phase].add(gap);
        }
        if let Some(a) = actions.as_mut() {
            a.push(arm as u32);
        }
        if cp.peek() == Some(&t) {
            cp.next();
            recorded.push(total.value());
        }
    }
    Ok(RunResult {
        checkpoints: checkpoints.iter().copied().filter(|&c| c <= horizon).collect(),
        cum_regret: recorded,
        final_regret: total.value(),
        phase_regret: per_phase.iter().map(ExactSum::value).collect(),
        pulls,
        suboptimal_pulls: suboptimal,
        forced: policy.forced_counts().map(<[u64]>::to_vec),
        actions,
    })
}

/// Mean, sample standard deviation and 95% half-width of `values`.
///
/// The result depends only on the multiset of values. A single value has
/// standard deviation 0 by convention.
pub fn mean_ci(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0, 0.0);
    }
    let mean = values.iter().copied().collect::<ExactSum>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0, 0.0);
    }
    let ss = values
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<ExactSum>()
        .value();
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd, Z95 * sd / (n as f64).sqrt())
}

/// Replication summary of one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub replications: usize,
    /// Set when only one replication ran and the interval is degenerate.
    pub degenerate_ci: bool,
    pub checkpoints: Vec<u64>,
    pub mean_cum_regret: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub final_regret_mean: f64,
    pub final_regret_sd: f64,
    pub final_regret_ci: (f64, f64),
    pub final_regrets: Vec<f64>,
    pub mean_pulls: Vec<f64>,
    pub mean_suboptimal_pulls: Vec<f64>,
    pub suboptimal_pulls_se: Vec<f64>,
    pub mean_forced: Option<Vec<f64>>,
}

fn column_mean(rows: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = rows.collect();
    mean_ci(&values).0
}

/// Order-independent reduction of replication results.
pub fn aggregate(runs: &[RunResult]) -> Result<Aggregate, RunError> {
    let first = runs
        .first()
        .ok_or_else(|| RunError::Invalid("no replications".into()))?;
    let n = runs.len();
    let k = first.pulls.len();
    let mut mean = Vec::with_capacity(first.checkpoints.len());
    let mut lo = Vec::with_capacity(first.checkpoints.len());
    let mut hi = Vec::with_capacity(first.checkpoints.len());
    let mut column = vec![0.0; n];
    for c in 0..first.checkpoints.len() {
        for (slot, run) in column.iter_mut().zip(runs) {
            *slot = run.cum_regret[c];
        }
        let (m, _, half) = mean_ci(&column);
        mean.push(m);
        lo.push(m - half);
        hi.push(m + half);
    }
    let finals: Vec<f64> = runs.iter().map(|r| r.final_regret).collect();
    let (fm, fsd, fhalf) = mean_ci(&finals);
    let mean_pulls = (0..k)
        .map(|i| column_mean(runs.iter().map(|r| r.pulls[i] as f64)))
        .collect();
    let sub: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let xs: Vec<f64> = runs.iter().map(|r| r.suboptimal_pulls[i] as f64).collect();
            let (m, sd, _) = mean_ci(&xs);
            (m, sd / (n as f64).sqrt())
        })
        .collect();
    let mean_forced = first.forced.as_ref().map(|_| {
        (0..k)
            .map(|i| column_mean(runs.iter().map(|r| r.forced.as_ref().map_or(0, |h| h[i]) as f64)))
            .collect()
    });
    Ok(Aggregate {
        replications: n,
        degenerate_ci: n == 1,
        checkpoints: first.checkpoints.clone(),
        mean_cum_regret: mean,
        ci_low: lo,
        ci_high: hi,
        final_regret_mean: fm,
        final_regret_sd: fsd,
        final_regret_ci: (fm - fhalf, fm + fhalf),
        final_regrets: finals,
        mean_pulls,
        mean_suboptimal_pulls: sub.iter().map(|s| s.0).collect(),
        suboptimal_pulls_se: sub.iter().map(|s| s.1).collect(),
        mean_forced,
    })
}

/// Everything needed to replicate one policy on one environment.
#[derive(Debug, Clone)]
pub struct Plan<'a> {
    pub policy: &'a PolicySpec,
    pub env: &'a Environment,
    pub horizon: u64,
    pub replications: usize,
    pub seed: u64,
    pub recording: Recording,
    pub tie_break: TieBreak,
    /// Worker threads; 0 picks the available parallelism.
    pub workers: usize,
}

impl Plan<'_> {
    pub fn context(&self) -> BuildContext {
        BuildContext {
            arms: self.env.num_arms(),
            horizon: self.horizon,
            breakpoints: self.env.breakpoints() as u64,
            tie_break: self.tie_break,
        }
    }

    /// Runs replication `index` alone.
    pub fn run_one(&self, index: u64, checkpoints: &[u64], record_actions: bool) -> Result<RunResult, RunError> {
        let mut policy = self.policy.build(&self.context())?;
        let mut streams = Streams::for_replication(self.seed, index);
        simulate(
            policy.as_mut(),
            self.env,
            self.horizon,
            checkpoints,
            record_actions,
            &mut streams,
        )
    }

    /// All replications, in index order.
    pub fn run_all(&self) -> Result<Vec<RunResult>, RunError> {
        if self.replications == 0 {
            return Err(RunError::Invalid("replications must be at least 1".into()));
        }
        if self.horizon == 0 || self.horizon > self.env.horizon() {
            return Err(RunError::HorizonMismatch {
                horizon: self.horizon,
                env: self.env.horizon(),
            });
        }
        self.policy.build(&self.context())?;
        let cps = checkpoints(self.horizon, self.recording);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| RunError::Invalid(e.to_string()))?;
        pool.install(|| {
            (0..self.replications as u64)
                .into_par_iter()
                .map(|j| self.run_one(j, &cps, false))
                .collect()
        })
    }
}

/// Runs and aggregates a plan.
pub fn replicate(plan: &Plan<'_>) -> Result<Aggregate, RunError> {
    aggregate(&plan.run_all()?)
}
