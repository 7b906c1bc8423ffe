//! Subcommand implementations shared by the binary and the integration tests.
//!
//! Every command validates its whole input before touching the file system,
//! so a rejected config leaves no output behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::bounds::{bound_report, BoundReport, Piecewise};
use crate::config::{ExperimentConfig, MeansConfig, SCHEMA_VERSION};
use crate::env::{EnvError, Environment};
use crate::output::{curve_csv, sweep_csv, write_files, EnvironmentSummary, PolicySummary, Summary, SweepRow};
use crate::policy::PolicySpec;
use crate::runner::{replicate, Aggregate, Plan};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "FE_BANDIT_OUT";
pub const DEFAULT_OUT: &str = "results";

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    /// Worker threads; 0 picks the available parallelism.
    pub workers: usize,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn apply(mut config: ExperimentConfig, ov: &Overrides) -> Result<ExperimentConfig> {
    if let Some(seed) = ov.seed {
        config.seed = seed;
    }
    if let Some(n) = ov.replications {
        config.replications = n;
    }
    config.validate()?;
    Ok(config)
}

/// Output directory: `--out`, then the config, then `FE_BANDIT_OUT`, then `results`.
pub fn output_dir(config: &ExperimentConfig, ov: &Overrides) -> PathBuf {
    if let Some(out) = &ov.out {
        return out.clone();
    }
    if let Some(dir) = &config.output_dir {
        return PathBuf::from(dir);
    }
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from)
}

/// Results of every policy of one config, in config order.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub environment: Environment,
    pub results: Vec<PolicyResult>,
}

#[derive(Debug, Clone)]
pub struct PolicyResult {
    pub policy: PolicySpec,
    pub window: Option<u64>,
    pub aggregate: Aggregate,
}

/// Runs every policy of a validated config in memory.
pub fn execute(config: &ExperimentConfig, workers: usize) -> Result<Experiment> {
    let env = config.validated_environment()?;
    let ctx = config.context(&env);
    let results = config
        .policies
        .iter()
        .map(|policy| {
            let plan = Plan {
                policy,
                env: &env,
                horizon: config.horizon,
                replications: config.replications,
                seed: config.seed,
                recording: config.record,
                tie_break: config.tie_break,
                workers,
            };
            let aggregate = replicate(&plan).with_context(|| format!("running {policy}"))?;
            Ok(PolicyResult {
                policy: policy.clone(),
                window: policy.window(&ctx),
                aggregate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment {
        config: config.clone(),
        environment: env,
        results,
    })
}

/// Bound report for a forced-exploration policy; `None` for other policies.
pub fn policy_bounds(config: &ExperimentConfig, env: &Environment, policy: &PolicySpec) -> Option<Result<BoundReport>> {
    let ctx = config.context(env);
    let (seq, piecewise) = match policy {
        PolicySpec::Fe(seq) => (seq.resolve(config.horizon), None),
        PolicySpec::SwFe { seq, .. } => {
            let tau = policy.window(&ctx)?;
            (
                seq.resolve(tau),
                Some(Piecewise {
                    tau,
                    breakpoints: env.breakpoints() as u64,
                }),
            )
        }
        _ => return None,
    };
    let result = (|| -> Result<BoundReport> {
        let seq = seq?;
        let gaps = (0..env.num_arms())
            .map(|i| match env.min_gap(i) {
                Ok(g) => Ok(Some(g)),
                Err(EnvError::AlwaysOptimal(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sigma = config
            .bounds
            .as_ref()
            .and_then(|b| b.sigma)
            .unwrap_or_else(|| env.max_subgaussian_sigma());
        Ok(bound_report(&seq, &gaps, config.horizon, sigma, piecewise)?)
    })();
    Some(result)
}

/// Files of a finished experiment: one CSV per policy plus `summary.json`.
pub fn experiment_files(exp: &Experiment) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut policies = Vec::new();
    for r in &exp.results {
        let csv = format!("{}.csv", r.policy.slug());
        files.push((csv.clone(), curve_csv(&r.aggregate)));
        let (bounds, bounds_error) = match policy_bounds(&exp.config, &exp.environment, &r.policy) {
            Some(Ok(b)) => (Some(b), None),
            Some(Err(e)) => (None, Some(format!("{e:#}"))),
            None => (None, None),
        };
        let a = &r.aggregate;
        policies.push(PolicySummary {
            policy: r.policy.to_string(),
            csv,
            window: r.window,
            final_regret_mean: a.final_regret_mean,
            final_regret_sd: a.final_regret_sd,
            final_regret_ci: a.final_regret_ci,
            degenerate_ci: a.degenerate_ci,
            mean_pulls: a.mean_pulls.clone(),
            mean_suboptimal_pulls: a.mean_suboptimal_pulls.clone(),
            mean_forced: a.mean_forced.clone(),
            bounds,
            bounds_error,
        });
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        name: exp.config.name.clone(),
        horizon: exp.config.horizon,
        replications: exp.config.replications,
        seed: exp.config.seed,
        environment: EnvironmentSummary::of(&exp.environment),
        policies,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    files.push(("summary.json".into(), json + "\n"));
    files
}

fn final_table(exp: &Experiment) -> String {
    let width = exp
        .results
        .iter()
        .map(|r| r.policy.to_string().len())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = format!(
        "{:<width$}  {:>14}  {:>14}  {:>14}\n",
        "policy", "final regret", "ci low", "ci high"
    );
    for r in &exp.results {
        let a = &r.aggregate;
        let _ = writeln!(
            out,
            "{:<width$}  {:>14.3}  {:>14.3}  {:>14.3}",
            r.policy.to_string(),
            a.final_regret_mean,
            a.final_regret_ci.0,
            a.final_regret_ci.1
        );
    }
    out
}

/// `run`: replicate every policy and write the outputs. Returns the output directory.
pub fn cmd_run(config_path: &Path, ov: &Overrides) -> Result<PathBuf> {
    let config = apply(load_config(config_path)?, ov)?;
    let exp = execute(&config, ov.workers)?;
    let dir = output_dir(&config, ov);
    write_files(&dir, &experiment_files(&exp)).with_context(|| format!("writing {}", dir.display()))?;
    print!("{}", final_table(&exp));
    Ok(dir)
}

/// `compare`: `run` with an optional replacement policy list.
pub fn cmd_compare(config_path: &Path, policies: Option<Vec<PolicySpec>>, ov: &Overrides) -> Result<PathBuf> {
    let mut config = load_config(config_path)?;
    if let Some(p) = policies {
        config.policies = p;
    }
    let config = apply(config, ov)?;
    let exp = execute(&config, ov.workers)?;
    let dir = output_dir(&config, ov);
    write_files(&dir, &experiment_files(&exp)).with_context(|| format!("writing {}", dir.display()))?;
    let mut ranked: Vec<&PolicyResult> = exp.results.iter().collect();
    ranked.sort_by(|a, b| a.aggregate.final_regret_mean.total_cmp(&b.aggregate.final_regret_mean));
    println!("ranking by mean final regret:");
    for (i, r) in ranked.iter().enumerate() {
        println!("{:>3}. {} ({:.3})", i + 1, r.policy, r.aggregate.final_regret_mean);
    }
    Ok(dir)
}

fn fmt_u(v: Option<u64>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

fn fmt_f(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

/// Aligned text rendering of a bound report.
pub fn bounds_table(policy: &PolicySpec, report: &BoundReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{policy}  [{} {}]", report.setting, report.sequence);
    let _ = writeln!(
        out,
        "  K={}  T={}  sigma={}  B_T={}  tau={}  recommended tau={}  a={}",
        report.arms,
        report.horizon,
        report.sigma,
        report.breakpoints,
        fmt_u(report.tau),
        fmt_u(report.recommended_tau),
        fmt_f(report.exp_base, 6)
    );
    let _ = writeln!(
        out,
        "  t0 upper={}{}  pull floor={}  forced ceiling={}  eq1 lower={}",
        fmt_u(report.t0_upper),
        if report.t0_unreachable { " (unreachable)" } else { "" },
        report.lemma3_lower,
        report.lemma3_upper,
        fmt_u(report.eq1_lower)
    );
    let theorem = if report.setting == "piecewise" {
        "theorem2"
    } else {
        "theorem1"
    };
    let _ = writeln!(
        out,
        "  {:>4}  {:>10}  {:>12}  {:>14}  {:>14}  {:<11}  note",
        "arm", "gap", "m", theorem, "corollary", "closed form"
    );
    for a in &report.per_arm {
        let _ = writeln!(
            out,
            "  {:>4}  {:>10}  {:>12}  {:>14}  {:>14}  {:<11}  {}",
            a.arm,
            fmt_f(a.gap, 6),
            fmt_f(a.m, 4),
            fmt_f(a.theorem, 3),
            fmt_f(a.corollary, 3),
            a.corollary_name.as_deref().unwrap_or("-"),
            a.note.as_deref().unwrap_or("")
        );
    }
    out
}

/// `bounds`: evaluates the bound report of every forced-exploration policy,
/// printing JSON followed by a table.
pub fn cmd_bounds(config_path: &Path) -> Result<Vec<(PolicySpec, Result<BoundReport, String>)>> {
    let config = load_config(config_path)?;
    let env = config.validated_environment()?;
    let reports: Vec<(PolicySpec, Result<BoundReport, String>)> = config
        .policies
        .iter()
        .filter_map(|p| policy_bounds(&config, &env, p).map(|r| (p.clone(), r.map_err(|e| format!("{e:#}")))))
        .collect();
    if reports.is_empty() {
        bail!("config has no forced-exploration policies to evaluate");
    }
    let json: Vec<serde_json::Value> = reports
        .iter()
        .map(|(p, r)| match r {
            Ok(rep) => serde_json::json!({ "policy": p.to_string(), "report": rep }),
            Err(e) => serde_json::json!({ "policy": p.to_string(), "error": e }),
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&json)?);
    for (p, r) in &reports {
        match r {
            Ok(rep) => print!("{}", bounds_table(p, rep)),
            Err(e) => println!("{p}: {e}"),
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Horizon,
    Breakpoints,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" | "t" | "horizon" => Ok(Self::Horizon),
            "B_T" | "b_t" | "breakpoints" => Ok(Self::Breakpoints),
            other => Err(format!("unknown sweep axis `{other}` (expected T or B_T)")),
        }
    }
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            Self::Horizon => "T",
            Self::Breakpoints => "B_T",
        }
    }
}

/// Config for one sweep point. A `B_T` value of `b` asks for `b + 1` random phases.
pub fn sweep_config(base: &ExperimentConfig, axis: SweepAxis, value: u64) -> Result<ExperimentConfig> {
    let mut config = base.clone();
    match axis {
        SweepAxis::Horizon => config.horizon = value,
        SweepAxis::Breakpoints => {
            if !matches!(config.environment.means, MeansConfig::Keyword(_)) || config.environment.schedule.is_some() {
                bail!("a B_T sweep needs a random environment");
            }
            config.environment.phases = usize::try_from(value + 1)?;
        }
    }
    config
        .validate()
        .with_context(|| format!("sweep point {}={value}", axis.label()))?;
    Ok(config)
}

/// `sweep`: runs the config at each axis value and writes `sweep.csv`
/// with rows sorted by axis value.
pub fn cmd_sweep(config_path: &Path, axis: SweepAxis, values: &[u64], ov: &Overrides) -> Result<PathBuf> {
    if values.is_empty() {
        bail!("no sweep values given");
    }
    let base = apply(load_config(config_path)?, ov)?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let configs = sorted
        .iter()
        .map(|&v| sweep_config(&base, axis, v).map(|c| (v, c)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (value, config) in &configs {
        let exp = execute(config, ov.workers)?;
        for r in &exp.results {
            rows.push(SweepRow {
                axis: axis.label().into(),
                value: *value,
                policy: r.policy.to_string(),
                final_mean_regret: r.aggregate.final_regret_mean,
                ci_low: r.aggregate.final_regret_ci.0,
                ci_high: r.aggregate.final_regret_ci.1,
            });
        }
    }
    let dir = output_dir(&base, ov);
    write_files(&dir, &[("sweep.csv".into(), sweep_csv(&rows))])
        .with_context(|| format!("writing {}", dir.display()))?;
    print!("{}", sweep_csv(&rows));
    Ok(dir)
}
