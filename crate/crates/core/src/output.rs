//! CSV and JSON emission.
//!
//! Curve CSVs have the columns `t,mean_cum_regret,ci_low,ci_high`; numbers
//! are written in scientific notation with 17 significant digits so every
//! value parses back to the same double.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::bounds::BoundReport;
use crate::env::Environment;
use crate::runner::Aggregate;

pub const CURVE_HEADER: &str = "t,mean_cum_regret,ci_low,ci_high";
pub const SWEEP_HEADER: &str = "axis,value,policy,final_mean_regret,ci_low,ci_high";

/// A double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn curve_csv(agg: &Aggregate) -> String {
    let mut out = String::with_capacity(64 * (agg.checkpoints.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for (i, t) in agg.checkpoints.iter().enumerate() {
        let _ = writeln!(
            out,
            "{t},{},{},{}",
            fmt_f64(agg.mean_cum_regret[i]),
            fmt_f64(agg.ci_low[i]),
            fmt_f64(agg.ci_high[i])
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: u64,
    pub policy: String,
    pub final_mean_regret: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.axis,
            r.value,
            r.policy,
            fmt_f64(r.final_mean_regret),
            fmt_f64(r.ci_low),
            fmt_f64(r.ci_high)
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvironmentSummary {
    pub arms: usize,
    pub horizon: u64,
    pub breakpoints: usize,
    pub phase_starts: Vec<u64>,
    pub phase_means: Vec<Vec<f64>>,
}

impl EnvironmentSummary {
    pub fn of(env: &Environment) -> Self {
        Self {
            arms: env.num_arms(),
            horizon: env.horizon(),
            breakpoints: env.breakpoints(),
            phase_starts: env.phases().iter().map(|p| p.start).collect(),
            phase_means: env
                .phases()
                .iter()
                .map(|p| p.arms.iter().map(|a| a.mean()).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub csv: String,
    pub window: Option<u64>,
    pub final_regret_mean: f64,
    pub final_regret_sd: f64,
    pub final_regret_ci: (f64, f64),
    pub degenerate_ci: bool,
    pub mean_pulls: Vec<f64>,
    /// Mean `k_T(i)` per arm.
    pub mean_suboptimal_pulls: Vec<f64>,
    /// Mean `h_T(i)` per arm, forced-exploration policies only.
    pub mean_forced: Option<Vec<f64>>,
    pub bounds: Option<BoundReport>,
    pub bounds_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub horizon: u64,
    pub replications: usize,
    pub seed: u64,
    pub environment: EnvironmentSummary,
    pub policies: Vec<PolicySummary>,
}

/// Writes every file into `dir`, creating it first.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        fs::write(&tmp, body)?;
        fs::rename(&tmp, dir.join(name))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, 0.0, -2.5e10] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn curve_layout() {
        let agg = Aggregate {
            replications: 2,
            degenerate_ci: false,
            checkpoints: vec![1, 10],
            mean_cum_regret: vec![0.5, 2.0],
            ci_low: vec![0.25, 1.0],
            ci_high: vec![0.75, 3.0],
            final_regret_mean: 2.0,
            final_regret_sd: 1.0,
            final_regret_ci: (1.0, 3.0),
            final_regrets: vec![1.0, 3.0],
            mean_pulls: vec![5.0, 5.0],
            mean_suboptimal_pulls: vec![0.0, 5.0],
            suboptimal_pulls_se: vec![0.0, 0.0],
            mean_forced: None,
        };
        let csv = curve_csv(&agg);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CURVE_HEADER);
        assert_eq!(
            lines[1],
            "1,5.0000000000000000e-1,2.5000000000000000e-1,7.5000000000000000e-1"
        );
        assert_eq!(lines.len(), 3);
    }
}
