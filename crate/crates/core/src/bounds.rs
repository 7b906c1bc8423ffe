//! Closed-form regret bounds and schedule-derived pull counts.
//!
//! All logarithms are natural. Sums over time are accumulated exactly with
//! [`ExactSum`], so each evaluated bound carries a single rounding per term.
//!
//! Forced-pull quantities come from two schedule-only counts:
//!
//! * [`pull_floor`]: round `0` lasts `K` steps and round `r >= 1` lasts at most
//!   `max(K, ceil(f(r)) + K - 1)` steps, so by step `t` every arm has been
//!   pulled at least once per round that is guaranteed complete.
//! * [`forced_ceiling`]: consecutive forced pulls of one arm are separated by
//!   at least `ceil(f(j)) + 1` steps, where `j` counts its previous forced
//!   pulls.
//!
//! Both are exact consequences of the forcing rule and hold on every
//! trajectory; the theorem evaluators substitute them for the run-dependent
//! forced counts (floor inside `e^{-h/m}`, ceiling in the additive term).

use serde::Serialize;
use thiserror::Error;

use crate::exact::ExactSum;
use crate::sequence::{ExplorationSequence, Family, SequenceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("gap must be positive, got {0}")]
    ZeroGap(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no closed form for sequence {seq} in this setting: {reason}")]
    FamilyMismatch { seq: String, reason: String },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

/// `m = 8 sigma^2 / delta^2`.
pub fn m_value(sigma: f64, delta: f64) -> Result<f64, BoundsError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(BoundsError::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(BoundsError::ZeroGap(delta));
    }
    Ok(8.0 * sigma * sigma / (delta * delta))
}

fn require_monotone(seq: &ExplorationSequence) -> Result<(), BoundsError> {
    if seq.is_non_decreasing() {
        Ok(())
    } else {
        Err(SequenceError::NonMonotone(seq.to_string()).into())
    }
}

fn check_m(m: f64) -> Result<(), BoundsError> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(BoundsError::InvalidParameter(format!("m must be positive, got {m}")))
    }
}

/// `ceil(f)` as an integer, `None` when it does not fit comfortably in `u64`.
fn ceil_u64(f: f64) -> Option<u64> {
    (f < 1e18).then(|| f.ceil() as u64)
}

/// Longest possible length of round `r`; `None` when the round may never end.
fn round_length(seq: &ExplorationSequence, k: u64, r: u64) -> Option<u64> {
    if r == 0 {
        return Some(k);
    }
    let f = seq.value(r);
    if f == 0.0 {
        // forcing disabled: greedy may starve an arm forever
        return None;
    }
    ceil_u64(f).map(|c| k.max(c + k - 1))
}

/// Guaranteed pulls of every arm after `t` steps, for `t = 0..=horizon`.
pub fn pull_floor_table(seq: &ExplorationSequence, k: usize, horizon: u64) -> Vec<u64> {
    let k = k as u64;
    let mut out = Vec::with_capacity(horizon as usize + 1);
    out.push(0);
    let mut completed = 0u64;
    let mut next_end = Some(k);
    for t in 1..=horizon {
        while let Some(end) = next_end.filter(|&e| e <= t) {
            completed += 1;
            next_end = round_length(seq, k, completed).and_then(|len| end.checked_add(len));
        }
        out.push(completed);
    }
    out
}

/// Guaranteed pulls of every arm after `t` steps.
pub fn pull_floor(seq: &ExplorationSequence, k: usize, t: u64) -> u64 {
    let k = k as u64;
    let mut completed = 0;
    let mut end = k;
    while end <= t {
        completed += 1;
        match round_length(seq, k, completed).and_then(|len| end.checked_add(len)) {
            Some(e) => end = e,
            None => break,
        }
    }
    completed
}

/// Largest forced-pull count any arm can reach within `t` steps.
pub fn forced_ceiling(seq: &ExplorationSequence, t: u64) -> u64 {
    if t == 0 {
        return 0;
    }
    let mut h = 1u64;
    let mut last = 1u64;
    loop {
        let gap = match ceil_u64(seq.value(h)) {
            Some(c) => c + 1,
            None => return h,
        };
        match last.checked_add(gap) {
            Some(next) if next <= t => {
                last = next;
                h += 1;
            }
            _ => return h,
        }
    }
}

/// `K f^{-1}(K + 1)`, or `None` when the schedule never reaches `K + 1`.
pub fn t0_upper(seq: &ExplorationSequence, k: usize) -> Result<Option<u64>, BoundsError> {
    require_monotone(seq)?;
    match seq.inverse(k as f64 + 1.0) {
        Ok(x) => Ok(Some(x.saturating_mul(k as u64))),
        Err(SequenceError::Unreachable { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Lemma3 {
    /// `K f^{-1}(K + 1)`; `None` when unreachable.
    pub t0_upper: Option<u64>,
    /// Pull floor at `t`, valid for every arm.
    pub lower: u64,
    /// Forced-pull ceiling at `t`.
    pub upper: u64,
}

pub fn lemma3_bounds(seq: &ExplorationSequence, k: usize, t: u64) -> Result<Lemma3, BoundsError> {
    if k == 0 || t == 0 {
        return Err(BoundsError::InvalidParameter("K and t must be positive".into()));
    }
    Ok(Lemma3 {
        t0_upper: t0_upper(seq, k)?,
        lower: pull_floor(seq, k, t),
        upper: forced_ceiling(seq, t),
    })
}

/// `max{n : sum_{r = f^{-1}(K+1)}^{n} f(r) <= T - K f^{-1}(K+1)}`.
pub fn eq1_lower_bound(seq: &ExplorationSequence, k: usize, horizon: u64) -> Result<u64, BoundsError> {
    require_monotone(seq)?;
    let start = seq.inverse(k as f64 + 1.0)?;
    let t0 = start.saturating_mul(k as u64);
    let budget = horizon.saturating_sub(t0) as f64;
    Ok(seq.cumsum_threshold(start, budget)?)
}

/// `sum_{t=1}^{n} e^{-floor(t)/m}`.
fn floor_exp_sum(floor: &[u64], n: u64, m: f64) -> f64 {
    let mut acc = ExactSum::new();
    let mut last = u64::MAX;
    let mut term = 0.0;
    for &h in &floor[1..=n as usize] {
        if h != last {
            term = (-(h as f64) / m).exp();
            last = h;
        }
        acc.add(term);
    }
    acc.value()
}

/// Stationary bound on the expected pulls of a suboptimal arm:
/// `h_T + 2 m e^{1/m} sum_{t=1}^{T} e^{-h_t/m}`.
pub fn theorem1_bound(seq: &ExplorationSequence, k: usize, horizon: u64, m: f64) -> Result<f64, BoundsError> {
    require_monotone(seq)?;
    check_m(m)?;
    let floor = pull_floor_table(seq, k, horizon);
    let sum = floor_exp_sum(&floor, horizon, m);
    Ok(forced_ceiling(seq, horizon) as f64 + 2.0 * m * (1.0 / m).exp() * sum)
}

/// Piecewise bound with window `tau` and `b_t` breakpoints:
/// `(T/tau)(h_tau + m e^{1/m} sum_{t<=tau} e^{-h_t/m}) + (T/tau)(1 + 2m ln tau) + B_T tau`.
pub fn theorem2_bound(
    seq: &ExplorationSequence,
    k: usize,
    horizon: u64,
    tau: u64,
    m: f64,
    b_t: u64,
) -> Result<f64, BoundsError> {
    require_monotone(seq)?;
    check_m(m)?;
    check_window(horizon, tau)?;
    let floor = pull_floor_table(seq, k, tau);
    let sum = floor_exp_sum(&floor, tau, m);
    let tf = tau as f64;
    let ratio = horizon as f64 / tf;
    let forced = forced_ceiling(seq, tau) as f64 + m * (1.0 / m).exp() * sum;
    Ok(ratio * forced + ratio * (1.0 + 2.0 * m * tf.ln()) + b_t as f64 * tf)
}

fn check_window(horizon: u64, tau: u64) -> Result<(), BoundsError> {
    if tau == 0 || tau > horizon {
        return Err(BoundsError::InvalidParameter(format!(
            "window {tau} outside 1..={horizon}"
        )));
    }
    Ok(())
}

/// `sum_{t=1}^{n} (1 + (a-1) t / (K+1))^{-1/(m ln a)}`.
pub fn exponential_series(a: f64, k: usize, m: f64, n: u64) -> f64 {
    let slope = (a - 1.0) / (k as f64 + 1.0);
    let power = -1.0 / (m * a.ln());
    let mut acc = ExactSum::new();
    for t in 1..=n {
        acc.add((1.0 + slope * t as f64).powf(power));
    }
    acc.value()
}

/// Constant schedule `f = sqrt(T)`: `sqrt(T)(1 + 2 m^2 e^{2/m}) + 1`.
pub fn corollary1(horizon: u64, m: f64) -> f64 {
    (horizon as f64).sqrt() * (1.0 + 2.0 * m * m * (2.0 / m).exp()) + 1.0
}

/// Linear schedule: `sqrt(2T) + K^2 + 6 m^3 e^{3/m}`.
pub fn corollary2(horizon: u64, k: usize, m: f64) -> f64 {
    let kf = k as f64;
    (2.0 * horizon as f64).sqrt() + kf * kf + 6.0 * m.powi(3) * (3.0 / m).exp()
}

/// Exponential schedule with base `a`.
pub fn corollary3(horizon: u64, k: usize, m: f64, a: f64) -> f64 {
    let ln_a = a.ln();
    let kf = k as f64;
    (horizon as f64 * (a - 1.0) + 1.0).ln() / ln_a
        + (kf + 1.0) * (kf + 1.0).ln() / ln_a
        + 2.0 * m * (1.0 / m).exp() * exponential_series(a, k, m, horizon)
}

/// Windowed constant schedule `f = sqrt(tau)`; both `(T/tau)(1 + ...)` terms are kept.
pub fn corollary4(horizon: u64, tau: u64, m: f64, b_t: u64) -> f64 {
    let tf = tau as f64;
    let ratio = horizon as f64 / tf;
    b_t as f64 * tf
        + ratio * (1.0 + 2.0 * m * tf.ln() + tf.sqrt() * m * m * (2.0 / m).exp())
        + ratio * (1.0 + tf.sqrt())
}

/// Windowed linear schedule.
pub fn corollary5(horizon: u64, tau: u64, k: usize, m: f64, b_t: u64) -> f64 {
    let tf = tau as f64;
    let kf = k as f64;
    let ratio = horizon as f64 / tf;
    b_t as f64 * tf
        + ratio * (1.0 + 2.0 * m * tf.ln() + 3.0 * m.powi(3) * (3.0 / m).exp())
        + ratio * (kf * kf + (2.0 * tf).sqrt())
}

/// Windowed exponential schedule with base `a`.
pub fn corollary6(horizon: u64, tau: u64, k: usize, m: f64, a: f64, b_t: u64) -> f64 {
    let tf = tau as f64;
    let ratio = horizon as f64 / tf;
    b_t as f64 * tf
        + ratio * m * (1.0 / m).exp() * exponential_series(a, k, m, tau)
        + ratio * (1.0 + 2.0 * m * tf.ln() + (k as f64 + 2.0) * (tf + 1.0).ln() / a.ln())
}

fn is_sqrt_of(c: f64, n: u64) -> bool {
    let s = (n as f64).sqrt();
    (c - s).abs() <= 1e-9 * s
}

fn mismatch(seq: &ExplorationSequence, reason: &str) -> BoundsError {
    BoundsError::FamilyMismatch {
        seq: seq.to_string(),
        reason: reason.to_string(),
    }
}

/// Corollary matching the schedule in the stationary setting, with its label.
pub fn corollary_stationary(
    seq: &ExplorationSequence,
    k: usize,
    horizon: u64,
    m: f64,
) -> Result<(&'static str, f64), BoundsError> {
    check_m(m)?;
    match seq {
        ExplorationSequence::Constant(c) if is_sqrt_of(*c, horizon) => Ok(("corollary1", corollary1(horizon, m))),
        ExplorationSequence::Constant(_) => Err(mismatch(seq, "the constant closed form needs f = sqrt(T)")),
        ExplorationSequence::Linear => Ok(("corollary2", corollary2(horizon, k, m))),
        ExplorationSequence::Exponential(_) | ExplorationSequence::ExpAuto { .. } => {
            let a = seq.exp_base().expect("exponential family");
            Ok(("corollary3", corollary3(horizon, k, m, a)))
        }
        _ => Err(mismatch(seq, "no closed form for this family")),
    }
}

/// Corollary matching the schedule in the piecewise setting, with its label.
pub fn corollary_piecewise(
    seq: &ExplorationSequence,
    k: usize,
    horizon: u64,
    tau: u64,
    m: f64,
    b_t: u64,
) -> Result<(&'static str, f64), BoundsError> {
    check_m(m)?;
    check_window(horizon, tau)?;
    match seq {
        ExplorationSequence::Constant(c) if is_sqrt_of(*c, tau) => Ok(("corollary4", corollary4(horizon, tau, m, b_t))),
        ExplorationSequence::Constant(_) => Err(mismatch(seq, "the windowed constant closed form needs f = sqrt(tau)")),
        ExplorationSequence::Linear => Ok(("corollary5", corollary5(horizon, tau, k, m, b_t))),
        ExplorationSequence::Exponential(_) | ExplorationSequence::ExpAuto { .. } => {
            let a = seq.exp_base().expect("exponential family");
            Ok(("corollary6", corollary6(horizon, tau, k, m, a, b_t)))
        }
        _ => Err(mismatch(seq, "no closed form for this family")),
    }
}

/// Window length for `b_t` breakpoints: `sqrt(T ln T / B_T)` for constant and
/// linear schedules, `sqrt(T / B_T) ln T` for exponential ones, rounded and
/// clamped to `[K + 1, T]`. `B_T = 0` is treated as 1.
pub fn recommended_window(horizon: u64, b_t: u64, family: Family, k: usize) -> u64 {
    let t = horizon as f64;
    let b = b_t.max(1) as f64;
    let raw = match family {
        Family::Exponential => (t / b).sqrt() * t.ln(),
        _ => (t * t.ln() / b).sqrt(),
    };
    let lo = (k as u64 + 1).min(horizon);
    (raw.round() as u64).clamp(lo, horizon.max(lo))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmBound {
    pub arm: usize,
    pub gap: Option<f64>,
    pub m: Option<f64>,
    pub theorem: Option<f64>,
    pub corollary: Option<f64>,
    pub corollary_name: Option<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub sequence: String,
    pub setting: String,
    pub arms: usize,
    pub horizon: u64,
    pub sigma: f64,
    pub breakpoints: u64,
    pub tau: Option<u64>,
    pub recommended_tau: Option<u64>,
    pub exp_base: Option<f64>,
    pub t0_upper: Option<u64>,
    pub t0_unreachable: bool,
    /// Pull floor and forced ceiling over the evaluation span (`T`, or `tau`).
    pub lemma3_lower: u64,
    pub lemma3_upper: u64,
    pub eq1_lower: Option<u64>,
    pub per_arm: Vec<ArmBound>,
}

/// Window and breakpoint count of a piecewise evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Piecewise {
    pub tau: u64,
    pub breakpoints: u64,
}

/// Evaluates every applicable quantity. `gaps[i] = None` marks an arm that
/// is never suboptimal; such arms are listed without bounds.
pub fn bound_report(
    seq: &ExplorationSequence,
    gaps: &[Option<f64>],
    horizon: u64,
    sigma: f64,
    piecewise: Option<Piecewise>,
) -> Result<BoundReport, BoundsError> {
    let k = gaps.len();
    require_monotone(seq)?;
    if k == 0 || horizon == 0 {
        return Err(BoundsError::InvalidParameter("K and T must be positive".into()));
    }
    let span = piecewise.map_or(horizon, |p| p.tau);
    let t0 = t0_upper(seq, k)?;
    let eq1 = match eq1_lower_bound(seq, k, horizon) {
        Ok(n) => Some(n),
        Err(BoundsError::Sequence(SequenceError::Unreachable { .. })) => None,
        Err(e) => return Err(e),
    };
    let per_arm = gaps
        .iter()
        .enumerate()
        .map(|(arm, gap)| {
            let mut entry = ArmBound {
                arm,
                gap: *gap,
                m: None,
                theorem: None,
                corollary: None,
                corollary_name: None,
                note: None,
            };
            let Some(gap) = *gap else {
                entry.note = Some("never suboptimal".into());
                return Ok(entry);
            };
            let m = match m_value(sigma, gap) {
                Ok(m) => m,
                Err(BoundsError::ZeroGap(_)) => {
                    entry.note = Some("zero gap".into());
                    return Ok(entry);
                }
                Err(e) => return Err(e),
            };
            entry.m = Some(m);
            let (theorem, corollary) = match piecewise {
                None => (
                    theorem1_bound(seq, k, horizon, m)?,
                    corollary_stationary(seq, k, horizon, m),
                ),
                Some(p) => (
                    theorem2_bound(seq, k, horizon, p.tau, m, p.breakpoints)?,
                    corollary_piecewise(seq, k, horizon, p.tau, m, p.breakpoints),
                ),
            };
            entry.theorem = Some(theorem);
            match corollary {
                Ok((name, value)) => {
                    entry.corollary = Some(value);
                    entry.corollary_name = Some(name.into());
                }
                Err(e) => entry.note = Some(e.to_string()),
            }
            Ok(entry)
        })
        .collect::<Result<Vec<_>, BoundsError>>()?;
    Ok(BoundReport {
        sequence: seq.to_string(),
        setting: if piecewise.is_some() { "piecewise" } else { "stationary" }.into(),
        arms: k,
        horizon,
        sigma,
        breakpoints: piecewise.map_or(0, |p| p.breakpoints),
        tau: piecewise.map(|p| p.tau),
        recommended_tau: piecewise.map(|p| recommended_window(horizon, p.breakpoints, seq.family(), k)),
        exp_base: seq.exp_base(),
        t0_upper: t0,
        t0_unreachable: t0.is_none(),
        lemma3_lower: pull_floor(seq, k, span),
        lemma3_upper: forced_ceiling(seq, span),
        eq1_lower: eq1,
        per_arm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn m_value_examples() {
        assert_eq!(m_value(1.0, 0.5).unwrap(), 32.0);
        assert_eq!(m_value(0.5, 1.0).unwrap(), 2.0);
        assert!(matches!(m_value(1.0, 0.0), Err(BoundsError::ZeroGap(_))));
        assert!(m_value(0.0, 1.0).is_err());
    }

    #[test]
    fn t0_examples() {
        assert_eq!(t0_upper(&ExplorationSequence::Linear, 5).unwrap(), Some(30));
        assert_eq!(t0_upper(&ExplorationSequence::constant(5.0).unwrap(), 5).unwrap(), None);
        assert_eq!(
            t0_upper(&ExplorationSequence::constant(100.0).unwrap(), 10).unwrap(),
            Some(10)
        );
        assert!(t0_upper(&ExplorationSequence::etc(3).unwrap(), 2).is_err());
    }

    /// Independent floor: explicit round end list.
    fn floor_oracle(f: impl Fn(u64) -> f64, k: u64, t: u64) -> u64 {
        let mut ends = vec![k];
        let mut r = 1;
        while *ends.last().unwrap() <= t {
            let len = k.max(f(r).ceil() as u64 + k - 1);
            ends.push(ends.last().unwrap() + len);
            r += 1;
        }
        ends.iter().filter(|&&e| e <= t).count() as u64
    }

    #[test]
    fn pull_floor_linear_example() {
        // rounds of length 5, 5, 6, 7, ... end at 5, 10, 16, 23, 31, 40, 50, 61, 73, 86, 100, 115, 131
        assert_eq!(pull_floor(&ExplorationSequence::Linear, 5, 124), 12);
        assert_eq!(pull_floor(&ExplorationSequence::Linear, 5, 115), 12);
        assert_eq!(pull_floor(&ExplorationSequence::Linear, 5, 114), 11);
        assert_eq!(pull_floor(&ExplorationSequence::Linear, 5, 4), 0);
    }

    #[test]
    fn forced_ceiling_constant_sqrt() {
        let seq = ExplorationSequence::constant(100.0).unwrap();
        let up = forced_ceiling(&seq, 10_000);
        assert_eq!(up, 100);
        assert!(up <= 101);
        let lemma = lemma3_bounds(&seq, 10, 10_000).unwrap();
        assert_eq!(lemma.upper, 100);
        assert_eq!(lemma.t0_upper, Some(10));
    }

    #[test]
    fn degenerate_schedule_floor_stops_after_first_pass() {
        let seq = ExplorationSequence::etc(1).unwrap();
        assert_eq!(pull_floor(&seq, 3, 2), 0);
        assert_eq!(pull_floor(&seq, 3, 3), 1);
        assert_eq!(pull_floor(&seq, 3, 1_000_000), 1);
        assert_eq!(pull_floor_table(&seq, 3, 50)[50], 1);
        assert_eq!(forced_ceiling(&seq, 40), 40);
    }

    #[test]
    fn eq1_examples() {
        assert_eq!(eq1_lower_bound(&ExplorationSequence::Linear, 5, 10_000).unwrap(), 140);
        assert_eq!(
            eq1_lower_bound(&ExplorationSequence::exponential(2.0).unwrap(), 3, 1000).unwrap(),
            8
        );
        assert_eq!(
            eq1_lower_bound(&ExplorationSequence::constant(100.0).unwrap(), 10, 10_000).unwrap(),
            99
        );
        assert!(matches!(
            eq1_lower_bound(&ExplorationSequence::constant(3.0).unwrap(), 5, 1000),
            Err(BoundsError::Sequence(SequenceError::Unreachable { .. }))
        ));
    }

    #[test]
    fn eq1_within_forced_ceiling() {
        let seqs = [
            (ExplorationSequence::Linear, 5usize),
            (ExplorationSequence::Linear, 10),
            (ExplorationSequence::exponential(2.0).unwrap(), 3),
            (ExplorationSequence::exponential(3.0).unwrap(), 8),
        ];
        for horizon in [1000u64, 10_000, 100_000] {
            for (seq, k) in &seqs {
                assert!(
                    eq1_lower_bound(seq, *k, horizon).unwrap() <= forced_ceiling(seq, horizon),
                    "{seq} {k} {horizon}"
                );
            }
            // constant f = c: eq1 ~ T/c while consecutive forced pulls are
            // c + 2 steps apart, so eq1 may exceed the ceiling by about 2T/c^2
            let c = (horizon as f64).sqrt();
            let seq = ExplorationSequence::constant(c).unwrap();
            let excess = (2.0 * horizon as f64 / (c * c)).ceil() as u64 + 1;
            assert!(eq1_lower_bound(&seq, 5, horizon).unwrap() <= forced_ceiling(&seq, horizon) + excess);
        }
    }

    #[test]
    fn theorem1_below_corollary1() {
        let seq = ExplorationSequence::constant(100.0).unwrap();
        let thm = theorem1_bound(&seq, 3, 10_000, 1.0).unwrap();
        let cor = corollary1(10_000, 1.0);
        assert!(thm <= cor, "{thm} > {cor}");
        assert!(rel(cor, 100.0 * (1.0 + 2.0 * 1f64.exp().powi(2)) + 1.0) < 1e-12);
    }

    #[test]
    fn theorem1_monotone_in_gap_and_horizon() {
        let seqs = [
            ExplorationSequence::constant(50.0).unwrap(),
            ExplorationSequence::Linear,
            ExplorationSequence::exp_auto(5000).unwrap(),
        ];
        for seq in &seqs {
            let mut prev = f64::INFINITY;
            for d in 1..=9 {
                let m = m_value(1.0, d as f64 / 10.0).unwrap();
                let v = theorem1_bound(seq, 4, 5000, m).unwrap();
                assert!(v >= 0.0 && v.is_finite());
                assert!(v <= prev, "{seq}: {v} > {prev}");
                prev = v;
            }
            let mut prev = 0.0;
            for horizon in [100u64, 1000, 5000, 20_000] {
                let v = theorem1_bound(seq, 4, horizon, 2.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn theorem1_rejects_non_monotone() {
        assert!(matches!(
            theorem1_bound(&ExplorationSequence::etc(5).unwrap(), 2, 100, 1.0),
            Err(BoundsError::Sequence(SequenceError::NonMonotone(_)))
        ));
    }

    #[test]
    fn theorem2_breakpoint_term() {
        let seq = ExplorationSequence::Linear;
        let base = theorem2_bound(&seq, 5, 100_000, 2000, 3.0, 0).unwrap();
        for b in 1..6u64 {
            let v = theorem2_bound(&seq, 5, 100_000, 2000, 3.0, b).unwrap();
            assert!(rel(v - base, 2000.0 * b as f64) < 1e-9);
        }
        let floor = pull_floor_table(&seq, 5, 2000);
        let sum: f64 = (1..=2000).map(|t| (-(floor[t] as f64) / 3.0).exp()).sum();
        let direct = 50.0 * (forced_ceiling(&seq, 2000) as f64 + 3.0 * (1.0f64 / 3.0).exp() * sum)
            + 50.0 * (1.0 + 6.0 * 2000f64.ln());
        assert!(rel(base, direct) < 1e-9);
        assert!(theorem2_bound(&seq, 5, 100, 200, 3.0, 0).is_err());
    }

    #[test]
    fn corollary2_example() {
        let v = corollary2(20_000, 5, 2.0);
        let desk = 200.0 + 25.0 + 48.0 * 1.5f64.exp();
        assert!(rel(v, desk) < 1e-12);
        assert!((v - 440.1).abs() < 0.05);
    }

    #[test]
    fn corollary1_grows_like_m_squared() {
        let ratio = corollary1(10_000, 200.0) / corollary1(10_000, 100.0);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn corollary3_series_converges() {
        // 1/(m ln a) = 2 > 1
        let a = 1.5f64;
        let m = 1.0 / (2.0 * a.ln());
        let s1 = exponential_series(a, 4, m, 100_000);
        let s2 = exponential_series(a, 4, m, 200_000);
        assert!((s2 - s1) / s1 < 0.01);
    }

    #[test]
    fn corollary6_series_matches_term_by_term() {
        let (a, k, m, tau) = (1.2f64, 5usize, 4.0f64, 3000u64);
        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        for t in 1..=tau {
            let y = (1.0 + (a - 1.0) / (k as f64 + 1.0) * t as f64).powf(-1.0 / (m * a.ln())) - comp;
            let s = acc + y;
            comp = (s - acc) - y;
            acc = s;
        }
        assert!(rel(exponential_series(a, k, m, tau), acc) < 1e-12);
        let v = corollary6(100_000, tau, k, m, a, 3);
        let direct = 9000.0
            + (100_000.0 / 3000.0) * m * (1.0 / m).exp() * acc
            + (100_000.0 / 3000.0) * (1.0 + 2.0 * m * 3000f64.ln() + 7.0 * 3001f64.ln() / a.ln());
        assert!(rel(v, direct) < 1e-12);
    }

    #[test]
    fn corollary4_and_5_share_structure() {
        let (t, tau, k, m, b) = (100_000u64, 2500u64, 5usize, 2.0f64, 4u64);
        let c4 = corollary4(t, tau, m, b);
        let c5 = corollary5(t, tau, k, m, b);
        let r = t as f64 / tau as f64;
        let diff = r * (3.0 * m.powi(3) * (3.0 / m).exp() - 50.0 * m * m * (2.0 / m).exp())
            + r * (25.0 + 5000f64.sqrt() - 1.0 - 50.0);
        assert!(rel(c5 - c4, diff) < 1e-9);
        // tau = T, no breakpoints: the stationary scale
        let collapsed = corollary4(10_000, 10_000, 1.0, 0);
        assert!(collapsed > 100.0 && collapsed < 2.0 * corollary1(10_000, 1.0));
    }

    #[test]
    fn family_dispatch() {
        let c = ExplorationSequence::constant(100.0).unwrap();
        assert_eq!(corollary_stationary(&c, 3, 10_000, 1.0).unwrap().0, "corollary1");
        assert!(corollary_stationary(&c, 3, 20_000, 1.0).is_err());
        assert_eq!(
            corollary_piecewise(&c, 3, 100_000, 10_000, 1.0, 2).unwrap().0,
            "corollary4"
        );
        let e = ExplorationSequence::exp_auto(10_000).unwrap();
        let (name, v) = corollary_stationary(&e, 3, 10_000, 1.0).unwrap();
        assert_eq!(name, "corollary3");
        assert!(rel(v, corollary3(10_000, 3, 1.0, (1.0 / 10_000f64.ln()).exp())) < 1e-15);
        assert!(corollary_stationary(&ExplorationSequence::etc(2).unwrap(), 3, 100, 1.0).is_err());
    }

    #[test]
    fn recommended_window_examples() {
        assert_eq!(recommended_window(100_000, 4, Family::Exponential, 5), 1820);
        assert_eq!(recommended_window(100_000, 4, Family::Constant, 5), 536);
        assert_eq!(recommended_window(100_000, 4, Family::Linear, 5), 536);
        assert_eq!(recommended_window(1000, 1000, Family::Constant, 5), 6);
        assert_eq!(recommended_window(10, 1, Family::Exponential, 20), 10);
    }

    #[test]
    fn report_covers_arms() {
        let report = bound_report(
            &ExplorationSequence::Linear,
            &[Some(0.3), None, Some(0.5)],
            5000,
            0.5,
            None,
        )
        .unwrap();
        assert_eq!(report.per_arm.len(), 3);
        assert!(report.per_arm[1].theorem.is_none());
        assert_eq!(report.per_arm[0].corollary_name.as_deref(), Some("corollary2"));
        assert!(report.per_arm[0].theorem.unwrap() > report.per_arm[2].theorem.unwrap());
        let pw = bound_report(
            &ExplorationSequence::exp_auto(1820).unwrap(),
            &[Some(0.3), Some(0.1)],
            100_000,
            1.0,
            Some(Piecewise {
                tau: 1820,
                breakpoints: 4,
            }),
        )
        .unwrap();
        assert_eq!(pw.recommended_tau, Some(1820));
        assert_eq!(pw.per_arm[0].corollary_name.as_deref(), Some("corollary6"));
        let unreachable = bound_report(
            &ExplorationSequence::constant(2.0).unwrap(),
            &[Some(0.5); 4],
            100,
            1.0,
            None,
        )
        .unwrap();
        assert!(unreachable.t0_unreachable);
        assert_eq!(unreachable.eq1_lower, None);
    }

    fn monotone_seq() -> impl Strategy<Value = ExplorationSequence> {
        prop_oneof![
            Just(ExplorationSequence::Linear),
            (0.5..200.0f64).prop_map(|c| ExplorationSequence::constant(c).unwrap()),
            (1.01..4.0f64).prop_map(|a| ExplorationSequence::exponential(a).unwrap()),
            (2u64..1_000_000).prop_map(|h| ExplorationSequence::exp_auto(h).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn floor_table_matches_oracle(seq in monotone_seq(), k in 1usize..12, horizon in 1u64..3000) {
            let table = pull_floor_table(&seq, k, horizon);
            let f = |r: u64| seq.value(r);
            for t in (0..=horizon).step_by(7).chain([horizon]) {
                prop_assert_eq!(table[t as usize], floor_oracle(f, k as u64, t));
                prop_assert_eq!(pull_floor(&seq, k, t), table[t as usize]);
            }
        }

        #[test]
        fn bounds_non_negative_and_monotone_in_horizon(seq in monotone_seq(), k in 2usize..8, d in 0.05..1.0f64) {
            let m = m_value(1.0, d).unwrap();
            let a = theorem1_bound(&seq, k, 500, m).unwrap();
            let b = theorem1_bound(&seq, k, 1500, m).unwrap();
            prop_assert!(a >= 0.0 && a.is_finite());
            prop_assert!(b >= a);
            prop_assert!(forced_ceiling(&seq, 1500) >= forced_ceiling(&seq, 500));
        }
    }
}
