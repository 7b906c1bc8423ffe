//! Exploration schedules `f(r)`.
//!
//! A schedule maps a round index `r` to the number of consecutive steps an
//! arm may go unpulled before it is forced. Every family returns `f(0) = 0`,
//! which makes the first round a forced pass over all arms.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Upper limit for the round index scanned by [`ExplorationSequence::inverse`].
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("sequence {0} is not non-decreasing")]
    NonMonotone(String),
    #[error("sequence {seq} never reaches {target} within {cap} rounds")]
    Unreachable { seq: String, target: f64, cap: u64 },
    #[error("invalid sequence parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse sequence `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExplorationSequence {
    /// `f(r) = c` for `r >= 1`.
    Constant(f64),
    /// `f(r) = r`.
    Linear,
    /// `f(r) = a^r` with `a > 1`.
    Exponential(f64),
    /// `f(r) = e^{r / ln h}` for a horizon `h >= 2`, i.e. base `a = e^{1/ln h}`.
    ExpAuto { horizon: u64 },
    /// One forced pass per round for `s` rounds (counting the initial pass),
    /// then no forced exploration. Reproduces explore-then-commit.
    Etc(u64),
    /// `f(r) = values[r - 1]` for `1 <= r <= len`, zero afterwards.
    Custom(Vec<f64>),
}

impl ExplorationSequence {
    pub fn constant(c: f64) -> Result<Self, SequenceError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(SequenceError::InvalidParameter(format!(
                "constant must be positive, got {c}"
            )));
        }
        Ok(Self::Constant(c))
    }

    pub fn exponential(a: f64) -> Result<Self, SequenceError> {
        if !(a.is_finite() && a > 1.0) {
            return Err(SequenceError::InvalidParameter(format!(
                "exponential base must exceed 1, got {a}"
            )));
        }
        Ok(Self::Exponential(a))
    }

    pub fn exp_auto(horizon: u64) -> Result<Self, SequenceError> {
        if horizon < 2 {
            return Err(SequenceError::InvalidParameter(format!(
                "expauto needs a horizon of at least 2, got {horizon}"
            )));
        }
        Ok(Self::ExpAuto { horizon })
    }

    pub fn etc(s: u64) -> Result<Self, SequenceError> {
        if s == 0 {
            return Err(SequenceError::InvalidParameter("etc needs s >= 1".into()));
        }
        Ok(Self::Etc(s))
    }

    pub fn custom(values: Vec<f64>) -> Result<Self, SequenceError> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(SequenceError::InvalidParameter(format!(
                "custom values must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self::Custom(values))
    }

    /// Base `a` of the exponential families.
    pub fn exp_base(&self) -> Option<f64> {
        match self {
            Self::Exponential(a) => Some(*a),
            Self::ExpAuto { horizon } => Some((1.0 / (*horizon as f64).ln()).exp()),
            _ => None,
        }
    }

    pub fn value(&self, r: u64) -> f64 {
        if r == 0 {
            return 0.0;
        }
        match self {
            Self::Constant(c) => *c,
            Self::Linear => r as f64,
            Self::Exponential(a) => a.powf(r as f64),
            Self::ExpAuto { horizon } => (r as f64 / (*horizon as f64).ln()).exp(),
            Self::Etc(s) => {
                if r < *s {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Custom(values) => values.get(r as usize - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn is_non_decreasing(&self) -> bool {
        match self {
            Self::Constant(_) | Self::Linear | Self::Exponential(_) | Self::ExpAuto { .. } => true,
            // 0, 1, ..., 1, 0, ...
            Self::Etc(s) => *s <= 1,
            // the implicit zero tail only keeps an all-zero list monotone
            Self::Custom(values) => values.iter().all(|&v| v == 0.0),
        }
    }

    /// True when `f(r) = 0` for every round, i.e. forced exploration stops
    /// after the initial pass.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Self::Etc(s) => *s <= 1,
            Self::Custom(values) => values.iter().all(|&v| v == 0.0),
            _ => false,
        }
    }

    fn require_monotone(&self) -> Result<(), SequenceError> {
        if self.is_non_decreasing() {
            Ok(())
        } else {
            Err(SequenceError::NonMonotone(self.to_string()))
        }
    }

    /// `min{x : f(x) >= y}`, scanning up to [`DEFAULT_SEARCH_CAP`].
    pub fn inverse(&self, y: f64) -> Result<u64, SequenceError> {
        self.inverse_capped(y, DEFAULT_SEARCH_CAP)
    }

    pub fn inverse_capped(&self, y: f64, cap: u64) -> Result<u64, SequenceError> {
        self.require_monotone()?;
        if self.value(0) >= y {
            return Ok(0);
        }
        let unreachable = || SequenceError::Unreachable {
            seq: self.to_string(),
            target: y,
            cap,
        };
        // gallop to a bracket, then bisect on the monotone predicate
        let mut hi = 1u64;
        while self.value(hi) < y {
            if hi >= cap {
                return Err(unreachable());
            }
            hi = (hi.saturating_mul(2)).min(cap);
        }
        let mut lo = hi / 2; // f(lo) < y
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.value(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `max{n >= start : sum_{r=start}^{n} f(r) <= budget}`, or `start - 1`
    /// when the first term alone exceeds the budget.
    pub fn cumsum_threshold(&self, start: u64, budget: f64) -> Result<u64, SequenceError> {
        self.require_monotone()?;
        if budget.is_nan() || budget < 0.0 {
            return Err(SequenceError::InvalidParameter(format!(
                "budget must be non-negative, got {budget}"
            )));
        }
        if let Self::Constant(c) = self {
            // closed form; the r = 0 term contributes nothing
            let first = start.max(1);
            let mut terms = (budget / c).floor();
            while terms > 0.0 && terms * c > budget {
                terms -= 1.0;
            }
            while (terms + 1.0) * c <= budget {
                terms += 1.0;
            }
            return Ok(first - 1 + terms as u64);
        }
        if self.is_degenerate() {
            return Err(SequenceError::Unreachable {
                seq: self.to_string(),
                target: budget,
                cap: DEFAULT_SEARCH_CAP,
            });
        }
        let mut total = 0.0;
        let mut n = start;
        loop {
            let term = self.value(n);
            if total + term > budget {
                return Ok(n.saturating_sub(1));
            }
            total += term;
            if n >= DEFAULT_SEARCH_CAP {
                return Err(SequenceError::Unreachable {
                    seq: self.to_string(),
                    target: budget,
                    cap: DEFAULT_SEARCH_CAP,
                });
            }
            n += 1;
        }
    }

    /// Short family label used in reports.
    pub fn family(&self) -> Family {
        match self {
            Self::Constant(_) => Family::Constant,
            Self::Linear => Family::Linear,
            Self::Exponential(_) | Self::ExpAuto { .. } => Family::Exponential,
            Self::Etc(_) => Family::Etc,
            Self::Custom(_) => Family::Custom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Constant,
    Linear,
    Exponential,
    Etc,
    Custom,
}

impl fmt::Display for ExplorationSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "constant:{c}"),
            Self::Linear => write!(f, "linear"),
            Self::Exponential(a) => write!(f, "exp:{a}"),
            Self::ExpAuto { horizon } => write!(f, "expauto({horizon})"),
            Self::Etc(s) => write!(f, "etc:{s}"),
            Self::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

/// Config-level schedule, resolved against a horizon by [`SequenceSpec::resolve`].
///
/// Grammar: `constant:<c>`, `constant:sqrt`, `linear`, `exp:<a>`, `expauto`,
/// `etc:<s>`, `custom:<v1,v2,...>`. `constant:sqrt` and `expauto` take their
/// horizon from the policy (`T` for FE, the window for SW-FE).
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    Constant(f64),
    ConstantSqrt,
    Linear,
    Exponential(f64),
    ExpAuto,
    Etc(u64),
    Custom(Vec<f64>),
}

impl SequenceSpec {
    pub fn resolve(&self, horizon: u64) -> Result<ExplorationSequence, SequenceError> {
        match self {
            Self::Constant(c) => ExplorationSequence::constant(*c),
            Self::ConstantSqrt => ExplorationSequence::constant((horizon as f64).sqrt()),
            Self::Linear => Ok(ExplorationSequence::Linear),
            Self::Exponential(a) => ExplorationSequence::exponential(*a),
            Self::ExpAuto => ExplorationSequence::exp_auto(horizon),
            Self::Etc(s) => ExplorationSequence::etc(*s),
            Self::Custom(v) => ExplorationSequence::custom(v.clone()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Constant(_) | Self::ConstantSqrt => Family::Constant,
            Self::Linear => Family::Linear,
            Self::Exponential(_) | Self::ExpAuto => Family::Exponential,
            Self::Etc(_) => Family::Etc,
            Self::Custom(_) => Family::Custom,
        }
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "constant:{c}"),
            Self::ConstantSqrt => write!(f, "constant:sqrt"),
            Self::Linear => write!(f, "linear"),
            Self::Exponential(a) => write!(f, "exp:{a}"),
            Self::ExpAuto => write!(f, "expauto"),
            Self::Etc(s) => write!(f, "etc:{s}"),
            Self::Custom(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for SequenceSpec {
    type Err = SequenceError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| SequenceError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let (head, arg) = match input.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (input.trim(), None),
        };
        let number = |a: Option<&str>| -> Result<f64, SequenceError> {
            let a = a.ok_or_else(|| err("missing numeric argument"))?;
            a.parse::<f64>().map_err(|_| err("expected a number"))
        };
        let spec = match head {
            "constant" => match arg {
                Some("sqrt") => Self::ConstantSqrt,
                a => Self::Constant(number(a)?),
            },
            "linear" if arg.is_none() => Self::Linear,
            "exp" => Self::Exponential(number(arg)?),
            "expauto" if arg.is_none() => Self::ExpAuto,
            "etc" => {
                let a = arg.ok_or_else(|| err("missing round count"))?;
                Self::Etc(a.parse().map_err(|_| err("expected a positive integer"))?)
            }
            "custom" => {
                let a = arg.ok_or_else(|| err("missing value list"))?;
                let values = a
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err("expected comma-separated numbers"))?;
                Self::Custom(values)
            }
            _ => return Err(err("unknown sequence family")),
        };
        // validate parameters eagerly; the horizon is irrelevant here
        spec.resolve(4)?;
        Ok(spec)
    }
}
