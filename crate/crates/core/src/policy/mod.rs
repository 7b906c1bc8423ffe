//! Policy interface, tie-breaking and the config-level policy grammar.

pub mod fe;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::baselines::{EpsilonGreedy, ExploreThenCommit, SlidingWindowUcb, Ucb1};
use crate::bounds::recommended_window;
use crate::sequence::{Family, SequenceError, SequenceSpec};

pub use fe::{ForcedExploration, SlidingWindowFe};

/// A bandit policy driven by a select/update loop.
///
/// `select` never mutates the policy; `update` must be called with the arm
/// returned by the preceding `select`.
pub trait Policy: Send {
    fn num_arms(&self) -> usize;
    fn select(&self, rng: &mut dyn RngCore) -> usize;
    fn update(&mut self, arm: usize, reward: f64);
    /// Forced-pull counts for the forced-exploration policies.
    fn forced_counts(&self) -> Option<&[u64]> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Lowest arm index wins.
    #[default]
    Lowest,
    /// Uniformly random among the maximizers, drawn from the policy stream.
    Random,
}

/// Index of the largest value; `+inf` entries compare equal to each other.
pub fn argmax<I>(values: I, tie: TieBreak, rng: &mut dyn RngCore) -> usize
where
    I: IntoIterator<Item = f64>,
{
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    let mut ties = 0u32;
    for (i, v) in values.into_iter().enumerate() {
        if i == 0 || v > best_value {
            best = i;
            best_value = v;
            ties = 1;
        } else if v == best_value && tie == TieBreak::Random {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = i;
            }
        }
    }
    best
}

/// Mean of `sum / n`, or `+inf` for an arm that was never pulled.
pub(crate) fn empirical_mean(sum: f64, n: u64) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowSpec {
    Fixed(u64),
    /// Window chosen from the horizon and the breakpoint count.
    Auto,
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(tau) => write!(f, "{tau}"),
            Self::Auto => write!(f, "auto"),
        }
    }
}

impl FromStr for WindowSpec {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(Self::Auto),
            other => match other.parse::<u64>() {
                Ok(tau) if tau >= 1 => Ok(Self::Fixed(tau)),
                _ => Err(PolicyError::Parse {
                    input: s.to_string(),
                    reason: "window must be a positive integer or `auto`".into(),
                }),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("cannot parse policy `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error("invalid policy: {0}")]
    Invalid(String),
}

pub const DEFAULT_UCB_C: f64 = 2.0;
pub const DEFAULT_SWUCB_XI: f64 = 2.0;

/// Config-level policy description.
///
/// Grammar: `fe:<seq>`, `swfe:<seq>:<tau|auto>`, `etc:<s>`, `epsgreedy`,
/// `ucb1[:c]`, `swucb:<tau|auto>[:xi]`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Fe(SequenceSpec),
    SwFe { seq: SequenceSpec, window: WindowSpec },
    Etc(u64),
    EpsGreedy,
    Ucb1 { c: f64 },
    SwUcb { window: WindowSpec, xi: f64 },
}

/// Instance facts a policy may need at construction.
#[derive(Debug, Clone, Copy)]
pub struct BuildContext {
    pub arms: usize,
    pub horizon: u64,
    pub breakpoints: u64,
    pub tie_break: TieBreak,
}

impl PolicySpec {
    /// File-name friendly label.
    pub fn slug(&self) -> String {
        let s: String = self
            .to_string()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
            .collect();
        s.replace('.', "p")
    }

    /// Window length after resolving `auto`, for the windowed policies.
    pub fn window(&self, ctx: &BuildContext) -> Option<u64> {
        let resolve = |w: &WindowSpec, family: Family| match *w {
            WindowSpec::Fixed(tau) => tau,
            WindowSpec::Auto => recommended_window(ctx.horizon, ctx.breakpoints.max(1), family, ctx.arms),
        };
        match self {
            Self::SwFe { seq, window } => Some(resolve(window, seq.family())),
            Self::SwUcb { window, .. } => Some(resolve(window, Family::Constant)),
            _ => None,
        }
    }

    pub fn build(&self, ctx: &BuildContext) -> Result<Box<dyn Policy>, PolicyError> {
        let k = ctx.arms;
        if k == 0 {
            return Err(PolicyError::Invalid("no arms".into()));
        }
        let policy: Box<dyn Policy> = match self {
            Self::Fe(seq) => Box::new(ForcedExploration::new(k, seq.resolve(ctx.horizon)?, ctx.tie_break)),
            Self::SwFe { seq, .. } => {
                let tau = self.window(ctx).expect("windowed policy");
                Box::new(SlidingWindowFe::new(k, seq.resolve(tau)?, tau, ctx.tie_break))
            }
            Self::Etc(s) => Box::new(ExploreThenCommit::new(k, *s, ctx.tie_break)),
            Self::EpsGreedy => Box::new(EpsilonGreedy::new(k, ctx.tie_break)),
            Self::Ucb1 { c } => Box::new(Ucb1::new(k, *c, ctx.tie_break)),
            Self::SwUcb { xi, .. } => {
                let tau = self.window(ctx).expect("windowed policy");
                Box::new(SlidingWindowUcb::new(k, tau, *xi, ctx.tie_break))
            }
        };
        Ok(policy)
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fe(seq) => write!(f, "fe:{seq}"),
            Self::SwFe { seq, window } => write!(f, "swfe:{seq}:{window}"),
            Self::Etc(s) => write!(f, "etc:{s}"),
            Self::EpsGreedy => write!(f, "epsgreedy"),
            Self::Ucb1 { c } => write!(f, "ucb1:{c}"),
            Self::SwUcb { window, xi } => write!(f, "swucb:{window}:{xi}"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = PolicyError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| PolicyError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let positive = |s: &str| -> Result<f64, PolicyError> {
            match s.trim().parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
                _ => Err(err("expected a positive number")),
            }
        };
        let input_t = input.trim();
        let (head, rest) = match input_t.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (input_t, None),
        };
        let spec = match (head, rest) {
            ("fe", Some(seq)) => Self::Fe(seq.parse()?),
            ("swfe", Some(rest)) => {
                let (seq, window) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| err("expected swfe:<seq>:<tau|auto>"))?;
                Self::SwFe {
                    seq: seq.parse()?,
                    window: window.parse()?,
                }
            }
            ("etc", Some(s)) => match s.trim().parse::<u64>() {
                Ok(s) if s >= 1 => Self::Etc(s),
                _ => return Err(err("etc needs a positive integer round count")),
            },
            ("epsgreedy", None) => Self::EpsGreedy,
            ("ucb1", None) => Self::Ucb1 { c: DEFAULT_UCB_C },
            ("ucb1", Some(c)) => Self::Ucb1 { c: positive(c)? },
            ("swucb", Some(rest)) => match rest.split_once(':') {
                Some((w, xi)) => Self::SwUcb {
                    window: w.parse()?,
                    xi: positive(xi)?,
                },
                None => Self::SwUcb {
                    window: rest.parse()?,
                    xi: DEFAULT_SWUCB_XI,
                },
            },
            _ => return Err(err("unknown policy")),
        };
        // parameter validation shared with construction
        if let Self::Fe(seq) | Self::SwFe { seq, .. } = &spec {
            seq.resolve(4)?;
        }
        Ok(spec)
    }
}

impl Serialize for PolicySpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicySpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
