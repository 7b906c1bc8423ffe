//! Forced-exploration bandit policies, regret-bound evaluators and a
//! reproducible Monte-Carlo experiment harness.

pub mod baselines;
pub mod bounds;
pub mod commands;
pub mod config;
pub mod env;
pub mod exact;
pub mod output;
pub mod policy;
pub mod runner;
pub mod sequence;
pub mod window;
