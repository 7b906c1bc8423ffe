//! Forced exploration (FE) and its sliding-window variant (SW-FE).
//!
//! Both policies keep, for every arm, the number of steps `p(i)` since its
//! last pull and a flag recording whether it was pulled in the current round.
//! While every `p(i)` stays below the schedule value `f(r)` the policy plays
//! greedily; otherwise it pulls the stalest arm. A round ends once every arm
//! has been pulled, which advances `r` and clears the flags.
//!
//! A schedule value of zero in a round `r >= 1` switches forcing off for that
//! round. Round 0 always forces (`f(0) = 0`), which yields a warm start that
//! pulls each arm once in index order.

use rand::RngCore;

use super::{argmax, empirical_mean, Policy, TieBreak};
use crate::sequence::ExplorationSequence;
use crate::window::SlidingWindow;

/// Round and staleness bookkeeping shared by FE and SW-FE.
#[derive(Debug, Clone)]
struct Forcing {
    seq: ExplorationSequence,
    tie: TieBreak,
    t: u64,
    r: u64,
    p: Vec<u64>,
    flag: Vec<bool>,
    unflagged: usize,
    h: Vec<u64>,
}

impl Forcing {
    fn new(k: usize, seq: ExplorationSequence, tie: TieBreak) -> Self {
        assert!(k >= 1, "at least one arm is required");
        Self {
            seq,
            tie,
            t: 1,
            r: 0,
            p: vec![0; k],
            flag: vec![false; k],
            unflagged: k,
            h: vec![0; k],
        }
    }

    fn threshold(&self) -> f64 {
        self.seq.value(self.r)
    }

    fn is_forced(&self) -> bool {
        let f = self.threshold();
        if self.r >= 1 && f == 0.0 {
            return false;
        }
        self.p.iter().any(|&p| p as f64 >= f)
    }

    fn forced_arm(&self, rng: &mut dyn RngCore) -> usize {
        argmax(self.p.iter().map(|&p| p as f64), self.tie, rng)
    }

    fn record(&mut self, arm: usize, forced: bool) {
        if forced {
            self.h[arm] += 1;
        }
        for p in &mut self.p {
            *p += 1;
        }
        self.p[arm] = 0;
        if !self.flag[arm] {
            self.flag[arm] = true;
            self.unflagged -= 1;
        }
        if self.unflagged == 0 {
            self.r += 1;
            self.flag.iter_mut().for_each(|f| *f = false);
            self.unflagged = self.flag.len();
        }
        self.t += 1;
    }
}

/// Forced exploration with full-history mean estimates.
#[derive(Debug, Clone)]
pub struct ForcedExploration {
    core: Forcing,
    n: Vec<u64>,
    sum: Vec<f64>,
}

impl ForcedExploration {
    pub fn new(k: usize, seq: ExplorationSequence, tie: TieBreak) -> Self {
        Self {
            core: Forcing::new(k, seq, tie),
            n: vec![0; k],
            sum: vec![0.0; k],
        }
    }

    /// Index of the step about to be played.
    pub fn t(&self) -> u64 {
        self.core.t
    }

    pub fn round(&self) -> u64 {
        self.core.r
    }

    /// `f(r)` for the current round.
    pub fn threshold(&self) -> f64 {
        self.core.threshold()
    }

    pub fn staleness(&self) -> &[u64] {
        &self.core.p
    }

    pub fn flags(&self) -> &[bool] {
        &self.core.flag
    }

    pub fn pulls(&self) -> &[u64] {
        &self.n
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.sum
    }

    pub fn forced(&self) -> &[u64] {
        &self.core.h
    }

    pub fn forced_count(&self, arm: usize) -> u64 {
        self.core.h[arm]
    }

    pub fn sequence(&self) -> &ExplorationSequence {
        &self.core.seq
    }

    /// Whether the next selection takes the forced branch.
    pub fn is_forced(&self) -> bool {
        self.core.is_forced()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        empirical_mean(self.sum[arm], self.n[arm])
    }
}

impl Policy for ForcedExploration {
    fn num_arms(&self) -> usize {
        self.n.len()
    }

    fn select(&self, rng: &mut dyn RngCore) -> usize {
        if self.core.is_forced() {
            self.core.forced_arm(rng)
        } else {
            argmax((0..self.n.len()).map(|i| self.mean(i)), self.core.tie, rng)
        }
    }

    fn update(&mut self, arm: usize, reward: f64) {
        let forced = self.core.is_forced();
        self.n[arm] += 1;
        self.sum[arm] += reward;
        self.core.record(arm, forced);
    }

    fn forced_counts(&self) -> Option<&[u64]> {
        Some(&self.core.h)
    }
}

/// Forced exploration with window estimates and a periodic schedule reset:
/// after every multiple of `tau` steps the round index returns to 1.
#[derive(Debug, Clone)]
pub struct SlidingWindowFe {
    core: Forcing,
    tau: u64,
    n: Vec<u64>,
    window: SlidingWindow,
}

impl SlidingWindowFe {
    pub fn new(k: usize, seq: ExplorationSequence, tau: u64, tie: TieBreak) -> Self {
        assert!(tau >= 1, "window length must be positive");
        Self {
            core: Forcing::new(k, seq, tie),
            tau,
            n: vec![0; k],
            window: SlidingWindow::new(k, tau as usize),
        }
    }

    pub fn t(&self) -> u64 {
        self.core.t
    }

    pub fn round(&self) -> u64 {
        self.core.r
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn threshold(&self) -> f64 {
        self.core.threshold()
    }

    pub fn staleness(&self) -> &[u64] {
        &self.core.p
    }

    pub fn flags(&self) -> &[bool] {
        &self.core.flag
    }

    pub fn pulls(&self) -> &[u64] {
        &self.n
    }

    pub fn forced(&self) -> &[u64] {
        &self.core.h
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    pub fn sequence(&self) -> &ExplorationSequence {
        &self.core.seq
    }

    pub fn is_forced(&self) -> bool {
        self.core.is_forced()
    }
}

impl Policy for SlidingWindowFe {
    fn num_arms(&self) -> usize {
        self.n.len()
    }

    fn select(&self, rng: &mut dyn RngCore) -> usize {
        if self.core.is_forced() {
            self.core.forced_arm(rng)
        } else {
            argmax((0..self.n.len()).map(|i| self.window.mean(i)), self.core.tie, rng)
        }
    }

    fn update(&mut self, arm: usize, reward: f64) {
        let forced = self.core.is_forced();
        let step = self.core.t;
        self.n[arm] += 1;
        self.window.push(arm, reward);
        self.core.record(arm, forced);
        if step.is_multiple_of(self.tau) {
            self.core.r = 1;
        }
    }

    fn forced_counts(&self) -> Option<&[u64]> {
        Some(&self.core.h)
    }
}
