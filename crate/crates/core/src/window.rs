//! Fixed-length window over the most recent `(arm, reward)` observations.

use std::collections::VecDeque;

use crate::exact::ExactSum;

/// Per-arm counts and reward sums over the last `tau` completed steps.
///
/// Sums are kept exactly, so eviction never leaves rounding residue and the
/// reported totals equal a fresh recount of the buffered rewards.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    tau: usize,
    buf: VecDeque<(usize, f64)>,
    counts: Vec<u64>,
    sums: Vec<ExactSum>,
    cached: Vec<f64>,
}

impl SlidingWindow {
    pub fn new(k: usize, tau: usize) -> Self {
        assert!(tau >= 1, "window length must be positive");
        Self {
            tau,
            buf: VecDeque::with_capacity(tau),
            counts: vec![0; k],
            sums: vec![ExactSum::new(); k],
            cached: vec![0.0; k],
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends an observation, evicting the oldest one when full.
    pub fn push(&mut self, arm: usize, reward: f64) {
        if self.buf.len() == self.tau {
            let (old, x) = self.buf.pop_front().expect("window is full");
            self.counts[old] -= 1;
            self.sums[old].sub(x);
            self.cached[old] = self.sums[old].value();
        }
        self.buf.push_back((arm, reward));
        self.counts[arm] += 1;
        self.sums[arm].add(reward);
        self.cached[arm] = self.sums[arm].value();
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Correctly rounded sum of the rewards of `arm` inside the window.
    pub fn sum(&self, arm: usize) -> f64 {
        self.cached[arm]
    }

    /// Window mean, or `+inf` for an arm absent from the window.
    pub fn mean(&self, arm: usize) -> f64 {
        match self.counts[arm] {
            0 => f64::INFINITY,
            n => self.cached[arm] / n as f64,
        }
    }

    /// Buffered observations, oldest first.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.buf.iter().copied()
    }
}
