//! Agent-based model of binary opinion exchange.
//!
//! Each agent holds a yes/no belief and carries an influence weight. The
//! majority opinion is read off the influence-weighted vote; in every
//! timestep each agent flips with probability `f_maj` when its belief sits
//! with that majority and `f_min` otherwise. Updates are synchronous: the
//! majority is evaluated once from the pre-step state, then all agents
//! resolve their flips simultaneously.

use rand::Rng;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// One population state: beliefs, influence weights summing to 1, and the
/// two flip probabilities. Value-semantic; [`step`] returns a new state.
#[derive(Debug, Clone)]
pub struct BinaryPopulation {
    beliefs: Vec<bool>,
    weights: Vec<f64>,
    f_min: f64,
    f_maj: f64,
    truth: Option<bool>,
}

impl BinaryPopulation {
    pub fn new(beliefs: Vec<bool>, weights: Vec<f64>, f_min: f64, f_maj: f64) -> Result<Self> {
        if beliefs.is_empty() || beliefs.len() != weights.len() {
            return Err(Error::LengthMismatch {
                beliefs: beliefs.len(),
                weights: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > WEIGHT_SUM_TOL
        {
            return Err(Error::BadWeightSum { sum });
        }
        for &p in &[f_min, f_maj] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityOutOfRange { value: p });
            }
        }
        Ok(Self {
            beliefs,
            weights,
            f_min,
            f_maj,
            truth: None,
        })
    }

    /// Equal influence for every agent.
    pub fn uniform_weights(beliefs: Vec<bool>, f_min: f64, f_maj: f64) -> Result<Self> {
        let n = beliefs.len();
        if n == 0 {
            return Err(Error::LengthMismatch { beliefs: 0, weights: 0 });
        }
        Self::new(beliefs, vec![1.0 / n as f64; n], f_min, f_maj)
    }

    /// Deterministic start: exactly `round(n * share)` agents hold belief 1,
    /// uniform weights.
    pub fn with_share(n: usize, share: f64, f_min: f64, f_maj: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&share) {
            return Err(Error::ProbabilityOutOfRange { value: share });
        }
        let ones = (n as f64 * share).round() as usize;
        let beliefs = (0..n).map(|i| i < ones).collect();
        Self::uniform_weights(beliefs, f_min, f_maj)
    }

    /// Random start: each agent holds belief 1 independently with
    /// probability `p`, so the count of ones is binomial(n, p).
    pub fn sample_binomial<R: Rng + ?Sized>(
        n: usize,
        p: f64,
        f_min: f64,
        f_maj: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { value: p });
        }
        let beliefs = (0..n).map(|_| rng.random_bool(p)).collect();
        Self::uniform_weights(beliefs, f_min, f_maj)
    }

    pub fn with_truth(mut self, truth: bool) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn beliefs(&self) -> &[bool] {
        &self.beliefs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_maj(&self) -> f64 {
        self.f_maj
    }

    pub fn truth(&self) -> Option<bool> {
        self.truth
    }

    /// Unweighted fraction of agents holding belief 1.
    pub fn share_one(&self) -> f64 {
        self.beliefs.iter().filter(|&&b| b).count() as f64 / self.beliefs.len() as f64
    }

    /// Fraction of agents holding the true belief, when a truth is set.
    pub fn accuracy(&self) -> Option<f64> {
        let truth = self.truth?;
        Some(if truth { self.share_one() } else { 1.0 - self.share_one() })
    }
}

/// Recorded run: unweighted and weighted shares per timestep (index 0 is the
/// initial state, so both histories have `steps + 1` entries).
#[derive(Debug, Clone)]
pub struct BinaryTrajectory {
    pub share_history: Vec<f64>,
    pub weighted_share_history: Vec<f64>,
    pub final_beliefs: Vec<bool>,
}

/// The influence-weighted vote `S`: total weight on belief 1.
pub fn weighted_vote(pop: &BinaryPopulation) -> f64 {
    pop.beliefs
        .iter()
        .zip(&pop.weights)
        .filter(|(&b, _)| b)
        .map(|(_, w)| w)
        .sum()
}

/// Majority opinion is 1 iff `S > 0.5`; a tie at exactly 0.5 reads as 0.
pub fn majority_opinion(pop: &BinaryPopulation) -> bool {
    weighted_vote(pop) > 0.5
}

/// One synchronous timestep: the majority is evaluated once from the
/// current state, then each agent independently flips with `f_maj` or
/// `f_min` depending on which side it is on.
pub fn step<R: Rng + ?Sized>(pop: &BinaryPopulation, rng: &mut R) -> BinaryPopulation {
    let majority = majority_opinion(pop);
    let beliefs = pop
        .beliefs
        .iter()
        .map(|&b| {
            let p = if b == majority { pop.f_maj } else { pop.f_min };
            if rng.random_bool(p) {
                !b
            } else {
                b
            }
        })
        .collect();
    BinaryPopulation {
        beliefs,
        ..pop.clone()
    }
}

/// Runs `steps` timesteps, recording the share history.
pub fn simulate<R: Rng + ?Sized>(
    pop: &BinaryPopulation,
    steps: usize,
    rng: &mut R,
) -> BinaryTrajectory {
    let mut current = pop.clone();
    let mut share_history = Vec::with_capacity(steps + 1);
    let mut weighted_share_history = Vec::with_capacity(steps + 1);
    share_history.push(current.share_one());
    weighted_share_history.push(weighted_vote(&current));
    for _ in 0..steps {
        current = step(&current, rng);
        share_history.push(current.share_one());
        weighted_share_history.push(weighted_vote(&current));
    }
    BinaryTrajectory {
        share_history,
        weighted_share_history,
        final_beliefs: current.beliefs,
    }
}

/// Long-run share of the initial-majority opinion: `f_min / (f_min + f_maj)`.
/// Equals 1 when `f_maj` is zero (unanimity is absorbing).
pub fn equilibrium_share(f_min: f64, f_maj: f64) -> Result<f64> {
    for &p in &[f_min, f_maj] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { value: p });
        }
    }
    if f_min == 0.0 && f_maj == 0.0 {
        return Err(Error::NoDynamics);
    }
    Ok(f_min / (f_min + f_maj))
}

/// Whether the unweighted majority also carries the influence-weighted
/// vote: true iff `pi / (1 - pi) > r`, where `pi` is the unweighted
/// majority share and `r` the minority-to-majority mean-weight ratio.
pub fn weighted_majority_holds(pi: f64, r: f64) -> Result<bool> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::DegenerateShare { value: pi });
    }
    if !(r >= 0.0) {
        return Err(Error::ProbabilityOutOfRange { value: r });
    }
    Ok(pi / (1.0 - pi) > r)
}
