//! Numeric opinion exchange with threshold voting.
//!
//! Agents hold real-valued beliefs and repeatedly replace them with a
//! weighted average of everyone's beliefs (row-stochastic weight matrix).
//! A binary vote is read off at any point by comparing each belief against
//! a threshold `T` with the strict "above" rule.
//!
//! Whether the initial majority vote grows or shrinks is predicted from
//! three numbers only: the pre-influence median `M`, the post-influence
//! value `C` (asymptotic consensus, or the post mean as its short-term
//! proxy), and the threshold `T`. The majority shrinks iff `T` lies
//! strictly between `M` and `C`.

use rand::Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::rng::run_rng;
use crate::stats::EstimateVector;

const ROW_SUM_TOL: f64 = 1e-9;
const POWER_ITER_TOL: f64 = 1e-12;
const MAX_POWER_ITERS: usize = 500_000;

/// Row-stochastic attention matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::SystemSizeMismatch { beliefs: row.len(), n });
            }
            let mut sum = 0.0;
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::BadMatrixEntry { row: i, col: j, value: w });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::BadRowSum { row: i, sum });
            }
            entries.extend_from_slice(row);
        }
        if n == 0 {
            return Err(Error::SystemSizeMismatch { beliefs: 0, n: 0 });
        }
        Ok(Self { n, entries })
    }

    /// Every agent weights every agent (including itself) equally.
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            entries: vec![1.0 / n as f64; n * n],
        }
    }

    /// Complete network with given self-weights: agent `i` keeps `w[i]` on
    /// itself and splits the remainder equally over the other `n - 1`
    /// agents.
    pub fn self_weight_complete(self_weights: &[f64]) -> Result<Self> {
        let n = self_weights.len();
        if n < 2 {
            return Err(Error::SystemSizeMismatch { beliefs: n, n });
        }
        let mut rows = Vec::with_capacity(n);
        for (i, &w) in self_weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::BadMatrixEntry { row: i, col: i, value: w });
            }
            let off = (1.0 - w) / (n - 1) as f64;
            let mut row = vec![off; n];
            row[i] = w;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    /// Random strictly positive rows; always irreducible and aperiodic.
    pub fn random_positive<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n {
            let row: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
            let sum: f64 = row.iter().sum();
            entries.extend(row.into_iter().map(|w| w / sum));
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// One averaging round: `out[i] = sum_j W[i][j] * beliefs[j]`.
    pub fn apply(&self, beliefs: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(beliefs)
                    .map(|(w, b)| w * b)
                    .sum()
            })
            .collect()
    }

    /// Single strongly connected component over positive entries, plus at
    /// least one positive diagonal entry.
    pub fn is_irreducible_aperiodic(&self) -> bool {
        let positive_diag = (0..self.n).any(|i| self.get(i, i) > 0.0);
        positive_diag && self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, reversed: bool) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in 0..self.n {
                let w = if reversed { self.get(j, i) } else { self.get(i, j) };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }
}

/// Beliefs plus weight matrix plus a fixed number of averaging rounds.
#[derive(Debug, Clone)]
pub struct DeGrootSystem {
    beliefs: EstimateVector,
    weights: WeightMatrix,
    rounds: usize,
}

impl DeGrootSystem {
    pub fn new(beliefs: EstimateVector, weights: WeightMatrix, rounds: usize) -> Result<Self> {
        if beliefs.len() != weights.n() {
            return Err(Error::SystemSizeMismatch {
                beliefs: beliefs.len(),
                n: weights.n(),
            });
        }
        Ok(Self {
            beliefs,
            weights,
            rounds,
        })
    }

    pub fn beliefs(&self) -> &EstimateVector {
        &self.beliefs
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }
}

/// One averaging round.
pub fn degroot_step(sys: &DeGrootSystem) -> EstimateVector {
    EstimateVector::new(sys.weights.apply(sys.beliefs.as_slice()))
        .expect("averaging preserves finiteness")
}

/// The belief vector after the system's configured number of rounds.
/// Zero rounds returns the initial beliefs.
pub fn degroot_run(sys: &DeGrootSystem) -> EstimateVector {
    let mut beliefs = sys.beliefs.as_slice().to_vec();
    for _ in 0..sys.rounds {
        beliefs = sys.weights.apply(&beliefs);
    }
    EstimateVector::new(beliefs).expect("averaging preserves finiteness")
}

/// Iterates until the belief spread (max - min) drops below `spread_tol`,
/// ignoring the system's configured round count. Returns the converged
/// beliefs and the number of rounds taken.
pub fn run_to_consensus(
    sys: &DeGrootSystem,
    spread_tol: f64,
    max_rounds: usize,
) -> Result<(EstimateVector, usize)> {
    let mut beliefs = sys.beliefs.as_slice().to_vec();
    let mut spread = spread_of(&beliefs);
    for round in 0..=max_rounds {
        if spread < spread_tol {
            let v = EstimateVector::new(beliefs).expect("averaging preserves finiteness");
            return Ok((v, round));
        }
        if round == max_rounds {
            break;
        }
        beliefs = sys.weights.apply(&beliefs);
        spread = spread_of(&beliefs);
    }
    Err(Error::NoConvergence {
        iterations: max_rounds,
        residual: spread,
    })
}

fn spread_of(beliefs: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &b in beliefs {
        min = min.min(b);
        max = max.max(b);
    }
    max - min
}

/// Stationary row vector of the matrix: `pi = pi W`, entries summing to 1,
/// by power iteration to max-norm tolerance 1e-12.
pub fn stationary_distribution(weights: &WeightMatrix) -> Result<Vec<f64>> {
    if !weights.is_irreducible_aperiodic() {
        return Err(Error::NoUniqueConsensus);
    }
    let n = weights.n();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut delta = f64::INFINITY;
    for _ in 0..MAX_POWER_ITERS {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &p) in pi.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, acc) in next.iter_mut().enumerate() {
                *acc += p * weights.get(i, j);
            }
        }
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= sum);
        delta = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if delta < POWER_ITER_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_POWER_ITERS,
        residual: delta,
    })
}

/// The asymptotic consensus belief `pi . B0`. Requires an irreducible,
/// aperiodic weight matrix; under the uniform matrix this is the initial
/// mean.
pub fn consensus_value(sys: &DeGrootSystem) -> Result<f64> {
    let pi = stationary_distribution(&sys.weights)?;
    Ok(pi
        .iter()
        .zip(sys.beliefs.iter())
        .map(|(p, b)| p * b)
        .sum())
}

/// The three reference values a threshold decision is judged against, plus
/// truth and pre-mean for the accuracy-decoupling check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionContext {
    pub threshold: f64,
    pub truth: f64,
    pub pre_median: f64,
    pub pre_mean: f64,
    pub post_value: f64,
}

impl DecisionContext {
    pub fn new(
        threshold: f64,
        truth: f64,
        pre_median: f64,
        pre_mean: f64,
        post_value: f64,
    ) -> Result<Self> {
        for &v in &[threshold, truth, pre_median, pre_mean, post_value] {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { index: 0, value: v });
            }
        }
        Ok(Self {
            threshold,
            truth,
            pre_median,
            pre_mean,
            post_value,
        })
    }
}

/// Predicted direction of the initial majority's vote share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteChangePrediction {
    Grow,
    Shrink,
    /// Threshold ties the median or the post value; excluded from scoring.
    Boundary,
}

/// The majority vote shrinks iff the threshold falls strictly between the
/// pre-influence median and the post-influence value.
pub fn predict_vote_change(ctx: &DecisionContext) -> VoteChangePrediction {
    let (t, m, c) = (ctx.threshold, ctx.pre_median, ctx.post_value);
    if t == m || t == c {
        VoteChangePrediction::Boundary
    } else if (c < t && t < m) || (m < t && t < c) {
        VoteChangePrediction::Shrink
    } else {
        VoteChangePrediction::Grow
    }
}

/// Sufficient conditions for the mean estimate improving while the vote
/// gets less accurate: `M < mu < C < T < truth` or its mirror image.
pub fn decoupling_case(ctx: &DecisionContext) -> bool {
    let (t, th, m, mu, c) = (
        ctx.threshold,
        ctx.truth,
        ctx.pre_median,
        ctx.pre_mean,
        ctx.post_value,
    );
    (m < mu && mu < c && c < t && t < th) || (th < t && t < c && c < mu && mu < m)
}

/// Realized direction of the initial majority's unweighted vote share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MajorityChange {
    Grew,
    Shrank,
    Unchanged,
}

/// How an unchanged majority share scores against a Grow prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchPolicy {
    /// Growth as a weak inequality: Unchanged is consistent with Grow.
    #[default]
    UnchangedMatchesGrow,
    /// Growth as a strict inequality.
    Strict,
}

/// Change of the initial majority given counts of votes strictly above the
/// threshold. `None` when the pre votes split exactly in half (no initial
/// majority to track).
pub fn majority_change(above_pre: usize, above_post: usize, n: usize) -> Option<MajorityChange> {
    if above_pre * 2 == n {
        return None;
    }
    let majority_above = above_pre * 2 > n;
    let (pre, post) = if majority_above {
        (above_pre, above_post)
    } else {
        (n - above_pre, n - above_post)
    };
    Some(match post.cmp(&pre) {
        std::cmp::Ordering::Greater => MajorityChange::Grew,
        std::cmp::Ordering::Less => MajorityChange::Shrank,
        std::cmp::Ordering::Equal => MajorityChange::Unchanged,
    })
}

/// Whether a realized change agrees with a prediction. `None` for Boundary
/// predictions, which are excluded from scoring.
pub fn outcome_matches(
    prediction: VoteChangePrediction,
    change: MajorityChange,
    policy: MatchPolicy,
) -> Option<bool> {
    match prediction {
        VoteChangePrediction::Boundary => None,
        VoteChangePrediction::Grow => Some(match change {
            MajorityChange::Grew => true,
            MajorityChange::Unchanged => policy == MatchPolicy::UnchangedMatchesGrow,
            MajorityChange::Shrank => false,
        }),
        VoteChangePrediction::Shrink => Some(change == MajorityChange::Shrank),
    }
}

/// Initial belief distributions used by the simulation presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeliefDistribution {
    Normal,
    LogNormal,
}

impl BeliefDistribution {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Self::Normal),
            "lognormal" | "log-normal" => Ok(Self::LogNormal),
            other => Err(Error::UnknownDistribution(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::LogNormal => "lognormal",
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Normal => {
                let d = rand_distr::Normal::new(0.0, 1.0).expect("valid parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Self::LogNormal => {
                let d = rand_distr::LogNormal::new(0.0, 1.0).expect("valid parameters");
                (0..n).map(|_| d.sample(rng)).collect()
            }
        }
    }

    /// Theoretical quantile of the standard distribution.
    pub fn quantile(self, p: f64) -> f64 {
        let normal = statrs::distribution::Normal::new(0.0, 1.0).expect("valid parameters");
        match self {
            Self::Normal => normal.inverse_cdf(p),
            Self::LogNormal => normal.inverse_cdf(p).exp(),
        }
    }

    pub fn mean(self) -> f64 {
        match self {
            Self::Normal => 0.0,
            Self::LogNormal => (0.5f64).exp(),
        }
    }

    /// Quantile rank of the distribution mean; thresholds at nearby grid
    /// points are where short-term predictions may deviate.
    pub fn mean_quantile_rank(self) -> f64 {
        let normal = statrs::distribution::Normal::new(0.0, 1.0).expect("valid parameters");
        match self {
            Self::Normal => 0.5,
            Self::LogNormal => normal.cdf(0.5),
        }
    }
}

/// One averaging round on a complete network with per-agent self-weights:
/// agent `i` keeps `w[i]` on its own belief and splits the rest equally
/// over the other agents. Equivalent to [`WeightMatrix::self_weight_complete`]
/// in O(n) per round.
pub fn complete_network_round(beliefs: &[f64], self_weights: &[f64]) -> Vec<f64> {
    let n = beliefs.len();
    debug_assert_eq!(n, self_weights.len());
    debug_assert!(n >= 2);
    let total: f64 = beliefs.iter().sum();
    beliefs
        .iter()
        .zip(self_weights)
        .map(|(&b, &w)| w * b + (1.0 - w) * (total - b) / (n - 1) as f64)
        .collect()
}

pub fn complete_network_run(beliefs: &[f64], self_weights: &[f64], rounds: usize) -> Vec<f64> {
    let mut b = beliefs.to_vec();
    for _ in 0..rounds {
        b = complete_network_round(&b, self_weights);
    }
    b
}

/// Grid ranks `resolution, 2*resolution, ..., 1 - resolution`.
pub fn grid_points(resolution: f64) -> Result<Vec<f64>> {
    if !(resolution > 0.0 && resolution < 1.0) {
        return Err(Error::BadResolution(resolution));
    }
    let steps = (1.0 / resolution).round();
    if steps < 2.0 || (resolution * steps - 1.0).abs() > 1e-9 {
        return Err(Error::BadResolution(resolution));
    }
    Ok((1..steps as usize)
        .map(|k| k as f64 * resolution)
        .collect())
}

/// Configuration for the short-term consistency experiment: complete
/// network, self-weights drawn uniform on [0, 1], fixed revision count,
/// thresholds at quantiles of the initial distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub n: usize,
    pub rounds: usize,
    pub runs: usize,
    pub distribution: BeliefDistribution,
    pub grid_resolution: f64,
    pub policy: MatchPolicy,
    pub seed: u64,
}

/// Aggregated outcome for one grid threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdConsistency {
    pub quantile: f64,
    pub threshold: f64,
    pub runs: usize,
    pub matched: usize,
    pub unmatched: usize,
    /// Threshold tied the run's median or post mean, or the pre votes were
    /// split exactly in half; not scored.
    pub boundary: usize,
    /// Scored runs whose majority share did not move at all.
    pub unchanged: usize,
}

impl ThresholdConsistency {
    /// Matched fraction among scored runs; `None` when every run was a
    /// boundary case.
    pub fn consistency(&self) -> Option<f64> {
        let scored = self.matched + self.unmatched;
        (scored > 0).then(|| self.matched as f64 / scored as f64)
    }
}

#[derive(Clone, Copy)]
enum CellOutcome {
    Matched { unchanged: bool },
    Unmatched { unchanged: bool },
    Boundary,
}

fn classify_cell(
    pre: &[f64],
    post: &[f64],
    threshold: f64,
    pre_median: f64,
    post_mean: f64,
    policy: MatchPolicy,
) -> CellOutcome {
    let n = pre.len();
    let above_pre = pre.iter().filter(|&&b| b > threshold).count();
    let above_post = post.iter().filter(|&&b| b > threshold).count();
    let prediction = predict_vote_change(&DecisionContext {
        threshold,
        truth: 0.0,
        pre_median,
        pre_mean: 0.0,
        post_value: post_mean,
    });
    let Some(change) = majority_change(above_pre, above_post, n) else {
        return CellOutcome::Boundary;
    };
    match outcome_matches(prediction, change, policy) {
        None => CellOutcome::Boundary,
        Some(true) => CellOutcome::Matched {
            unchanged: change == MajorityChange::Unchanged,
        },
        Some(false) => CellOutcome::Unmatched {
            unchanged: change == MajorityChange::Unchanged,
        },
    }
}

/// Runs the short-term experiment: per run, sample initial beliefs and
/// self-weights, average for `rounds` rounds, then for every grid threshold
/// compare the realized majority change against the prediction that uses
/// the post mean as the consensus proxy. Runs execute in parallel on
/// per-run seed streams; aggregation is count-based and order-independent.
pub fn short_term_consistency(config: &ConsistencyConfig) -> Result<Vec<ThresholdConsistency>> {
    if config.n < 2 {
        return Err(Error::InvalidParameter(format!("population {} < 2", config.n)));
    }
    if config.runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let grid = grid_points(config.grid_resolution)?;
    let thresholds: Vec<f64> = grid.iter().map(|&p| config.distribution.quantile(p)).collect();

    let per_run: Vec<Vec<CellOutcome>> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(config.seed, run as u64);
            let pre = config.distribution.sample(config.n, &mut rng);
            let self_weights: Vec<f64> = (0..config.n).map(|_| rng.random::<f64>()).collect();
            let post = complete_network_run(&pre, &self_weights, config.rounds);
            let pre_vec = EstimateVector::new(pre).expect("sampled beliefs are finite");
            let pre_median = pre_vec.median();
            let post_mean = post.iter().sum::<f64>() / post.len() as f64;
            thresholds
                .iter()
                .map(|&t| {
                    classify_cell(
                        pre_vec.as_slice(),
                        &post,
                        t,
                        pre_median,
                        post_mean,
                        config.policy,
                    )
                })
                .collect()
        })
        .collect();

    let mut table: Vec<ThresholdConsistency> = grid
        .iter()
        .zip(&thresholds)
        .map(|(&p, &t)| ThresholdConsistency {
            quantile: p,
            threshold: t,
            runs: config.runs,
            matched: 0,
            unmatched: 0,
            boundary: 0,
            unchanged: 0,
        })
        .collect();
    for cells in &per_run {
        for (row, cell) in table.iter_mut().zip(cells) {
            match *cell {
                CellOutcome::Matched { unchanged } => {
                    row.matched += 1;
                    row.unchanged += unchanged as usize;
                }
                CellOutcome::Unmatched { unchanged } => {
                    row.unmatched += 1;
                    row.unchanged += unchanged as usize;
                }
                CellOutcome::Boundary => row.boundary += 1,
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(values: &[f64]) -> EstimateVector {
        EstimateVector::new(values.to_vec()).unwrap()
    }

    fn sys(beliefs: &[f64], rows: Vec<Vec<f64>>, rounds: usize) -> DeGrootSystem {
        DeGrootSystem::new(ev(beliefs), WeightMatrix::from_rows(rows).unwrap(), rounds).unwrap()
    }

    #[test]
    fn step_arithmetic() {
        let s = sys(&[0.0, 10.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 1);
        assert_eq!(degroot_step(&s).as_slice(), &[5.0, 5.0]);

        let s = sys(&[3.0, -1.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1);
        assert_eq!(degroot_step(&s).as_slice(), &[3.0, -1.0]);

        let s = sys(&[0.0, 10.0], vec![vec![1.0, 0.0], vec![0.5, 0.5]], 1);
        assert_eq!(degroot_step(&s).as_slice(), &[0.0, 5.0]);
    }

    #[test]
    fn run_counts_rounds() {
        let s = sys(&[1.0, 5.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0);
        assert_eq!(degroot_run(&s).as_slice(), &[1.0, 5.0]);

        let s = sys(&[1.0, 5.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 1);
        assert_eq!(degroot_run(&s).as_slice(), &[3.0, 3.0]);
        // idempotent once everyone holds the mean
        let s = sys(&[3.0, 3.0], vec![vec![0.5, 0.5], vec![0.5, 0.5]], 5);
        assert_eq!(degroot_run(&s).as_slice(), &[3.0, 3.0]);
    }

    #[test]
    fn ten_rounds_near_stationary_mix() {
        // stationary vector (2/3, 1/3) puts the consensus at 1.0
        let s = sys(&[0.0, 3.0], vec![vec![0.8, 0.2], vec![0.4, 0.6]], 10);
        let out = degroot_run(&s);
        assert!((out.as_slice()[0] - 1.0).abs() < 1e-2);
        assert!((out.as_slice()[1] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn consensus_matches_hand_solved_stationary_vector() {
        let s = sys(&[0.0, 3.0], vec![vec![0.8, 0.2], vec![0.4, 0.6]], 0);
        assert!((consensus_value(&s).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn consensus_under_uniform_matrix_is_initial_mean() {
        let beliefs = [4.0, -2.0, 7.0, 7.5, 0.25];
        let s = DeGrootSystem::new(ev(&beliefs), WeightMatrix::uniform(5), 0).unwrap();
        let mean = beliefs.iter().sum::<f64>() / 5.0;
        assert!((consensus_value(&s).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn identity_matrix_has_no_unique_consensus() {
        let s = sys(&[1.0, 2.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 0);
        assert!(matches!(consensus_value(&s), Err(Error::NoUniqueConsensus)));
    }

    #[test]
    fn stationary_vector_agrees_with_brute_force_matrix_power() {
        let w = WeightMatrix::from_rows(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let pi = stationary_distribution(&w).unwrap();
        // oracle: rows of W^200, computed by naive repeated multiplication
        let mut rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| w.get(i, j)).collect())
            .collect();
        for _ in 0..200 {
            rows = rows.iter().map(|r| w_transpose_apply(&w, r)).collect();
        }
        for row in rows {
            for (a, b) in row.iter().zip(&pi) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    fn w_transpose_apply(w: &WeightMatrix, row: &[f64]) -> Vec<f64> {
        // row * W
        (0..w.n())
            .map(|j| (0..w.n()).map(|i| row[i] * w.get(i, j)).sum())
            .collect()
    }

    #[test]
    fn reducible_matrix_rejected() {
        let w = WeightMatrix::from_rows(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(!w.is_irreducible_aperiodic());
        assert!(stationary_distribution(&w).is_err());
    }

    #[test]
    fn bad_rows_rejected() {
        assert!(matches!(
            WeightMatrix::from_rows(vec![vec![0.7, 0.7], vec![0.5, 0.5]]),
            Err(Error::BadRowSum { row: 0, .. })
        ));
        assert!(matches!(
            WeightMatrix::from_rows(vec![vec![1.5, -0.5], vec![0.5, 0.5]]),
            Err(Error::BadMatrixEntry { .. })
        ));
    }

    #[test]
    fn prediction_cases() {
        let ctx = |t, m, c| DecisionContext {
            threshold: t,
            truth: 0.0,
            pre_median: m,
            pre_mean: 0.0,
            post_value: c,
        };
        assert_eq!(predict_vote_change(&ctx(6.0, 5.0, 8.0)), VoteChangePrediction::Shrink);
        assert_eq!(predict_vote_change(&ctx(10.0, 5.0, 8.0)), VoteChangePrediction::Grow);
        assert_eq!(predict_vote_change(&ctx(5.0, 5.0, 8.0)), VoteChangePrediction::Boundary);
        assert_eq!(predict_vote_change(&ctx(4.0, 8.0, 5.0)), VoteChangePrediction::Grow);
        assert_eq!(predict_vote_change(&ctx(6.0, 8.0, 5.0)), VoteChangePrediction::Shrink);
        // pre-median and post mean both under the threshold: grow, as in the
        // calorie-count group that moved 74% -> 84% on the same side
        assert_eq!(predict_vote_change(&ctx(600.0, 435.0, 466.0)), VoteChangePrediction::Grow);
    }

    #[test]
    fn decoupling_chain() {
        let ctx = |t, th, m, mu, c| DecisionContext {
            threshold: t,
            truth: th,
            pre_median: m,
            pre_mean: mu,
            post_value: c,
        };
        assert!(decoupling_case(&ctx(600.0, 729.0, 400.0, 430.0, 460.0)));
        assert!(decoupling_case(&ctx(2.0, 1.0, 5.0, 4.0, 3.0)));
        assert!(!decoupling_case(&ctx(600.0, 729.0, 400.0, 430.0, 700.0)));
    }

    #[test]
    fn majority_change_tracks_initial_majority_side() {
        assert_eq!(majority_change(7, 9, 10), Some(MajorityChange::Grew));
        assert_eq!(majority_change(7, 6, 10), Some(MajorityChange::Shrank));
        assert_eq!(majority_change(3, 2, 10), Some(MajorityChange::Grew));
        assert_eq!(majority_change(3, 3, 10), Some(MajorityChange::Unchanged));
        assert_eq!(majority_change(5, 9, 10), None);
    }

    #[test]
    fn match_policy_on_unchanged() {
        use MajorityChange::*;
        use VoteChangePrediction::*;
        let weak = MatchPolicy::UnchangedMatchesGrow;
        let strict = MatchPolicy::Strict;
        assert_eq!(outcome_matches(Grow, Unchanged, weak), Some(true));
        assert_eq!(outcome_matches(Grow, Unchanged, strict), Some(false));
        assert_eq!(outcome_matches(Shrink, Unchanged, weak), Some(false));
        assert_eq!(outcome_matches(Shrink, Shrank, strict), Some(true));
        assert_eq!(outcome_matches(Boundary, Grew, weak), None);
    }

    #[test]
    fn complete_network_matches_dense_matrix() {
        let mut rng = crate::rng::run_rng(31, 0);
        let beliefs: Vec<f64> = BeliefDistribution::Normal.sample(7, &mut rng);
        let self_weights: Vec<f64> = (0..7).map(|_| rng.random::<f64>()).collect();
        let dense = WeightMatrix::self_weight_complete(&self_weights).unwrap();
        let via_matrix =
            degroot_run(&DeGrootSystem::new(ev(&beliefs), dense, 4).unwrap());
        let via_kernel = complete_network_run(&beliefs, &self_weights, 4);
        for (a, b) in via_matrix.iter().zip(&via_kernel) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn frozen_system_is_trivially_consistent() {
        // one averaging round with uniform weights sends everyone to the
        // mean; a threshold above every belief leaves all votes "below",
        // so the unchanged majority is consistent with the Grow default
        let pre = [1.0, 2.0, 3.0, 4.0, 10.0];
        let self_weights = [0.2; 5]; // equals the uniform matrix
        let post = complete_network_run(&pre, &self_weights, 1);
        assert!(post.iter().all(|&b| (b - 4.0).abs() < 1e-12));
        let outcome = classify_cell(
            &pre,
            &post,
            100.0,
            3.0,
            4.0,
            MatchPolicy::UnchangedMatchesGrow,
        );
        assert!(matches!(outcome, CellOutcome::Matched { unchanged: true }));
    }

    #[test]
    fn grid_points_cover_open_interval() {
        let g = grid_points(0.05).unwrap();
        assert_eq!(g.len(), 19);
        assert!((g[0] - 0.05).abs() < 1e-12);
        assert!((g[18] - 0.95).abs() < 1e-12);
        assert!(grid_points(0.0).is_err());
        assert!(grid_points(0.7).is_err());
    }

    #[test]
    fn lognormal_quantiles_and_mean_rank() {
        let d = BeliefDistribution::LogNormal;
        assert!((d.quantile(0.5) - 1.0).abs() < 1e-9);
        assert!((d.mean() - 0.5f64.exp()).abs() < 1e-12);
        assert!((d.mean_quantile_rank() - 0.6914624612740131).abs() < 1e-9);
        assert!(matches!(
            BeliefDistribution::parse("cauchy"),
            Err(Error::UnknownDistribution(_))
        ));
    }

    #[test]
    fn consistency_counts_are_exhaustive_and_deterministic() {
        let config = ConsistencyConfig {
            n: 40,
            rounds: 3,
            runs: 50,
            distribution: BeliefDistribution::Normal,
            grid_resolution: 0.1,
            policy: MatchPolicy::UnchangedMatchesGrow,
            seed: 99,
        };
        let a = short_term_consistency(&config).unwrap();
        let b = short_term_consistency(&config).unwrap();
        assert_eq!(a.len(), 9);
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.matched, rb.matched);
            assert_eq!(ra.unmatched, rb.unmatched);
            assert_eq!(ra.matched + ra.unmatched + ra.boundary, config.runs);
        }
    }
}
