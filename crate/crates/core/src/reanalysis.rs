//! Reanalysis pipeline for pre/post estimate trials.
//!
//! A trial is one group answering one question before and after social
//! influence. For every quantile rank `p` on a grid, the threshold is set
//! to `T = Q_pre(p)` and the realized change of the initial majority vote
//! is compared against the prediction made from the pre median and the
//! post mean. Records where `T` ties the median, the post mean, or the
//! truth are excluded from scoring, as are records whose pre votes split
//! exactly in half.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::degroot::{
    grid_points, majority_change, outcome_matches, predict_vote_change, run_to_consensus,
    BeliefDistribution, DecisionContext, DeGrootSystem, MajorityChange, MatchPolicy,
    VoteChangePrediction, WeightMatrix,
};
use crate::error::{Error, Result};
use crate::stats::{binary_accuracy, quantile_sorted, EstimateVector};

pub const TRIALS_HEADER: [&str; 7] = [
    "dataset",
    "trial_id",
    "subject_id",
    "question_id",
    "truth",
    "pre_estimate",
    "post_estimate",
];

/// Standard resolutions reported in the threshold-robustness table.
pub const TABLE_RESOLUTIONS: [f64; 3] = [0.01, 0.05, 0.10];

/// One group answering one question; pre and post estimates align by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub dataset_id: String,
    pub trial_id: String,
    pub question_id: String,
    pub truth: f64,
    pub pre: EstimateVector,
    pub post: EstimateVector,
}

impl Trial {
    pub fn new(
        dataset_id: String,
        trial_id: String,
        question_id: String,
        truth: f64,
        pre: EstimateVector,
        post: EstimateVector,
    ) -> Result<Self> {
        if pre.len() != post.len() || pre.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "trial ({dataset_id}, {trial_id}): pre/post lengths {}/{} (need equal, >= 2)",
                pre.len(),
                post.len()
            )));
        }
        if !truth.is_finite() {
            return Err(Error::NonFiniteValue { index: 0, value: truth });
        }
        Ok(Self {
            dataset_id,
            trial_id,
            question_id,
            truth,
            pre,
            post,
        })
    }

    pub fn len(&self) -> usize {
        self.pre.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Did the mean estimate move closer to the truth?
    pub fn mean_improved(&self) -> bool {
        (self.post.mean() - self.truth).abs() < (self.pre.mean() - self.truth).abs()
    }

    /// Subjects whose pre estimate lies strictly between the pre median and
    /// the post mean.
    pub fn between_count(&self) -> usize {
        let m = self.pre.median();
        let c = self.post.mean();
        let (lo, hi) = if m <= c { (m, c) } else { (c, m) };
        self.pre.iter().filter(|&&x| x > lo && x < hi).count()
    }
}

/// Parsed input plus non-fatal complaints (dropped subjects, skipped
/// trials).
#[derive(Debug)]
pub struct ParsedTrials {
    pub trials: Vec<Trial>,
    pub warnings: Vec<String>,
}

/// Reads the delimited trial format (one row per subject). Subjects with a
/// missing or non-numeric pre or post estimate are dropped from both
/// vectors so that the pre median and post mean describe the same people;
/// trials left with fewer than two subjects are skipped.
pub fn parse_trials<R: Read>(input: R) -> Result<ParsedTrials> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if header != TRIALS_HEADER {
        return Err(Error::BadHeader {
            expected: TRIALS_HEADER.join(","),
            found: header.join(","),
        });
    }

    struct Partial {
        question_id: String,
        truth: f64,
        pre: Vec<f64>,
        post: Vec<f64>,
    }
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Partial> = HashMap::new();
    let mut warnings = Vec::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let (dataset, trial_id, subject_id, question_id) =
            (field(0), field(1), field(2), field(3));
        let truth: f64 = field(4).parse().map_err(|_| Error::BadRow {
            row: line as usize,
            message: format!("non-numeric truth '{}'", field(4)),
        })?;
        if !truth.is_finite() {
            return Err(Error::BadRow {
                row: line as usize,
                message: format!("non-finite truth '{}'", field(4)),
            });
        }

        let key = (dataset.clone(), trial_id.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
            groups.insert(
                key.clone(),
                Partial {
                    question_id: question_id.clone(),
                    truth,
                    pre: Vec::new(),
                    post: Vec::new(),
                },
            );
        }
        let partial = groups.get_mut(&key).expect("inserted above");
        if partial.truth != truth {
            return Err(Error::BadRow {
                row: line as usize,
                message: format!(
                    "trial ({dataset}, {trial_id}) has conflicting truth values {} and {truth}",
                    partial.truth
                ),
            });
        }

        let estimate = |i: usize| -> Option<f64> {
            record
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        match (estimate(5), estimate(6)) {
            (Some(pre), Some(post)) => {
                partial.pre.push(pre);
                partial.post.push(post);
            }
            _ => warnings.push(format!(
                "line {line}: subject '{subject_id}' in trial ({dataset}, {trial_id}) \
                 has a missing or non-numeric estimate; subject dropped"
            )),
        }
    }

    let mut trials = Vec::new();
    for key in order {
        let partial = groups.remove(&key).expect("keyed by order");
        if partial.pre.len() < 2 {
            warnings.push(format!(
                "trial ({}, {}) has {} complete subject(s); trial skipped",
                key.0,
                key.1,
                partial.pre.len()
            ));
            continue;
        }
        trials.push(Trial::new(
            key.0,
            key.1,
            partial.question_id,
            partial.truth,
            EstimateVector::new(partial.pre)?,
            EstimateVector::new(partial.post)?,
        )?);
    }
    Ok(ParsedTrials { trials, warnings })
}

/// Writes trials back out in the canonical delimited format.
pub fn write_trials<W: Write>(mut out: W, trials: &[Trial]) -> Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(TRIALS_HEADER)?;
    for t in trials {
        for (i, (pre, post)) in t.pre.iter().zip(t.post.iter()).enumerate() {
            w.write_record([
                t.dataset_id.as_str(),
                t.trial_id.as_str(),
                &format!("s{i}"),
                t.question_id.as_str(),
                &t.truth.to_string(),
                &pre.to_string(),
                &post.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Why a grid record was left out of the fit denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    ThresholdAtMedian,
    ThresholdAtPostMean,
    TruthAtThreshold,
    NoInitialMajority,
}

/// Outcome of one trial/threshold pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RecordOutcome {
    Counted {
        pre_accuracy: f64,
        post_accuracy: f64,
        prediction: VoteChangePrediction,
        change: MajorityChange,
        matched_weak: bool,
        matched_strict: bool,
    },
    Excluded {
        reason: ExclusionReason,
    },
}

/// One grid point of a trial sweep: `threshold = Q_pre(p)` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub p: f64,
    pub threshold: f64,
    #[serde(flatten)]
    pub outcome: RecordOutcome,
}

/// Sweeps the quantile grid for one trial. Matched flags are computed under
/// both unchanged policies so summaries can report either.
pub fn sweep_trial(trial: &Trial, resolution: f64) -> Result<Vec<SweepRecord>> {
    let grid = grid_points(resolution)?;
    let sorted_pre = trial.pre.sorted();
    let pre_median = quantile_sorted(&sorted_pre, 0.5);
    let pre_mean = trial.pre.mean();
    let post_mean = trial.post.mean();
    let n = trial.len();

    let mut records = Vec::with_capacity(grid.len());
    for &p in &grid {
        let threshold = quantile_sorted(&sorted_pre, p);
        let outcome = if threshold == pre_median {
            RecordOutcome::Excluded {
                reason: ExclusionReason::ThresholdAtMedian,
            }
        } else if threshold == post_mean {
            RecordOutcome::Excluded {
                reason: ExclusionReason::ThresholdAtPostMean,
            }
        } else if threshold == trial.truth {
            RecordOutcome::Excluded {
                reason: ExclusionReason::TruthAtThreshold,
            }
        } else {
            let above_pre = trial.pre.iter().filter(|&&v| v > threshold).count();
            let above_post = trial.post.iter().filter(|&&v| v > threshold).count();
            match majority_change(above_pre, above_post, n) {
                None => RecordOutcome::Excluded {
                    reason: ExclusionReason::NoInitialMajority,
                },
                Some(change) => {
                    let prediction = predict_vote_change(&DecisionContext {
                        threshold,
                        truth: trial.truth,
                        pre_median,
                        pre_mean,
                        post_value: post_mean,
                    });
                    let matched = |policy| {
                        outcome_matches(prediction, change, policy)
                            .expect("threshold ties are excluded above")
                    };
                    RecordOutcome::Counted {
                        pre_accuracy: binary_accuracy(&trial.pre, threshold, trial.truth)?,
                        post_accuracy: binary_accuracy(&trial.post, threshold, trial.truth)?,
                        prediction,
                        change,
                        matched_weak: matched(MatchPolicy::UnchangedMatchesGrow),
                        matched_strict: matched(MatchPolicy::Strict),
                    }
                }
            }
        };
        records.push(SweepRecord {
            p,
            threshold,
            outcome,
        });
    }
    Ok(records)
}

/// Scored/matched tallies over one trial's sweep.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TrialFit {
    pub counted: usize,
    pub excluded: usize,
    pub matched_weak: usize,
    pub matched_strict: usize,
    pub unchanged: usize,
}

impl TrialFit {
    pub fn from_records(records: &[SweepRecord]) -> Self {
        let mut fit = Self::default();
        for r in records {
            match r.outcome {
                RecordOutcome::Counted {
                    matched_weak,
                    matched_strict,
                    change,
                    ..
                } => {
                    fit.counted += 1;
                    fit.matched_weak += matched_weak as usize;
                    fit.matched_strict += matched_strict as usize;
                    fit.unchanged += (change == MajorityChange::Unchanged) as usize;
                }
                RecordOutcome::Excluded { .. } => fit.excluded += 1,
            }
        }
        fit
    }

    pub fn fraction_weak(&self) -> Option<f64> {
        (self.counted > 0).then(|| self.matched_weak as f64 / self.counted as f64)
    }

    pub fn fraction_strict(&self) -> Option<f64> {
        (self.counted > 0).then(|| self.matched_strict as f64 / self.counted as f64)
    }
}

/// Per-trial diagnostics carried into reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialDiagnostic {
    pub dataset_id: String,
    pub trial_id: String,
    pub question_id: String,
    pub subjects: usize,
    pub fit: TrialFit,
    pub mean_improved: bool,
    pub between_count: usize,
}

/// Aggregate fit of one trial collection at one grid resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub resolution: f64,
    /// Trials contributing at least one scored record.
    pub trials: usize,
    /// Trials whose every record was excluded (e.g. all estimates equal).
    pub degenerate_trials: usize,
    pub mean_fit: f64,
    pub stderr_fit: f64,
    pub mean_fit_strict: f64,
    pub stderr_fit_strict: f64,
    /// Subjects between the pre median and post mean, pooled over subjects.
    pub between_fraction: f64,
    /// The same statistic averaged per trial instead of pooled.
    pub between_fraction_trial_mean: f64,
    /// Fraction of trials whose mean estimate moved closer to the truth.
    pub mean_improved_fraction: f64,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Sweeps every trial and aggregates fit fractions, the between-statistic,
/// and the mean-improvement fraction.
pub fn dataset_fit(label: &str, trials: &[Trial], resolution: f64) -> Result<DatasetSummary> {
    if trials.is_empty() {
        return Err(Error::NoTrials);
    }
    let mut weak = Vec::new();
    let mut strict = Vec::new();
    let mut degenerate = 0usize;
    let mut between_subjects = 0usize;
    let mut total_subjects = 0usize;
    let mut between_per_trial = Vec::new();
    let mut improved = 0usize;
    for trial in trials {
        let fit = TrialFit::from_records(&sweep_trial(trial, resolution)?);
        match (fit.fraction_weak(), fit.fraction_strict()) {
            (Some(w), Some(s)) => {
                weak.push(w);
                strict.push(s);
            }
            _ => degenerate += 1,
        }
        let between = trial.between_count();
        between_subjects += between;
        total_subjects += trial.len();
        between_per_trial.push(between as f64 / trial.len() as f64);
        improved += trial.mean_improved() as usize;
    }
    let (mean_fit, stderr_fit) = mean_and_stderr(&weak);
    let (mean_fit_strict, stderr_fit_strict) = mean_and_stderr(&strict);
    Ok(DatasetSummary {
        dataset_id: label.to_string(),
        resolution,
        trials: weak.len(),
        degenerate_trials: degenerate,
        mean_fit,
        stderr_fit,
        mean_fit_strict,
        stderr_fit_strict,
        between_fraction: between_subjects as f64 / total_subjects as f64,
        between_fraction_trial_mean: between_per_trial.iter().sum::<f64>()
            / between_per_trial.len() as f64,
        mean_improved_fraction: improved as f64 / trials.len() as f64,
    })
}

/// Fit at one resolution for the robustness table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResolutionFit {
    pub resolution: f64,
    pub mean_fit: f64,
    pub mean_fit_strict: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub dataset_id: String,
    pub fits: Vec<ResolutionFit>,
}

/// Mean fit per dataset at the standard grid resolutions.
pub fn resolution_table(groups: &[(String, Vec<Trial>)]) -> Result<Vec<ResolutionRow>> {
    groups
        .iter()
        .map(|(label, trials)| {
            let fits = TABLE_RESOLUTIONS
                .iter()
                .map(|&resolution| {
                    let summary = dataset_fit(label, trials, resolution)?;
                    Ok(ResolutionFit {
                        resolution,
                        mean_fit: summary.mean_fit,
                        mean_fit_strict: summary.mean_fit_strict,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ResolutionRow {
                dataset_id: label.clone(),
                fits,
            })
        })
        .collect()
}

/// One bin of the accuracy-change curves: records are grouped by their
/// initial accuracy rounded to the grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Fig3Bin {
    pub initial_accuracy: f64,
    pub mean_change: f64,
    pub records: usize,
}

/// Prediction fit per initial-accuracy bin, split by whether the trial's
/// mean estimate improved.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FigA4Bin {
    pub initial_accuracy: f64,
    pub improved_matched: usize,
    pub improved_counted: usize,
    pub not_improved_matched: usize,
    pub not_improved_counted: usize,
}

impl FigA4Bin {
    pub fn fit_improved(&self) -> Option<f64> {
        (self.improved_counted > 0)
            .then(|| self.improved_matched as f64 / self.improved_counted as f64)
    }

    pub fn fit_not_improved(&self) -> Option<f64> {
        (self.not_improved_counted > 0)
            .then(|| self.not_improved_matched as f64 / self.not_improved_counted as f64)
    }
}

/// Binned accuracy-change curves split by predicted direction, plus the
/// fit-by-initial-accuracy split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig3Output {
    pub grow: Vec<Fig3Bin>,
    pub shrink: Vec<Fig3Bin>,
    pub a4: Vec<FigA4Bin>,
}

/// Builds the binned curves: every counted record contributes once, keyed
/// by its initial accuracy rounded to the nearest grid point.
pub fn figure3_bins(trials: &[Trial], resolution: f64) -> Result<Fig3Output> {
    if trials.is_empty() {
        return Err(Error::NoTrials);
    }
    let steps = (1.0 / resolution).round() as usize;
    #[derive(Default, Clone, Copy)]
    struct Acc {
        sum: f64,
        count: usize,
    }
    let mut grow = vec![Acc::default(); steps + 1];
    let mut shrink = vec![Acc::default(); steps + 1];
    #[derive(Default, Clone, Copy)]
    struct FitAcc {
        matched: usize,
        counted: usize,
    }
    let mut a4 = vec![[FitAcc::default(); 2]; steps + 1];

    for trial in trials {
        let improved = trial.mean_improved();
        for record in sweep_trial(trial, resolution)? {
            let RecordOutcome::Counted {
                pre_accuracy,
                post_accuracy,
                prediction,
                matched_weak,
                ..
            } = record.outcome
            else {
                continue;
            };
            let bin = ((pre_accuracy / resolution).round() as usize).min(steps);
            let series = match prediction {
                VoteChangePrediction::Grow => &mut grow,
                VoteChangePrediction::Shrink => &mut shrink,
                VoteChangePrediction::Boundary => unreachable!("boundary records are excluded"),
            };
            series[bin].sum += post_accuracy - pre_accuracy;
            series[bin].count += 1;
            let cell = &mut a4[bin][improved as usize];
            cell.matched += matched_weak as usize;
            cell.counted += 1;
        }
    }

    let collect = |accs: &[Acc]| {
        accs.iter()
            .enumerate()
            .filter(|(_, a)| a.count > 0)
            .map(|(k, a)| Fig3Bin {
                initial_accuracy: k as f64 * resolution,
                mean_change: a.sum / a.count as f64,
                records: a.count,
            })
            .collect::<Vec<_>>()
    };
    let a4_bins = a4
        .iter()
        .enumerate()
        .filter(|(_, cells)| cells[0].counted + cells[1].counted > 0)
        .map(|(k, cells)| FigA4Bin {
            initial_accuracy: k as f64 * resolution,
            improved_matched: cells[1].matched,
            improved_counted: cells[1].counted,
            not_improved_matched: cells[0].matched,
            not_improved_counted: cells[0].counted,
        })
        .collect();
    Ok(Fig3Output {
        grow: collect(&grow),
        shrink: collect(&shrink),
        a4: a4_bins,
    })
}

/// Full reanalysis output: per-dataset and pooled summaries, the
/// resolution-robustness table, binned figure data, and per-trial
/// diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReanalysisReport {
    pub provenance: crate::report::Provenance,
    pub resolution: f64,
    pub datasets: Vec<DatasetSummary>,
    /// All trials of all datasets treated as one collection.
    pub pooled: DatasetSummary,
    pub resolution_table: Vec<ResolutionRow>,
    pub fig3: Fig3Output,
    pub trials: Vec<TrialDiagnostic>,
}

/// Groups trials by dataset (order of first appearance) and assembles the
/// whole report at the given grid resolution.
pub fn build_report(
    provenance: crate::report::Provenance,
    trials: &[Trial],
    resolution: f64,
) -> Result<ReanalysisReport> {
    if trials.is_empty() {
        return Err(Error::NoTrials);
    }
    let mut groups: Vec<(String, Vec<Trial>)> = Vec::new();
    for trial in trials {
        match groups.iter_mut().find(|(id, _)| *id == trial.dataset_id) {
            Some((_, list)) => list.push(trial.clone()),
            None => groups.push((trial.dataset_id.clone(), vec![trial.clone()])),
        }
    }
    let datasets = groups
        .iter()
        .map(|(id, list)| dataset_fit(id, list, resolution))
        .collect::<Result<Vec<_>>>()?;
    let pooled = dataset_fit("pooled", trials, resolution)?;
    let table = resolution_table(&groups)?;
    let fig3 = figure3_bins(trials, resolution)?;
    let diagnostics = trials
        .iter()
        .map(|t| {
            let fit = TrialFit::from_records(&sweep_trial(t, resolution)?);
            Ok(TrialDiagnostic {
                dataset_id: t.dataset_id.clone(),
                trial_id: t.trial_id.clone(),
                question_id: t.question_id.clone(),
                subjects: t.len(),
                fit,
                mean_improved: t.mean_improved(),
                between_count: t.between_count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReanalysisReport {
        provenance,
        resolution,
        datasets,
        pooled,
        resolution_table: table,
        fig3,
        trials: diagnostics,
    })
}

/// Builds one synthetic trial from a seeded numeric-exchange run over a
/// random strictly-positive weight matrix. `rounds: None` runs to
/// consensus (spread below 1e-12); the truth is an extra draw from the
/// same distribution.
pub fn synthetic_trial<R: Rng + ?Sized>(
    dataset_id: &str,
    trial_id: &str,
    n: usize,
    distribution: BeliefDistribution,
    rounds: Option<usize>,
    rng: &mut R,
) -> Result<Trial> {
    let pre = EstimateVector::new(distribution.sample(n, rng))?;
    let weights = WeightMatrix::random_positive(n, rng);
    let truth = distribution.sample(1, rng)[0];
    let sys = DeGrootSystem::new(pre.clone(), weights, rounds.unwrap_or(0))?;
    let post = match rounds {
        Some(_) => crate::degroot::degroot_run(&sys),
        None => run_to_consensus(&sys, 1e-12, 100_000)?.0,
    };
    Trial::new(
        dataset_id.to_string(),
        trial_id.to_string(),
        trial_id.to_string(),
        truth,
        pre,
        post,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::run_rng;

    const HEADER: &str = "dataset,trial_id,subject_id,question_id,truth,pre_estimate,post_estimate\n";

    fn ev(values: &[f64]) -> EstimateVector {
        EstimateVector::new(values.to_vec()).unwrap()
    }

    fn trial(pre: &[f64], post: &[f64], truth: f64) -> Trial {
        Trial::new(
            "d".into(),
            "t".into(),
            "q".into(),
            truth,
            ev(pre),
            ev(post),
        )
        .unwrap()
    }

    #[test]
    fn parses_one_complete_trial() {
        let input = format!(
            "{HEADER}d,t1,s1,q1,100,90,95\nd,t1,s2,q1,100,110,105\nd,t1,s3,q1,100,130,104\n"
        );
        let parsed = parse_trials(input.as_bytes()).unwrap();
        assert_eq!(parsed.trials.len(), 1);
        assert!(parsed.warnings.is_empty());
        let t = &parsed.trials[0];
        assert_eq!(t.len(), 3);
        assert_eq!(t.pre.as_slice(), &[90.0, 110.0, 130.0]);
        assert_eq!(t.post.as_slice(), &[95.0, 105.0, 104.0]);
    }

    #[test]
    fn drops_subject_with_blank_post_from_both_vectors() {
        let input = format!(
            "{HEADER}d,t1,s1,q1,100,90,95\nd,t1,s2,q1,100,110,\nd,t1,s3,q1,100,130,104\n"
        );
        let parsed = parse_trials(input.as_bytes()).unwrap();
        assert_eq!(parsed.trials[0].len(), 2);
        assert_eq!(parsed.trials[0].pre.as_slice(), &[90.0, 130.0]);
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].contains("s2"));
    }

    #[test]
    fn skips_trials_with_fewer_than_two_subjects() {
        let input = format!("{HEADER}d,t1,s1,q1,100,90,95\nd,t2,s1,q1,50,40,45\nd,t2,s2,q1,50,60,55\n");
        let parsed = parse_trials(input.as_bytes()).unwrap();
        assert_eq!(parsed.trials.len(), 1);
        assert_eq!(parsed.trials[0].trial_id, "t2");
        assert!(parsed.warnings.iter().any(|w| w.contains("t1")));
    }

    #[test]
    fn rejects_bad_header_and_bad_truth() {
        let bad_header = "dataset,trial,subject,question,truth,pre,post\nd,t,s,q,1,2,3\n";
        assert!(matches!(
            parse_trials(bad_header.as_bytes()),
            Err(Error::BadHeader { .. })
        ));
        let bad_truth = format!("{HEADER}d,t1,s1,q1,not-a-number,90,95\n");
        match parse_trials(bad_truth.as_bytes()) {
            Err(Error::BadRow { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected BadRow, got {other:?}"),
        }
        let conflicting = format!("{HEADER}d,t1,s1,q1,100,90,95\nd,t1,s2,q1,200,90,95\n");
        assert!(matches!(
            parse_trials(conflicting.as_bytes()),
            Err(Error::BadRow { .. })
        ));
    }

    #[test]
    fn round_trips_through_the_writer() {
        let mut rng = run_rng(2, 0);
        let t = synthetic_trial("d", "t1", 8, BeliefDistribution::Normal, Some(3), &mut rng)
            .unwrap();
        let mut buf = Vec::new();
        write_trials(&mut buf, std::slice::from_ref(&t)).unwrap();
        let parsed = parse_trials(buf.as_slice()).unwrap();
        assert_eq!(parsed.trials, vec![t]);
    }

    #[test]
    fn unchanged_everywhere_when_post_equals_pre() {
        let t = trial(&[1.0, 2.0, 6.0, 7.0, 9.0], &[1.0, 2.0, 6.0, 7.0, 9.0], 5.0);
        for record in sweep_trial(&t, 0.1).unwrap() {
            if let RecordOutcome::Counted { change, .. } = record.outcome {
                assert_eq!(change, MajorityChange::Unchanged);
            }
        }
    }

    #[test]
    fn degenerate_trial_yields_no_counted_records() {
        let t = trial(&[5.0, 5.0, 5.0], &[5.0, 5.0, 6.0], 4.0);
        let fit = TrialFit::from_records(&sweep_trial(&t, 0.1).unwrap());
        assert_eq!(fit.counted, 0);
        assert_eq!(fit.excluded, 9);
        assert!(fit.fraction_weak().is_none());
    }

    #[test]
    fn threshold_equals_quantile_exactly() {
        let t = trial(&[10.0, 20.0, 30.0, 40.0], &[15.0, 20.0, 30.0, 35.0], 33.0);
        for record in sweep_trial(&t, 0.25).unwrap() {
            let sorted = t.pre.sorted();
            assert_eq!(record.threshold, quantile_sorted(&sorted, record.p));
        }
    }

    #[test]
    fn converged_runs_match_predictions_perfectly() {
        let mut rng = run_rng(40, 0);
        let trials: Vec<Trial> = (0..20)
            .map(|i| {
                synthetic_trial(
                    "synthetic",
                    &format!("t{i}"),
                    11 + (i % 7),
                    BeliefDistribution::LogNormal,
                    None,
                    &mut rng,
                )
                .unwrap()
            })
            .collect();
        let summary = dataset_fit("synthetic", &trials, 0.05).unwrap();
        assert_eq!(summary.mean_fit, 1.0, "{summary:?}");
        assert_eq!(summary.degenerate_trials, 0);
    }

    #[test]
    fn between_and_improvement_statistics() {
        // pre median 7, post mean 3: only the pre estimate 5 lies strictly
        // between; the mean moves from 10.6 to 3, closer to the truth 4
        let t = trial(&[2.0, 5.0, 7.0, 9.0, 30.0], &[3.0, 3.0, 3.0, 3.0, 3.0], 4.0);
        assert_eq!(t.between_count(), 1);
        assert!(t.mean_improved());
        // mirrored post further from the truth
        let t = trial(&[2.0, 5.0, 7.0, 9.0, 30.0], &[20.0, 20.0, 20.0, 20.0, 20.0], 4.0);
        assert!(!t.mean_improved());
    }

    #[test]
    fn summary_counts_trials_and_fractions() {
        let t1 = trial(&[1.0, 2.0, 3.0], &[1.5, 2.0, 2.5], 2.6);
        let t2 = trial(&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0], 4.0); // degenerate
        let summary = dataset_fit("mix", &[t1, t2], 0.1).unwrap();
        assert_eq!(summary.trials, 1);
        assert_eq!(summary.degenerate_trials, 1);
        assert!(summary.mean_fit >= 0.0 && summary.mean_fit <= 1.0);
    }

    #[test]
    fn resolution_table_has_three_columns_per_dataset() {
        let mut rng = run_rng(8, 0);
        let trials: Vec<Trial> = (0..5)
            .map(|i| {
                synthetic_trial("d", &format!("t{i}"), 12, BeliefDistribution::Normal, None, &mut rng)
                    .unwrap()
            })
            .collect();
        let table = resolution_table(&[("d".to_string(), trials)]).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].fits.len(), 3);
        for fit in &table[0].fits {
            assert_eq!(fit.mean_fit, 1.0); // converged runs fit exactly
        }
    }

    #[test]
    fn figure3_partitions_by_prediction() {
        let mut rng = run_rng(21, 0);
        let trials: Vec<Trial> = (0..30)
            .map(|i| {
                synthetic_trial(
                    "d",
                    &format!("t{i}"),
                    15,
                    BeliefDistribution::LogNormal,
                    None,
                    &mut rng,
                )
                .unwrap()
            })
            .collect();
        let fig = figure3_bins(&trials, 0.05).unwrap();
        assert!(!fig.grow.is_empty());
        // skewed initial beliefs put the mean away from the median, so some
        // thresholds land between them and predict shrinkage
        assert!(!fig.shrink.is_empty());
        let total: usize = fig
            .grow
            .iter()
            .chain(&fig.shrink)
            .map(|b| b.records)
            .sum();
        let a4_total: usize = fig
            .a4
            .iter()
            .map(|b| b.improved_counted + b.not_improved_counted)
            .sum();
        assert_eq!(total, a4_total);
    }
}
