//! Empirically calibrated binary revision model.
//!
//! Agents hold a correct or incorrect vote. Each round, every agent
//! observes the fraction of the *other* agents disagreeing with it and
//! flips with a probability read off a revision curve; flips are
//! synchronous. An optional accuracy adjustment multiplies the flip
//! probability depending on whether the agent currently holds the correct
//! vote, reproducing the observed revision/accuracy correlation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::run_rng;

/// Multipliers applied to the base flip probability when the accuracy
/// adjustment is enabled. Results are clamped back into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyModifier {
    pub if_accurate: f64,
    pub if_inaccurate: f64,
}

/// Piecewise-linear flip probability as a function of disagreement, with
/// constant extrapolation beyond the outermost knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionCurve {
    knots: Vec<(f64, f64)>,
    accuracy_modifier: Option<AccuracyModifier>,
}

impl RevisionCurve {
    pub fn new(knots: Vec<(f64, f64)>, accuracy_modifier: Option<AccuracyModifier>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::BadCurve("no knots".into()));
        }
        for &(x, p) in &knots {
            if !(0.0..=1.0).contains(&x) || !x.is_finite() {
                return Err(Error::BadCurve(format!("knot disagreement {x} outside [0, 1]")));
            }
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::BadCurve(format!("knot probability {p} outside [0, 1]")));
            }
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::BadCurve(
                "knots must be strictly increasing in disagreement".into(),
            ));
        }
        if let Some(m) = accuracy_modifier {
            for v in [m.if_accurate, m.if_inaccurate] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::BadCurve(format!("bad accuracy multiplier {v}")));
                }
            }
        }
        Ok(Self {
            knots,
            accuracy_modifier,
        })
    }

    /// The curve shipped with the crate (see `data/revision_curve.csv`).
    pub fn default_curve() -> Self {
        Self::from_delimited(include_str!("../data/revision_curve.csv"))
            .expect("bundled curve file is valid")
    }

    /// Parses a plain delimited table. Unflagged `disagreement,probability`
    /// rows are knots; rows with a third field `accurate` or `inaccurate`
    /// set the class multiplier (their first field is ignored). Lines that
    /// are blank or start with `#` are skipped.
    pub fn from_delimited(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        let mut if_accurate = None;
        let mut if_inaccurate = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = idx + 1;
            let fields: Vec<&str> = line
                .split([',', '\t', ' '])
                .filter(|f| !f.is_empty())
                .collect();
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::BadRow {
                    row,
                    message: format!("not a number: '{s}'"),
                })
            };
            match fields.as_slice() {
                [x, p] => knots.push((parse(x)?, parse(p)?)),
                [_, m, flag] => {
                    let slot = match flag.to_ascii_lowercase().as_str() {
                        "accurate" => &mut if_accurate,
                        "inaccurate" => &mut if_inaccurate,
                        other => {
                            return Err(Error::BadRow {
                                row,
                                message: format!("unknown accuracy flag '{other}'"),
                            })
                        }
                    };
                    if slot.replace(parse(m)?).is_some() {
                        return Err(Error::BadRow {
                            row,
                            message: format!("duplicate '{flag}' multiplier"),
                        });
                    }
                }
                _ => {
                    return Err(Error::BadRow {
                        row,
                        message: "expected 2 or 3 fields".into(),
                    })
                }
            }
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        let accuracy_modifier = match (if_accurate, if_inaccurate) {
            (None, None) => None,
            (Some(a), Some(i)) => Some(AccuracyModifier {
                if_accurate: a,
                if_inaccurate: i,
            }),
            _ => {
                return Err(Error::BadCurve(
                    "need both 'accurate' and 'inaccurate' multipliers or neither".into(),
                ))
            }
        };
        Self::new(knots, accuracy_modifier)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn accuracy_modifier(&self) -> Option<AccuracyModifier> {
        self.accuracy_modifier
    }
}

/// Flip probability at the given disagreement fraction. When `is_accurate`
/// is provided and the curve carries a modifier, the class multiplier is
/// applied and the result clamped to [0, 1].
pub fn revision_prob(
    curve: &RevisionCurve,
    disagreement: f64,
    is_accurate: Option<bool>,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&disagreement) {
        return Err(Error::ProbabilityOutOfRange { value: disagreement });
    }
    let knots = &curve.knots;
    let base = if disagreement <= knots[0].0 {
        knots[0].1
    } else if disagreement >= knots[knots.len() - 1].0 {
        knots[knots.len() - 1].1
    } else {
        let hi = knots.partition_point(|&(x, _)| x < disagreement);
        let (x0, p0) = knots[hi - 1];
        let (x1, p1) = knots[hi];
        p0 + (disagreement - x0) / (x1 - x0) * (p1 - p0)
    };
    let prob = match (is_accurate, curve.accuracy_modifier) {
        (Some(acc), Some(m)) => {
            base * if acc { m.if_accurate } else { m.if_inaccurate }
        }
        _ => base,
    };
    Ok(prob.clamp(0.0, 1.0))
}

/// One group simulation: size, rounds of revision, starting accuracy, and
/// whether the accuracy adjustment is active.
#[derive(Debug, Clone)]
pub struct CalibratedGroupConfig {
    pub n: usize,
    pub rounds: usize,
    pub initial_accurate_share: f64,
    pub curve: RevisionCurve,
    pub use_accuracy_modifier: bool,
}

impl CalibratedGroupConfig {
    /// Experimental defaults: 20 agents, 2 rounds of revision.
    pub fn new(initial_accurate_share: f64, curve: RevisionCurve) -> Result<Self> {
        Self::with_size(20, 2, initial_accurate_share, curve)
    }

    pub fn with_size(
        n: usize,
        rounds: usize,
        initial_accurate_share: f64,
        curve: RevisionCurve,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("group size {n} < 2")));
        }
        if rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&initial_accurate_share) {
            return Err(Error::ProbabilityOutOfRange {
                value: initial_accurate_share,
            });
        }
        Ok(Self {
            n,
            rounds,
            initial_accurate_share,
            curve,
            use_accuracy_modifier: false,
        })
    }

    pub fn with_accuracy_modifier(mut self, on: bool) -> Self {
        self.use_accuracy_modifier = on;
        self
    }
}

/// Group accuracy before and after the configured rounds of revision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupOutcome {
    pub initial_accuracy: f64,
    pub final_accuracy: f64,
}

impl GroupOutcome {
    pub fn change(&self) -> f64 {
        self.final_accuracy - self.initial_accuracy
    }
}

/// Simulates one group. The starting state has `round(n * share)` accurate
/// agents; each round every agent sees the disagreement among the other
/// `n - 1` agents and flips with the curve probability, synchronously.
pub fn simulate_group<R: Rng + ?Sized>(
    config: &CalibratedGroupConfig,
    rng: &mut R,
) -> Result<GroupOutcome> {
    let n = config.n;
    let accurate_count = (n as f64 * config.initial_accurate_share).round() as usize;
    let mut accurate: Vec<bool> = (0..n).map(|i| i < accurate_count).collect();
    let initial_accuracy = accurate_count as f64 / n as f64;

    let mut flips = vec![false; n];
    for _ in 0..config.rounds {
        let total_accurate = accurate.iter().filter(|&&a| a).count();
        for (i, &acc) in accurate.iter().enumerate() {
            // disagreement among the other n - 1 agents
            let others_disagreeing = if acc {
                n - total_accurate
            } else {
                total_accurate
            };
            let disagreement = others_disagreeing as f64 / (n - 1) as f64;
            let class = config.use_accuracy_modifier.then_some(acc);
            let p = revision_prob(&config.curve, disagreement, class)?;
            flips[i] = rng.random_bool(p);
        }
        for (a, &f) in accurate.iter_mut().zip(&flips) {
            if f {
                *a = !*a;
            }
        }
    }
    let final_accuracy = accurate.iter().filter(|&&a| a).count() as f64 / n as f64;
    Ok(GroupOutcome {
        initial_accuracy,
        final_accuracy,
    })
}

/// Which flavour of the model produced a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveVariant {
    Plain,
    AccuracyModified,
}

impl CurveVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::AccuracyModified => "accuracy_modified",
        }
    }
}

/// Monte Carlo mean change in accuracy for one starting accuracy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepPoint {
    pub initial_accuracy: f64,
    pub mean_change: f64,
    pub stderr: f64,
    pub runs: usize,
    pub variant: CurveVariant,
}

/// Sweeps starting accuracies over `grid`, running `runs` seeded groups per
/// point and variant. Mirrored grid points share per-run seed streams, so
/// the symmetry of the unmodified model shows through with little noise.
pub fn accuracy_response_curve(
    n: usize,
    rounds: usize,
    curve: &RevisionCurve,
    grid: &[f64],
    runs: usize,
    seed: u64,
    variants: &[CurveVariant],
) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::with_capacity(grid.len() * variants.len());
    for &variant in variants {
        for &share in grid {
            let config = CalibratedGroupConfig::with_size(n, rounds, share, curve.clone())?
                .with_accuracy_modifier(variant == CurveVariant::AccuracyModified);
            let mut changes = Vec::with_capacity(runs);
            for run in 0..runs {
                let mut rng = run_rng(seed, run as u64);
                changes.push(simulate_group(&config, &mut rng)?.change());
            }
            let mean = changes.iter().sum::<f64>() / runs as f64;
            let var = changes.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>()
                / (runs.max(2) - 1) as f64;
            points.push(SweepPoint {
                initial_accuracy: config.initial_accurate_share,
                mean_change: mean,
                stderr: (var / runs as f64).sqrt(),
                runs,
                variant,
            });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_curve_matches_reported_revision_rates() {
        let curve = RevisionCurve::default_curve();
        // pooled over the majority-agrees conditions (disagreement 0.1-0.4)
        let agree_pool: f64 = [0.1, 0.2, 0.3, 0.4]
            .iter()
            .map(|&x| revision_prob(&curve, x, None).unwrap())
            .sum::<f64>()
            / 4.0;
        assert!((agree_pool - 0.04).abs() < 1e-9, "agree pool {agree_pool}");
        // pooled over the majority-disagrees conditions (0.6-0.9)
        let disagree_pool: f64 = [0.6, 0.7, 0.8, 0.9]
            .iter()
            .map(|&x| revision_prob(&curve, x, None).unwrap())
            .sum::<f64>()
            / 4.0;
        assert!((disagree_pool - 0.30).abs() < 1e-9, "disagree pool {disagree_pool}");
        // even split
        assert!((revision_prob(&curve, 0.5, None).unwrap() - 0.07).abs() < 1e-9);
        // strong opposition
        assert!(revision_prob(&curve, 0.9, None).unwrap() >= 0.5);
        for x in [0.6, 0.7, 0.8] {
            assert!(revision_prob(&curve, x, None).unwrap() < 0.25);
        }
        // near-unanimous agreement barely moves anyone
        assert!(revision_prob(&curve, 0.0, None).unwrap() <= 0.04);
    }

    #[test]
    fn interpolation_and_extrapolation() {
        let curve = RevisionCurve::new(vec![(0.2, 0.1), (0.6, 0.5)], None).unwrap();
        assert!((revision_prob(&curve, 0.4, None).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(revision_prob(&curve, 0.0, None).unwrap(), 0.1);
        assert_eq!(revision_prob(&curve, 1.0, None).unwrap(), 0.5);
        assert!(revision_prob(&curve, 1.5, None).is_err());
    }

    #[test]
    fn modifier_scales_and_clamps() {
        let curve = RevisionCurve::new(
            vec![(0.0, 0.4), (1.0, 0.9)],
            Some(AccuracyModifier {
                if_accurate: 0.5,
                if_inaccurate: 2.0,
            }),
        )
        .unwrap();
        assert_eq!(revision_prob(&curve, 0.0, Some(true)).unwrap(), 0.2);
        assert_eq!(revision_prob(&curve, 0.0, Some(false)).unwrap(), 0.8);
        // 0.9 * 2.0 clamps to 1
        assert_eq!(revision_prob(&curve, 1.0, Some(false)).unwrap(), 1.0);
        // no class given: base curve
        assert_eq!(revision_prob(&curve, 0.0, None).unwrap(), 0.4);
    }

    #[test]
    fn default_modifier_reproduces_aggregate_rates() {
        let curve = RevisionCurve::default_curve();
        let m = curve.accuracy_modifier().expect("bundled curve has multipliers");
        let conditions: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let mean_rate = |class: Option<bool>| {
            conditions
                .iter()
                .map(|&x| revision_prob(&curve, x, class).unwrap())
                .sum::<f64>()
                / 9.0
        };
        assert!((mean_rate(Some(false)) - 0.21).abs() < 0.005);
        assert!((mean_rate(Some(true)) - 0.13).abs() < 0.005);
        assert!(m.if_inaccurate > 1.0 && m.if_accurate < 1.0);
    }

    #[test]
    fn curve_parsing_rejects_malformed_tables() {
        assert!(RevisionCurve::from_delimited("0.5,0.1\n0.5,0.2").is_err()); // duplicate x
        assert!(RevisionCurve::from_delimited("0.5,1.5").is_err()); // p out of range
        assert!(RevisionCurve::from_delimited("a,b").is_err());
        assert!(RevisionCurve::from_delimited("0,2.0,inaccurate\n0.5,0.1").is_err()); // missing accurate
        assert!(RevisionCurve::from_delimited("").is_err());
        assert!(RevisionCurve::from_delimited("0.1,0.05,maybe").is_err());
    }

    #[test]
    fn curve_parsing_accepts_flags_and_comments() {
        let text = "# comment\n0.1,0.02\n0.9,0.6\n0,1.5,inaccurate\n0,0.7,accurate\n";
        let curve = RevisionCurve::from_delimited(text).unwrap();
        assert_eq!(curve.knots().len(), 2);
        let m = curve.accuracy_modifier().unwrap();
        assert_eq!((m.if_accurate, m.if_inaccurate), (0.7, 1.5));
    }

    #[test]
    fn unanimous_group_with_zero_flip_rate_stays_put() {
        let curve = RevisionCurve::new(vec![(0.0, 0.0), (1.0, 0.9)], None).unwrap();
        let config = CalibratedGroupConfig::new(1.0, curve).unwrap();
        let mut rng = run_rng(5, 0);
        let out = simulate_group(&config, &mut rng).unwrap();
        assert_eq!(out.initial_accuracy, 1.0);
        assert_eq!(out.final_accuracy, 1.0);
    }

    #[test]
    fn slight_inaccurate_majority_gets_amplified() {
        // 45% accurate start (the inaccurate side holds 55%): the majority
        // should gain ground on average, dragging accuracy down
        let curve = RevisionCurve::default_curve();
        let config = CalibratedGroupConfig::new(0.45, curve).unwrap();
        let mut sum = 0.0;
        let runs = 800;
        for run in 0..runs {
            let mut rng = run_rng(12, run);
            sum += simulate_group(&config, &mut rng).unwrap().change();
        }
        let mean = sum / runs as f64;
        assert!(mean < 0.0, "inaccurate majority should grow, mean change {mean}");
    }

    #[test]
    fn sweep_is_deterministic_and_labelled() {
        let curve = RevisionCurve::default_curve();
        let grid = [0.25, 0.75];
        let a = accuracy_response_curve(
            20,
            2,
            &curve,
            &grid,
            50,
            7,
            &[CurveVariant::Plain, CurveVariant::AccuracyModified],
        )
        .unwrap();
        let b = accuracy_response_curve(
            20,
            2,
            &curve,
            &grid,
            50,
            7,
            &[CurveVariant::Plain, CurveVariant::AccuracyModified],
        )
        .unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_change, y.mean_change);
            assert_eq!(x.variant, y.variant);
        }
    }
}
