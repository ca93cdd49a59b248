//! Shared statistical primitives: quantiles, vote shares, binary-vote
//! accuracy, and the decomposition of group error into individual error
//! minus diversity.
//!
//! Votes are taken with a strict "above" rule throughout: an estimate equal
//! to the threshold counts as a vote for the "below" side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-empty vector of finite estimates. Subject order is preserved so
/// that pre- and post-influence vectors align by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EstimateVector(Vec<f64>);

impl EstimateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEstimateVector);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API completeness.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Median via the same interpolated quantile rule as [`quantile`].
    pub fn median(&self) -> f64 {
        quantile(self, 0.5).expect("0.5 is a valid quantile rank")
    }

    /// Values sorted ascending (input order untouched).
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite by construction"));
        v
    }
}

impl TryFrom<Vec<f64>> for EstimateVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<EstimateVector> for Vec<f64> {
    fn from(v: EstimateVector) -> Self {
        v.0
    }
}

/// Group squared error split into average individual error minus diversity.
/// The identity `group_error = avg_individual_error - diversity` holds
/// algebraically; all three terms are non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Squared error of the mean estimate.
    pub group_error: f64,
    /// Mean squared error of the individual estimates.
    pub avg_individual_error: f64,
    /// Population variance of the estimates.
    pub diversity: f64,
}

/// Interpolated order statistic at rank `h = (n - 1) * p` (the R-7 rule).
///
/// `quantile(v, 0)` is the minimum, `quantile(v, 1)` the maximum, and the
/// result is monotone non-decreasing in `p`.
pub fn quantile(values: &EstimateVector, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(quantile_sorted(&values.sorted(), p))
}

/// Same rule as [`quantile`] over an already-sorted non-empty slice.
/// Used by sweep code that takes many quantiles of one vector.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Fraction of estimates strictly greater than `threshold`. An estimate
/// equal to the threshold counts as "below".
pub fn vote_share_above(values: &EstimateVector, threshold: f64) -> f64 {
    let above = values.iter().filter(|&&v| v > threshold).count();
    above as f64 / values.len() as f64
}

/// Fraction of estimates voting on the same side of `threshold` as `truth`.
///
/// Errors when `truth == threshold`: neither side is correct.
pub fn binary_accuracy(values: &EstimateVector, threshold: f64, truth: f64) -> Result<f64> {
    if !truth.is_finite() {
        return Err(Error::NonFiniteValue { index: 0, value: truth });
    }
    if truth == threshold {
        return Err(Error::TruthOnThreshold { threshold });
    }
    let share_above = vote_share_above(values, threshold);
    Ok(if truth > threshold {
        share_above
    } else {
        1.0 - share_above
    })
}

/// Splits the squared error of the mean estimate into the mean individual
/// squared error minus the estimate variance.
pub fn diversity_decomposition(values: &EstimateVector, truth: f64) -> Result<Decomposition> {
    if !truth.is_finite() {
        return Err(Error::NonFiniteValue { index: 0, value: truth });
    }
    let mean = values.mean();
    let n = values.len() as f64;
    let group_error = (mean - truth) * (mean - truth);
    let avg_individual_error = values.iter().map(|x| (x - truth) * (x - truth)).sum::<f64>() / n;
    let diversity = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(Decomposition {
        group_error,
        avg_individual_error,
        diversity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(values: &[f64]) -> EstimateVector {
        EstimateVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(
            EstimateVector::new(vec![]),
            Err(Error::EmptyEstimateVector)
        ));
        assert!(matches!(
            EstimateVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteValue { index: 1, .. })
        ));
        assert!(matches!(
            EstimateVector::new(vec![f64::INFINITY]),
            Err(Error::NonFiniteValue { index: 0, .. })
        ));
    }

    #[test]
    fn quantile_median_and_extremes() {
        let v = ev(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(quantile(&v, 0.5).unwrap(), 3.0);
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 5.0);
    }

    #[test]
    fn quantile_interpolates_between_order_statistics() {
        let v = ev(&[10.0, 20.0]);
        assert_eq!(quantile(&v, 0.5).unwrap(), 15.0);
        assert_eq!(quantile(&v, 0.25).unwrap(), 12.5);
    }

    #[test]
    fn quantile_ignores_input_order() {
        let v = ev(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!(quantile(&v, 0.5).unwrap(), 3.0);
    }

    #[test]
    fn quantile_rank_out_of_range() {
        let v = ev(&[1.0]);
        assert!(matches!(
            quantile(&v, -0.1),
            Err(Error::ProbabilityOutOfRange { .. })
        ));
        assert!(matches!(
            quantile(&v, 1.1),
            Err(Error::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn vote_share_is_strictly_above() {
        let v = ev(&[1.0, 2.0, 3.0]);
        assert_eq!(vote_share_above(&v, 2.0), 1.0 / 3.0);
        let all = ev(&[5.0, 5.0, 5.0]);
        assert_eq!(vote_share_above(&all, 4.0), 1.0);
        assert_eq!(vote_share_above(&all, 5.0), 0.0);
    }

    #[test]
    fn accuracy_counts_the_truth_side() {
        let v = ev(&[1.0, 2.0, 3.0]);
        assert_eq!(binary_accuracy(&v, 2.5, 3.0).unwrap(), 1.0 / 3.0);
        assert_eq!(binary_accuracy(&v, 0.0, 5.0).unwrap(), 1.0);
        let meal = ev(&[700.0, 500.0, 800.0]);
        assert_eq!(binary_accuracy(&meal, 600.0, 729.0).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn accuracy_errors_when_truth_sits_on_threshold() {
        let v = ev(&[1.0, 2.0]);
        assert!(matches!(
            binary_accuracy(&v, 2.0, 2.0),
            Err(Error::TruthOnThreshold { .. })
        ));
    }

    #[test]
    fn decomposition_examples() {
        let d = diversity_decomposition(&ev(&[1.0, 3.0]), 2.0).unwrap();
        assert_eq!((d.group_error, d.avg_individual_error, d.diversity), (0.0, 1.0, 1.0));

        let d = diversity_decomposition(&ev(&[2.0, 2.0]), 2.0).unwrap();
        assert_eq!((d.group_error, d.avg_individual_error, d.diversity), (0.0, 0.0, 0.0));

        let d = diversity_decomposition(&ev(&[0.0, 0.0, 6.0]), 2.0).unwrap();
        assert_eq!((d.group_error, d.avg_individual_error, d.diversity), (0.0, 8.0, 8.0));
    }

    #[test]
    fn accuracy_complement_on_opposite_truth_sides() {
        let v = ev(&[1.0, 4.0, 2.0, 9.0, 3.5]);
        let t = 3.0;
        let above = binary_accuracy(&v, t, 7.0).unwrap();
        let below = binary_accuracy(&v, t, 1.5).unwrap();
        assert!((above + below - 1.0).abs() < 1e-12);
    }
}
