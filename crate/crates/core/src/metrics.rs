//! Confusion-matrix metrics, the precision-recall curve and threshold
//! calibration.

use alloc::vec::Vec;

use crate::error::PipelineError;

/// Number of evenly spaced thresholds on the PR curve, 0 and 1 included.
pub const PR_POINTS: usize = 100;

/// Threshold `i` of the PR grid.
pub fn grid_threshold(i: usize) -> f64 {
    i as f64 / (PR_POINTS - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub r#fn: usize,
}

impl Confusion {
    /// Positive prediction iff `p >= threshold`.
    pub fn at(probabilities: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for (&p, &y) in probabilities.iter().zip(labels) {
            match (p >= threshold, y == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.r#fn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.r#fn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total(), 0.0)
    }

    /// 1 when nothing is predicted positive (no false alarms were raised).
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp, 1.0)
    }

    /// 1 when there are no positives to find.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.r#fn, 1.0)
    }
}

fn ratio(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub threshold: f64,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub pr_curve: Vec<PrPoint>,
}

impl EvalReport {
    pub fn from_scores(probabilities: &[f64], labels: &[u8], threshold: f64) -> Self {
        assert_eq!(probabilities.len(), labels.len(), "one label per score");
        let confusion = Confusion::at(probabilities, labels, threshold);
        EvalReport {
            threshold,
            confusion,
            accuracy: confusion.accuracy(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            pr_curve: pr_curve(probabilities, labels),
        }
    }
}

/// Precision and recall at every grid threshold.
///
/// Sorts once and sweeps, so the cost is `O(n log n)` rather than one pass
/// per threshold; counts are integers, so the result equals a per-threshold
/// recount exactly.
pub fn pr_curve(probabilities: &[f64], labels: &[u8]) -> Vec<PrPoint> {
    let mut scored: Vec<(f64, bool)> = probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| (p, y == 1))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = scored.iter().filter(|s| s.1).count();

    let mut out = Vec::with_capacity(PR_POINTS);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut cursor = 0;
    // Walk thresholds from high to low, admitting scores as they clear.
    for i in (0..PR_POINTS).rev() {
        let t = grid_threshold(i);
        while cursor < scored.len() && scored[cursor].0 >= t {
            if scored[cursor].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            cursor += 1;
        }
        let c = Confusion {
            tp,
            fp,
            tn: scored.len() - positives - fp,
            r#fn: positives - tp,
        };
        out.push(PrPoint {
            threshold: t,
            precision: c.precision(),
            recall: c.recall(),
        });
    }
    out.reverse();
    out
}

/// Largest grid threshold whose recall reaches `min_recall`.
pub fn choose_threshold(report: &EvalReport, min_recall: f64) -> Result<f64, PipelineError> {
    if !(min_recall > 0.0 && min_recall <= 1.0) {
        return Err(PipelineError::BadRecallTarget(min_recall));
    }
    report
        .pr_curve
        .iter()
        .rev()
        .find(|p| p.recall >= min_recall)
        .map(|p| p.threshold)
        .ok_or(PipelineError::RecallUnattainable(min_recall))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComputeSavings {
    pub days_unfiltered: f64,
    pub days_filtered: f64,
}

/// Simulator time for evaluating every proposal versus only the kept ones,
/// rounded to 0.1 day.
pub fn estimate_compute_savings(n_proposed: usize, n_kept: usize, minutes_per_eval: f64) -> Result<ComputeSavings, PipelineError> {
    if !(minutes_per_eval > 0.0 && minutes_per_eval.is_finite()) {
        return Err(PipelineError::BadMinutes(minutes_per_eval));
    }
    let days = |n: usize| libm::round(n as f64 * minutes_per_eval / (60.0 * 24.0) * 10.0) / 10.0;
    Ok(ComputeSavings {
        days_unfiltered: days(n_proposed),
        days_filtered: days(n_kept),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid_threshold(0), 0.0);
        assert_eq!(grid_threshold(PR_POINTS - 1), 1.0);
    }

    #[test]
    fn perfect_classifier() {
        let p = [0.9, 0.8, 0.1, 0.2];
        let y = [1, 1, 0, 0];
        let r = EvalReport::from_scores(&p, &y, 0.5);
        assert_eq!((r.accuracy, r.precision, r.recall), (1.0, 1.0, 1.0));
        assert_eq!(r.confusion.total(), 4);
    }

    #[test]
    fn constant_one_classifier() {
        let p = [1.0; 10];
        let y = [1, 0, 0, 0, 1, 0, 0, 0, 0, 0];
        let r = EvalReport::from_scores(&p, &y, 0.5);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 0.2);
        // at threshold 1.0 still everything positive
        assert_eq!(r.pr_curve[PR_POINTS - 1].recall, 1.0);
    }

    #[test]
    fn curve_matches_recount_and_recall_monotone() {
        let p: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
        let y: Vec<u8> = (0..200).map(|i| ((i * 13) % 7 < 3) as u8).collect();
        let curve = pr_curve(&p, &y);
        assert_eq!(curve.len(), PR_POINTS);
        for (i, pt) in curve.iter().enumerate() {
            let c = Confusion::at(&p, &y, grid_threshold(i));
            assert_eq!(pt.precision, c.precision());
            assert_eq!(pt.recall, c.recall());
        }
        assert!(curve.windows(2).all(|w| w[1].recall <= w[0].recall));
    }

    #[test]
    fn threshold_choice() {
        let p = [0.95, 0.6, 0.3, 0.12, 0.05];
        let y = [1, 1, 1, 0, 0];
        let r = EvalReport::from_scores(&p, &y, 0.5);
        // recall 1 needs every positive, lowest is 0.3 -> largest grid t <= 0.3
        let t = choose_threshold(&r, 1.0).unwrap();
        assert_eq!(t, grid_threshold(29));
        assert!(choose_threshold(&r, 1e-9).unwrap() >= 0.95 - 0.01);
        assert!(matches!(choose_threshold(&r, 0.0), Err(PipelineError::BadRecallTarget(_))));
    }

    #[test]
    fn unattainable_recall() {
        let r = EvalReport {
            threshold: 0.5,
            confusion: Confusion::default(),
            accuracy: 0.0,
            precision: 0.0,
            recall: 0.0,
            pr_curve: vec![PrPoint { threshold: 0.0, precision: 0.5, recall: 0.9 }],
        };
        assert!(matches!(choose_threshold(&r, 0.95), Err(PipelineError::RecallUnattainable(_))));
    }

    #[test]
    fn savings() {
        let s = estimate_compute_savings(100_000, 21_800, 4.0).unwrap();
        assert_eq!((s.days_unfiltered, s.days_filtered), (277.8, 60.6));
        let s = estimate_compute_savings(0, 0, 4.0).unwrap();
        assert_eq!((s.days_unfiltered, s.days_filtered), (0.0, 0.0));
        let s = estimate_compute_savings(6_352, 6_352, 4.0).unwrap();
        assert_eq!(s.days_unfiltered, 17.6);
        assert!(estimate_compute_savings(1, 1, 0.0).is_err());
    }
}
