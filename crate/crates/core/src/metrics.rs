//! Ranking metrics: average precision, precision-recall curves,
//! recall-targeted threshold selection, and coverage-to-SLoF binning.
//!
//! A score counts as a positive prediction when `score >= threshold`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no positive labels")]
    NoPositives,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("no items predicted positive at this threshold")]
    NoPredictedPositives,
    #[error("target recall {0} is not reachable (must be in (0, 1])")]
    UnreachableRecall(f64),
    #[error("coverage {0} outside [0, 1]")]
    OutOfRange(f64),
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<usize, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(MetricsError::NoPositives);
    }
    Ok(positives)
}

/// Indices sorted by descending score; equal scores keep input order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Non-interpolated average precision: the mean, over positives, of the
/// precision at each positive's rank.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    let positives = check_inputs(scores, labels)?;
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in ranking(scores).iter().enumerate() {
        if labels[i] {
            tp += 1;
            sum += tp as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Threshold-indexed precision and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    /// Distinct score values, descending.
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub positives: usize,
    pub negatives: usize,
}

impl PRCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

/// One curve point per distinct score.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<PRCurve, MetricsError> {
    let positives = check_inputs(scores, labels)?;
    let order = ranking(scores);
    let mut curve = PRCurve {
        thresholds: Vec::new(),
        precision: Vec::new(),
        recall: Vec::new(),
        positives,
        negatives: scores.len() - positives,
    };
    let (mut tp, mut fp) = (0usize, 0usize);
    for (pos, &i) in order.iter().enumerate() {
        if labels[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_value = order.get(pos + 1).is_none_or(|&j| scores[j] != scores[i]);
        if last_of_value {
            curve.thresholds.push(scores[i]);
            curve.precision.push(tp as f64 / (tp + fp) as f64);
            curve.recall.push(tp as f64 / positives as f64);
        }
    }
    Ok(curve)
}

/// A chosen operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// The largest threshold whose recall reaches `target_recall`.
pub fn select_threshold(curve: &PRCurve, target_recall: f64) -> Result<OperatingPoint, MetricsError> {
    if !(target_recall > 0.0 && target_recall <= 1.0) {
        return Err(MetricsError::UnreachableRecall(target_recall));
    }
    let i = curve
        .recall
        .iter()
        .position(|&r| r >= target_recall)
        .ok_or(MetricsError::UnreachableRecall(target_recall))?;
    Ok(OperatingPoint {
        threshold: curve.thresholds[i],
        precision: curve.precision[i],
        recall: curve.recall[i],
    })
}

/// Simplified Level of Fouling rank for a coverage fraction.
///
/// Bins: `[0, 0.01) -> 0`, `[0.01, 0.16) -> 1`, `[0.16, 1] -> 2`.
pub fn slof_from_coverage(coverage: f64) -> Result<u8, MetricsError> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(MetricsError::OutOfRange(coverage));
    }
    Ok(if coverage < 0.01 {
        0
    } else if coverage < 0.16 {
        1
    } else {
        2
    })
}

/// Confusion counts at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn precision(&self) -> Result<f64, MetricsError> {
        match self.tp + self.fp {
            0 => Err(MetricsError::NoPredictedPositives),
            d => Ok(self.tp as f64 / d as f64),
        }
    }

    pub fn recall(&self) -> Result<f64, MetricsError> {
        match self.tp + self.fn_ {
            0 => Err(MetricsError::NoPositives),
            d => Ok(self.tp as f64 / d as f64),
        }
    }
}

pub fn confusion_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Confusion, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// AP plus the recall-targeted operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub average_precision: f64,
    pub target_recall: f64,
    pub selected_threshold: f64,
    pub precision_at: f64,
    pub recall_at: f64,
    pub positives: usize,
    pub negatives: usize,
}

pub fn evaluate(scores: &[f64], labels: &[bool], target_recall: f64) -> Result<(EvalReport, PRCurve), MetricsError> {
    let ap = average_precision(scores, labels)?;
    let curve = pr_curve(scores, labels)?;
    let op = select_threshold(&curve, target_recall)?;
    let report = EvalReport {
        average_precision: ap,
        target_recall,
        selected_threshold: op.threshold,
        precision_at: op.precision,
        recall_at: op.recall,
        positives: curve.positives,
        negatives: curve.negatives,
    };
    Ok((report, curve))
}
