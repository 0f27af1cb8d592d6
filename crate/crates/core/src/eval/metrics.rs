//! Grounding and QA metrics.

use serde::{Deserialize, Serialize};

use crate::backend::extract_option_label;
use crate::error::{Error, Result};
use crate::temporal::{iou, merge, TemporalWindow, WindowSet};

pub const RECALL_THRESHOLDS: [f64; 3] = [0.3, 0.5, 0.7];

/// How a single window is picked from a multi-window prediction for R@1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopOneRule {
    /// Longest window of the normalized set; earliest wins ties.
    #[default]
    Longest,
    /// First window of the normalized set.
    First,
}

impl std::str::FromStr for TopOneRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "longest" => Ok(TopOneRule::Longest),
            "first" => Ok(TopOneRule::First),
            _ => Err(Error::invalid(format!(
                "unknown top-1 rule {s:?} (longest|first)"
            ))),
        }
    }
}

pub fn top_one(prediction: &WindowSet, rule: TopOneRule) -> Option<TemporalWindow> {
    let norm = merge(prediction);
    match rule {
        TopOneRule::First => norm.windows().first().copied(),
        TopOneRule::Longest => {
            norm.iter()
                .copied()
                .reduce(|best, w| if w.len() > best.len() { w } else { best })
        }
    }
}

/// IoU of the top-1 window against the best-matching ground-truth window.
/// An empty prediction scores 0.
pub fn top_one_iou(prediction: &WindowSet, ground_truth: &WindowSet, rule: TopOneRule) -> f64 {
    match top_one(prediction, rule) {
        Some(w) => ground_truth.iter().map(|g| iou(&w, g)).fold(0.0, f64::max),
        None => 0.0,
    }
}

fn sample_ious(predictions: &[(WindowSet, WindowSet)], rule: TopOneRule) -> Result<Vec<f64>> {
    if predictions.is_empty() {
        return Err(Error::invalid("no samples to score"));
    }
    Ok(predictions
        .iter()
        .map(|(p, g)| top_one_iou(p, g, rule))
        .collect())
}

/// Fraction of per-sample IoUs reaching each threshold.
pub fn recall_from_ious(ious: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if ious.is_empty() {
        return Err(Error::invalid("no samples to score"));
    }
    Ok(thresholds
        .iter()
        .map(|&t| ious.iter().filter(|&&x| x >= t).count() as f64 / ious.len() as f64)
        .collect())
}

pub fn mean_of(ious: &[f64]) -> Result<f64> {
    if ious.is_empty() {
        return Err(Error::invalid("mean of zero samples"));
    }
    Ok(ious.iter().sum::<f64>() / ious.len() as f64)
}

/// R@1 at each IoU threshold over `(prediction, ground truth)` pairs.
pub fn recall_at(
    predictions: &[(WindowSet, WindowSet)],
    thresholds: &[f64],
    rule: TopOneRule,
) -> Result<Vec<f64>> {
    recall_from_ious(&sample_ious(predictions, rule)?, thresholds)
}

pub fn mean_iou(predictions: &[(WindowSet, WindowSet)], rule: TopOneRule) -> Result<f64> {
    mean_of(&sample_ious(predictions, rule)?)
}

/// Label picked by an answer text: its first standalone token equal to an
/// option label.
pub fn answer_label(text: &str, labels: &[&str]) -> Option<String> {
    extract_option_label(text, labels)
}

/// Exact-match rate. A missing prediction counts as wrong.
pub fn vqa_accuracy(predicted: &[Option<String>], answers: &[String]) -> Result<f64> {
    if predicted.len() != answers.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} answers",
            predicted.len(),
            answers.len()
        )));
    }
    if answers.is_empty() {
        return Err(Error::invalid("no samples to score"));
    }
    let hits = predicted
        .iter()
        .zip(answers)
        .filter(|(p, a)| p.as_deref() == Some(a.as_str()))
        .count();
    Ok(hits as f64 / answers.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ws(pairs: &[(f64, f64)]) -> WindowSet {
        WindowSet::from_pairs(pairs).unwrap()
    }

    /// Prediction [0, 100 x] against GT [0, 100]: IoU is exactly x.
    fn with_iou(x: f64) -> (WindowSet, WindowSet) {
        (ws(&[(0.0, 100.0 * x)]), ws(&[(0.0, 100.0)]))
    }

    #[test]
    fn recall_hand_counts() {
        let preds: Vec<_> = [0.8, 0.6, 0.4, 0.2].iter().map(|&x| with_iou(x)).collect();
        let r = recall_at(&preds, &RECALL_THRESHOLDS, TopOneRule::Longest).unwrap();
        assert_eq!(r, vec![0.75, 0.5, 0.25]);
    }

    #[test]
    fn identity_and_empty_predictions() {
        let gt = ws(&[(10.0, 20.0)]);
        let r = recall_at(
            &[(gt.clone(), gt.clone())],
            &RECALL_THRESHOLDS,
            TopOneRule::First,
        )
        .unwrap();
        assert_eq!(r, vec![1.0; 3]);
        let preds = vec![(WindowSet::empty(), gt.clone()), (gt.clone(), gt.clone())];
        assert_eq!(
            recall_at(&preds, &[0.3], TopOneRule::Longest).unwrap(),
            vec![0.5]
        );
        assert_eq!(mean_iou(&preds, TopOneRule::Longest).unwrap(), 0.5);
    }

    #[test]
    fn mean_iou_examples() {
        let preds: Vec<_> = [0.8, 0.6, 0.4].iter().map(|&x| with_iou(x)).collect();
        assert!((mean_iou(&preds, TopOneRule::Longest).unwrap() - 0.6).abs() < 1e-12);
        assert!(mean_iou(&[], TopOneRule::Longest).is_err());
        assert!(recall_at(&[], &[0.5], TopOneRule::Longest).is_err());
    }

    #[test]
    fn top_one_rules() {
        let p = ws(&[(0.0, 5.0), (10.0, 30.0)]);
        assert_eq!(top_one(&p, TopOneRule::First).unwrap().start, 0.0);
        assert_eq!(top_one(&p, TopOneRule::Longest).unwrap().start, 10.0);
        let tie = ws(&[(0.0, 5.0), (10.0, 15.0)]);
        assert_eq!(top_one(&tie, TopOneRule::Longest).unwrap().start, 0.0);
    }

    #[test]
    fn ground_truth_best_match() {
        let gt = ws(&[(0.0, 10.0), (50.0, 60.0)]);
        assert_eq!(
            top_one_iou(&ws(&[(50.0, 60.0)]), &gt, TopOneRule::First),
            1.0
        );
    }

    #[test]
    fn accuracy_examples() {
        let s = |x: &str| Some(x.to_string());
        let answers: Vec<String> = ["A", "B", "D", "A"].iter().map(|x| x.to_string()).collect();
        let preds = vec![s("A"), s("C"), s("D"), s("B")];
        assert_eq!(vqa_accuracy(&preds, &answers).unwrap(), 0.5);
        assert_eq!(
            vqa_accuracy(
                &answers.iter().cloned().map(Some).collect::<Vec<_>>(),
                &answers
            )
            .unwrap(),
            1.0
        );
        assert!(vqa_accuracy(&preds[..2], &answers).is_err());
        assert_eq!(
            answer_label("The answer is B.", &["A", "B", "C", "D"]).as_deref(),
            Some("B")
        );
        assert_eq!(answer_label("unsure", &["A", "B"]), None);
    }

    proptest! {
        #[test]
        fn recall_is_monotone(ious in prop::collection::vec(0.0f64..=1.0, 1..30)) {
            let preds: Vec<_> = ious.iter().map(|&x| with_iou(x)).collect();
            let r = recall_at(&preds, &RECALL_THRESHOLDS, TopOneRule::Longest).unwrap();
            prop_assert!(r[0] >= r[1] && r[1] >= r[2]);
            prop_assert!(r.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}
