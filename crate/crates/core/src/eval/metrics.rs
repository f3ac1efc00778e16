//! Classification metrics over ordinal readability levels.
//!
//! Undecided episodes (move-cap hits) count as false negatives for their
//! true class and enter the RMSE with the largest possible label error for
//! that text, max(true - 1, K - true).

use serde::Serialize;

use super::EvalError;

/// What the policy asserted for one text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Prediction {
    Level(usize),
    Undecided,
}

/// Precision, recall, and F1 for one class, with 0/0 taken as 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of evaluated texts whose true level is this class.
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub texts: usize,
    pub accuracy: f64,
    pub rmse: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub undecided_fraction: f64,
    /// Mean fraction of each text exposed through the window; 0 when the
    /// inputs carry no episode traces (see `compute_metrics`).
    pub text_seen_mean: f64,
    /// Mean move count per episode; 0 without episode traces.
    pub moves_mean: f64,
}

/// Metrics from bare (prediction, label) pairs. The episode-trace fields
/// `text_seen_mean` and `moves_mean` are left at 0; evaluation through
/// `metrics_from_evaluations` fills them in.
pub fn compute_metrics(
    predictions: &[Prediction],
    labels: &[usize],
    num_classes: usize,
) -> Result<EvalMetrics, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::InvalidArgument(format!(
            "{} predictions against {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(EvalError::InvalidArgument(
            "cannot compute metrics over zero texts".to_string(),
        ));
    }
    if num_classes < 2 {
        return Err(EvalError::InvalidArgument(
            "need at least two classes".to_string(),
        ));
    }
    for &label in labels {
        if label < 1 || label > num_classes {
            return Err(EvalError::InvalidArgument(format!(
                "label {label} outside 1..={num_classes}"
            )));
        }
    }
    for prediction in predictions {
        if let Prediction::Level(level) = prediction {
            if *level < 1 || *level > num_classes {
                return Err(EvalError::InvalidArgument(format!(
                    "prediction {level} outside 1..={num_classes}"
                )));
            }
        }
    }

    let total = labels.len();
    let mut correct = 0usize;
    let mut undecided = 0usize;
    let mut squared_error_sum = 0.0;
    // true_positive[c-1], false_positive[c-1], false_negative[c-1].
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    let mut support = vec![0usize; num_classes];

    for (&label, prediction) in labels.iter().zip(predictions) {
        support[label - 1] += 1;
        match *prediction {
            Prediction::Level(level) => {
                if level == label {
                    correct += 1;
                    tp[label - 1] += 1;
                } else {
                    fp[level - 1] += 1;
                    fn_[label - 1] += 1;
                }
                let err = level.abs_diff(label) as f64;
                squared_error_sum += err * err;
            }
            Prediction::Undecided => {
                undecided += 1;
                fn_[label - 1] += 1;
                let err = (label - 1).max(num_classes - label) as f64;
                squared_error_sum += err * err;
            }
        }
    }

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut per_class = Vec::with_capacity(num_classes);
    for c in 0..num_classes {
        let precision = ratio(tp[c], tp[c] + fp[c]);
        let recall = ratio(tp[c], tp[c] + fn_[c]);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            class: c + 1,
            precision,
            recall,
            f1,
            support: support[c],
        });
    }
    let macro_mean = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(f).sum::<f64>() / num_classes as f64
    };

    Ok(EvalMetrics {
        texts: total,
        accuracy: correct as f64 / total as f64,
        rmse: (squared_error_sum / total as f64).sqrt(),
        macro_precision: macro_mean(|m| m.precision),
        macro_recall: macro_mean(|m| m.recall),
        macro_f1: macro_mean(|m| m.f1),
        per_class,
        undecided_fraction: undecided as f64 / total as f64,
        text_seen_mean: 0.0,
        moves_mean: 0.0,
    })
}

/// Full metrics from per-text evaluation records, including the episode
/// means that bare predictions cannot provide.
pub fn metrics_from_evaluations(
    evaluations: &[super::TextEvaluation],
    num_classes: usize,
) -> Result<EvalMetrics, EvalError> {
    let predictions: Vec<Prediction> = evaluations.iter().map(|e| e.prediction).collect();
    let labels: Vec<usize> = evaluations.iter().map(|e| e.true_level).collect();
    let mut metrics = compute_metrics(&predictions, &labels, num_classes)?;
    let n = evaluations.len() as f64;
    metrics.text_seen_mean = evaluations.iter().map(|e| e.text_seen).sum::<f64>() / n;
    metrics.moves_mean = evaluations.iter().map(|e| e.moves as f64).sum::<f64>() / n;
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn levels(values: &[usize]) -> Vec<Prediction> {
        values.iter().map(|&v| Prediction::Level(v)).collect()
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let labels = [1, 2, 3, 1, 2, 3];
        let metrics = compute_metrics(&levels(&labels), &labels, 3).unwrap();
        assert_eq!(metrics.accuracy, 1.0);
        assert_eq!(metrics.rmse, 0.0);
        assert_eq!(metrics.undecided_fraction, 0.0);
        for class in &metrics.per_class {
            assert_eq!(class.precision, 1.0);
            assert_eq!(class.recall, 1.0);
            assert_eq!(class.f1, 1.0);
            assert_eq!(class.support, 2);
        }
        assert_eq!(metrics.macro_f1, 1.0);
    }

    #[test]
    fn rmse_follows_the_definition() {
        let metrics = compute_metrics(&levels(&[1, 2, 3]), &[1, 2, 5], 5).unwrap();
        assert_relative_eq!(metrics.rmse, (4.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(metrics.rmse, 1.1547, max_relative = 1e-4);
    }

    #[test]
    fn undecided_takes_the_maximum_error() {
        // True level 3 of 5: the farthest label is 1 or 5, both 2 away.
        let predictions = [
            Prediction::Level(1),
            Prediction::Level(2),
            Prediction::Undecided,
        ];
        let labels = [1, 2, 3];
        let metrics = compute_metrics(&predictions, &labels, 5).unwrap();
        assert_eq!(metrics.rmse, (4.0f64 / 3.0).sqrt());
        assert_relative_eq!(metrics.undecided_fraction, 1.0 / 3.0, max_relative = 1e-15);
        // The undecided text is a miss for class 3's recall but no class
        // gains a false positive from it: the two decided classes keep
        // perfect precision and class 3 falls to 0/0 -> 0, not below.
        let class3 = &metrics.per_class[2];
        assert_eq!(class3.recall, 0.0);
        assert_eq!(class3.support, 1);
        assert_eq!(metrics.per_class[0].precision, 1.0);
        assert_eq!(metrics.per_class[1].precision, 1.0);
        assert_eq!(class3.precision, 0.0);
    }

    #[test]
    fn undecided_at_the_edge_reaches_across_the_scale() {
        // True level 1 of 5: maximum error is K - true = 4.
        let metrics =
            compute_metrics(&[Prediction::Undecided], &[1], 5).unwrap();
        assert_eq!(metrics.rmse, 4.0);
    }

    #[test]
    fn never_predicted_class_gets_zero_precision() {
        // Class 2 never appears in predictions: precision 0/0 -> 0.
        let metrics = compute_metrics(&levels(&[1, 1]), &[1, 2], 2).unwrap();
        assert_eq!(metrics.per_class[1].precision, 0.0);
        assert_eq!(metrics.per_class[1].recall, 0.0);
        assert_eq!(metrics.per_class[1].f1, 0.0);
        assert_eq!(metrics.accuracy, 0.5);
    }

    #[test]
    fn two_class_confusion_example() {
        // Class 1: TP=2, FP=1, FN=1 -> precision = recall = F1 = 2/3.
        let predictions = levels(&[1, 1, 1, 2]);
        let labels = [1, 1, 2, 1];
        let metrics = compute_metrics(&predictions, &labels, 2).unwrap();
        let class1 = &metrics.per_class[0];
        assert_relative_eq!(class1.precision, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(class1.recall, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(class1.f1, 2.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn accuracy_times_texts_is_the_confusion_trace() {
        let predictions = [
            Prediction::Level(1),
            Prediction::Level(2),
            Prediction::Level(2),
            Prediction::Undecided,
            Prediction::Level(3),
        ];
        let labels = [1, 2, 1, 3, 3];
        let metrics = compute_metrics(&predictions, &labels, 3).unwrap();
        let trace = 3.0;
        assert_relative_eq!(
            metrics.accuracy * metrics.texts as f64,
            trace,
            max_relative = 1e-15
        );
        let supports: usize = metrics.per_class.iter().map(|c| c.support).sum();
        assert_eq!(supports, labels.len());
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        assert!(compute_metrics(&levels(&[1]), &[1, 2], 2).is_err());
        assert!(compute_metrics(&[], &[], 2).is_err());
        assert!(compute_metrics(&levels(&[3]), &[1], 2).is_err());
        assert!(compute_metrics(&levels(&[1]), &[5], 2).is_err());
    }
}
