use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub classes: Vec<ClassMetrics>,
    /// `confusion[g][p]`: gold class `classes[g]` predicted as `classes[p]`.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, per-class precision/recall/F-1 and their unweighted mean.
/// A 0/0 ratio counts as 0.
pub fn evaluate(predictions: &[u8], gold: &[u8], classes: &[u8]) -> Result<MetricReport, StatsError> {
    if predictions.len() != gold.len() {
        return Err(StatsError::LengthMismatch(predictions.len(), gold.len()));
    }
    if gold.is_empty() {
        return Err(StatsError::TooFew(0));
    }
    let k = classes.len();
    let pos = |c: u8| classes.iter().position(|x| *x == c).ok_or(StatsError::UnknownClass(c));
    let mut confusion = vec![vec![0usize; k]; k];
    for (p, g) in predictions.iter().zip(gold) {
        confusion[pos(*g)?][pos(*p)?] += 1;
    }
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|i| {
            let tp = confusion[i][i];
            let predicted: usize = (0..k).map(|g| confusion[g][i]).sum();
            let support: usize = confusion[i].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            ClassMetrics { class: classes[i], precision, recall, f1, support }
        })
        .collect();
    let macro_f1 = if k == 0 { 0.0 } else { per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64 };
    Ok(MetricReport { accuracy: ratio(correct, gold.len()), macro_f1, classes: per_class, confusion })
}
