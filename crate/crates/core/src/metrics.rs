//! Threshold-free evaluation metrics.

use crate::error::{Error, Result};

/// Predicted probabilities with their binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub probabilities: Vec<f64>,
    pub labels: Vec<bool>,
}

impl EvalSet {
    pub fn new(probabilities: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if probabilities.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} probabilities but {} labels",
                probabilities.len(),
                labels.len()
            )));
        }
        Ok(EvalSet {
            probabilities,
            labels,
        })
    }

    /// Concatenates positive-pair and negative-pair predictions.
    pub fn from_classes(pos: Vec<f64>, neg: Vec<f64>) -> Self {
        let labels = std::iter::repeat_n(true, pos.len())
            .chain(std::iter::repeat_n(false, neg.len()))
            .collect();
        let mut probabilities = pos;
        probabilities.extend(neg);
        EvalSet {
            probabilities,
            labels,
        }
    }

    pub fn auc_roc(&self) -> Result<f64> {
        auc_roc(&self.probabilities, &self.labels)
    }

    pub fn brier(&self) -> Result<f64> {
        brier(&self.probabilities, &self.labels)
    }
}

/// Mann–Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Computed from midranks in
/// `O(n log n)`.
pub fn auc_roc(probs: &[f64], labels: &[bool]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::Shape("probabilities and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::SingleClass(labels.len(), "negative"));
    }
    if n_neg == 0 {
        return Err(Error::SingleClass(labels.len(), "positive"));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));

    // Sum of positive ranks, accumulated per tie group with midranks kept
    // doubled so every intermediate stays an integer.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && probs[order[j]] == probs[order[i]] {
            j += 1;
        }
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        // ranks i+1 ..= j, midrank doubled = i + 1 + j
        rank_sum_x2 += pos_in_group * (i as u128 + 1 + j as u128);
        i = j;
    }
    let n_pos_u = n_pos as u128;
    let u_x2 = rank_sum_x2 - n_pos_u * (n_pos_u + 1);
    Ok(u_x2 as f64 / 2.0 / (n_pos as f64 * n_neg as f64))
}

/// Mean squared difference between probability and label.
pub fn brier(probs: &[f64], labels: &[bool]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::Shape("probabilities and labels differ in length".into()));
    }
    if probs.is_empty() {
        return Err(Error::Empty("brier score of an empty set"));
    }
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &l)| {
            let d = p - if l { 1.0 } else { 0.0 };
            d * d
        })
        .sum();
    Ok(sum / probs.len() as f64)
}
