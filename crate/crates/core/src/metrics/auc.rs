use super::prediction::{preview, LabelSet, PredictionSet};
use crate::error::{Error, Result};

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties counted
/// one half. Sorting makes this O(n log n).
///
/// The numerator is accumulated in integers (twice the count, so ties stay
/// integral) and divided once, so the result is the exact rational rounded
/// to `f64`.
pub fn auc_from_labels(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::dim("roc_auc", &[scores.len()], &[labels.len()]));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Contract(format!("labels must be 0 or 1, got {bad}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Contract("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC AUC needs both positive and negative labels".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut twice_wins: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos_g, mut neg_g) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                pos_g += 1;
            } else {
                neg_g += 1;
            }
            j += 1;
        }
        twice_wins += 2 * pos_g * neg_below + pos_g * neg_g;
        neg_below += neg_g;
        i = j;
    }
    Ok(twice_wins as f64 / (2 * n_pos * n_neg) as f64)
}

/// ROC AUC of a prediction set against labels. Every predicted id must be
/// labelled; extra labels are ignored.
pub fn roc_auc(predictions: &PredictionSet, labels: &LabelSet) -> Result<f64> {
    let mut missing = Vec::new();
    let mut ys = Vec::with_capacity(predictions.len());
    for (id, _) in predictions.iter() {
        match labels.get(id) {
            Some(l) => ys.push(l),
            None => missing.push(id),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Join(format!(
            "{} predicted ids of '{}' have no label: {}",
            missing.len(),
            predictions.name(),
            preview(&missing)
        )));
    }
    auc_from_labels(predictions.scores(), &ys)
}
