use super::auc::roc_auc;
use super::correlation::corr_matrix;
use super::prediction::{require_same_ids, LabelSet, PredictionSet};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.5;

fn normalize(weights: &[f64]) -> Result<Vec<f64>> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::Parameter(format!(
            "ensemble weights must be finite and >= 0, got {w}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Weighted sum of member scores per pair, weights normalized to one.
///
/// Every set must carry exactly the same pair ids; the output follows the
/// first set's order. Each fused score is clamped into the members'
/// `[min, max]` for that pair, which the exact convex combination satisfies.
pub fn weighted_ensemble(sets: &[PredictionSet], weights: &[f64]) -> Result<PredictionSet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Contract("ensemble of zero prediction sets".into()))?;
    if weights.len() != sets.len() {
        return Err(Error::Parameter(format!(
            "{} weights given for {} prediction sets",
            weights.len(),
            sets.len()
        )));
    }
    let w = normalize(weights)?;
    for s in &sets[1..] {
        require_same_ids(first, s)?;
    }
    let fused = first.ids().iter().map(|id| {
        let mut acc = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (s, wi) in sets.iter().zip(&w) {
            let v = s.get(id).expect("ids checked");
            acc += wi * v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (id.clone(), acc.clamp(lo, hi))
    });
    PredictionSet::new("ensemble", fused)
}

/// Diversity-aware weights:
/// `wᵢ ∝ max(0, AUCᵢ − 0.5) · (1 − λ · meanOffDiagCorrᵢ)`, clipped at zero
/// and normalized. A single set gets correlation zero.
pub fn heuristic_weights(
    sets: &[PredictionSet],
    validation: &LabelSet,
    lambda: f64,
) -> Result<Vec<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if sets.is_empty() {
        return Err(Error::Contract("no prediction sets to weight".into()));
    }
    let aucs = sets
        .iter()
        .map(|s| roc_auc(s, validation))
        .collect::<Result<Vec<_>>>()?;
    let mean_corr = if sets.len() >= 2 {
        corr_matrix(sets)?.mean_off_diagonal()
    } else {
        vec![0.0]
    };
    let raw: Vec<f64> = aucs
        .iter()
        .zip(&mean_corr)
        .map(|(auc, c)| ((auc - 0.5).max(0.0) * (1.0 - lambda * c)).max(0.0))
        .collect();
    normalize(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(name: &str, scores: &[f64]) -> PredictionSet {
        PredictionSet::new(
            name,
            scores
                .iter()
                .enumerate()
                .map(|(i, &s)| (format!("p{i}"), s)),
        )
        .unwrap()
    }

    #[test]
    fn examples() {
        let a = set("a", &[0.2, 0.8]);
        let b = set("b", &[0.4, 0.6]);
        let e = weighted_ensemble(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        assert!((e.scores()[0] - 0.3).abs() < 1e-15);
        assert!((e.scores()[1] - 0.7).abs() < 1e-15);

        let e = weighted_ensemble(&[a.clone(), b.clone()], &[1.0, 0.0]).unwrap();
        assert_eq!(e.scores(), a.scores());

        let e = weighted_ensemble(&[b.clone(), b.clone(), b.clone()], &[0.3, 0.1, 0.7]).unwrap();
        assert_eq!(e.scores(), b.scores());
    }

    #[test]
    fn errors() {
        let a = set("a", &[0.2, 0.8]);
        let b = set("b", &[0.4]);
        assert_eq!(
            weighted_ensemble(&[a.clone(), a.clone()], &[1.0, -0.1])
                .unwrap_err()
                .kind(),
            "parameter"
        );
        assert_eq!(
            weighted_ensemble(&[a.clone(), b], &[1.0, 1.0])
                .unwrap_err()
                .kind(),
            "join"
        );
        assert_eq!(
            weighted_ensemble(std::slice::from_ref(&a), &[0.0])
                .unwrap_err()
                .kind(),
            "degenerate-weights"
        );
    }

    #[test]
    fn heuristic_degenerate() {
        let labels = LabelSet::new([("p0".to_string(), 1), ("p1".to_string(), 0)]).unwrap();
        // both models rank the negative above the positive: AUC 0
        let a = set("a", &[0.1, 0.9]);
        let b = set("b", &[0.2, 0.7]);
        assert_eq!(
            heuristic_weights(&[a, b], &labels, 0.5).unwrap_err().kind(),
            "degenerate-weights"
        );
    }
}
