use super::prediction::{common_ids, PredictionSet};
use crate::error::{Error, Result};

/// Pearson correlation by the two-pass formula
/// `Σ(aᵢ−ā)(bᵢ−b̄) / √(Σ(aᵢ−ā)² · Σ(bᵢ−b̄)²)`.
pub fn pearson_corr(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim("pearson_corr", &[a.len()], &[b.len()]));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedMetric(
            "correlation needs at least two points".into(),
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedMetric(
            "correlation of a constant vector".into(),
        ));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of two prediction sets over their shared pair ids.
pub fn pearson_sets(a: &PredictionSet, b: &PredictionSet) -> Result<f64> {
    let ids = common_ids(&[a, b]);
    let xs: Vec<f64> = ids.iter().map(|id| a.get(id).unwrap()).collect();
    let ys: Vec<f64> = ids.iter().map(|id| b.get(id).unwrap()).collect();
    pearson_corr(&xs, &ys)
}

/// Symmetric matrix of pairwise correlations with a unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Number of pair ids shared by all sets.
    pub support: usize,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Mean correlation of each model with every other model.
    pub fn mean_off_diagonal(&self) -> Vec<f64> {
        let k = self.len();
        if k < 2 {
            return vec![0.0; k];
        }
        self.values
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v)
                    .sum::<f64>()
                    / (k - 1) as f64
            })
            .collect()
    }

    /// Index of the model with the lowest mean off-diagonal correlation.
    pub fn least_correlated(&self) -> Option<usize> {
        self.mean_off_diagonal()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

/// Pairwise correlations over the pair ids common to every set.
pub fn corr_matrix(sets: &[PredictionSet]) -> Result<CorrelationMatrix> {
    if sets.len() < 2 {
        return Err(Error::Contract(
            "correlation matrix needs at least two prediction sets".into(),
        ));
    }
    let refs: Vec<&PredictionSet> = sets.iter().collect();
    let ids = common_ids(&refs);
    if ids.is_empty() {
        return Err(Error::Join("prediction sets share no pair ids".into()));
    }
    let columns: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| ids.iter().map(|id| s.get(id).unwrap()).collect())
        .collect();
    let k = sets.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in i + 1..k {
            let r = pearson_corr(&columns[i], &columns[j]).map_err(|e| {
                Error::UndefinedMetric(format!("{} vs {}: {e}", sets[i].name(), sets[j].name()))
            })?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: sets.iter().map(|s| s.name().to_string()).collect(),
        values,
        support: ids.len(),
    })
}
