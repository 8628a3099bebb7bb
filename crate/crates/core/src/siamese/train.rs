use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{SiameseModel, KIN_CLASS};
use super::sampling::{PairIndex, PairSampler};
use crate::data::RelationshipRecord;
use crate::error::{Error, Result};
use crate::metrics::auc_from_labels;
use crate::nn::{Bound, Sgd};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Negatives per positive.
    pub neg_ratio: f64,
    /// Positive pairs drawn per relation per epoch.
    pub pairs_per_relation: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 16,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
            neg_ratio: 1.0,
            pairs_per_relation: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.learning_rate.is_nan()
            || self.learning_rate < 0.0
            || !(0.0..1.0).contains(&self.momentum)
        {
            return Err(Error::Config(format!(
                "learning_rate must be >= 0 and momentum in [0, 1) (got {}, {})",
                self.learning_rate, self.momentum
            )));
        }
        Ok(())
    }
}

/// Everything training reads: an image collection addressed by index, the
/// kin relations between persons, and an optional labelled holdout.
#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub images: &'a [Tensor],
    pub relations: &'a [RelationshipRecord],
    pub person_images: &'a BTreeMap<String, Vec<usize>>,
    pub holdout: &'a [PairIndex],
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training cross-entropy over the epoch's pairs.
    pub loss: f64,
    pub holdout_auc: Option<f64>,
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Records each distinct image of `pairs` once and returns the feature
/// handles for both sides.
fn batch_features(
    model: &SiameseModel,
    tape: &mut Tape,
    p: &Bound,
    images: &[Tensor],
    pairs: &[PairIndex],
) -> Result<(Vec<Var>, Vec<Var>)> {
    let mut cache: HashMap<usize, Var> = HashMap::new();
    let mut feat = |tape: &mut Tape, idx: usize| -> Result<Var> {
        if let Some(&v) = cache.get(&idx) {
            return Ok(v);
        }
        let v = model.features(tape, p, &images[idx])?;
        cache.insert(idx, v);
        Ok(v)
    };
    let mut fa = Vec::with_capacity(pairs.len());
    let mut fb = Vec::with_capacity(pairs.len());
    for pair in pairs {
        fa.push(feat(tape, pair.a)?);
        fb.push(feat(tape, pair.b)?);
    }
    Ok((fa, fb))
}

/// Kin probabilities for `pairs`, extracting features once per distinct image.
pub fn score_pairs(
    model: &SiameseModel,
    images: &[Tensor],
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let mut features: HashMap<usize, Tensor> = HashMap::new();
    for &(a, b) in pairs {
        for idx in [a, b] {
            if let std::collections::hash_map::Entry::Vacant(e) = features.entry(idx) {
                e.insert(model.embed(&images[idx])?);
            }
        }
    }
    let mut scores = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(256) {
        let mut tape = Tape::new();
        let p = model.params.bind_frozen(&mut tape);
        let fa: Vec<Var> = chunk
            .iter()
            .map(|&(a, _)| tape.constant(features[&a].clone()))
            .collect();
        let fb: Vec<Var> = chunk
            .iter()
            .map(|&(_, b)| tape.constant(features[&b].clone()))
            .collect();
        let logits = model.head_logits(&mut tape, &p, &fa, &fb)?;
        let probs = tape.softmax(logits, 1)?;
        scores.extend(tape.value(probs).data().chunks(2).map(|r| r[KIN_CLASS]));
    }
    Ok(scores)
}

fn holdout_auc(
    model: &SiameseModel,
    images: &[Tensor],
    holdout: &[PairIndex],
) -> Result<Option<f64>> {
    if holdout.is_empty() {
        return Ok(None);
    }
    let pairs: Vec<(usize, usize)> = holdout.iter().map(|p| (p.a, p.b)).collect();
    let labels: Vec<u8> = holdout.iter().map(|p| p.label).collect();
    let scores = score_pairs(model, images, &pairs)?;
    auc_from_labels(&scores, &labels).map(Some)
}

/// Minibatch SGD with momentum on the mean cross-entropy of sampled pairs.
/// Negatives are re-drawn every epoch. `on_epoch` sees each epoch's stats as
/// soon as they are available.
pub fn train(
    model: &mut SiameseModel,
    data: &TrainData<'_>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    let sampler = PairSampler::new(
        data.relations,
        data.person_images,
        cfg.neg_ratio,
        cfg.pairs_per_relation,
    )?;
    let mut opt = Sgd::new(cfg.learning_rate, cfg.momentum);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let pairs = sampler.epoch(epoch_seed(cfg.seed, epoch));
        let mut total = 0.0;
        for (batch, chunk) in pairs.chunks(cfg.batch_size).enumerate() {
            let mut tape = Tape::new();
            let p = model.params.bind(&mut tape);
            let (fa, fb) = batch_features(model, &mut tape, &p, data.images, chunk)?;
            let logits = model.head_logits(&mut tape, &p, &fa, &fb)?;
            let labels: Vec<usize> = chunk.iter().map(|c| c.label as usize).collect();
            let loss = tape.cross_entropy(logits, &labels)?;
            let value = tape.value(loss).item()?;
            if !value.is_finite() {
                return Err(Error::NonFinite { epoch, batch });
            }
            tape.backward(loss)?;
            let grads = p.grads(&tape);
            opt.step(&mut model.params, &grads);
            total += value * chunk.len() as f64;
        }
        let stats = EpochStats {
            epoch,
            loss: total / pairs.len().max(1) as f64,
            holdout_auc: holdout_auc(model, data.images, data.holdout)?,
        };
        on_epoch(&stats);
        history.push(stats);
    }
    Ok(history)
}

/// `epoch,loss,holdout_auc` with six decimals; the AUC cell is empty when no
/// holdout was given.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,loss,holdout_auc\n");
    for s in history {
        let auc = s.holdout_auc.map(|a| format!("{a:.6}")).unwrap_or_default();
        writeln!(out, "{},{:.6},{}", s.epoch, s.loss, auc).unwrap();
    }
    out
}

pub fn write_history(path: &Path, history: &[EpochStats]) -> Result<()> {
    std::fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_format() {
        let h = vec![
            EpochStats {
                epoch: 1,
                loss: 0.1234567,
                holdout_auc: Some(0.5),
            },
            EpochStats {
                epoch: 2,
                loss: 0.5,
                holdout_auc: None,
            },
        ];
        assert_eq!(
            history_csv(&h),
            "epoch,loss,holdout_auc\n1,0.123457,0.500000\n2,0.500000,\n"
        );
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().kind(), "config");
    }
}
