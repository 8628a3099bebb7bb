//! Directory-level training and scoring used by the command-line tool.
//!
//! An experiment is described by a flat TOML file:
//!
//! ```toml
//! data = "gen_out"          # directory written by `pvtkin gen`
//! model = "pvt-nano"        # pvt-nano | pvt-tiny | pvt-v2-b0
//! combinator = "quad5"      # diff | quad3 | quad5
//! epochs = 20
//! batch_size = 16
//! learning_rate = 0.01
//! momentum = 0.9
//! neg_ratio = 1.0
//! pairs_per_relation = 4
//! seed = 0
//! ```
//!
//! Every key is optional. A relative `data` path is resolved against the
//! directory holding the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    filter_relations, parse_relationship_csv, parse_submission_csv, to_labels, KinshipDataset,
    RelationshipRecord, HOLDOUT_FILE, IMAGE_DIR, RELATIONSHIP_FILE,
};
use crate::error::{Error, Result};
use crate::metrics::PredictionSet;
use crate::pvt::PvtConfig;
use crate::siamese::{
    score_pairs, train, Combinator, EpochStats, ModelConfig, PairIndex, SiameseModel, TrainConfig,
    TrainData,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    pub model: String,
    pub combinator: Combinator,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub neg_ratio: f64,
    pub pairs_per_relation: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        ExperimentConfig {
            data: PathBuf::from("."),
            model: "pvt-nano".into(),
            combinator: Combinator::Quad5,
            epochs: 20,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            neg_ratio: t.neg_ratio,
            pairs_per_relation: 4,
            seed: t.seed,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    /// Reads a config file and resolves `data` relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.data.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.data = dir.join(&cfg.data);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed: self.seed,
            neg_ratio: self.neg_ratio,
            pairs_per_relation: self.pairs_per_relation,
        }
    }

    /// The preset backbone resized to the dataset's image shape.
    pub fn model_config(&self, image_shape: &[usize]) -> Result<ModelConfig> {
        let mut pvt = PvtConfig::preset(&self.model)?;
        if let [h, w, c] = *image_shape {
            pvt.height = h;
            pvt.width = w;
            pvt.channels = c;
        } else {
            return Err(Error::Contract(format!(
                "images must be height x width x channels, got {image_shape:?}"
            )));
        }
        pvt.seed = self.seed;
        pvt.validate()?;
        Ok(ModelConfig::new(pvt, self.combinator))
    }
}

/// Contents of a generated dataset directory.
#[derive(Clone, Debug)]
pub struct TrainingData {
    pub dataset: KinshipDataset,
    pub relations: Vec<RelationshipRecord>,
    /// Labelled pairs from `holdout_pairs.csv`, empty if the file is absent.
    pub holdout: Vec<(String, u8)>,
}

impl TrainingData {
    pub fn load(dir: &Path) -> Result<Self> {
        let dataset = KinshipDataset::load_dir(&dir.join(IMAGE_DIR))?;
        if dataset.is_empty() {
            return Err(Error::Contract(format!(
                "no images under {}",
                dir.join(IMAGE_DIR).display()
            )));
        }
        let relations = parse_relationship_csv(&dir.join(RELATIONSHIP_FILE))?;
        let holdout_path = dir.join(HOLDOUT_FILE);
        let holdout = if holdout_path.exists() {
            to_labels(&parse_submission_csv(&holdout_path)?)?
        } else {
            Vec::new()
        };
        Ok(TrainingData {
            dataset,
            relations,
            holdout,
        })
    }
}

/// Trains a fresh model on every family that does not appear in the holdout
/// pairs, reporting holdout AUC after each epoch.
pub fn run_training(
    cfg: &ExperimentConfig,
    data: &TrainingData,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(SiameseModel, Vec<EpochStats>)> {
    let model_cfg = cfg.model_config(data.dataset.images[0].shape())?;
    let mut model = SiameseModel::new(model_cfg)?;
    let ids: Vec<&str> = data.holdout.iter().map(|(id, _)| id.as_str()).collect();
    let pairs = data.dataset.resolve_pairs(&ids)?;
    let held: HashSet<String> = data.dataset.families_of_pairs(&pairs);
    let holdout: Vec<PairIndex> = pairs
        .iter()
        .zip(&data.holdout)
        .map(|(&(a, b), &(_, label))| PairIndex { a, b, label })
        .collect();
    let relations = filter_relations(&data.relations, &held);
    let person_images = data.dataset.person_images(&held);
    let train_data = TrainData {
        images: &data.dataset.images,
        relations: &relations,
        person_images: &person_images,
        holdout: &holdout,
    };
    let history = train(&mut model, &train_data, &cfg.train_config(), on_epoch)?;
    Ok((model, history))
}

/// Kin probabilities for `img_a-img_b` pair ids, in input order.
pub fn predict_ids<S: AsRef<str>>(
    model: &SiameseModel,
    dataset: &KinshipDataset,
    ids: &[S],
) -> Result<PredictionSet> {
    let pairs = dataset.resolve_pairs(ids)?;
    let scores = score_pairs(model, &dataset.images, &pairs)?;
    PredictionSet::new(
        "predictions",
        ids.iter().map(|id| id.as_ref().to_string()).zip(scores),
    )
}
