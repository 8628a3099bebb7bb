//! Twin-branch kinship verifier: weight-tied PVT feature extractors, a
//! feature combinator, a three-layer head and cross-entropy training.

mod combinator;
mod model;
mod sampling;
mod train;

pub use combinator::Combinator;
pub use model::{cross_entropy_loss, ModelConfig, SiameseHead, SiameseModel, KIN_CLASS};
pub use sampling::{sample_pairs, PairIndex, PairSample, PairSampler};
pub use train::{
    history_csv, score_pairs, train, write_history, EpochStats, TrainConfig, TrainData,
};
