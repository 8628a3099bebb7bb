//! Pyramid vision transformer with spatial-reduction attention.

mod config;
mod model;
mod ops;

pub use config::{PvtConfig, StageConfig};
pub use model::{EncoderLayer, Pvt, PvtModel, SpatialReduction, SraLayer, Stage, StageOutput};
pub use ops::{
    group_blocks, patch_embed, spatial_reduce, sra_attention, Grid, PatchWeights, ReduceWeights,
    SraOutput, SraWeights,
};
