use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of one pyramid stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageConfig {
    /// Spatial downsampling factor of the stage's patch embedding.
    pub patch_size: usize,
    pub embed_dim: usize,
    pub num_heads: usize,
    /// Key/value spatial reduction ratio of the stage's attention.
    pub reduction_ratio: usize,
    /// Number of encoder layers.
    pub depth: usize,
    /// Hidden width of the feed-forward block as a multiple of `embed_dim`.
    pub mlp_ratio: usize,
}

impl StageConfig {
    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.num_heads
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PvtConfig {
    pub name: String,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub stages: Vec<StageConfig>,
    /// Length of the pooled feature vector; equals the last stage's width.
    pub feature_dim: usize,
    pub seed: u64,
}

fn stage(
    patch_size: usize,
    embed_dim: usize,
    num_heads: usize,
    reduction_ratio: usize,
    depth: usize,
    mlp_ratio: usize,
) -> StageConfig {
    StageConfig {
        patch_size,
        embed_dim,
        num_heads,
        reduction_ratio,
        depth,
        mlp_ratio,
    }
}

impl PvtConfig {
    /// Two-stage desk-scale model on 32×32 single-channel input.
    pub fn nano() -> Self {
        PvtConfig {
            name: "pvt-nano".into(),
            height: 32,
            width: 32,
            channels: 1,
            stages: vec![stage(4, 32, 1, 2, 2, 2), stage(2, 64, 2, 1, 2, 2)],
            feature_dim: 64,
            seed: 0,
        }
    }

    /// Published PVT-Tiny widths on 224×224 RGB input.
    pub fn tiny() -> Self {
        PvtConfig {
            name: "pvt-tiny".into(),
            height: 224,
            width: 224,
            channels: 3,
            stages: vec![
                stage(4, 64, 1, 8, 2, 8),
                stage(2, 128, 2, 4, 2, 8),
                stage(2, 320, 5, 2, 2, 4),
                stage(2, 512, 8, 1, 2, 4),
            ],
            feature_dim: 512,
            seed: 0,
        }
    }

    /// PVT-v2-b0 widths with this crate's attention and non-overlapping
    /// patches; only the dimensions follow the v2 model.
    pub fn v2_b0() -> Self {
        PvtConfig {
            name: "pvt-v2-b0".into(),
            height: 224,
            width: 224,
            channels: 3,
            stages: vec![
                stage(4, 32, 1, 8, 2, 8),
                stage(2, 64, 2, 4, 2, 8),
                stage(2, 160, 5, 2, 2, 4),
                stage(2, 256, 8, 1, 2, 4),
            ],
            feature_dim: 256,
            seed: 0,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "pvt-nano" | "nano" => Ok(Self::nano()),
            "pvt-tiny" | "tiny" => Ok(Self::tiny()),
            "pvt-v2-b0" | "v2-b0" => Ok(Self::v2_b0()),
            other => Err(Error::Config(format!(
                "unknown model preset '{other}' (expected pvt-nano, pvt-tiny or pvt-v2-b0)"
            ))),
        }
    }

    /// Token grid (height, width) produced by each stage.
    pub fn stage_grids(&self) -> Vec<(usize, usize)> {
        let (mut h, mut w) = (self.height, self.width);
        self.stages
            .iter()
            .map(|s| {
                h /= s.patch_size;
                w /= s.patch_size;
                (h, w)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            return bad(format!(
                "input extents must be positive, got {}x{}x{}",
                self.height, self.width, self.channels
            ));
        }
        let Some(last) = self.stages.last() else {
            return bad("model needs at least one stage".into());
        };
        let (mut h, mut w) = (self.height, self.width);
        for (i, s) in self.stages.iter().enumerate() {
            if [
                s.patch_size,
                s.embed_dim,
                s.num_heads,
                s.reduction_ratio,
                s.depth,
                s.mlp_ratio,
            ]
            .contains(&0)
            {
                return bad(format!("stage {i}: all hyperparameters must be positive"));
            }
            if h % s.patch_size != 0 || w % s.patch_size != 0 {
                return bad(format!(
                    "stage {i}: patch size {} does not divide the {h}x{w} grid",
                    s.patch_size
                ));
            }
            h /= s.patch_size;
            w /= s.patch_size;
            if s.embed_dim % s.num_heads != 0 {
                return bad(format!(
                    "stage {i}: embed dim {} not divisible by {} heads",
                    s.embed_dim, s.num_heads
                ));
            }
            if h % s.reduction_ratio != 0 || w % s.reduction_ratio != 0 {
                return bad(format!(
                    "stage {i}: reduction ratio {} does not divide the {h}x{w} token grid",
                    s.reduction_ratio
                ));
            }
        }
        if self.feature_dim != last.embed_dim {
            return bad(format!(
                "feature_dim {} must equal the last stage width {}",
                self.feature_dim, last.embed_dim
            ));
        }
        Ok(())
    }
}
