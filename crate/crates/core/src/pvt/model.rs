use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{PvtConfig, StageConfig};
use super::ops::{patch_embed, sra_attention, Grid, PatchWeights, ReduceWeights, SraWeights};
use crate::error::{Error, Result};
use crate::nn::{Bound, Init, LayerNorm, Linear, ParamId, ParamStore};
use crate::tensor::{Tape, Tensor, Var};

const INIT_STD: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct SpatialReduction {
    pub proj: Linear,
    pub norm: LayerNorm,
}

#[derive(Clone, Debug)]
pub struct SraLayer {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub out: Linear,
    pub reduce: Option<SpatialReduction>,
    pub heads: usize,
    pub ratio: usize,
}

impl SraLayer {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        stage: &StageConfig,
        rng: &mut impl Rng,
    ) -> Self {
        let c = stage.embed_dim;
        let init = Init::TruncNormal(INIT_STD);
        let q = Linear::new(store, &format!("{name}.q"), c, c, init, rng);
        let k = Linear::new(store, &format!("{name}.k"), c, c, init, rng);
        let v = Linear::new(store, &format!("{name}.v"), c, c, init, rng);
        let r = stage.reduction_ratio;
        let reduce = (r > 1).then(|| SpatialReduction {
            proj: Linear::new(store, &format!("{name}.sr"), r * r * c, c, init, rng),
            norm: LayerNorm::new(store, &format!("{name}.sr_norm"), c),
        });
        let out = Linear::new(store, &format!("{name}.proj"), c, c, init, rng);
        SraLayer {
            q,
            k,
            v,
            out,
            reduce,
            heads: stage.num_heads,
            ratio: r,
        }
    }

    pub fn weights(&self, p: &Bound) -> SraWeights {
        let pair = |l: &Linear| (p.var(l.weight), p.var(l.bias));
        SraWeights {
            q: pair(&self.q),
            k: pair(&self.k),
            v: pair(&self.v),
            out: pair(&self.out),
            reduce: self.reduce.as_ref().map(|r| ReduceWeights {
                proj: p.var(r.proj.weight),
                proj_bias: p.var(r.proj.bias),
                norm: Some((p.var(r.norm.gain), p.var(r.norm.bias))),
                eps: r.norm.eps,
            }),
        }
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var, grid: Grid) -> Result<Var> {
        let w = self.weights(p);
        Ok(sra_attention(tape, x, x, grid, self.heads, self.ratio, &w)?.output)
    }
}

/// Pre-norm transformer encoder layer:
/// `x ← x + SRA(LN(x))`, then `x ← x + FFN(LN(x))` with a GELU feed-forward.
#[derive(Clone, Debug)]
pub struct EncoderLayer {
    pub norm1: LayerNorm,
    pub attn: SraLayer,
    pub norm2: LayerNorm,
    pub fc1: Linear,
    pub fc2: Linear,
}

impl EncoderLayer {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        stage: &StageConfig,
        rng: &mut impl Rng,
    ) -> Self {
        let c = stage.embed_dim;
        let hidden = c * stage.mlp_ratio;
        let init = Init::TruncNormal(INIT_STD);
        EncoderLayer {
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), c),
            attn: SraLayer::new(store, &format!("{name}.attn"), stage, rng),
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), c),
            fc1: Linear::new(store, &format!("{name}.fc1"), c, hidden, init, rng),
            fc2: Linear::new(store, &format!("{name}.fc2"), hidden, c, init, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var, grid: Grid) -> Result<Var> {
        let h = self.norm1.forward(tape, p, x)?;
        let h = self.attn.forward(tape, p, h, grid)?;
        let x = tape.add(x, h)?;
        let h = self.norm2.forward(tape, p, x)?;
        let h = self.fc1.forward(tape, p, h)?;
        let h = tape.gelu(h);
        let h = self.fc2.forward(tape, p, h)?;
        tape.add(x, h)
    }
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub patch_size: usize,
    pub patch_proj: Linear,
    pub patch_norm: LayerNorm,
    pub pos_embed: ParamId,
    pub layers: Vec<EncoderLayer>,
}

/// Pyramid vision transformer feature extractor. Holds parameter ids only;
/// values live in the [`ParamStore`] it was built against.
#[derive(Clone, Debug)]
pub struct Pvt {
    pub config: PvtConfig,
    pub stages: Vec<Stage>,
    pub norm: LayerNorm,
}

/// Token sequence and grid produced by one stage.
#[derive(Clone, Copy, Debug)]
pub struct StageOutput {
    pub tokens: Var,
    pub grid: Grid,
}

impl Pvt {
    /// Registers all parameters under `prefix` in `store`, initialized from
    /// `config.seed`.
    pub fn new(config: &PvtConfig, store: &mut ParamStore, prefix: &str) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut in_ch = config.channels;
        let mut stages = Vec::with_capacity(config.stages.len());
        for (i, (sc, grid)) in config.stages.iter().zip(config.stage_grids()).enumerate() {
            let name = format!("{prefix}stage{i}");
            let patch_dim = sc.patch_size * sc.patch_size * in_ch;
            let patch_proj = Linear::new(
                store,
                &format!("{name}.patch"),
                patch_dim,
                sc.embed_dim,
                Init::LeCun,
                &mut rng,
            );
            let patch_norm = LayerNorm::new(store, &format!("{name}.patch_norm"), sc.embed_dim);
            let pos_embed = store.add(
                format!("{name}.pos"),
                Tensor::trunc_normal([grid.0 * grid.1, sc.embed_dim], INIT_STD, &mut rng),
            );
            let layers = (0..sc.depth)
                .map(|l| EncoderLayer::new(store, &format!("{name}.layer{l}"), sc, &mut rng))
                .collect();
            stages.push(Stage {
                patch_size: sc.patch_size,
                patch_proj,
                patch_norm,
                pos_embed,
                layers,
            });
            in_ch = sc.embed_dim;
        }
        let norm = LayerNorm::new(store, &format!("{prefix}norm"), config.feature_dim);
        Ok(Pvt {
            config: config.clone(),
            stages,
            norm,
        })
    }

    fn check_image(&self, shape: &[usize]) -> Result<()> {
        let c = &self.config;
        if shape != [c.height, c.width, c.channels] {
            return Err(Error::Config(format!(
                "image shape {shape:?} does not match the model input {}x{}x{}",
                c.height, c.width, c.channels
            )));
        }
        Ok(())
    }

    /// Runs every stage and returns each stage's token sequence.
    pub fn forward_stages(
        &self,
        tape: &mut Tape,
        p: &Bound,
        image: Var,
    ) -> Result<Vec<StageOutput>> {
        self.check_image(tape.shape(image))?;
        let mut map = image;
        let mut outs = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            let w = PatchWeights {
                proj: p.var(stage.patch_proj.weight),
                bias: p.var(stage.patch_proj.bias),
                norm: Some((p.var(stage.patch_norm.gain), p.var(stage.patch_norm.bias))),
                eps: stage.patch_norm.eps,
                pos: p.var(stage.pos_embed),
            };
            let (mut x, grid) = patch_embed(tape, map, stage.patch_size, &w)?;
            for layer in &stage.layers {
                x = layer.forward(tape, p, x, grid)?;
            }
            outs.push(StageOutput { tokens: x, grid });
            let c = tape.shape(x)[1];
            map = tape.reshape(x, &[grid.height, grid.width, c])?;
        }
        Ok(outs)
    }

    /// Feature vector of length `feature_dim`: final-stage tokens, layer
    /// normalized, then mean-pooled.
    pub fn forward(&self, tape: &mut Tape, p: &Bound, image: Var) -> Result<Var> {
        let last = *self
            .forward_stages(tape, p, image)?
            .last()
            .expect("validated config has a stage");
        let x = self.norm.forward(tape, p, last.tokens)?;
        tape.mean_axis(x, 0)
    }
}

/// Convenience: a standalone extractor with its own parameters.
#[derive(Clone, Debug)]
pub struct PvtModel {
    pub pvt: Pvt,
    pub params: ParamStore,
}

impl PvtModel {
    pub fn new(config: &PvtConfig) -> Result<Self> {
        let mut params = ParamStore::new();
        let pvt = Pvt::new(config, &mut params, "")?;
        Ok(PvtModel { pvt, params })
    }

    /// Inference-only feature extraction.
    pub fn features(&self, image: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let x = tape.constant(image.clone());
        let f = self.pvt.forward(&mut tape, &p, x)?;
        Ok(tape.value(f).clone())
    }
}
