//! Tape-level building blocks of the pyramid transformer.
//!
//! Token sequences are `N × C` matrices whose rows enumerate a `h × w` grid
//! in row-major order.

use crate::error::{Error, Result};
use crate::tensor::{Tape, Var};

/// Token grid extents carried alongside an `N × C` sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
}

impl Grid {
    pub fn new(height: usize, width: usize) -> Self {
        Grid { height, width }
    }

    pub fn tokens(self) -> usize {
        self.height * self.width
    }
}

/// Groups each non-overlapping `block × block` window of an `h × w × c` map
/// into one row: output is `(h/block · w/block) × (block² · c)`, rows in
/// row-major window order, each row laid out (dy, dx, channel).
pub fn group_blocks(tape: &mut Tape, map: Var, block: usize) -> Result<(Var, Grid)> {
    let &[h, w, c] = tape.shape(map) else {
        return Err(Error::dim("group_blocks", tape.shape(map), &[0, 0, 0]));
    };
    if block == 0 || h % block != 0 || w % block != 0 {
        return Err(Error::Config(format!(
            "block size {block} does not divide the {h}x{w} grid"
        )));
    }
    let (gh, gw) = (h / block, w / block);
    let x = tape.reshape(map, &[gh, block, gw, block, c])?;
    let x = tape.permute(x, &[0, 2, 1, 3, 4])?;
    let x = tape.reshape(x, &[gh * gw, block * block * c])?;
    Ok((x, Grid::new(gh, gw)))
}

/// Weights of a patch embedding.
#[derive(Clone, Copy, Debug)]
pub struct PatchWeights {
    /// `p²c × C`
    pub proj: Var,
    pub bias: Var,
    /// Layer-norm gain and bias applied to the projected patches; `None`
    /// skips normalization.
    pub norm: Option<(Var, Var)>,
    pub eps: f64,
    /// Positional embedding, `N × C`.
    pub pos: Var,
}

/// Splits an `h × w × c` map into `p × p` patches, projects each flattened
/// patch (optionally layer-normalized) and adds the positional embedding.
pub fn patch_embed(
    tape: &mut Tape,
    map: Var,
    patch: usize,
    w: &PatchWeights,
) -> Result<(Var, Grid)> {
    let (patches, grid) = group_blocks(tape, map, patch)?;
    let x = tape.matmul(patches, w.proj)?;
    let x = tape.add_bias(x, w.bias)?;
    let x = match w.norm {
        Some((gain, bias)) => tape.layer_norm(x, gain, bias, w.eps)?,
        None => x,
    };
    let x = tape.add(x, w.pos)?;
    Ok((x, grid))
}

/// Weights of the key/value spatial reduction.
#[derive(Clone, Copy, Debug)]
pub struct ReduceWeights {
    /// `(R²·C) × C`
    pub proj: Var,
    pub proj_bias: Var,
    /// Layer-norm gain and bias; `None` skips normalization.
    pub norm: Option<(Var, Var)>,
    pub eps: f64,
}

/// Reshapes `x` (`hw × C`) to `(hw/R²) × (R²·C)` by grouping each `R × R`
/// block of tokens, projects back to `C` and layer-normalizes.
pub fn spatial_reduce(
    tape: &mut Tape,
    x: Var,
    grid: Grid,
    ratio: usize,
    w: &ReduceWeights,
) -> Result<(Var, Grid)> {
    let &[n, c] = tape.shape(x) else {
        return Err(Error::dim(
            "spatial_reduce",
            tape.shape(x),
            &[grid.tokens(), 0],
        ));
    };
    if n != grid.tokens() {
        return Err(Error::dim(
            "spatial_reduce",
            &[n, c],
            &[grid.height, grid.width],
        ));
    }
    if ratio == 0 || !grid.height.is_multiple_of(ratio) || !grid.width.is_multiple_of(ratio) {
        return Err(Error::Config(format!(
            "reduction ratio {ratio} does not divide the {}x{} token grid",
            grid.height, grid.width
        )));
    }
    let map = tape.reshape(x, &[grid.height, grid.width, c])?;
    let (grouped, reduced) = group_blocks(tape, map, ratio)?;
    let y = tape.matmul(grouped, w.proj)?;
    let y = tape.add_bias(y, w.proj_bias)?;
    let y = match w.norm {
        Some((gain, bias)) => tape.layer_norm(y, gain, bias, w.eps)?,
        None => y,
    };
    Ok((y, reduced))
}

/// Weights of one spatial-reduction attention layer. All projections are
/// `C × C`; `reduce` is `None` when the reduction ratio is 1.
#[derive(Clone, Copy, Debug)]
pub struct SraWeights {
    pub q: (Var, Var),
    pub k: (Var, Var),
    pub v: (Var, Var),
    pub out: (Var, Var),
    pub reduce: Option<ReduceWeights>,
}

fn affine(tape: &mut Tape, x: Var, (w, b): (Var, Var)) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    tape.add_bias(y, b)
}

/// Output of [`sra_attention`] with the per-head attention matrices kept for
/// inspection.
#[derive(Clone, Debug)]
pub struct SraOutput {
    pub output: Var,
    /// One `N × M` row-stochastic matrix per head.
    pub attention: Vec<Var>,
}

/// Multi-head attention whose keys and values come from the spatially
/// reduced `kv_in` sequence.
///
/// Per head `j`: `softmax(Q_j K_jᵀ / √d) V_j` with `Q = q_in·W_Q`,
/// `K = reduce(kv_in)·W_K`, `V = reduce(kv_in)·W_V`; heads are concatenated
/// along channels and passed through the output projection.
pub fn sra_attention(
    tape: &mut Tape,
    q_in: Var,
    kv_in: Var,
    kv_grid: Grid,
    heads: usize,
    ratio: usize,
    w: &SraWeights,
) -> Result<SraOutput> {
    let c = tape.shape(q_in).get(1).copied().unwrap_or(0);
    if heads == 0 || c % heads != 0 {
        return Err(Error::Config(format!(
            "embed dim {c} not divisible by {heads} heads"
        )));
    }
    let d = c / heads;
    let kv = match (&w.reduce, ratio) {
        (_, 1) => kv_in,
        (Some(rw), r) => spatial_reduce(tape, kv_in, kv_grid, r, rw)?.0,
        (None, r) => {
            return Err(Error::Config(format!(
                "reduction ratio {r} requires spatial-reduction weights"
            )))
        }
    };
    let q = affine(tape, q_in, w.q)?;
    let k = affine(tape, kv, w.k)?;
    let v = affine(tape, kv, w.v)?;
    let scale = 1.0 / (d as f64).sqrt();
    let mut outs = Vec::with_capacity(heads);
    let mut attention = Vec::with_capacity(heads);
    for j in 0..heads {
        let (qj, kj, vj) = if heads == 1 {
            (q, k, v)
        } else {
            (
                tape.narrow(q, 1, j * d, d)?,
                tape.narrow(k, 1, j * d, d)?,
                tape.narrow(v, 1, j * d, d)?,
            )
        };
        let kt = tape.transpose(kj)?;
        let scores = tape.matmul(qj, kt)?;
        let scores = tape.scale(scores, scale);
        let attn = tape.softmax(scores, 1)?;
        outs.push(tape.matmul(attn, vj)?);
        attention.push(attn);
    }
    let merged = if heads == 1 {
        outs[0]
    } else {
        tape.concat(&outs, 1)?
    };
    Ok(SraOutput {
        output: affine(tape, merged, w.out)?,
        attention,
    })
}
