//! Finite-difference checks of every differentiable operation, the PVT
//! building blocks and the full siamese loss, at random tiny shapes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::Bound;
use crate::pvt::{
    patch_embed, spatial_reduce, sra_attention, Grid, PatchWeights, PvtConfig, ReduceWeights,
    SraWeights, StageConfig,
};
use crate::siamese::{Combinator, ModelConfig, SiameseModel};
use crate::tensor::{finite_diff_check_many, GradCheck, Tape, Tensor, Var};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    /// Random shapes tried per operation.
    pub cases: usize,
    pub seed: u64,
    pub h: f64,
    /// Coordinates sampled per case for the model-sized checks.
    pub model_coords: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            cases: 10,
            seed: 0,
            h: 1e-5,
            model_coords: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpResult {
    pub op: String,
    pub cases: usize,
    pub max_rel_error: f64,
    /// Shapes of the worst case's inputs.
    pub worst_shapes: Vec<Vec<usize>>,
}

impl OpResult {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub results: Vec<OpResult>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn max_rel_error(&self) -> f64 {
        self.results
            .iter()
            .map(|r| r.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.results.iter().all(|r| r.passed(tolerance))
    }

    /// One `op cases max_rel_error status` line per operation.
    pub fn to_text(&self, tolerance: f64) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&format!(
                "{:<16} {:>3} {:.3e} {}\n",
                r.op,
                r.cases,
                r.max_rel_error,
                if r.passed(tolerance) { "ok" } else { "FAIL" }
            ));
        }
        out
    }
}

type Build = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

/// A case: inputs plus a scalar function of them.
struct Case {
    inputs: Vec<Tensor>,
    f: Build,
    max_coords: Option<usize>,
}

fn dim(rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(1..=4)
}

fn randn(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::randn(shape.to_vec(), 1.0, rng)
}

/// Values kept at least `gap` away from zero, for kinked functions.
fn away_from_zero(shape: &[usize], gap: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let mut t = randn(shape, rng);
    for v in t.data_mut() {
        if v.abs() < gap {
            *v = if *v < 0.0 { -gap } else { gap };
        }
    }
    t
}

/// `sum(out ⊙ weights)` with fixed random weights so every output element
/// reaches the scalar through a distinct coefficient.
fn weighted_sum(tape: &mut Tape, out: Var, weights: &Tensor) -> Result<Var> {
    let w = tape.constant(weights.clone());
    let y = tape.mul(out, w)?;
    Ok(tape.sum(y))
}

fn projected(
    op: impl Fn(&mut Tape, &[Var]) -> Result<Var> + 'static,
    out_shape: Vec<usize>,
    rng: &mut ChaCha8Rng,
) -> Build {
    let weights = randn(&out_shape, rng);
    Box::new(move |tape, v| {
        let out = op(tape, v)?;
        weighted_sum(tape, out, &weights)
    })
}

fn elementwise_case(op: &str, rng: &mut ChaCha8Rng) -> Case {
    let nd = rng.random_range(1..=3);
    let shape: Vec<usize> = (0..nd).map(|_| dim(rng)).collect();
    let f: Build = match op {
        "add" => Box::new(|t, v| t.add(v[0], v[1])),
        "sub" => Box::new(|t, v| t.sub(v[0], v[1])),
        "mul" => Box::new(|t, v| t.mul(v[0], v[1])),
        "scale" => Box::new(|t, v| Ok(t.scale(v[0], -1.7))),
        "relu" => Box::new(|t, v| Ok(t.relu(v[0]))),
        "gelu" => Box::new(|t, v| Ok(t.gelu(v[0]))),
        _ => unreachable!(),
    };
    let binary = matches!(op, "add" | "sub" | "mul");
    let mut inputs = vec![away_from_zero(&shape, 1e-3, rng)];
    if binary {
        inputs.push(randn(&shape, rng));
    }
    let f = projected(f, shape, rng);
    Case {
        inputs,
        f,
        max_coords: None,
    }
}

fn case_for(op: &str, rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Case> {
    let case = match op {
        "add" | "sub" | "mul" | "scale" | "relu" | "gelu" => elementwise_case(op, rng),
        "matmul" => {
            let (m, k, n) = (dim(rng), dim(rng), dim(rng));
            Case {
                inputs: vec![randn(&[m, k], rng), randn(&[k, n], rng)],
                f: projected(|t, v| t.matmul(v[0], v[1]), vec![m, n], rng),
                max_coords: None,
            }
        }
        "add_bias" => {
            let (m, n) = (dim(rng), dim(rng));
            Case {
                inputs: vec![randn(&[m, n], rng), randn(&[n], rng)],
                f: projected(|t, v| t.add_bias(v[0], v[1]), vec![m, n], rng),
                max_coords: None,
            }
        }
        "softmax" | "log_softmax" => {
            let shape = vec![dim(rng), dim(rng) + 1, dim(rng)];
            let axis = rng.random_range(0..3);
            let log = op == "log_softmax";
            let f = move |t: &mut Tape, v: &[Var]| {
                if log {
                    t.log_softmax(v[0], axis)
                } else {
                    t.softmax(v[0], axis)
                }
            };
            Case {
                inputs: vec![randn(&shape, rng)],
                f: projected(f, shape, rng),
                max_coords: None,
            }
        }
        "layer_norm" => {
            let (m, n) = (dim(rng), dim(rng) + 1);
            Case {
                inputs: vec![randn(&[m, n], rng), randn(&[n], rng), randn(&[n], rng)],
                f: projected(|t, v| t.layer_norm(v[0], v[1], v[2], 1e-6), vec![m, n], rng),
                max_coords: None,
            }
        }
        "reshape" => {
            let (a, b, c) = (dim(rng), dim(rng), dim(rng));
            Case {
                inputs: vec![randn(&[a, b * c], rng)],
                f: projected(
                    move |t, v| t.reshape(v[0], &[a * b, c]),
                    vec![a * b, c],
                    rng,
                ),
                max_coords: None,
            }
        }
        "permute" => {
            let shape = vec![dim(rng), dim(rng), dim(rng)];
            let mut axes = vec![0, 1, 2];
            axes.rotate_left(rng.random_range(0..3));
            if rng.random_bool(0.5) {
                axes.swap(0, 1);
            }
            let out: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
            Case {
                inputs: vec![randn(&shape, rng)],
                f: projected(move |t, v| t.permute(v[0], &axes), out, rng),
                max_coords: None,
            }
        }
        "transpose" => {
            let (m, n) = (dim(rng), dim(rng));
            Case {
                inputs: vec![randn(&[m, n], rng)],
                f: projected(|t, v| t.transpose(v[0]), vec![n, m], rng),
                max_coords: None,
            }
        }
        "concat" => {
            let (m, n1, n2) = (dim(rng), dim(rng), dim(rng));
            Case {
                inputs: vec![randn(&[m, n1], rng), randn(&[m, n2], rng)],
                f: projected(|t, v| t.concat(v, 1), vec![m, n1 + n2], rng),
                max_coords: None,
            }
        }
        "narrow" => {
            let (m, n) = (dim(rng), dim(rng) + 2);
            let start = rng.random_range(0..n - 1);
            let len = rng.random_range(1..=n - start);
            Case {
                inputs: vec![randn(&[m, n], rng)],
                f: projected(move |t, v| t.narrow(v[0], 1, start, len), vec![m, len], rng),
                max_coords: None,
            }
        }
        "sum" => {
            let shape = vec![dim(rng), dim(rng)];
            Case {
                inputs: vec![randn(&shape, rng)],
                f: Box::new(|t, v| {
                    let sq = t.mul(v[0], v[0])?;
                    Ok(t.sum(sq))
                }),
                max_coords: None,
            }
        }
        "mean_axis" => {
            let shape = vec![dim(rng), dim(rng), dim(rng)];
            let axis = rng.random_range(0..3);
            let mut out = shape.clone();
            out.remove(axis);
            Case {
                inputs: vec![randn(&shape, rng)],
                f: projected(move |t, v| t.mean_axis(v[0], axis), out, rng),
                max_coords: None,
            }
        }
        "cross_entropy" => {
            let (b, k) = (dim(rng), dim(rng) + 1);
            let labels: Vec<usize> = (0..b).map(|_| rng.random_range(0..k)).collect();
            Case {
                inputs: vec![randn(&[b, k], rng)],
                f: Box::new(move |t, v| t.cross_entropy(v[0], &labels)),
                max_coords: None,
            }
        }
        "patch_embed" => {
            let p = rng.random_range(1..=2);
            let (gh, gw, c, e) = (dim(rng), dim(rng), dim(rng), dim(rng) + 1);
            let n = gh * gw;
            Case {
                inputs: vec![
                    randn(&[gh * p, gw * p, c], rng),
                    randn(&[p * p * c, e], rng),
                    randn(&[e], rng),
                    randn(&[e], rng),
                    randn(&[e], rng),
                    randn(&[n, e], rng),
                ],
                f: projected(
                    move |t, v| {
                        let w = PatchWeights {
                            proj: v[1],
                            bias: v[2],
                            norm: Some((v[3], v[4])),
                            eps: 1e-6,
                            pos: v[5],
                        };
                        Ok(patch_embed(t, v[0], p, &w)?.0)
                    },
                    vec![n, e],
                    rng,
                ),
                max_coords: None,
            }
        }
        "spatial_reduce" => {
            let r = rng.random_range(1..=2);
            let (gh, gw, c) = (r * dim(rng), r * dim(rng), dim(rng) + 1);
            let m = gh * gw / (r * r);
            Case {
                inputs: vec![
                    randn(&[gh * gw, c], rng),
                    randn(&[r * r * c, c], rng),
                    randn(&[c], rng),
                    randn(&[c], rng),
                    randn(&[c], rng),
                ],
                f: projected(
                    move |t, v| {
                        let w = ReduceWeights {
                            proj: v[1],
                            proj_bias: v[2],
                            norm: Some((v[3], v[4])),
                            eps: 1e-6,
                        };
                        Ok(spatial_reduce(t, v[0], Grid::new(gh, gw), r, &w)?.0)
                    },
                    vec![m, c],
                    rng,
                ),
                max_coords: None,
            }
        }
        "sra_attention" => {
            let r = rng.random_range(1..=2);
            let heads = rng.random_range(1..=2);
            let c = heads * rng.random_range(1..=3);
            let (gh, gw) = (r * rng.random_range(1..=2), r * rng.random_range(1..=2));
            let n = gh * gw;
            let mut inputs = vec![randn(&[n, c], rng)];
            for _ in 0..4 {
                inputs.push(Tensor::randn(vec![c, c], 0.5, rng));
                inputs.push(randn(&[c], rng));
            }
            if r > 1 {
                inputs.push(Tensor::randn(vec![r * r * c, c], 0.5, rng));
                inputs.push(randn(&[c], rng));
                inputs.push(randn(&[c], rng));
                inputs.push(randn(&[c], rng));
            }
            let f = move |t: &mut Tape, v: &[Var]| {
                let w = SraWeights {
                    q: (v[1], v[2]),
                    k: (v[3], v[4]),
                    v: (v[5], v[6]),
                    out: (v[7], v[8]),
                    reduce: (r > 1).then(|| ReduceWeights {
                        proj: v[9],
                        proj_bias: v[10],
                        norm: Some((v[11], v[12])),
                        eps: 1e-6,
                    }),
                };
                Ok(sra_attention(t, v[0], v[0], Grid::new(gh, gw), heads, r, &w)?.output)
            };
            Case {
                inputs,
                f: projected(f, vec![n, c], rng),
                max_coords: None,
            }
        }
        "siamese_loss" => siamese_case(rng, cfg)?,
        other => unreachable!("unknown op {other}"),
    };
    Ok(case)
}

/// Smallest two-stage configuration used for whole-model checks.
pub fn micro_pvt(seed: u64) -> PvtConfig {
    let stage = |patch_size, embed_dim, num_heads, reduction_ratio| StageConfig {
        patch_size,
        embed_dim,
        num_heads,
        reduction_ratio,
        depth: 1,
        mlp_ratio: 2,
    };
    PvtConfig {
        name: "pvt-micro".into(),
        height: 8,
        width: 8,
        channels: 1,
        stages: vec![stage(2, 4, 1, 2), stage(2, 8, 2, 1)],
        feature_dim: 8,
        seed,
    }
}

fn siamese_case(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Case> {
    let combinator = Combinator::ALL[rng.random_range(0..Combinator::ALL.len())];
    let mut model = SiameseModel::new(ModelConfig::new(micro_pvt(rng.random()), combinator))?;
    // move away from the initial point so norms and biases are exercised
    for t in model.params.values_mut() {
        for v in t.data_mut() {
            *v += 0.1 * rng.random_range(-1.0..1.0);
        }
    }
    let batch = rng.random_range(1..=3);
    let images: Vec<Tensor> = (0..2 * batch).map(|_| randn(&[8, 8, 1], rng)).collect();
    let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..2)).collect();
    let inputs: Vec<Tensor> = model.params.iter().map(|(_, t)| t.clone()).collect();
    Ok(Case {
        inputs,
        f: Box::new(move |t, v| {
            let p = Bound::from_vars(v.to_vec());
            let pairs: Vec<(&Tensor, &Tensor)> = images.chunks(2).map(|c| (&c[0], &c[1])).collect();
            model.loss(t, &p, &pairs, &labels)
        }),
        max_coords: Some(cfg.model_coords),
    })
}

pub const OPS: [&str; 23] = [
    "matmul",
    "add",
    "sub",
    "mul",
    "add_bias",
    "scale",
    "relu",
    "gelu",
    "softmax",
    "log_softmax",
    "layer_norm",
    "reshape",
    "permute",
    "transpose",
    "concat",
    "narrow",
    "sum",
    "mean_axis",
    "cross_entropy",
    "patch_embed",
    "spatial_reduce",
    "sra_attention",
    "siamese_loss",
];

/// Checks one named operation at `cfg.cases` random shapes.
pub fn check_op(op: &str, cfg: &SuiteConfig) -> Result<OpResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        cfg.seed
            ^ op.bytes()
                .fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64)),
    );
    let mut result = OpResult {
        op: op.to_string(),
        cases: cfg.cases,
        max_rel_error: 0.0,
        worst_shapes: Vec::new(),
    };
    for i in 0..cfg.cases {
        let case = case_for(op, &mut rng, cfg)?;
        let check = GradCheck {
            h: cfg.h,
            max_coords: case.max_coords,
            seed: cfg.seed.wrapping_add(i as u64),
        };
        let report = finite_diff_check_many(&case.f, &case.inputs, &check)?;
        if report.max_rel_error >= result.max_rel_error {
            result.max_rel_error = report.max_rel_error;
            result.worst_shapes = case.inputs.iter().map(|t| t.shape().to_vec()).collect();
        }
    }
    Ok(result)
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let results = OPS
        .iter()
        .map(|op| check_op(op, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        results,
        seconds: start.elapsed().as_secs_f64(),
    })
}
