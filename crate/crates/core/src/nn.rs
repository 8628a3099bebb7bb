//! Named parameter storage, affine and normalization layers, and SGD.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// Ordered collection of named parameter tensors. Insertion order is the
/// serialization order of checkpoints.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics on a duplicate name; parameter names are chosen by model code.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter '{name}'"
        );
        self.index.insert(name.clone(), self.values.len());
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.values.iter_mut()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::numel).sum()
    }

    /// Registers every parameter on `tape` as a differentiable leaf.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound(self.values.iter().map(|t| tape.leaf(t.clone())).collect())
    }

    /// Registers every parameter as a constant (inference only).
    pub fn bind_frozen(&self, tape: &mut Tape) -> Bound {
        Bound(
            self.values
                .iter()
                .map(|t| tape.constant(t.clone()))
                .collect(),
        )
    }

    /// Replaces all values with those of `other`, which must carry the same
    /// names and shapes in the same order.
    pub fn load_from(&mut self, other: &ParamStore) -> Result<()> {
        if other.names != self.names {
            return Err(Error::Checkpoint(format!(
                "parameter names do not match the model ({} stored, {} expected)",
                other.len(),
                self.len()
            )));
        }
        for ((name, dst), src) in self.names.iter().zip(&mut self.values).zip(&other.values) {
            if dst.shape() != src.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter '{name}' has shape {:?}, model expects {:?}",
                    src.shape(),
                    dst.shape()
                )));
            }
            *dst = src.clone();
        }
        Ok(())
    }
}

/// Tape handles for a [`ParamStore`], indexed by [`ParamId`].
#[derive(Clone, Debug)]
pub struct Bound(Vec<Var>);

impl Bound {
    /// Handles in [`ParamStore`] order, e.g. leaves made by a gradient check.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound(vars)
    }

    pub fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }

    /// Gradients for every parameter after `tape.backward`.
    pub fn grads(&self, tape: &Tape) -> Vec<Tensor> {
        self.0
            .iter()
            .map(|&v| {
                tape.grad(v)
                    .unwrap_or_else(|| Tensor::zeros(tape.shape(v).to_vec()))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Truncated normal with the given standard deviation.
    TruncNormal(f64),
    /// He normal, std = sqrt(2 / fan_in).
    He,
    /// LeCun normal, std = sqrt(1 / fan_in).
    LeCun,
    Zeros,
}

impl Init {
    fn draw(self, shape: [usize; 2], rng: &mut impl Rng) -> Tensor {
        match self {
            Init::TruncNormal(std) => Tensor::trunc_normal(shape, std, rng),
            Init::He => Tensor::randn(shape, (2.0 / shape[0] as f64).sqrt(), rng),
            Init::LeCun => Tensor::randn(shape, (1.0 / shape[0] as f64).sqrt(), rng),
            Init::Zeros => Tensor::zeros(shape),
        }
    }
}

/// `y = x · W + b` with `W` stored as `in × out`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        init: Init,
        rng: &mut impl Rng,
    ) -> Self {
        let weight = store.add(format!("{name}.weight"), init.draw([in_dim, out_dim], rng));
        let bias = store.add(format!("{name}.bias"), Tensor::zeros([out_dim]));
        Linear {
            weight,
            bias,
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        let y = tape.matmul(x, p.var(self.weight))?;
        tape.add_bias(y, p.var(self.bias))
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
    pub eps: f64,
}

impl LayerNorm {
    pub const EPS: f64 = 1e-6;

    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        LayerNorm {
            gain: store.add(format!("{name}.gain"), Tensor::ones([dim])),
            bias: store.add(format!("{name}.bias"), Tensor::zeros([dim])),
            eps: Self::EPS,
        }
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        tape.layer_norm(x, p.var(self.gain), p.var(self.bias), self.eps)
    }
}

/// Stochastic gradient descent with classical momentum:
/// `v ← μ·v + g`, `θ ← θ − η·v`.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Sgd {
            learning_rate,
            momentum,
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &[Tensor]) {
        if self.velocity.is_empty() {
            self.velocity = grads.iter().map(|g| vec![0.0; g.numel()]).collect();
        }
        for ((param, grad), vel) in params.values_mut().zip(grads).zip(&mut self.velocity) {
            for ((w, g), v) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(vel.iter_mut())
            {
                *v = self.momentum * *v + g;
                *w -= self.learning_rate * *v;
            }
        }
    }
}
