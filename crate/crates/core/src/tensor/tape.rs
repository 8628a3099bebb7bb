use super::kernels;
use super::{split_axis, Tensor};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Vector-Jacobian product of a user-supplied op: given the op inputs, its
/// output and the output gradient, returns one gradient per input.
pub type VjpFn = Box<dyn Fn(&[&Tensor], &Tensor, &Tensor) -> Vec<Tensor>>;

enum Op {
    Leaf,
    MatMul {
        a: Var,
        b: Var,
        m: usize,
        k: usize,
        n: usize,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias {
        x: Var,
        bias: Var,
    },
    Scale {
        x: Var,
        factor: f64,
    },
    Relu(Var),
    Gelu(Var),
    Softmax {
        x: Var,
        axis: usize,
    },
    LogSoftmax {
        x: Var,
        axis: usize,
    },
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Reshape(Var),
    Permute {
        x: Var,
        gather: Vec<usize>,
    },
    Concat {
        inputs: Vec<Var>,
        axis: usize,
    },
    Narrow {
        x: Var,
        axis: usize,
        start: usize,
    },
    Sum(Var),
    MeanAxis {
        x: Var,
        axis: usize,
    },
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
    Custom {
        inputs: Vec<Var>,
        vjp: VjpFn,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Ordered record of executed ops. Nodes are appended in execution order,
/// so reverse index order is reverse execution order.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    ran_backward: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        if self.ran_backward {
            // a new forward re-arms the tape
            self.ran_backward = false;
            self.grads.clear();
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Registers a differentiable leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Registers a leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Gradient of the last backward's loss with respect to `v`.
    ///
    /// `None` before backward or for nodes that do not require a gradient;
    /// zeros for differentiable nodes the loss does not reach.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        if !self.ran_backward || !self.nodes[v.0].requires_grad {
            return None;
        }
        let shape = self.nodes[v.0].value.shape().to_vec();
        Some(match &self.grads[v.0] {
            Some(g) => Tensor::from_parts(shape, g.clone()),
            None => Tensor::zeros(shape),
        })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2("matmul")?;
        let (k2, n) = self.value(b).dims2("matmul")?;
        if k != k2 {
            return Err(Error::dim("matmul", self.shape(a), self.shape(b)));
        }
        let mut out = vec![0.0; m * n];
        kernels::matmul_nn(
            self.value(a).data(),
            self.value(b).data(),
            &mut out,
            m,
            k,
            n,
        );
        let rg = self.rg(&[a, b]);
        Ok(self.push(
            Tensor::from_parts(vec![m, n], out),
            Op::MatMul { a, b, m, k, n },
            rg,
        ))
    }

    fn zip_same(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::dim(op, ta.shape(), tb.shape()));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(Tensor::from_parts(ta.shape().to_vec(), data))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip_same("add", a, b, |x, y| x + y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip_same("sub", a, b, |x, y| x - y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.zip_same("mul", a, b, |x, y| x * y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    /// Adds a vector along the last axis: the only broadcast supported.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let c = *self.shape(x).last().unwrap_or(&1);
        if self.shape(bias) != [c] {
            return Err(Error::dim("add_bias", self.shape(x), self.shape(bias)));
        }
        let b = self.value(bias).data();
        let data = self
            .value(x)
            .data()
            .chunks(c)
            .flat_map(|row| row.iter().zip(b).map(|(v, bv)| v + bv))
            .collect();
        let value = Tensor::from_parts(self.shape(x).to_vec(), data);
        let rg = self.rg(&[x, bias]);
        Ok(self.push(value, Op::AddBias { x, bias }, rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let t = self.value(x);
        let value = Tensor::from_parts(
            t.shape().to_vec(),
            t.data().iter().map(|v| v * factor).collect(),
        );
        let rg = self.rg(&[x]);
        self.push(value, Op::Scale { x, factor }, rg)
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(x);
        let value =
            Tensor::from_parts(t.shape().to_vec(), t.data().iter().map(|&v| f(v)).collect());
        let rg = self.rg(&[x]);
        self.push(value, op, rg)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Var {
        self.map(x, kernels::gelu, Op::Gelu(x))
    }

    fn check_axis(&self, op: &'static str, x: Var, axis: usize) -> Result<()> {
        if axis >= self.shape(x).len() {
            return Err(Error::Contract(format!(
                "{op}: axis {axis} out of range for shape {:?}",
                self.shape(x)
            )));
        }
        Ok(())
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis("softmax", x, axis)?;
        let t = self.value(x);
        let (o, l, i) = split_axis(t.shape(), axis);
        let value = Tensor::from_parts(t.shape().to_vec(), kernels::softmax(t.data(), o, l, i));
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Softmax { x, axis }, rg))
    }

    pub fn log_softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis("log_softmax", x, axis)?;
        let t = self.value(x);
        let (o, l, i) = split_axis(t.shape(), axis);
        let value = Tensor::from_parts(t.shape().to_vec(), kernels::log_softmax(t.data(), o, l, i));
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::LogSoftmax { x, axis }, rg))
    }

    /// Layer normalization over the last axis with biased variance.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Parameter(format!(
                "layer_norm: eps must be > 0, got {eps}"
            )));
        }
        let c = *self.shape(x).last().unwrap_or(&1);
        for p in [gain, bias] {
            if self.shape(p) != [c] {
                return Err(Error::dim("layer_norm", self.shape(x), self.shape(p)));
            }
        }
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let t = self.value(x);
        let rows = t.numel() / c;
        let mut xhat = Vec::with_capacity(t.numel());
        let mut inv_std = Vec::with_capacity(rows);
        let mut out = Vec::with_capacity(t.numel());
        for row in t.data().chunks(c) {
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std.push(is);
            for (j, v) in row.iter().enumerate() {
                let h = (v - mean) * is;
                xhat.push(h);
                out.push(h * g[j] + b[j]);
            }
        }
        let value = Tensor::from_parts(t.shape().to_vec(), out);
        let rg = self.rg(&[x, gain, bias]);
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
            rg,
        ))
    }

    /// Row-major relabeling to a new shape with the same element count.
    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).reshape(shape)?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Reshape(x), rg))
    }

    /// Reorders axes: output axis `d` is input axis `axes[d]`.
    pub fn permute(&mut self, x: Var, axes: &[usize]) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let mut seen = vec![false; shape.len()];
        let valid = axes.len() == shape.len()
            && axes
                .iter()
                .all(|&a| a < shape.len() && !std::mem::replace(&mut seen[a], true));
        if !valid {
            return Err(Error::dim("permute", &shape, axes));
        }
        let (out_shape, gather) = kernels::permute_index(&shape, axes);
        let src = self.value(x).data();
        let data = gather.iter().map(|&g| src[g]).collect();
        let rg = self.rg(&[x]);
        Ok(self.push(
            Tensor::from_parts(out_shape, data),
            Op::Permute { x, gather },
            rg,
        ))
    }

    /// Matrix transpose of a 2-d tensor.
    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        self.value(x).dims2("transpose")?;
        self.permute(x, &[1, 0])
    }

    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::Contract("concat of zero tensors".into()))?;
        self.check_axis("concat", first, axis)?;
        let base = self.shape(first).to_vec();
        let mut axis_total = 0;
        for &v in inputs {
            let s = self.shape(v);
            let agrees = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (a, b))| d == axis || a == b);
            if !agrees {
                return Err(Error::dim("concat", &base, s));
            }
            axis_total += s[axis];
        }
        let (outer, _, inner) = split_axis(&base, axis);
        let mut data = Vec::with_capacity(outer * axis_total * inner);
        for o in 0..outer {
            for &v in inputs {
                let t = self.value(v);
                let chunk = t.shape()[axis] * inner;
                data.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = axis_total;
        let rg = self.rg(inputs);
        Ok(self.push(
            Tensor::from_parts(shape, data),
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            rg,
        ))
    }

    /// Slice `start..start + len` along `axis`.
    pub fn narrow(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        self.check_axis("narrow", x, axis)?;
        let shape = self.shape(x).to_vec();
        if len == 0 || start + len > shape[axis] {
            return Err(Error::Contract(format!(
                "narrow: range {start}..{} exceeds extent {} of axis {axis}",
                start + len,
                shape[axis]
            )));
        }
        let (outer, ext, inner) = split_axis(&shape, axis);
        let src = self.value(x).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * ext + start) * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        let rg = self.rg(&[x]);
        Ok(self.push(
            Tensor::from_parts(out_shape, data),
            Op::Narrow { x, axis, start },
            rg,
        ))
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    /// Mean along `axis`; the axis is removed from the shape.
    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.check_axis("mean_axis", x, axis)?;
        let shape = self.shape(x).to_vec();
        let (outer, len, inner) = split_axis(&shape, axis);
        let src = self.value(x).data();
        let mut data = vec![0.0; outer * inner];
        for o in 0..outer {
            for a in 0..len {
                let row = &src[(o * len + a) * inner..(o * len + a + 1) * inner];
                for (d, v) in data[o * inner..(o + 1) * inner].iter_mut().zip(row) {
                    *d += v;
                }
            }
        }
        data.iter_mut().for_each(|d| *d /= len as f64);
        let mut out_shape = shape;
        out_shape.remove(axis);
        let rg = self.rg(&[x]);
        Ok(self.push(
            Tensor::from_parts(out_shape, data),
            Op::MeanAxis { x, axis },
            rg,
        ))
    }

    /// Mean over rows of `-log softmax(logits)[row, label]` for `logits` of
    /// shape batch × classes, computed in log space.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (b, k) = self.value(logits).dims2("cross_entropy")?;
        if labels.len() != b {
            return Err(Error::dim("cross_entropy", &[b, k], &[labels.len()]));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Contract(format!(
                "cross_entropy: label {bad} invalid for {k} classes"
            )));
        }
        let logp = kernels::log_softmax(self.value(logits).data(), b, k, 1);
        let loss = -labels
            .iter()
            .enumerate()
            .map(|(r, &l)| logp[r * k + l])
            .sum::<f64>()
            / b as f64;
        let probs = logp.iter().map(|v| v.exp()).collect();
        let rg = self.rg(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            rg,
        ))
    }

    /// Records an op whose forward value was computed by the caller and whose
    /// adjoint is supplied as `vjp`.
    pub fn custom(&mut self, inputs: &[Var], value: Tensor, vjp: VjpFn) -> Var {
        let rg = self.rg(inputs);
        self.push(
            value,
            Op::Custom {
                inputs: inputs.to_vec(),
                vjp,
            },
            rg,
        )
    }

    /// Populates gradients of the scalar `loss` with respect to every node
    /// that requires one. Errors if the loss is not a scalar or if backward
    /// already ran since the last recorded op.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.ran_backward {
            return Err(Error::Contract(
                "backward already ran on this tape; record a new forward first".into(),
            ));
        }
        if !self.value(loss).is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        self.grads = grads;
        self.ran_backward = true;
        Ok(())
    }

    fn acc(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.nodes[v.0].value.numel()]);
        f(slot);
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let val = |v: Var| self.nodes[v.0].value.data();
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul { a, b, m, k, n } => {
                self.acc(grads, a, |ga| kernels::matmul_nt(g, val(b), ga, m, n, k));
                self.acc(grads, b, |gb| kernels::matmul_tn(val(a), g, gb, k, m, n));
            }
            &Op::Add(a, b) => {
                for v in [a, b] {
                    self.acc(grads, v, |gv| add_into(gv, g));
                }
            }
            &Op::Sub(a, b) => {
                self.acc(grads, a, |ga| add_into(ga, g));
                self.acc(grads, b, |gb| {
                    gb.iter_mut().zip(g).for_each(|(d, s)| *d -= s)
                });
            }
            &Op::Mul(a, b) => {
                self.acc(grads, a, |ga| {
                    for ((d, s), y) in ga.iter_mut().zip(g).zip(val(b)) {
                        *d += s * y;
                    }
                });
                self.acc(grads, b, |gb| {
                    for ((d, s), x) in gb.iter_mut().zip(g).zip(val(a)) {
                        *d += s * x;
                    }
                });
            }
            &Op::AddBias { x, bias } => {
                self.acc(grads, x, |gx| add_into(gx, g));
                let c = self.nodes[bias.0].value.numel();
                self.acc(grads, bias, |gb| {
                    for row in g.chunks(c) {
                        add_into(gb, row);
                    }
                });
            }
            &Op::Scale { x, factor } => {
                self.acc(grads, x, |gx| {
                    gx.iter_mut().zip(g).for_each(|(d, s)| *d += s * factor)
                });
            }
            &Op::Relu(x) => {
                self.acc(grads, x, |gx| {
                    for ((d, s), xv) in gx.iter_mut().zip(g).zip(val(x)) {
                        if *xv > 0.0 {
                            *d += s;
                        }
                    }
                });
            }
            &Op::Gelu(x) => {
                self.acc(grads, x, |gx| {
                    for ((d, s), &xv) in gx.iter_mut().zip(g).zip(val(x)) {
                        *d += s * kernels::gelu_grad(xv);
                    }
                });
            }
            &Op::Softmax { x, axis } => {
                let y = node.value.data();
                let (outer, len, inner) = split_axis(node.value.shape(), axis);
                self.acc(grads, x, |gx| {
                    for o in 0..outer {
                        for n in 0..inner {
                            let idx = |a: usize| (o * len + a) * inner + n;
                            let dot: f64 = (0..len).map(|a| g[idx(a)] * y[idx(a)]).sum();
                            for a in 0..len {
                                gx[idx(a)] += y[idx(a)] * (g[idx(a)] - dot);
                            }
                        }
                    }
                });
            }
            &Op::LogSoftmax { x, axis } => {
                let y = node.value.data();
                let (outer, len, inner) = split_axis(node.value.shape(), axis);
                self.acc(grads, x, |gx| {
                    for o in 0..outer {
                        for n in 0..inner {
                            let idx = |a: usize| (o * len + a) * inner + n;
                            let total: f64 = (0..len).map(|a| g[idx(a)]).sum();
                            for a in 0..len {
                                gx[idx(a)] += g[idx(a)] - y[idx(a)].exp() * total;
                            }
                        }
                    }
                });
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let c = self.nodes[gain.0].value.numel();
                let gain_v = val(*gain);
                self.acc(grads, *x, |gx| {
                    let cf = c as f64;
                    for (r, is) in inv_std.iter().enumerate() {
                        let rows = r * c..(r + 1) * c;
                        let (gr, hr) = (&g[rows.clone()], &xhat[rows.clone()]);
                        let dh: Vec<f64> = gr.iter().zip(gain_v).map(|(a, b)| a * b).collect();
                        let sum_dh: f64 = dh.iter().sum();
                        let sum_dh_h: f64 = dh.iter().zip(hr).map(|(a, b)| a * b).sum();
                        for (j, d) in gx[rows].iter_mut().enumerate() {
                            *d += is / cf * (cf * dh[j] - sum_dh - hr[j] * sum_dh_h);
                        }
                    }
                });
                self.acc(grads, *gain, |gg| {
                    for (gr, hr) in g.chunks(c).zip(xhat.chunks(c)) {
                        for ((d, a), b) in gg.iter_mut().zip(gr).zip(hr) {
                            *d += a * b;
                        }
                    }
                });
                self.acc(grads, *bias, |gb| {
                    for gr in g.chunks(c) {
                        add_into(gb, gr);
                    }
                });
            }
            &Op::Reshape(x) => self.acc(grads, x, |gx| add_into(gx, g)),
            Op::Permute { x, gather } => {
                self.acc(grads, *x, |gx| {
                    for (s, &src) in g.iter().zip(gather) {
                        gx[src] += s;
                    }
                });
            }
            Op::Concat { inputs, axis } => {
                let (outer, total, inner) = split_axis(node.value.shape(), *axis);
                let mut offset = 0;
                for &v in inputs {
                    let ext = self.nodes[v.0].value.shape()[*axis];
                    self.acc(grads, v, |gv| {
                        for o in 0..outer {
                            let src = &g
                                [(o * total + offset) * inner..(o * total + offset + ext) * inner];
                            add_into(&mut gv[o * ext * inner..(o + 1) * ext * inner], src);
                        }
                    });
                    offset += ext;
                }
            }
            &Op::Narrow { x, axis, start } => {
                let (outer, ext, inner) = split_axis(self.nodes[x.0].value.shape(), axis);
                let len = node.value.shape()[axis];
                self.acc(grads, x, |gx| {
                    for o in 0..outer {
                        let dst = (o * ext + start) * inner;
                        add_into(
                            &mut gx[dst..dst + len * inner],
                            &g[o * len * inner..(o + 1) * len * inner],
                        );
                    }
                });
            }
            &Op::Sum(x) => self.acc(grads, x, |gx| gx.iter_mut().for_each(|d| *d += g[0])),
            &Op::MeanAxis { x, axis } => {
                let (outer, len, inner) = split_axis(self.nodes[x.0].value.shape(), axis);
                let scale = 1.0 / len as f64;
                self.acc(grads, x, |gx| {
                    for o in 0..outer {
                        for a in 0..len {
                            let dst = &mut gx[(o * len + a) * inner..(o * len + a + 1) * inner];
                            for (d, s) in dst.iter_mut().zip(&g[o * inner..(o + 1) * inner]) {
                                *d += s * scale;
                            }
                        }
                    }
                });
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
            } => {
                let k = probs.len() / labels.len();
                let scale = g[0] / labels.len() as f64;
                self.acc(grads, *logits, |gl| {
                    for (r, &l) in labels.iter().enumerate() {
                        for c in 0..k {
                            let target = if c == l { 1.0 } else { 0.0 };
                            gl[r * k + c] += scale * (probs[r * k + c] - target);
                        }
                    }
                });
            }
            Op::Custom { inputs, vjp } => {
                let in_vals: Vec<&Tensor> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
                let g_t = Tensor::from_parts(node.value.shape().to_vec(), g.to_vec());
                let in_grads = vjp(&in_vals, &node.value, &g_t);
                for (&v, gi) in inputs.iter().zip(in_grads) {
                    self.acc(grads, v, |gv| add_into(gv, gi.data()));
                }
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
