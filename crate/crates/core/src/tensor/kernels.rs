//! Raw loops over row-major buffers. No shape checking happens here.

/// `c[m×n] += a[m×k] · b[k×n]`
pub(crate) fn matmul_nn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += av * bv;
            }
        }
    }
}

/// `c[m×n] += a[m×k] · b[n×k]ᵀ`
pub(crate) fn matmul_nt(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            c[i * n + j] += a_row.iter().zip(b_row).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

/// `c[m×n] += a[k×m]ᵀ · b[k×n]`
pub(crate) fn matmul_tn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for p in 0..k {
        let b_row = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let av = a[p * m + i];
            if av == 0.0 {
                continue;
            }
            let c_row = &mut c[i * n..(i + 1) * n];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += av * bv;
            }
        }
    }
}

/// Max-subtracted softmax of every slice along the middle extent.
pub(crate) fn softmax(x: &[f64], outer: usize, len: usize, inner: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for o in 0..outer {
        for i in 0..inner {
            let idx = |a: usize| (o * len + a) * inner + i;
            let max = (0..len)
                .map(|a| x[idx(a)])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for a in 0..len {
                let e = (x[idx(a)] - max).exp();
                out[idx(a)] = e;
                sum += e;
            }
            for a in 0..len {
                out[idx(a)] /= sum;
            }
        }
    }
    out
}

pub(crate) fn log_softmax(x: &[f64], outer: usize, len: usize, inner: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for o in 0..outer {
        for i in 0..inner {
            let idx = |a: usize| (o * len + a) * inner + i;
            let max = (0..len)
                .map(|a| x[idx(a)])
                .fold(f64::NEG_INFINITY, f64::max);
            let lse = max + (0..len).map(|a| (x[idx(a)] - max).exp()).sum::<f64>().ln();
            for a in 0..len {
                out[idx(a)] = x[idx(a)] - lse;
            }
        }
    }
    out
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * shape[d + 1];
    }
    s
}

/// Returns `(out_shape, gather)` where `out[i] = x[gather[i]]` realises the
/// axis permutation `axes` of a tensor with shape `shape`.
pub(crate) fn permute_index(shape: &[usize], axes: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let in_strides = strides(shape);
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let src_strides: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
    let n: usize = shape.iter().product();
    let mut gather = Vec::with_capacity(n);
    let mut counter = vec![0usize; out_shape.len()];
    let mut offset = 0usize;
    for _ in 0..n {
        gather.push(offset);
        // odometer increment over the output index
        for d in (0..out_shape.len()).rev() {
            counter[d] += 1;
            offset += src_strides[d];
            if counter[d] < out_shape[d] {
                break;
            }
            offset -= src_strides[d] * out_shape[d];
            counter[d] = 0;
        }
    }
    (out_shape, gather)
}

pub(crate) fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    let u = C * (x + 0.044715 * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let u = C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let du = C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}
