//! Forward and backward passes of the CNN layers, on flat row-major `f64`
//! buffers.

use rand::Rng;

use crate::encode::SequenceMatrix;
use crate::error::{Error, Result};

/// Index of kernel weight `(offset i, channel c, filter k)`.
#[inline]
pub fn kernel_index(i: usize, c: usize, k: usize, channels: usize, filters: usize) -> usize {
    (i * channels + c) * filters + k
}

fn check_conv(
    len: usize,
    xlen: usize,
    ch: usize,
    kernel: usize,
    width: usize,
    filters: usize,
) -> Result<()> {
    if width == 0 || width > len {
        return Err(Error::Shape(format!(
            "kernel width {width} for sequence length {len}"
        )));
    }
    if xlen != len * ch {
        return Err(Error::Shape(format!(
            "input has {xlen} values, expected {len}x{ch}"
        )));
    }
    if kernel != width * ch * filters {
        return Err(Error::Shape(format!(
            "kernel has {kernel} values, expected {width}x{ch}x{filters}"
        )));
    }
    Ok(())
}

/// Valid 1-d convolution: `out[t,k] = b[k] + sum_{i,c} x[t+i,c] * w[i,c,k]`.
/// Output is `(len - width + 1) x filters`.
pub fn conv1d_forward(
    x: &[f64],
    len: usize,
    channels: usize,
    kernel: &[f64],
    bias: &[f64],
    width: usize,
) -> Result<Vec<f64>> {
    let filters = bias.len();
    check_conv(len, x.len(), channels, kernel.len(), width, filters)?;
    let out_len = len - width + 1;
    let mut out = Vec::with_capacity(out_len * filters);
    for _ in 0..out_len {
        out.extend_from_slice(bias);
    }
    for t in 0..out_len {
        let o = &mut out[t * filters..(t + 1) * filters];
        for i in 0..width {
            let row = &x[(t + i) * channels..(t + i + 1) * channels];
            for (c, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let w = &kernel[kernel_index(i, c, 0, channels, filters)..][..filters];
                for (ok, &wk) in o.iter_mut().zip(w) {
                    *ok += v * wk;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub dx: Vec<f64>,
    pub dkernel: Vec<f64>,
    pub dbias: Vec<f64>,
}

pub fn conv1d_backward(
    x: &[f64],
    len: usize,
    channels: usize,
    kernel: &[f64],
    width: usize,
    filters: usize,
    dout: &[f64],
) -> Result<ConvGrads> {
    check_conv(len, x.len(), channels, kernel.len(), width, filters)?;
    let out_len = len - width + 1;
    if dout.len() != out_len * filters {
        return Err(Error::Shape(format!(
            "upstream gradient has {} values, expected {out_len}x{filters}",
            dout.len()
        )));
    }
    let mut g = ConvGrads {
        dx: vec![0.0; x.len()],
        dkernel: vec![0.0; kernel.len()],
        dbias: vec![0.0; filters],
    };
    for t in 0..out_len {
        let d = &dout[t * filters..(t + 1) * filters];
        for (b, &dk) in g.dbias.iter_mut().zip(d) {
            *b += dk;
        }
        for i in 0..width {
            for c in 0..channels {
                let base = kernel_index(i, c, 0, channels, filters);
                let v = x[(t + i) * channels + c];
                let mut acc = 0.0;
                for k in 0..filters {
                    acc += d[k] * kernel[base + k];
                    g.dkernel[base + k] += v * d[k];
                }
                g.dx[(t + i) * channels + c] += acc;
            }
        }
    }
    Ok(g)
}

/// Convolution over a sparse sequence matrix. Matches `conv1d_forward` on
/// `x.to_dense()`.
pub fn conv1d_forward_seq(
    x: &SequenceMatrix,
    kernel: &[f64],
    bias: &[f64],
    width: usize,
) -> Result<Vec<f64>> {
    let len = x.rows();
    let channels = x.width();
    let filters = bias.len();
    check_conv(len, len * channels, channels, kernel.len(), width, filters)?;
    let out_len = len - width + 1;
    let mut out = Vec::with_capacity(out_len * filters);
    for _ in 0..out_len {
        out.extend_from_slice(bias);
    }
    // Each input row adds into up to `width` output rows.
    for r in 0..len {
        let lo = r.saturating_sub(width - 1);
        let hi = r.min(out_len - 1);
        if lo > hi {
            continue;
        }
        x.for_each_nonzero(r, |c, v| {
            for t in lo..=hi {
                let i = r - t;
                let w = &kernel[kernel_index(i, c, 0, channels, filters)..][..filters];
                let o = &mut out[t * filters..(t + 1) * filters];
                for (ok, &wk) in o.iter_mut().zip(w) {
                    *ok += v * wk;
                }
            }
        });
    }
    Ok(out)
}

/// Accumulates kernel and bias gradients for a sparse input. The input
/// gradient is not needed for a first layer and is not computed.
pub fn conv1d_backward_seq(
    x: &SequenceMatrix,
    width: usize,
    filters: usize,
    dout: &[f64],
    dkernel: &mut [f64],
    dbias: &mut [f64],
) -> Result<()> {
    let len = x.rows();
    let channels = x.width();
    check_conv(len, len * channels, channels, dkernel.len(), width, filters)?;
    let out_len = len - width + 1;
    if dout.len() != out_len * filters || dbias.len() != filters {
        return Err(Error::Shape("conv gradient buffers".into()));
    }
    for t in 0..out_len {
        for (b, &d) in dbias.iter_mut().zip(&dout[t * filters..(t + 1) * filters]) {
            *b += d;
        }
    }
    for r in 0..len {
        let lo = r.saturating_sub(width - 1);
        let hi = r.min(out_len - 1);
        if lo > hi {
            continue;
        }
        x.for_each_nonzero(r, |c, v| {
            for t in lo..=hi {
                let i = r - t;
                let dk = &mut dkernel[kernel_index(i, c, 0, channels, filters)..][..filters];
                for (g, &d) in dk.iter_mut().zip(&dout[t * filters..(t + 1) * filters]) {
                    *g += v * d;
                }
            }
        });
    }
    Ok(())
}

/// Column-wise max over `len` rows of width `k`, with the first argmax row
/// of each column.
pub fn maxpool_forward(x: &[f64], len: usize, k: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if len == 0 || k == 0 {
        return Err(Error::Empty("max pooling input"));
    }
    if x.len() != len * k {
        return Err(Error::Shape(format!(
            "pool input {} values, expected {len}x{k}",
            x.len()
        )));
    }
    let mut out = x[..k].to_vec();
    let mut arg = vec![0usize; k];
    for t in 1..len {
        for j in 0..k {
            let v = x[t * k + j];
            if v > out[j] {
                out[j] = v;
                arg[j] = t;
            }
        }
    }
    Ok((out, arg))
}

pub fn maxpool_backward(argmax: &[usize], len: usize, dout: &[f64]) -> Vec<f64> {
    let k = argmax.len();
    let mut dx = vec![0.0; len * k];
    for (j, (&t, &d)) in argmax.iter().zip(dout).enumerate() {
        dx[t * k + j] += d;
    }
    dx
}

/// `y = W x + b` with `W` of shape `m x n`, row-major.
pub fn dense_forward(x: &[f64], w: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (b.len(), x.len());
    if w.len() != m * n {
        return Err(Error::Shape(format!(
            "weights {} values, expected {m}x{n}",
            w.len()
        )));
    }
    Ok(b.iter()
        .enumerate()
        .map(|(r, &br)| {
            br + w[r * n..(r + 1) * n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub dx: Vec<f64>,
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

pub fn dense_backward(x: &[f64], w: &[f64], dout: &[f64]) -> Result<DenseGrads> {
    let (m, n) = (dout.len(), x.len());
    if w.len() != m * n {
        return Err(Error::Shape(format!(
            "weights {} values, expected {m}x{n}",
            w.len()
        )));
    }
    let mut dx = vec![0.0; n];
    let mut dw = vec![0.0; m * n];
    for r in 0..m {
        let d = dout[r];
        let row = &w[r * n..(r + 1) * n];
        for c in 0..n {
            dx[c] += d * row[c];
            dw[r * n + c] = d * x[c];
        }
    }
    Ok(DenseGrads {
        dx,
        dw,
        db: dout.to_vec(),
    })
}

pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Gradient is zero where the input is not positive.
pub fn relu_backward(x: &[f64], dout: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(dout)
        .map(|(&v, &d)| if v > 0.0 { d } else { 0.0 })
        .collect()
}

/// Inverted dropout mask: each entry is 0 with probability `p`, else
/// `1 / (1 - p)`.
pub fn dropout_mask<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate {p} outside [0, 1)"
        )));
    }
    let keep = 1.0 / (1.0 - p);
    Ok((0..n)
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
        .collect())
}

/// Applies a mask; `None` is evaluation mode and the identity.
pub fn dropout_forward(x: &[f64], mask: Option<&[f64]>) -> Vec<f64> {
    match mask {
        Some(m) => x.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => x.to_vec(),
    }
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of the softmax against `label`, with its gradient
/// `softmax(logits) - onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "label {label} for {} classes",
            logits.len()
        )));
    }
    let top = argmax_first(logits);
    let max = logits[top];
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != top)
        .map(|(_, &z)| (z - max).exp())
        .sum();
    // log-sum-exp minus the max, accurate when the max dominates
    let loss = (max - logits[label]) + rest.ln_1p();
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss.max(0.0), grad))
}
