//! Central finite-difference checks of every layer's backward pass.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cnn::{Cnn, CnnConfig};
use super::layers::*;
use crate::encode::{RowContent, SequenceMatrix};
use crate::error::Result;

pub const EPSILON: f64 = 1e-4;

/// Worst relative error of one layer check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub layer: &'static str,
    pub shape: String,
    pub max_rel_error: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `f` around `x`.
pub fn compare<F>(x: &[f64], analytic: &[f64], mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + EPSILON;
        let up = f(&probe)?;
        probe[i] = x[i] - EPSILON;
        let down = f(&probe)?;
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * EPSILON);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Values bounded away from zero, so ReLU kinks are never straddled.
fn off_zero(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v = rng.gen_range(0.05..1.0);
            if rng.gen() {
                v
            } else {
                -v
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs one randomized round of checks over all layers.
pub fn check_round(seed: u64) -> Result<Vec<GradCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // conv1d (dense input): loss = r . conv(x)
    let len = rng.gen_range(2..8);
    let ch = rng.gen_range(1..5);
    let width = rng.gen_range(1..=len.min(4));
    let filters = rng.gen_range(1..5);
    let x = uniform(&mut rng, len * ch);
    let kernel = uniform(&mut rng, width * ch * filters);
    let bias = uniform(&mut rng, filters);
    let out_len = len - width + 1;
    let r = uniform(&mut rng, out_len * filters);
    let g = conv1d_backward(&x, len, ch, &kernel, width, filters, &r)?;
    let shape = format!("L={len} C={ch} w={width} K={filters}");
    let ex = compare(&x, &g.dx, |p| {
        Ok(dot(&r, &conv1d_forward(p, len, ch, &kernel, &bias, width)?))
    })?;
    let ek = compare(&kernel, &g.dkernel, |p| {
        Ok(dot(&r, &conv1d_forward(&x, len, ch, p, &bias, width)?))
    })?;
    let eb = compare(&bias, &g.dbias, |p| {
        Ok(dot(&r, &conv1d_forward(&x, len, ch, &kernel, p, width)?))
    })?;
    out.push(GradCheck {
        layer: "conv1d",
        shape: shape.clone(),
        max_rel_error: ex.max(ek).max(eb),
    });

    // conv1d over a sparse sequence matrix
    let cw = rng.gen_range(2..6);
    let seq = SequenceMatrix {
        content: RowContent::OneHot {
            ids: (0..len)
                .map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(0..cw)))
                .collect(),
            width: cw,
        },
        position: (0..len).map(|_| rng.gen_bool(0.3)).collect(),
        features: std::array::from_fn(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }),
    };
    let sch = seq.width();
    let skernel = uniform(&mut rng, width * sch * filters);
    let mut dk = vec![0.0; skernel.len()];
    let mut db = vec![0.0; filters];
    conv1d_backward_seq(&seq, width, filters, &r, &mut dk, &mut db)?;
    let ek = compare(&skernel, &dk, |p| {
        Ok(dot(&r, &conv1d_forward_seq(&seq, p, &bias, width)?))
    })?;
    let eb = compare(&bias, &db, |p| {
        Ok(dot(&r, &conv1d_forward_seq(&seq, &skernel, p, width)?))
    })?;
    out.push(GradCheck {
        layer: "conv1d_sparse",
        shape: format!("L={len} C={sch} w={width} K={filters}"),
        max_rel_error: ek.max(eb),
    });

    // global max pool, with well-separated values
    let mut ranks: Vec<usize> = (0..len * filters).collect();
    ranks.shuffle(&mut rng);
    let px: Vec<f64> = ranks
        .iter()
        .map(|&k| k as f64 * 0.1 + rng.gen_range(0.0..0.01))
        .collect();
    let pr = uniform(&mut rng, filters);
    let (_, arg) = maxpool_forward(&px, len, filters)?;
    let dpx = maxpool_backward(&arg, len, &pr);
    let ep = compare(&px, &dpx, |p| {
        Ok(dot(&pr, &maxpool_forward(p, len, filters)?.0))
    })?;
    out.push(GradCheck {
        layer: "maxpool",
        shape: format!("L={len} K={filters}"),
        max_rel_error: ep,
    });

    // dense
    let (m, n) = (rng.gen_range(1..7), rng.gen_range(1..7));
    let dxv = uniform(&mut rng, n);
    let w = uniform(&mut rng, m * n);
    let b = uniform(&mut rng, m);
    let dr = uniform(&mut rng, m);
    let g = dense_backward(&dxv, &w, &dr)?;
    let e1 = compare(&dxv, &g.dx, |p| Ok(dot(&dr, &dense_forward(p, &w, &b)?)))?;
    let e2 = compare(&w, &g.dw, |p| Ok(dot(&dr, &dense_forward(&dxv, p, &b)?)))?;
    let e3 = compare(&b, &g.db, |p| Ok(dot(&dr, &dense_forward(&dxv, &w, p)?)))?;
    out.push(GradCheck {
        layer: "dense",
        shape: format!("{m}x{n}"),
        max_rel_error: e1.max(e2).max(e3),
    });

    // relu
    let rx = off_zero(&mut rng, n);
    let rr = uniform(&mut rng, n);
    let dr_x = relu_backward(&rx, &rr);
    let er = compare(&rx, &dr_x, |p| Ok(dot(&rr, &relu_forward(p))))?;
    out.push(GradCheck {
        layer: "relu",
        shape: format!("{n}"),
        max_rel_error: er,
    });

    // dropout with a fixed mask
    let mask = dropout_mask(n, 0.5, &mut rng)?;
    let dd = dropout_forward(&rr, Some(&mask));
    let ed = compare(&rx, &dd, |p| Ok(dot(&rr, &dropout_forward(p, Some(&mask)))))?;
    out.push(GradCheck {
        layer: "dropout",
        shape: format!("{n}"),
        max_rel_error: ed,
    });

    // softmax cross-entropy
    let classes = rng.gen_range(2..6);
    let logits: Vec<f64> = (0..classes).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let label = rng.gen_range(0..classes);
    let (_, dl) = softmax_cross_entropy(&logits, label)?;
    let es = compare(&logits, &dl, |p| Ok(softmax_cross_entropy(p, label)?.0))?;
    out.push(GradCheck {
        layer: "softmax_ce",
        shape: format!("C={classes}"),
        max_rel_error: es,
    });

    // the whole CNN, dropout on with a fixed mask seed
    let config = CnnConfig {
        input_width: seq.width(),
        kernel_width: width,
        filters,
        hidden: rng.gen_range(2..6),
        dropout: 0.5,
        classes,
    };
    let model = Cnn::new(config.clone(), rng.gen())?;
    let mask_seed: u64 = rng.gen();
    let mut grad = vec![0.0; model.param_count()];
    model.loss_and_grad(
        &seq,
        label,
        Some(&mut ChaCha8Rng::seed_from_u64(mask_seed)),
        &mut grad,
    )?;
    let params = model.params().to_vec();
    let mut probe = model.clone();
    let ec = compare(&params, &grad, |p| {
        probe.params_mut().copy_from_slice(p);
        let mut sink = vec![0.0; p.len()];
        probe.loss_and_grad(
            &seq,
            label,
            Some(&mut ChaCha8Rng::seed_from_u64(mask_seed)),
            &mut sink,
        )
    })?;
    out.push(GradCheck {
        layer: "cnn",
        shape: format!(
            "L={len} C={} w={width} K={filters} H={} classes={classes}",
            seq.width(),
            config.hidden
        ),
        max_rel_error: ec,
    });
    Ok(out)
}
