use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::*;
use super::Tensor;
use crate::encode::SequenceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    /// Columns per input row.
    pub input_width: usize,
    pub kernel_width: usize,
    pub filters: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub classes: usize,
}

impl CnnConfig {
    pub fn new(input_width: usize, classes: usize) -> Self {
        CnnConfig {
            input_width,
            kernel_width: 3,
            filters: 64,
            hidden: 64,
            dropout: 0.5,
            classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 || self.kernel_width == 0 || self.filters == 0 || self.hidden == 0
        {
            return Err(Error::InvalidArgument(
                "CNN dimensions must be positive".into(),
            ));
        }
        if self.classes < 2 {
            return Err(Error::InvalidArgument(
                "CNN needs at least 2 classes".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    fn layout(&self) -> Layout {
        let conv_w = self.kernel_width * self.input_width * self.filters;
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        Layout {
            conv_w: take(conv_w),
            conv_b: take(self.filters),
            fc1_w: take(self.hidden * self.filters),
            fc1_b: take(self.hidden),
            fc2_w: take(self.classes * self.hidden),
            fc2_b: take(self.classes),
        }
    }
}

struct Layout {
    conv_w: Range<usize>,
    conv_b: Range<usize>,
    fc1_w: Range<usize>,
    fc1_b: Range<usize>,
    fc2_w: Range<usize>,
    fc2_b: Range<usize>,
}

impl Layout {
    fn total(&self) -> usize {
        self.fc2_b.end
    }
}

/// conv -> global max pool -> dense -> dropout -> ReLU -> dense -> softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    config: CnnConfig,
    params: Vec<f64>,
}

struct Cache {
    conv_len: usize,
    argmax: Vec<usize>,
    pooled: Vec<f64>,
    hidden_pre: Vec<f64>,
    mask: Option<Vec<f64>>,
    hidden_act: Vec<f64>,
    logits: Vec<f64>,
}

fn glorot<R: Rng>(rng: &mut R, out: &mut [f64], fan_in: usize, fan_out: usize) {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in out {
        *w = rng.gen_range(-a..a);
    }
}

impl Cnn {
    pub fn new(config: CnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let l = config.layout();
        let mut params = vec![0.0; l.total()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        glorot(
            &mut rng,
            &mut params[l.conv_w.clone()],
            config.kernel_width * config.input_width,
            config.filters,
        );
        glorot(
            &mut rng,
            &mut params[l.fc1_w.clone()],
            config.filters,
            config.hidden,
        );
        glorot(
            &mut rng,
            &mut params[l.fc2_w.clone()],
            config.hidden,
            config.classes,
        );
        Ok(Cnn { config, params })
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &SequenceMatrix) -> Result<()> {
        if x.width() != self.config.input_width {
            return Err(Error::Shape(format!(
                "input width {} for a model expecting {}",
                x.width(),
                self.config.input_width
            )));
        }
        Ok(())
    }

    fn forward(&self, x: &SequenceMatrix, rng: Option<&mut ChaCha8Rng>) -> Result<Cache> {
        self.check_input(x)?;
        let c = &self.config;
        let l = c.layout();
        let p = &self.params;
        let conv = conv1d_forward_seq(x, &p[l.conv_w], &p[l.conv_b], c.kernel_width)?;
        let conv_len = x.rows() - c.kernel_width + 1;
        let (pooled, argmax) = maxpool_forward(&conv, conv_len, c.filters)?;
        let hidden_pre = dense_forward(&pooled, &p[l.fc1_w], &p[l.fc1_b])?;
        let mask = match rng {
            Some(r) if c.dropout > 0.0 => Some(dropout_mask(c.hidden, c.dropout, r)?),
            _ => None,
        };
        let dropped = dropout_forward(&hidden_pre, mask.as_deref());
        let hidden_act = relu_forward(&dropped);
        let logits = dense_forward(&hidden_act, &p[l.fc2_w], &p[l.fc2_b])?;
        Ok(Cache {
            conv_len,
            argmax,
            pooled,
            hidden_pre,
            mask,
            hidden_act,
            logits,
        })
    }

    pub fn logits(&self, x: &SequenceMatrix) -> Result<Vec<f64>> {
        Ok(self.forward(x, None)?.logits)
    }

    pub fn predict_proba(&self, x: &SequenceMatrix) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Most probable class; the lowest index wins ties.
    pub fn predict(&self, x: &SequenceMatrix) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Evaluation-mode loss.
    pub fn loss(&self, x: &SequenceMatrix, label: usize) -> Result<f64> {
        let cache = self.forward(x, None)?;
        Ok(softmax_cross_entropy(&cache.logits, label)?.0)
    }

    /// Loss and gradient for one sample, accumulated into `grad`. Passing an
    /// rng enables dropout.
    pub fn loss_and_grad(
        &self,
        x: &SequenceMatrix,
        label: usize,
        rng: Option<&mut ChaCha8Rng>,
        grad: &mut [f64],
    ) -> Result<f64> {
        if grad.len() != self.params.len() {
            return Err(Error::Shape("gradient buffer size".into()));
        }
        let cache = self.forward(x, rng)?;
        let c = &self.config;
        let l = c.layout();
        let p = &self.params;
        let (loss, dlogits) = softmax_cross_entropy(&cache.logits, label)?;

        let g2 = dense_backward(&cache.hidden_act, &p[l.fc2_w.clone()], &dlogits)?;
        add(&mut grad[l.fc2_w.clone()], &g2.dw);
        add(&mut grad[l.fc2_b.clone()], &g2.db);
        let dropped = dropout_forward(&cache.hidden_pre, cache.mask.as_deref());
        let d_dropped = relu_backward(&dropped, &g2.dx);
        let d_hidden = dropout_forward(&d_dropped, cache.mask.as_deref());

        let g1 = dense_backward(&cache.pooled, &p[l.fc1_w.clone()], &d_hidden)?;
        add(&mut grad[l.fc1_w.clone()], &g1.dw);
        add(&mut grad[l.fc1_b.clone()], &g1.db);

        let dconv = maxpool_backward(&cache.argmax, cache.conv_len, &g1.dx);
        let (head, tail) = grad.split_at_mut(l.conv_b.start);
        conv1d_backward_seq(
            x,
            c.kernel_width,
            c.filters,
            &dconv,
            &mut head[l.conv_w.clone()],
            &mut tail[..c.filters],
        )?;
        Ok(loss)
    }

    pub fn to_tensors(&self) -> Vec<Tensor> {
        let c = &self.config;
        let l = c.layout();
        let t = |name: &str, shape: Vec<usize>, r: Range<usize>| Tensor {
            name: name.to_string(),
            shape,
            data: self.params[r].to_vec(),
        };
        vec![
            t(
                "conv.weight",
                vec![c.kernel_width, c.input_width, c.filters],
                l.conv_w,
            ),
            t("conv.bias", vec![c.filters], l.conv_b),
            t("fc1.weight", vec![c.hidden, c.filters], l.fc1_w),
            t("fc1.bias", vec![c.hidden], l.fc1_b),
            t("fc2.weight", vec![c.classes, c.hidden], l.fc2_w),
            t("fc2.bias", vec![c.classes], l.fc2_b),
        ]
    }

    pub fn from_tensors(config: CnnConfig, tensors: &[Tensor]) -> Result<Self> {
        config.validate()?;
        let expected = Cnn {
            params: vec![0.0; config.layout().total()],
            config: config.clone(),
        }
        .to_tensors();
        if tensors.len() != expected.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} tensors, expected {}",
                tensors.len(),
                expected.len()
            )));
        }
        let mut params = Vec::with_capacity(expected.iter().map(|t| t.data.len()).sum());
        for (got, want) in tensors.iter().zip(&expected) {
            got.validate()?;
            if got.name != want.name || got.shape != want.shape {
                return Err(Error::Format(format!(
                    "tensor {} {:?} does not match {} {:?}",
                    got.name, got.shape, want.name, want.shape
                )));
            }
            params.extend_from_slice(&got.data);
        }
        Ok(Cnn { config, params })
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Index of the largest value; the first wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
