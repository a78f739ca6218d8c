use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::BowSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    /// Passes over the training set; each pass is `n` stochastic steps.
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            lambda: 1e-4,
            epochs: 30,
            seed: 0,
        }
    }
}

/// One-vs-rest linear max-margin classifier. The last weight of each class
/// multiplies a constant 1 and acts as the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub dim: usize,
    pub classes: usize,
    /// `classes` rows of `dim + 1` weights.
    pub weights: Vec<f64>,
}

/// Weight vector stored as `scale * v` so the L2 shrink is O(1).
struct Scaled {
    v: Vec<f64>,
    scale: f64,
}

impl Scaled {
    fn dot(&self, idx: &[usize]) -> f64 {
        self.scale * idx.iter().map(|&i| self.v[i]).sum::<f64>()
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|x| *x = 0.0);
            self.scale = 1.0;
        } else {
            self.scale *= factor;
            if self.scale < 1e-9 {
                let s = self.scale;
                self.v.iter_mut().for_each(|x| *x *= s);
                self.scale = 1.0;
            }
        }
    }

    fn add(&mut self, idx: &[usize], amount: f64) {
        let a = amount / self.scale;
        for &i in idx {
            self.v[i] += a;
        }
    }

    fn into_vec(self) -> Vec<f64> {
        let s = self.scale;
        self.v.into_iter().map(|x| x * s).collect()
    }
}

fn with_bias(x: &BowSample) -> Vec<usize> {
    let mut idx: Vec<usize> = x.nonzeros().collect();
    idx.push(x.dim());
    idx
}

impl LinearModel {
    /// Pegasos stochastic subgradient descent on the L2-regularized hinge
    /// loss, one binary problem per class.
    pub fn fit(
        samples: &[BowSample],
        labels: &[usize],
        classes: usize,
        config: &LinearConfig,
    ) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: labels.len(),
            });
        }
        if samples.is_empty() {
            return Err(Error::Empty("training samples"));
        }
        if !(config.lambda > 0.0) || config.epochs == 0 {
            return Err(Error::InvalidArgument(
                "lambda must be positive and epochs at least 1".into(),
            ));
        }
        let dim = samples[0].dim();
        if samples.iter().any(|s| s.dim() != dim) {
            return Err(Error::Shape("samples disagree on dimension".into()));
        }
        if labels.iter().any(|&l| l >= classes) {
            return Err(Error::InvalidArgument(
                "label outside the class range".into(),
            ));
        }
        let mut seen = vec![false; classes];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::SingleClass);
        }

        let inputs: Vec<Vec<usize>> = samples.iter().map(with_bias).collect();
        let steps = config.epochs * samples.len();
        let mut weights = Vec::with_capacity(classes * (dim + 1));
        for c in 0..classes {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(c as u64));
            let mut w = Scaled {
                v: vec![0.0; dim + 1],
                scale: 1.0,
            };
            for t in 1..=steps {
                let i = rng.gen_range(0..samples.len());
                let y = if labels[i] == c { 1.0 } else { -1.0 };
                let eta = 1.0 / (config.lambda * t as f64);
                let margin = y * w.dot(&inputs[i]);
                w.shrink(1.0 - eta * config.lambda);
                if margin < 1.0 {
                    w.add(&inputs[i], eta * y);
                }
            }
            weights.extend(w.into_vec());
        }
        Ok(LinearModel {
            dim,
            classes,
            weights,
        })
    }

    pub fn decision(&self, x: &BowSample) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::Shape(format!(
                "sample dimension {} for model {}",
                x.dim(),
                self.dim
            )));
        }
        let idx = with_bias(x);
        Ok((0..self.classes)
            .map(|c| {
                let row = &self.weights[c * (self.dim + 1)..(c + 1) * (self.dim + 1)];
                idx.iter().map(|&i| row[i]).sum()
            })
            .collect())
    }

    /// Class with the largest decision value; the lowest index wins ties.
    pub fn predict(&self, x: &BowSample) -> Result<usize> {
        Ok(crate::nn::argmax(&self.decision(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn sample(indices: &[usize], vocab: usize) -> BowSample {
        BowSample {
            indices: indices.to_vec(),
            vocab_size: vocab,
            features: FeatureVector::default(),
        }
    }

    #[test]
    fn disjoint_vocabularies_separate_perfectly() {
        // class k uses words 3k..3k+3
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..3 {
            for j in 0..3 {
                xs.push(sample(&[3 * k + j], 9));
                xs.push(sample(&[3 * k + j, 3 * k + (j + 1) % 3], 9));
                ys.extend([k, k]);
            }
        }
        let m = LinearModel::fit(&xs, &ys, 3, &LinearConfig::default()).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(m.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn separable_two_class_features() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..20 {
            let f = FeatureVector {
                percentage: i % 2 == 0,
                date: i % 2 == 1,
                ..Default::default()
            };
            xs.push(BowSample {
                indices: vec![i % 5],
                vocab_size: 5,
                features: f,
            });
            ys.push(i % 2);
        }
        let m = LinearModel::fit(&xs, &ys, 2, &LinearConfig::default()).unwrap();
        let acc = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| m.predict(x).unwrap() == y)
            .count();
        assert_eq!(acc, 20);
    }

    #[test]
    fn errors_and_determinism() {
        let xs = vec![sample(&[0], 2), sample(&[1], 2)];
        assert!(matches!(
            LinearModel::fit(&xs, &[0, 0], 2, &LinearConfig::default()),
            Err(Error::SingleClass)
        ));
        assert!(LinearModel::fit(&xs, &[0], 2, &LinearConfig::default()).is_err());
        let a = LinearModel::fit(&xs, &[0, 1], 2, &LinearConfig::default()).unwrap();
        let b = LinearModel::fit(&xs, &[0, 1], 2, &LinearConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.predict(&sample(&[0], 3)).is_err());
    }
}
