use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::cnn::Cnn;
use crate::encode::SequenceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 200,
            patience: 20,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "val_fraction {} outside (0, 1)",
                self.val_fraction
            )));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidArgument(
                "patience, batch_size and max_epochs must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
        {
            return Err(Error::InvalidArgument(
                "invalid Adam hyperparameters".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Splits indices into (train, validation), stratified by label. Each class
/// contributes `round(n * fraction)` samples to validation but keeps at
/// least one for training.
pub fn stratified_split(labels: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let n = members.len();
        let k = ((n as f64 * fraction).round() as usize).min(n.saturating_sub(1));
        val.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    if val.is_empty() {
        // Borrow one sample from the largest class that can spare it.
        if let Some(members) = by_class
            .iter()
            .filter(|m| m.len() >= 2)
            .max_by_key(|m| m.len())
        {
            let pick = members[0];
            train.retain(|&i| i != pick);
            val.push(pick);
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn mean_loss(model: &Cnn, xs: &[&SequenceMatrix], ys: &[usize]) -> Result<f64> {
    let losses: Vec<f64> = xs
        .par_iter()
        .zip(ys.par_iter())
        .map(|(x, &y)| model.loss(x, y))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Minibatch Adam on cross-entropy with early stopping on validation loss.
/// Best-validation weights are restored before returning.
///
/// Per-sample gradients are computed in parallel and summed in sample
/// order, so results do not depend on the thread count.
pub fn train(
    model: &mut Cnn,
    samples: &[SequenceMatrix],
    labels: &[usize],
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    if samples.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: samples.len(),
            right: labels.len(),
        });
    }
    let classes = model.config().classes;
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} for {classes} classes"
        )));
    }
    let distinct = {
        let mut seen = vec![false; classes];
        labels.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::SingleClass);
    }

    let (train_idx, val_idx) = stratified_split(labels, config.val_fraction, config.seed);
    let (val_x, val_y): (Vec<&SequenceMatrix>, Vec<usize>) = if val_idx.is_empty() {
        train_idx.iter().map(|&i| (&samples[i], labels[i])).unzip()
    } else {
        val_idx.iter().map(|&i| (&samples[i], labels[i])).unzip()
    };

    let n_params = model.param_count();
    let mut adam = Adam::new(
        n_params,
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_7a1b);
    let mut order = train_idx.clone();
    let mut best = model.params().to_vec();
    let mut best_loss = mean_loss(model, &val_x, &val_y)?;
    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        epochs_run: 0,
    };
    let mut stale = 0;
    let mut grad = vec![0.0; n_params];

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let seeds: Vec<u64> = batch.iter().map(|_| rng.gen()).collect();
            let frozen: &Cnn = model;
            let per_sample: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .zip(seeds.par_iter())
                .map(|(&i, &s)| {
                    let mut g = vec![0.0; n_params];
                    let mut drng = ChaCha8Rng::seed_from_u64(s);
                    let loss =
                        frozen.loss_and_grad(&samples[i], labels[i], Some(&mut drng), &mut g)?;
                    Ok((loss, g))
                })
                .collect::<Result<_>>()?;
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (loss, g) in &per_sample {
                epoch_loss += loss;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(model.params_mut(), &grad);
        }
        let val_loss = mean_loss(model, &val_x, &val_y)?;
        history.train_loss.push(epoch_loss / order.len() as f64);
        history.val_loss.push(val_loss);
        history.epochs_run = epoch;
        log::debug!(
            "epoch {epoch}: train {:.5} val {val_loss:.5}",
            epoch_loss / order.len() as f64
        );
        if val_loss < best_loss {
            best_loss = val_loss;
            best.copy_from_slice(model.params());
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    model.params_mut().copy_from_slice(&best);
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::RowContent;
    use crate::nn::cnn::CnnConfig;

    /// Class k is marked by symbol k somewhere in a short sequence.
    fn toy(n: usize, classes: usize, seed: u64) -> (Vec<SequenceMatrix>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = 8;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y = i % classes;
            let mut ids: Vec<Option<usize>> = (0..len)
                .map(|_| Some(classes + rng.gen_range(0..3)))
                .collect();
            ids[rng.gen_range(0..len)] = Some(y);
            xs.push(SequenceMatrix {
                content: RowContent::OneHot {
                    ids,
                    width: classes + 3,
                },
                position: vec![false; len],
                features: [0.0; 8],
            });
            ys.push(y);
        }
        (xs, ys)
    }

    fn small_config(width: usize, classes: usize) -> CnnConfig {
        CnnConfig {
            filters: 8,
            hidden: 8,
            ..CnnConfig::new(width, classes)
        }
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<usize> = (0..100).map(|i| i % 4).collect();
        let (tr, va) = stratified_split(&labels, 0.1, 3);
        assert_eq!(tr.len() + va.len(), 100);
        for c in 0..4 {
            assert_eq!(va.iter().filter(|&&i| labels[i] == c).count(), 3);
        }
        assert_eq!(stratified_split(&labels, 0.1, 3), (tr.clone(), va.clone()));
        assert_ne!(stratified_split(&labels, 0.1, 4).1, va);
        let (tr, va) = stratified_split(&[0, 1], 0.1, 0);
        assert_eq!(tr.len(), 2);
        assert!(va.is_empty());
    }

    #[test]
    fn separable_toy_fits() {
        let (xs, ys) = toy(40, 2, 1);
        let mut m = Cnn::new(small_config(xs[0].width(), 2), 7).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 8,
            max_epochs: 300,
            patience: 300,
            seed: 5,
            ..Default::default()
        };
        train(&mut m, &xs, &ys, &cfg).unwrap();
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| m.predict(x).unwrap() == y)
            .count();
        assert_eq!(correct, xs.len());
    }

    #[test]
    fn early_stopping_and_restore() {
        let (xs, ys) = toy(30, 3, 2);
        let mut m = Cnn::new(small_config(xs[0].width(), 3), 1).unwrap();
        // A vanishing step size makes the validation loss plateau at once.
        let cfg = TrainConfig {
            learning_rate: 1e-300,
            patience: 1,
            max_epochs: 50,
            ..Default::default()
        };
        let before = m.params().to_vec();
        let h = train(&mut m, &xs, &ys, &cfg).unwrap();
        assert!(h.epochs_run <= 3, "{h:?}");
        assert_eq!(h.val_loss.len(), h.epochs_run);
        if h.best_epoch == 0 {
            assert_eq!(m.params(), &before[..]);
        }
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let (xs, ys) = toy(24, 2, 3);
        let cfg = TrainConfig {
            max_epochs: 5,
            seed: 11,
            ..Default::default()
        };
        let run = || {
            let mut m = Cnn::new(small_config(xs[0].width(), 2), 4).unwrap();
            let h = train(&mut m, &xs, &ys, &cfg).unwrap();
            (m, h)
        };
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn degenerate_inputs() {
        let (xs, _) = toy(6, 2, 0);
        let mut m = Cnn::new(small_config(xs[0].width(), 2), 0).unwrap();
        let cfg = TrainConfig::default();
        assert!(matches!(
            train(&mut m, &xs, &[0; 6], &cfg),
            Err(Error::SingleClass)
        ));
        assert!(train(&mut m, &xs, &[0, 1], &cfg).is_err());
        let bad = TrainConfig {
            val_fraction: 1.0,
            ..Default::default()
        };
        assert!(train(&mut m, &xs, &[0, 1, 0, 1, 0, 1], &bad).is_err());
    }
}
