use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::encode::PreparedSample;
use crate::error::{Error, Result};
use crate::models::{Classifier, ModelConfig, ModelKind, Pipeline, Task};
use crate::taxonomy::Subcategory;

use super::metrics::{f1_report, ConfusionMatrix, EvalReport};

/// What to cross-validate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    Single {
        kind: ModelKind,
        task: Task,
    },
    /// Two-stage subcategory model; mixed kinds give the hybrids.
    Pipeline {
        stage1: ModelKind,
        stage2: ModelKind,
    },
}

impl ModelSpec {
    pub fn task(&self) -> Task {
        match self {
            ModelSpec::Single { task, .. } => *task,
            ModelSpec::Pipeline { .. } => Task::Task2,
        }
    }
}

/// Seeded stratified fold assignment. Each class is shuffled and dealt
/// round-robin, continuing where the previous class stopped so fold sizes
/// stay within one of each other.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if labels.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} samples for {k} folds",
            labels.len()
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < k {
            log::warn!("class {c} has {} instances for {k} folds", idx.len());
        }
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub spec: ModelSpec,
    pub folds: usize,
    pub seed: u64,
    /// Pooled predictions of every sample, scored once.
    pub overall: EvalReport,
    pub per_fold: Vec<EvalReport>,
    pub fold_of: Vec<usize>,
    pub predictions: Vec<usize>,
}

fn fit_predict(
    spec: ModelSpec,
    train: &[&PreparedSample],
    train_gold: &[Subcategory],
    test: &[&PreparedSample],
    config: &ModelConfig,
    embeddings: Option<Arc<EmbeddingTable>>,
) -> Result<Vec<usize>> {
    match spec {
        ModelSpec::Single { kind, task } => {
            let ys: Vec<usize> = train_gold
                .iter()
                .filter_map(|&g| task.label_of(g))
                .collect();
            Classifier::fit(kind, task, train, &ys, config, embeddings)?.predict(test)
        }
        ModelSpec::Pipeline { stage1, stage2 } => Ok(Pipeline::fit(
            stage1, stage2, train, train_gold, config, embeddings,
        )?
        .predict(test)?
        .into_iter()
        .map(|s| s.index())
        .collect()),
    }
}

/// Stratified k-fold cross-validation. Vocabularies (and skip-gram
/// vectors, when none are supplied) come from the training folds only.
/// Subtasks evaluate only the samples their category covers.
pub fn kfold_cv(
    samples: &[PreparedSample],
    gold: &[Subcategory],
    spec: ModelSpec,
    config: &ModelConfig,
    k: usize,
    seed: u64,
    embeddings: Option<Arc<EmbeddingTable>>,
) -> Result<CvReport> {
    if samples.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: samples.len(),
            right: gold.len(),
        });
    }
    let task = spec.task();
    let (xs, subs): (Vec<&PreparedSample>, Vec<Subcategory>) = samples
        .iter()
        .zip(gold)
        .filter(|(_, &g)| task.label_of(g).is_some())
        .map(|(x, &g)| (x, g))
        .unzip();
    let labels: Vec<usize> = subs
        .iter()
        .map(|&g| task.label_of(g).expect("filtered"))
        .collect();
    let fold_of = stratified_folds(&labels, k, seed)?;
    let names = task.labels();

    let fold_preds: Vec<Vec<usize>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train, test): (Vec<usize>, Vec<usize>) =
                (0..xs.len()).partition(|&i| fold_of[i] != f);
            let tx: Vec<&PreparedSample> = train.iter().map(|&i| xs[i]).collect();
            let ty: Vec<Subcategory> = train.iter().map(|&i| subs[i]).collect();
            let vx: Vec<&PreparedSample> = test.iter().map(|&i| xs[i]).collect();
            let fold_config = ModelConfig {
                seed: config.seed.wrapping_add(f as u64),
                ..config.clone()
            };
            fit_predict(spec, &tx, &ty, &vx, &fold_config, embeddings.clone())
        })
        .collect::<Result<_>>()?;

    let mut predictions = vec![0; xs.len()];
    let mut per_fold = Vec::with_capacity(k);
    for (f, preds) in fold_preds.iter().enumerate() {
        let test: Vec<usize> = (0..xs.len()).filter(|&i| fold_of[i] == f).collect();
        let gold_f: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        for (&i, &p) in test.iter().zip(preds) {
            predictions[i] = p;
        }
        per_fold.push(f1_report(preds, &gold_f, &names)?);
    }
    let overall = EvalReport::from_confusion(ConfusionMatrix::from_predictions(
        &predictions,
        &labels,
        &names,
    )?)?;
    Ok(CvReport {
        spec,
        folds: k,
        seed,
        overall,
        per_fold,
        fold_of,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureExtractor;
    use crate::textprep::detect_numerals;
    use proptest::prelude::*;

    #[test]
    fn two_folds_of_balanced_four() {
        let folds = stratified_folds(&[0, 0, 1, 1], 2, 7).unwrap();
        for f in 0..2 {
            let members: Vec<usize> = (0..4).filter(|&i| folds[i] == f).collect();
            assert_eq!(members.len(), 2);
            assert_ne!(members[0] / 2, members[1] / 2, "{folds:?}");
        }
    }

    #[test]
    fn fold_errors() {
        assert!(stratified_folds(&[0, 1], 1, 0).is_err());
        assert!(stratified_folds(&[0, 1], 3, 0).is_err());
        // fewer instances than folds is allowed
        assert!(stratified_folds(&[0, 1, 1, 1], 3, 0).is_ok());
    }

    proptest! {
        #[test]
        fn folds_are_seeded_and_stratified(labels in proptest::collection::vec(0usize..4, 10..80), k in 2usize..6, seed in any::<u64>()) {
            let a = stratified_folds(&labels, k, seed).unwrap();
            prop_assert_eq!(&a, &stratified_folds(&labels, k, seed).unwrap());
            for c in 0..4 {
                let counts: Vec<usize> = (0..k).map(|f| (0..labels.len()).filter(|&i| labels[i] == c && a[i] == f).count()).collect();
                let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
            let sizes: Vec<usize> = (0..k).map(|f| a.iter().filter(|&&x| x == f).count()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    fn prep(text: &str) -> PreparedSample {
        let s = &detect_numerals(text)[0];
        PreparedSample::new(text, s.offset, s.length, &FeatureExtractor::default()).unwrap()
    }

    #[test]
    fn cv_runs_and_is_deterministic() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..10 {
            xs.push(prep(&format!("up {}% today", i + 1)));
            ys.push(Subcategory::Relative);
            xs.push(prep(&format!("bought {} shares", i + 100)));
            ys.push(Subcategory::Quantity);
            xs.push(prep(&format!("meet at {}pm", i % 12 + 1)));
            ys.push(Subcategory::Time);
        }
        let spec = ModelSpec::Single {
            kind: ModelKind::Linear,
            task: Task::Task1,
        };
        let a = kfold_cv(&xs, &ys, spec, &ModelConfig::default(), 5, 1, None).unwrap();
        let b = kfold_cv(&xs, &ys, spec, &ModelConfig::default(), 5, 1, None).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.overall.samples, 30);
        assert_eq!(a.per_fold.len(), 5);
        assert_eq!(a.overall.micro_f1, 1.0);

        let gm = kfold_cv(
            &xs,
            &ys,
            ModelSpec::Single {
                kind: ModelKind::Gm,
                task: Task::Task2,
            },
            &ModelConfig::default(),
            3,
            1,
            None,
        )
        .unwrap();
        assert!(gm.overall.micro_f1 > 0.0);

        let sub = ModelSpec::Single {
            kind: ModelKind::Gm,
            task: Task::Subtask(crate::taxonomy::Category::Temporal),
        };
        assert_eq!(
            kfold_cv(&xs, &ys, sub, &ModelConfig::default(), 2, 1, None)
                .unwrap()
                .overall
                .samples,
            10
        );

        let pipe = ModelSpec::Pipeline {
            stage1: ModelKind::Linear,
            stage2: ModelKind::Gm,
        };
        let p = kfold_cv(&xs, &ys, pipe, &ModelConfig::default(), 5, 1, None).unwrap();
        assert_eq!(p.overall.confusion.size(), 17);
        assert_eq!(p.overall.micro_f1, 1.0);
    }
}
