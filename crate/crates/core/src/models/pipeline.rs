use std::sync::Arc;

use crate::embed::EmbeddingTable;
use crate::encode::PreparedSample;
use crate::error::{Error, Result};
use crate::taxonomy::{Category, Subcategory};

use super::{Classifier, GmModel, Model, ModelConfig, ModelKind, Task};

/// Two-stage subcategory classifier: a category model, then one
/// subcategory model for each category that splits further. Mixing kinds
/// across the stages gives the hybrid variants.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub stage1: Classifier,
    /// One entry per category with more than one subcategory, in
    /// category order.
    pub stage2: Vec<(Category, Classifier)>,
}

fn constant(task: Task, config: &ModelConfig, label: usize) -> Classifier {
    Classifier {
        kind: ModelKind::Gm,
        task,
        labels: task.labels(),
        config: config.clone(),
        model: Model::Gm(GmModel { label }),
    }
}

impl Pipeline {
    /// Stage-2 models train on the gold-category subsets. A subset with a
    /// single subcategory, or none, gets a constant model.
    pub fn fit(
        stage1_kind: ModelKind,
        stage2_kind: ModelKind,
        samples: &[&PreparedSample],
        gold: &[Subcategory],
        config: &ModelConfig,
        embeddings: Option<Arc<EmbeddingTable>>,
    ) -> Result<Self> {
        if samples.len() != gold.len() {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: gold.len(),
            });
        }
        let cats: Vec<usize> = gold.iter().map(|s| s.category().index()).collect();
        let stage1 = Classifier::fit(
            stage1_kind,
            Task::Task1,
            samples,
            &cats,
            config,
            embeddings.clone(),
        )?;
        let mut stage2 = Vec::new();
        for c in Category::ALL.into_iter().filter(|c| c.has_subcategories()) {
            let task = Task::Subtask(c);
            let (xs, ys): (Vec<&PreparedSample>, Vec<usize>) = samples
                .iter()
                .zip(gold)
                .filter_map(|(x, &g)| task.label_of(g).map(|y| (*x, y)))
                .unzip();
            let distinct = ys.iter().collect::<std::collections::BTreeSet<_>>().len();
            let model = if distinct < 2 {
                let label = match ys.first() {
                    Some(_) => GmModel::fit(&ys, &task.labels())?.label,
                    None => 0,
                };
                constant(task, config, label)
            } else {
                Classifier::fit(stage2_kind, task, &xs, &ys, config, embeddings.clone())?
            };
            stage2.push((c, model));
        }
        Ok(Pipeline { stage1, stage2 })
    }

    pub fn stage2_for(&self, c: Category) -> Option<&Classifier> {
        self.stage2.iter().find(|(k, _)| *k == c).map(|(_, m)| m)
    }

    pub fn predict_one(&self, s: &PreparedSample) -> Result<Subcategory> {
        let cat = Category::ALL[self.stage1.predict_one(s)?];
        let subs = cat.subcategories();
        if subs.len() == 1 {
            return Ok(subs[0]);
        }
        let m = self.stage2_for(cat).ok_or_else(|| {
            Error::InvalidArgument(format!("pipeline has no stage-2 model for {cat}"))
        })?;
        Ok(subs[m.predict_one(s)?])
    }

    pub fn predict(&self, samples: &[&PreparedSample]) -> Result<Vec<Subcategory>> {
        use rayon::prelude::*;
        samples.par_iter().map(|s| self.predict_one(s)).collect()
    }
}
