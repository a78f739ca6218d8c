//! Classifiers (guessing majority, linear max-margin, character and word
//! CNNs), per-category binary variants, and two-stage pipelines.

mod bundle;
mod gm;
mod linear;
mod pipeline;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embed::{train_skipgram, EmbeddingTable, SkipGramConfig};
use crate::encode::{
    encode_bow, encode_char, encode_word, BowVocab, PreparedSample, SequenceMatrix, CHAR_SEQ_LEN,
    WORD_SEQ_LEN,
};
use crate::error::{Error, Result};
use crate::features::FEATURE_COUNT;
use crate::nn::{train, Cnn, CnnConfig, TrainConfig, TrainHistory};
use crate::taxonomy::{Category, Subcategory};
use crate::textprep::CharAlphabet;

pub use bundle::{load_bundle, sha256_hex, Predictor, BUNDLE_VERSION};
pub use gm::GmModel;
pub use linear::{LinearConfig, LinearModel};
pub use pipeline::Pipeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gm,
    Linear,
    CharCnn,
    WordCnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Gm,
        ModelKind::Linear,
        ModelKind::CharCnn,
        ModelKind::WordCnn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gm => "gm",
            ModelKind::Linear => "linear",
            ModelKind::CharCnn => "char_cnn",
            ModelKind::WordCnn => "word_cnn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind {s:?}")))
    }
}

/// What a classifier predicts. Each task has its own label list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// 7 categories.
    Task1,
    /// 17 subcategories.
    Task2,
    /// In-category vs the rest: labels `other`, `<category>`.
    Binary(Category),
    /// Subcategories of one category.
    Subtask(Category),
}

impl Task {
    pub fn labels(&self) -> Vec<String> {
        match self {
            Task::Task1 => Category::ALL.iter().map(|c| c.to_string()).collect(),
            Task::Task2 => Subcategory::ALL.iter().map(|s| s.to_string()).collect(),
            Task::Binary(c) => vec!["other".to_string(), c.to_string()],
            Task::Subtask(c) => c.subcategories().iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Task::Task1 => Category::ALL.len(),
            Task::Task2 => Subcategory::ALL.len(),
            Task::Binary(_) => 2,
            Task::Subtask(c) => c.subcategories().len(),
        }
    }

    /// Label index of a gold subcategory, or `None` when a subtask does not
    /// cover it.
    pub fn label_of(&self, sub: Subcategory) -> Option<usize> {
        match self {
            Task::Task1 => Some(sub.category().index()),
            Task::Task2 => Some(sub.index()),
            Task::Binary(c) => Some(usize::from(sub.category() == *c)),
            Task::Subtask(c) => c.subcategories().iter().position(|s| *s == sub),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Task1 => f.write_str("task1"),
            Task::Task2 => f.write_str("task2"),
            Task::Binary(c) => write!(f, "binary:{c}"),
            Task::Subtask(c) => write!(f, "subtask:{c}"),
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "task1" => Ok(Task::Task1),
            "task2" => Ok(Task::Task2),
            _ => match s.split_once(':') {
                Some(("binary", c)) => Ok(Task::Binary(c.parse()?)),
                Some(("subtask", c)) => Ok(Task::Subtask(c.parse()?)),
                _ => Err(Error::InvalidArgument(format!("unknown task {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnHyper {
    pub kernel_width: usize,
    pub filters: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for CnnHyper {
    fn default() -> Self {
        CnnHyper {
            kernel_width: 3,
            filters: 64,
            hidden: 64,
            dropout: 0.5,
        }
    }
}

/// Hyperparameters for every model kind. `seed` drives every random
/// stream and overrides the seeds inside the nested sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub seed: u64,
    pub train: TrainConfig,
    pub linear: LinearConfig,
    pub cnn: CnnHyper,
    pub skipgram: SkipGramConfig,
    pub char_len: usize,
    pub word_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            seed: 0,
            train: TrainConfig::default(),
            linear: LinearConfig::default(),
            cnn: CnnHyper::default(),
            skipgram: SkipGramConfig::default(),
            char_len: CHAR_SEQ_LEN,
            word_len: WORD_SEQ_LEN,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.char_len < self.cnn.kernel_width || self.word_len < self.cnn.kernel_width {
            return Err(Error::InvalidArgument(
                "sequence length shorter than the kernel".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.cnn.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0, 1)",
                self.cnn.dropout
            )));
        }
        if !(self.linear.lambda > 0.0) {
            return Err(Error::InvalidArgument(
                "linear lambda must be positive".into(),
            ));
        }
        Ok(())
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    fn linear_config(&self) -> LinearConfig {
        LinearConfig {
            seed: self.seed,
            ..self.linear.clone()
        }
    }

    fn skipgram_config(&self) -> SkipGramConfig {
        SkipGramConfig {
            seed: self.seed,
            ..self.skipgram.clone()
        }
    }
}

/// CNN over character or word rows.
#[derive(Debug, Clone)]
pub struct NeuralModel {
    pub cnn: Cnn,
    /// Present for the word scheme.
    pub embeddings: Option<Arc<EmbeddingTable>>,
    pub seq_len: usize,
    pub history: Option<TrainHistory>,
}

impl NeuralModel {
    pub fn encode(&self, s: &PreparedSample) -> Result<SequenceMatrix> {
        match &self.embeddings {
            Some(e) => encode_word(s, e, self.seq_len),
            None => encode_char(s, self.seq_len),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    Gm(GmModel),
    Linear { vocab: BowVocab, model: LinearModel },
    Neural(NeuralModel),
}

/// A fitted model together with its task and label list.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub kind: ModelKind,
    pub task: Task,
    pub labels: Vec<String>,
    pub config: ModelConfig,
    pub model: Model,
}

/// Skip-gram embeddings over the distinct normalized tweets of `samples`.
pub fn embeddings_from_samples(
    samples: &[&PreparedSample],
    config: &SkipGramConfig,
) -> Result<EmbeddingTable> {
    let mut seen = std::collections::BTreeSet::new();
    let corpus: Vec<Vec<String>> = samples
        .iter()
        .filter(|s| seen.insert(s.normalized.normalized.clone()))
        .map(|s| s.normalized.token_texts())
        .collect();
    train_skipgram(&corpus, config)
}

impl Classifier {
    /// Fits a classifier. Word CNNs use `embeddings` when given, else
    /// skip-gram vectors trained on the training tweets.
    pub fn fit(
        kind: ModelKind,
        task: Task,
        samples: &[&PreparedSample],
        labels: &[usize],
        config: &ModelConfig,
        embeddings: Option<Arc<EmbeddingTable>>,
    ) -> Result<Self> {
        config.validate()?;
        if samples.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: labels.len(),
            });
        }
        let names = task.labels();
        let classes = names.len();
        let model = match kind {
            ModelKind::Gm => Model::Gm(GmModel::fit(labels, &names)?),
            ModelKind::Linear => {
                let vocab = BowVocab::build(samples.iter().copied());
                let xs: Vec<_> = samples.iter().map(|s| encode_bow(s, &vocab)).collect();
                let model = LinearModel::fit(&xs, labels, classes, &config.linear_config())?;
                Model::Linear { vocab, model }
            }
            ModelKind::CharCnn | ModelKind::WordCnn => {
                let (embeddings, seq_len) = if kind == ModelKind::WordCnn {
                    let e = match embeddings {
                        Some(e) => e,
                        None => {
                            Arc::new(embeddings_from_samples(samples, &config.skipgram_config())?)
                        }
                    };
                    (Some(e), config.word_len)
                } else {
                    (None, config.char_len)
                };
                let input_width = match &embeddings {
                    Some(e) => e.dim() + 1 + FEATURE_COUNT,
                    None => CharAlphabet::SIZE + 1 + FEATURE_COUNT,
                };
                let cnn_config = CnnConfig {
                    input_width,
                    kernel_width: config.cnn.kernel_width,
                    filters: config.cnn.filters,
                    hidden: config.cnn.hidden,
                    dropout: config.cnn.dropout,
                    classes,
                };
                let mut neural = NeuralModel {
                    cnn: Cnn::new(
                        cnn_config,
                        config
                            .seed
                            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                            .wrapping_add(1),
                    )?,
                    embeddings,
                    seq_len,
                    history: None,
                };
                let xs: Vec<SequenceMatrix> = samples
                    .iter()
                    .map(|s| neural.encode(s))
                    .collect::<Result<_>>()?;
                neural.history = Some(train(&mut neural.cnn, &xs, labels, &config.train_config())?);
                Model::Neural(neural)
            }
        };
        Ok(Classifier {
            kind,
            task,
            labels: names,
            config: config.clone(),
            model,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn predict_one(&self, s: &PreparedSample) -> Result<usize> {
        match &self.model {
            Model::Gm(m) => Ok(m.predict()),
            Model::Linear { vocab, model } => model.predict(&encode_bow(s, vocab)),
            Model::Neural(n) => n.cnn.predict(&n.encode(s)?),
        }
    }

    pub fn predict(&self, samples: &[&PreparedSample]) -> Result<Vec<usize>> {
        use rayon::prelude::*;
        samples.par_iter().map(|s| self.predict_one(s)).collect()
    }

    pub fn label_name(&self, i: usize) -> &str {
        &self.labels[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureExtractor;
    use crate::textprep::detect_numerals;

    fn prep(text: &str) -> PreparedSample {
        let s = &detect_numerals(text)[0];
        PreparedSample::new(text, s.offset, s.length, &FeatureExtractor::default()).unwrap()
    }

    /// Percentages, dates and share counts with distinct wording.
    fn toy() -> (Vec<PreparedSample>, Vec<Subcategory>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let words = ["alpha", "beta", "gamma", "delta", "omega"];
        for i in 0..30 {
            let w = words[i % words.len()];
            let (t, y) = match i % 3 {
                0 => (format!("{w} up {}% today", i + 1), Subcategory::Relative),
                1 => (
                    format!("{w} on {}/{} we meet", i % 12 + 1, i + 1),
                    Subcategory::Date,
                ),
                _ => (
                    format!("{w} bought {} shares", i + 100),
                    Subcategory::Quantity,
                ),
            };
            xs.push(prep(&t));
            ys.push(y);
        }
        (xs, ys)
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            seed: 3,
            train: TrainConfig {
                max_epochs: 60,
                patience: 60,
                learning_rate: 0.01,
                batch_size: 8,
                ..Default::default()
            },
            cnn: CnnHyper {
                filters: 16,
                hidden: 16,
                ..Default::default()
            },
            skipgram: SkipGramConfig {
                dim: 16,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn task_codecs() {
        assert_eq!(Task::Task1.num_classes(), 7);
        assert_eq!(Task::Task2.labels().len(), 17);
        assert_eq!(
            Task::Binary(Category::Temporal).label_of(Subcategory::Time),
            Some(1)
        );
        assert_eq!(
            Task::Binary(Category::Temporal).label_of(Subcategory::Forecast),
            Some(0)
        );
        assert_eq!(
            Task::Subtask(Category::Temporal).label_of(Subcategory::Forecast),
            None
        );
        assert_eq!(Task::Subtask(Category::Option).num_classes(), 2);
        for t in [
            Task::Task1,
            Task::Task2,
            Task::Binary(Category::Monetary),
            Task::Subtask(Category::Percentage),
        ] {
            assert_eq!(t.to_string().parse::<Task>().unwrap(), t);
        }
        assert_eq!("word_cnn".parse::<ModelKind>().unwrap(), ModelKind::WordCnn);
    }

    #[test]
    fn every_kind_fits_and_predicts_valid_labels() {
        let (xs, ys) = toy();
        let refs: Vec<&PreparedSample> = xs.iter().collect();
        let labels: Vec<usize> = ys
            .iter()
            .map(|&s| Task::Task2.label_of(s).unwrap())
            .collect();
        for kind in ModelKind::ALL {
            let c =
                Classifier::fit(kind, Task::Task2, &refs, &labels, &small_config(), None).unwrap();
            let p = c.predict(&refs).unwrap();
            assert_eq!(p.len(), refs.len());
            assert!(p.iter().all(|&l| l < 17));
            let acc =
                p.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64;
            match kind {
                ModelKind::Gm => assert!(p.iter().all(|&l| l == p[0])),
                _ => assert!(acc >= 0.95, "{kind}: {acc}"),
            }
        }
    }

    #[test]
    fn binary_task_rejects_single_class() {
        let (xs, ys) = toy();
        let refs: Vec<&PreparedSample> = xs.iter().collect();
        let task = Task::Binary(Category::Temporal);
        let labels: Vec<usize> = ys.iter().map(|&s| task.label_of(s).unwrap()).collect();
        let c = Classifier::fit(
            ModelKind::Linear,
            task,
            &refs,
            &labels,
            &small_config(),
            None,
        )
        .unwrap();
        let p = c.predict(&refs).unwrap();
        assert_eq!(p, labels);
        let ones = vec![1; refs.len()];
        assert!(matches!(
            Classifier::fit(ModelKind::Linear, task, &refs, &ones, &small_config(), None),
            Err(Error::SingleClass)
        ));
    }
}
