//! On-disk model bundles.
//!
//! ```text
//! <dir>/metadata.json    format, kind, task, labels, config, hashes
//! <dir>/model.json       weights
//! <dir>/embeddings.txt   word CNNs only
//! <dir>/stage1/, <dir>/stage2/<category>/   pipelines: nested bundles
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::EmbeddingTable;
use crate::encode::{BowVocab, PreparedSample};
use crate::error::{Error, Result};
use crate::nn::{Checkpoint, TrainHistory};
use crate::taxonomy::{Category, Subcategory};
use crate::textprep::CharAlphabet;

use super::{
    Classifier, GmModel, LinearModel, Model, ModelConfig, ModelKind, NeuralModel, Pipeline, Task,
};

pub const BUNDLE_VERSION: u32 = 1;

const METADATA: &str = "metadata.json";
const WEIGHTS: &str = "model.json";
const EMBEDDINGS: &str = "embeddings.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest: [u8; 32] = Sha256::digest(bytes).into();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn alphabet_hash() -> String {
    let a = CharAlphabet::standard();
    let s: String = (0..a.len()).filter_map(|i| a.char_at(i)).collect();
    sha256_hex(s.as_bytes())
}

fn vocab_hash(v: &BowVocab) -> String {
    sha256_hex(v.words().join("\n").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Classifier,
    Pipeline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Metadata {
    version: u32,
    format: Format,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    kind: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    task: Option<String>,
    #[serde(default)]
    labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    config: Option<ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    stage1_kind: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    stage2_kind: Option<ModelKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    weights_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    vocab_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    alphabet_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    embeddings_sha256: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Weights {
    Gm(GmModel),
    Linear {
        vocab: BowVocab,
        model: LinearModel,
    },
    Cnn {
        seq_len: usize,
        history: Option<TrainHistory>,
        checkpoint: Checkpoint,
    },
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_metadata(dir: &Path, meta: &Metadata) -> Result<()> {
    write_file(&dir.join(METADATA), &serde_json::to_vec_pretty(meta)?)
}

fn read_metadata(dir: &Path) -> Result<Metadata> {
    let meta: Metadata = serde_json::from_slice(&read_file(&dir.join(METADATA))?)?;
    if meta.version != BUNDLE_VERSION {
        return Err(Error::Format(format!(
            "bundle version {} (expected {BUNDLE_VERSION})",
            meta.version
        )));
    }
    Ok(meta)
}

fn check_hash(what: &str, expected: Option<&String>, actual: &str) -> Result<()> {
    match expected {
        Some(e) if e != actual => Err(Error::Format(format!("{what} hash mismatch"))),
        _ => Ok(()),
    }
}

impl Classifier {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut meta = Metadata {
            version: BUNDLE_VERSION,
            format: Format::Classifier,
            kind: Some(self.kind),
            task: Some(self.task.to_string()),
            labels: self.labels.clone(),
            config: Some(self.config.clone()),
            stage1_kind: None,
            stage2_kind: None,
            weights_sha256: None,
            vocab_sha256: None,
            alphabet_sha256: None,
            embeddings_sha256: None,
        };
        let weights = match &self.model {
            Model::Gm(m) => Weights::Gm(m.clone()),
            Model::Linear { vocab, model } => {
                meta.vocab_sha256 = Some(vocab_hash(vocab));
                Weights::Linear {
                    vocab: vocab.clone(),
                    model: model.clone(),
                }
            }
            Model::Neural(n) => {
                match &n.embeddings {
                    Some(e) => {
                        let mut buf = Vec::new();
                        e.write(&mut buf)
                            .map_err(|err| Error::io(dir.join(EMBEDDINGS), err))?;
                        meta.embeddings_sha256 = Some(sha256_hex(&buf));
                        write_file(&dir.join(EMBEDDINGS), &buf)?;
                    }
                    None => meta.alphabet_sha256 = Some(alphabet_hash()),
                }
                Weights::Cnn {
                    seq_len: n.seq_len,
                    history: n.history.clone(),
                    checkpoint: Checkpoint::from_model(&n.cnn),
                }
            }
        };
        let bytes = serde_json::to_vec(&weights)?;
        meta.weights_sha256 = Some(sha256_hex(&bytes));
        write_file(&dir.join(WEIGHTS), &bytes)?;
        write_metadata(dir, &meta)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta = read_metadata(dir)?;
        if meta.format != Format::Classifier {
            return Err(Error::Format(format!(
                "{} is not a single-classifier bundle",
                dir.display()
            )));
        }
        Self::from_parts(dir, meta)
    }

    fn from_parts(dir: &Path, meta: Metadata) -> Result<Self> {
        let missing = |f: &str| Error::Format(format!("bundle metadata lacks {f}"));
        let kind = meta.kind.ok_or_else(|| missing("kind"))?;
        let task: Task = meta
            .task
            .as_deref()
            .ok_or_else(|| missing("task"))?
            .parse()?;
        let config = meta.config.clone().ok_or_else(|| missing("config"))?;
        if meta.labels != task.labels() {
            return Err(Error::Format("bundle labels do not match its task".into()));
        }
        let bytes = read_file(&dir.join(WEIGHTS))?;
        check_hash("weights", meta.weights_sha256.as_ref(), &sha256_hex(&bytes))?;
        let weights: Weights = serde_json::from_slice(&bytes)?;
        let classes = meta.labels.len();
        let model = match (kind, weights) {
            (ModelKind::Gm, Weights::Gm(m)) if m.label < classes => Model::Gm(m),
            (ModelKind::Linear, Weights::Linear { vocab, model }) => {
                check_hash(
                    "vocabulary",
                    meta.vocab_sha256.as_ref(),
                    &vocab_hash(&vocab),
                )?;
                if model.classes != classes
                    || model.dim != vocab.len() + crate::features::FEATURE_COUNT
                    || model.weights.len() != classes * (model.dim + 1)
                {
                    return Err(Error::Shape(
                        "linear weights do not match the vocabulary".into(),
                    ));
                }
                Model::Linear { vocab, model }
            }
            (
                ModelKind::CharCnn | ModelKind::WordCnn,
                Weights::Cnn {
                    seq_len,
                    history,
                    checkpoint,
                },
            ) => {
                let cnn = checkpoint.into_model()?;
                let embeddings = if kind == ModelKind::WordCnn {
                    let path = dir.join(EMBEDDINGS);
                    let bytes = read_file(&path)?;
                    check_hash(
                        "embeddings",
                        meta.embeddings_sha256.as_ref(),
                        &sha256_hex(&bytes),
                    )?;
                    Some(Arc::new(EmbeddingTable::read(bytes.as_slice())?))
                } else {
                    check_hash("alphabet", meta.alphabet_sha256.as_ref(), &alphabet_hash())?;
                    None
                };
                let expected_width = match &embeddings {
                    Some(e) => e.dim() + 1 + crate::features::FEATURE_COUNT,
                    None => CharAlphabet::SIZE + 1 + crate::features::FEATURE_COUNT,
                };
                if cnn.config().input_width != expected_width || cnn.config().classes != classes {
                    return Err(Error::Shape(
                        "network shape does not match the bundle".into(),
                    ));
                }
                Model::Neural(NeuralModel {
                    cnn,
                    embeddings,
                    seq_len,
                    history,
                })
            }
            _ => {
                return Err(Error::Format(
                    "bundle weights do not match its model kind".into(),
                ))
            }
        };
        Ok(Classifier {
            kind,
            task,
            labels: meta.labels,
            config,
            model,
        })
    }
}

impl Pipeline {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.stage1.save(dir.join("stage1"))?;
        for (c, m) in &self.stage2 {
            m.save(dir.join("stage2").join(c.as_str()))?;
        }
        let stage2_kind = self
            .stage2
            .iter()
            .map(|(_, m)| m.kind)
            .find(|k| *k != ModelKind::Gm)
            .unwrap_or(ModelKind::Gm);
        write_metadata(
            dir,
            &Metadata {
                version: BUNDLE_VERSION,
                format: Format::Pipeline,
                kind: None,
                task: Some(Task::Task2.to_string()),
                labels: Task::Task2.labels(),
                config: Some(self.stage1.config.clone()),
                stage1_kind: Some(self.stage1.kind),
                stage2_kind: Some(stage2_kind),
                weights_sha256: None,
                vocab_sha256: None,
                alphabet_sha256: None,
                embeddings_sha256: None,
            },
        )
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta = read_metadata(dir)?;
        if meta.format != Format::Pipeline {
            return Err(Error::Format(format!(
                "{} is not a pipeline bundle",
                dir.display()
            )));
        }
        let stage1 = Classifier::load(dir.join("stage1"))?;
        if stage1.task != Task::Task1 {
            return Err(Error::Format(
                "pipeline stage 1 must classify categories".into(),
            ));
        }
        let mut stage2 = Vec::new();
        for c in Category::ALL.into_iter().filter(|c| c.has_subcategories()) {
            let m = Classifier::load(dir.join("stage2").join(c.as_str()))?;
            if m.task != Task::Subtask(c) {
                return Err(Error::Format(format!(
                    "pipeline stage 2 for {c} has task {}",
                    m.task
                )));
            }
            stage2.push((c, m));
        }
        Ok(Pipeline { stage1, stage2 })
    }
}

/// Anything `predict` can run: a single classifier or a pipeline.
#[derive(Debug, Clone)]
pub enum Predictor {
    Classifier(Classifier),
    Pipeline(Pipeline),
}

impl Predictor {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        match self {
            Predictor::Classifier(c) => c.save(dir),
            Predictor::Pipeline(p) => p.save(dir),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            Predictor::Classifier(c) => c.labels.clone(),
            Predictor::Pipeline(_) => Task::Task2.labels(),
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Predictor::Classifier(c) => c.task,
            Predictor::Pipeline(_) => Task::Task2,
        }
    }

    /// Predicted label names.
    pub fn predict_labels(&self, samples: &[&PreparedSample]) -> Result<Vec<String>> {
        match self {
            Predictor::Classifier(c) => Ok(c
                .predict(samples)?
                .into_iter()
                .map(|i| c.labels[i].clone())
                .collect()),
            Predictor::Pipeline(p) => Ok(p
                .predict(samples)?
                .into_iter()
                .map(|s: Subcategory| s.to_string())
                .collect()),
        }
    }
}

/// Loads a classifier or pipeline bundle, whichever `dir` holds.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Predictor> {
    let dir = dir.as_ref();
    match read_metadata(dir)?.format {
        Format::Classifier => Ok(Predictor::Classifier(Classifier::load(dir)?)),
        Format::Pipeline => Ok(Predictor::Pipeline(Pipeline::load(dir)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::SkipGramConfig;
    use crate::features::FeatureExtractor;
    use crate::nn::TrainConfig;
    use crate::textprep::detect_numerals;

    fn prep(text: &str) -> PreparedSample {
        let s = &detect_numerals(text)[0];
        PreparedSample::new(text, s.offset, s.length, &FeatureExtractor::default()).unwrap()
    }

    fn data() -> (Vec<PreparedSample>, Vec<Subcategory>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..8 {
            xs.push(prep(&format!("up {}% today", i + 1)));
            ys.push(Subcategory::Relative);
            xs.push(prep(&format!("bought {} shares", i + 100)));
            ys.push(Subcategory::Quantity);
        }
        (xs, ys)
    }

    fn config() -> ModelConfig {
        ModelConfig {
            train: TrainConfig {
                max_epochs: 3,
                ..Default::default()
            },
            skipgram: SkipGramConfig {
                dim: 8,
                epochs: 1,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn every_kind_round_trips() {
        let (xs, ys) = data();
        let refs: Vec<&PreparedSample> = xs.iter().collect();
        let labels: Vec<usize> = ys.iter().map(|&s| s.index()).collect();
        for kind in ModelKind::ALL {
            let c = Classifier::fit(kind, Task::Task2, &refs, &labels, &config(), None).unwrap();
            let dir = tempfile::tempdir().unwrap();
            c.save(dir.path()).unwrap();
            let back = load_bundle(dir.path()).unwrap();
            assert_eq!(back.task(), Task::Task2);
            let direct: Vec<String> = c
                .predict(&refs)
                .unwrap()
                .into_iter()
                .map(|i| c.labels[i].clone())
                .collect();
            assert_eq!(back.predict_labels(&refs).unwrap(), direct, "{kind}");
            if let (
                Model::Neural(a),
                Predictor::Classifier(Classifier {
                    model: Model::Neural(b),
                    ..
                }),
            ) = (&c.model, &back)
            {
                assert_eq!(a.cnn.params(), b.cnn.params());
            }
        }
    }

    #[test]
    fn pipeline_round_trips() {
        let (xs, ys) = data();
        let refs: Vec<&PreparedSample> = xs.iter().collect();
        let p = Pipeline::fit(
            ModelKind::Linear,
            ModelKind::Gm,
            &refs,
            &ys,
            &config(),
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        Predictor::Pipeline(p.clone()).save(dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        assert!(matches!(back, Predictor::Pipeline(_)));
        let expected: Vec<String> = p
            .predict(&refs)
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(back.predict_labels(&refs).unwrap(), expected);
    }

    #[test]
    fn tampering_is_detected() {
        let (xs, ys) = data();
        let refs: Vec<&PreparedSample> = xs.iter().collect();
        let labels: Vec<usize> = ys.iter().map(|&s| s.index()).collect();
        let c = Classifier::fit(
            ModelKind::Linear,
            Task::Task2,
            &refs,
            &labels,
            &config(),
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path()).unwrap();
        let w = dir.path().join(WEIGHTS);
        let mut s = std::fs::read_to_string(&w).unwrap();
        s = s.replacen("shares", "sharez", 1);
        std::fs::write(&w, s).unwrap();
        assert!(load_bundle(dir.path()).is_err());
        assert!(load_bundle(dir.path().join("missing")).is_err());
    }
}
