use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tweetnum_core::models::{ModelConfig, ModelKind};
use tweetnum_core::trading::BacktestConfig;

/// Experiment configuration, read from TOML. Command-line flags override
/// the matching keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub model: ModelSection,
    pub hyper: ModelConfig,
    pub cv: CvSection,
    pub backtest: BacktestConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub analyst: Option<PathBuf>,
    pub crowd: Option<PathBuf>,
    /// Directory of keyword tables; missing files fall back to the bundled ones.
    pub keywords: Option<PathBuf>,
    pub nouns: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// `task1`, `task2`, `binary:<category>` or `subtask:<category>`.
    pub task: String,
    /// When set, trains a two-stage model with `kind` for stage 1.
    pub stage2: Option<ModelKind>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: ModelKind::CharCnn,
            task: "task2".into(),
            stage2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub folds: usize,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection { folds: 10 }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Checks values and that every configured path exists.
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.backtest.validate()?;
        self.model.task.parse::<tweetnum_core::models::Task>()?;
        if self.cv.folds < 2 {
            bail!("cv.folds must be at least 2");
        }
        let p = &self.paths;
        for (name, path) in [
            ("dataset", &p.dataset),
            ("embeddings", &p.embeddings),
            ("prices", &p.prices),
            ("analyst", &p.analyst),
            ("crowd", &p.crowd),
            ("keywords", &p.keywords),
            ("nouns", &p.nouns),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    bail!("paths.{name}: {} does not exist", path.display());
                }
            }
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .context("a seed is required: pass --seed or set `seed` in the config")
    }
}

/// Fails unless `path` exists.
pub fn require_file(what: &str, path: Option<&PathBuf>) -> Result<PathBuf> {
    let path = path.with_context(|| format!("no {what} given"))?;
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(path.clone())
}
