//! The small neural-network engine behind the CNN classifiers: layers with
//! hand-written gradients, Adam, and a training loop with early stopping.

mod adam;
mod cnn;
pub mod gradcheck;
pub mod layers;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::Adam;
pub use cnn::{argmax, Cnn, CnnConfig};
pub use train::{stratified_split, train, TrainConfig, TrainHistory};

/// A named, shaped block of weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn validate(&self) -> Result<()> {
        let n: usize = self.shape.iter().product();
        if n != self.data.len() {
            return Err(Error::Shape(format!(
                "tensor {} has shape {:?} but {} values",
                self.name,
                self.shape,
                self.data.len()
            )));
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format(format!(
                "tensor {} has non-finite values",
                self.name
            )));
        }
        Ok(())
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Versioned JSON container for CNN weights. Floats are written in
/// shortest round-trip form, so save then load is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: CnnConfig,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn from_model(model: &Cnn) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: model.config().clone(),
            tensors: model.to_tensors(),
        }
    }

    pub fn into_model(self) -> Result<Cnn> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        Cnn::from_tensors(self.config, &self.tensors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }
}
