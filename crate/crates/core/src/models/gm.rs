use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guessing-majority baseline: always the modal training label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GmModel {
    pub label: usize,
}

impl GmModel {
    /// Ties go to the lexicographically smallest label name.
    pub fn fit(labels: &[usize], names: &[String]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("training labels"));
        }
        let mut counts = vec![0usize; names.len()];
        for &l in labels {
            *counts.get_mut(l).ok_or_else(|| {
                Error::InvalidArgument(format!("label {l} for {} classes", names.len()))
            })? += 1;
        }
        let max = *counts.iter().max().unwrap_or(&0);
        let label = (0..names.len())
            .filter(|&i| counts[i] == max)
            .min_by(|&a, &b| names[a].cmp(&names[b]))
            .unwrap_or(0);
        Ok(GmModel { label })
    }

    pub fn predict(&self) -> usize {
        self.label
    }
}
