use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::taxonomy::{Category, Subcategory};

/// Single-feature rule classifiers: the rule fires and predicts its class,
/// or predicts "other".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRule {
    Percentage,
    Relative,
    Absolute,
    Option,
    ExercisePrice,
    MaturityDate,
    Indicator,
    Temporal,
    Date,
    Time,
    Quantity,
}

impl FeatureRule {
    pub const ALL: [FeatureRule; 11] = [
        FeatureRule::Percentage,
        FeatureRule::Relative,
        FeatureRule::Absolute,
        FeatureRule::Option,
        FeatureRule::ExercisePrice,
        FeatureRule::MaturityDate,
        FeatureRule::Indicator,
        FeatureRule::Temporal,
        FeatureRule::Date,
        FeatureRule::Time,
        FeatureRule::Quantity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureRule::Percentage => "percentage",
            FeatureRule::Relative => "relative",
            FeatureRule::Absolute => "absolute",
            FeatureRule::Option => "option",
            FeatureRule::ExercisePrice => "exercise_price",
            FeatureRule::MaturityDate => "maturity_date",
            FeatureRule::Indicator => "indicator",
            FeatureRule::Temporal => "temporal",
            FeatureRule::Date => "date",
            FeatureRule::Time => "time",
            FeatureRule::Quantity => "quantity",
        }
    }

    pub fn fires(self, f: &FeatureVector) -> bool {
        match self {
            FeatureRule::Percentage => f.percentage,
            FeatureRule::Relative => f.relative_change,
            FeatureRule::Absolute => f.percentage && !f.relative_change,
            FeatureRule::Option => f.option_exercise || f.option_maturity,
            FeatureRule::ExercisePrice => f.option_exercise,
            FeatureRule::MaturityDate => f.option_maturity,
            FeatureRule::Indicator => f.indicator,
            FeatureRule::Temporal => f.date || f.time,
            FeatureRule::Date => f.date,
            FeatureRule::Time => f.time,
            FeatureRule::Quantity => f.quantity,
        }
    }

    /// Whether a gold subcategory is this rule's positive class.
    pub fn positive(self, gold: Subcategory) -> bool {
        match self {
            FeatureRule::Percentage => gold.category() == Category::Percentage,
            FeatureRule::Relative => gold == Subcategory::Relative,
            FeatureRule::Absolute => gold == Subcategory::Absolute,
            FeatureRule::Option => gold.category() == Category::Option,
            FeatureRule::ExercisePrice => gold == Subcategory::ExercisePrice,
            FeatureRule::MaturityDate => gold == Subcategory::MaturityDate,
            FeatureRule::Indicator => gold == Subcategory::Indicator,
            FeatureRule::Temporal => gold.category() == Category::Temporal,
            FeatureRule::Date => gold == Subcategory::Date,
            FeatureRule::Time => gold == Subcategory::Time,
            FeatureRule::Quantity => gold == Subcategory::Quantity,
        }
    }
}

impl fmt::Display for FeatureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureRule::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature rule {s:?}")))
    }
}

/// F1 of the positive class for a single-feature rule classifier.
pub fn feature_f1(
    features: &[FeatureVector],
    gold: &[Subcategory],
    rule: FeatureRule,
) -> Result<f64> {
    if features.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: gold.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (f, &g) in features.iter().zip(gold) {
        match (rule.fires(f), rule.positive(g)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let den = 2 * tp + fp + fn_;
    Ok(if den == 0 {
        0.0
    } else {
        (2 * tp) as f64 / den as f64
    })
}
