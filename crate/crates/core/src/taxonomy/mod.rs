//! Numeral label space: 7 categories refined into 17 leaf subcategories.
//!
//! Labels serialize as lowercase snake_case strings (`buy_price`,
//! `support_or_resistance`, ...). The Product/Version Number category is
//! written as `product`.

mod agreement;
mod dataset;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use agreement::{agreement_report, cohen_kappa, AgreementReport};
pub use dataset::{label_distribution, Dataset, LabelShare, NumeralInstance, Tweet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Monetary,
    Percentage,
    Option,
    Indicator,
    Temporal,
    Quantity,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcategory {
    Money,
    Quote,
    Change,
    BuyPrice,
    SellPrice,
    Forecast,
    StopLoss,
    SupportOrResistance,
    Relative,
    Absolute,
    ExercisePrice,
    MaturityDate,
    Indicator,
    Date,
    Time,
    Quantity,
    Product,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Monetary,
        Category::Percentage,
        Category::Option,
        Category::Indicator,
        Category::Temporal,
        Category::Quantity,
        Category::Product,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Monetary => "monetary",
            Category::Percentage => "percentage",
            Category::Option => "option",
            Category::Indicator => "indicator",
            Category::Temporal => "temporal",
            Category::Quantity => "quantity",
            Category::Product => "product",
        }
    }

    /// Position in [`Category::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Leaf labels under this category, in codec order.
    pub fn subcategories(self) -> &'static [Subcategory] {
        use Subcategory::*;
        match self {
            Category::Monetary => &[
                Money,
                Quote,
                Change,
                BuyPrice,
                SellPrice,
                Forecast,
                StopLoss,
                SupportOrResistance,
            ],
            Category::Percentage => &[Relative, Absolute],
            Category::Option => &[ExercisePrice, MaturityDate],
            Category::Indicator => &[Indicator],
            Category::Temporal => &[Date, Time],
            Category::Quantity => &[Quantity],
            Category::Product => &[Product],
        }
    }

    /// True for the four categories that split into more than one leaf.
    pub fn has_subcategories(self) -> bool {
        self.subcategories().len() > 1
    }
}

impl Subcategory {
    pub const ALL: [Subcategory; 17] = [
        Subcategory::Money,
        Subcategory::Quote,
        Subcategory::Change,
        Subcategory::BuyPrice,
        Subcategory::SellPrice,
        Subcategory::Forecast,
        Subcategory::StopLoss,
        Subcategory::SupportOrResistance,
        Subcategory::Relative,
        Subcategory::Absolute,
        Subcategory::ExercisePrice,
        Subcategory::MaturityDate,
        Subcategory::Indicator,
        Subcategory::Date,
        Subcategory::Time,
        Subcategory::Quantity,
        Subcategory::Product,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subcategory::Money => "money",
            Subcategory::Quote => "quote",
            Subcategory::Change => "change",
            Subcategory::BuyPrice => "buy_price",
            Subcategory::SellPrice => "sell_price",
            Subcategory::Forecast => "forecast",
            Subcategory::StopLoss => "stop_loss",
            Subcategory::SupportOrResistance => "support_or_resistance",
            Subcategory::Relative => "relative",
            Subcategory::Absolute => "absolute",
            Subcategory::ExercisePrice => "exercise_price",
            Subcategory::MaturityDate => "maturity_date",
            Subcategory::Indicator => "indicator",
            Subcategory::Date => "date",
            Subcategory::Time => "time",
            Subcategory::Quantity => "quantity",
            Subcategory::Product => "product",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn category(self) -> Category {
        use Subcategory::*;
        match self {
            Money | Quote | Change | BuyPrice | SellPrice | Forecast | StopLoss
            | SupportOrResistance => Category::Monetary,
            Relative | Absolute => Category::Percentage,
            ExercisePrice | MaturityDate => Category::Option,
            Indicator => Category::Indicator,
            Date | Time => Category::Temporal,
            Quantity => Category::Quantity,
            Product => Category::Product,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Subcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

impl FromStr for Subcategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subcategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}
