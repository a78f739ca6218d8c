//! Numeral understanding for financial tweets.
//!
//! The crate detects numerals in tweets, classifies each one into a
//! 7-category / 17-subcategory taxonomy, and turns extracted forecast prices
//! into a crowd-driven trading backtest.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embed;
pub mod encode;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod nn;
pub mod synth;
pub mod taxonomy;
pub mod textprep;
pub mod trading;

pub use error::{Error, Result};
pub use taxonomy::{Category, Dataset, NumeralInstance, Subcategory, Tweet};
