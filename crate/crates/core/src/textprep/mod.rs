//! Tweet preprocessing: normalization, tokenization, numeral detection and
//! the character alphabet used by the character-level encoder.

mod alphabet;
mod normalize;
mod scan;
mod tokenize;

pub use alphabet::{char_index, CharAlphabet};
pub use normalize::{normalize, NormalizedTweet};
pub use scan::{cashtags, detect_numerals, NumeralSpan};
pub use tokenize::{tokenize, Token};

pub(crate) use tokenize::tokenize_spans;
