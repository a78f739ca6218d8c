//! Model inputs: bag-of-words plus features for the linear model, and
//! character or word matrices for the CNNs.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureVector, FEATURE_COUNT};
use crate::taxonomy::{Dataset, Subcategory};
use crate::textprep::{normalize, CharAlphabet, NormalizedTweet};

pub const CHAR_SEQ_LEN: usize = 140;
pub const WORD_SEQ_LEN: usize = 25;

/// A numeral in its tweet, normalized and with features computed.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub normalized: NormalizedTweet,
    /// Character offset and length of the numeral in the original text.
    pub offset: usize,
    pub length: usize,
    pub features: FeatureVector,
}

impl PreparedSample {
    pub fn new(text: &str, offset: usize, length: usize, fx: &FeatureExtractor) -> Result<Self> {
        let features = fx.extract(text, offset, length)?;
        Ok(PreparedSample {
            normalized: normalize(text),
            offset,
            length,
            features,
        })
    }

    /// Normalized character range of the numeral.
    pub fn char_range(&self) -> Result<(usize, usize)> {
        self.normalized
            .normalized_range(self.offset, self.offset + self.length)
            .ok_or_else(|| Error::InvalidArgument("numeral vanished in normalization".into()))
    }

    /// Token index range of the numeral.
    pub fn token_range(&self) -> Result<(usize, usize)> {
        let toks = self
            .normalized
            .tokens_overlapping(self.offset, self.offset + self.length);
        match (toks.first(), toks.last()) {
            (Some(&a), Some(&b)) => Ok((a, b + 1)),
            _ => Err(Error::InvalidArgument("numeral covers no token".into())),
        }
    }
}

/// Prepares every instance of a dataset together with its gold leaf label.
pub fn prepare_dataset(
    ds: &Dataset,
    fx: &FeatureExtractor,
) -> Result<(Vec<PreparedSample>, Vec<Subcategory>)> {
    use rayon::prelude::*;
    ds.instances()
        .par_iter()
        .map(|inst| {
            let gold = inst.leaf().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unlabeled instance at {}:{}",
                    inst.tweet_id, inst.offset
                ))
            })?;
            let sample =
                PreparedSample::new(&ds.tweet_of(inst).text, inst.offset, inst.length, fx)?;
            Ok((sample, gold))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

/// Word vocabulary for the bag-of-words encoder, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct BowVocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for BowVocab {
    fn from(words: Vec<String>) -> Self {
        BowVocab::from_words(words)
    }
}

impl From<BowVocab> for Vec<String> {
    fn from(v: BowVocab) -> Self {
        v.words
    }
}

impl BowVocab {
    pub fn build<'a, I>(samples: I) -> Self
    where
        I: IntoIterator<Item = &'a PreparedSample>,
    {
        let set: BTreeSet<&str> = samples
            .into_iter()
            .flat_map(|s| s.normalized.tokens.iter().map(|t| t.text.as_str()))
            .collect();
        Self::from_words(set.into_iter().map(str::to_string).collect())
    }

    pub fn from_words(mut words: Vec<String>) -> Self {
        words.sort();
        words.dedup();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        BowVocab { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// Sparse binary bag-of-words with the 8 features appended.
#[derive(Debug, Clone, PartialEq)]
pub struct BowSample {
    /// Sorted, distinct vocabulary indices present in the tweet.
    pub indices: Vec<usize>,
    pub vocab_size: usize,
    pub features: FeatureVector,
}

impl BowSample {
    pub fn dim(&self) -> usize {
        self.vocab_size + FEATURE_COUNT
    }

    /// Non-zero entries of the concatenated vector, in index order.
    pub fn nonzeros(&self) -> impl Iterator<Item = usize> + '_ {
        let base = self.vocab_size;
        self.indices.iter().copied().chain(
            self.features
                .to_array()
                .into_iter()
                .enumerate()
                .filter(|(_, b)| *b)
                .map(move |(i, _)| base + i),
        )
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for i in self.nonzeros() {
            v[i] = 1.0;
        }
        v
    }
}

pub fn encode_bow(sample: &PreparedSample, vocab: &BowVocab) -> BowSample {
    let set: BTreeSet<usize> = sample
        .normalized
        .tokens
        .iter()
        .filter_map(|t| vocab.get(&t.text))
        .collect();
    BowSample {
        indices: set.into_iter().collect(),
        vocab_size: vocab.len(),
        features: sample.features,
    }
}

/// Per-row content of a sequence matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum RowContent {
    /// Index into a one-hot block of the given width; `None` is an all-zero row.
    OneHot {
        ids: Vec<Option<usize>>,
        width: usize,
    },
    /// Dense rows, row-major with the given width.
    Dense { values: Vec<f64>, width: usize },
}

/// An L x (content + 1 + 8) input: content columns, a target-position
/// channel, and the feature vector repeated on every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMatrix {
    pub content: RowContent,
    pub position: Vec<bool>,
    pub features: [f64; FEATURE_COUNT],
}

pub type CharMatrix = SequenceMatrix;
pub type WordMatrix = SequenceMatrix;

impl SequenceMatrix {
    pub fn rows(&self) -> usize {
        self.position.len()
    }

    pub fn content_width(&self) -> usize {
        match &self.content {
            RowContent::OneHot { width, .. } | RowContent::Dense { width, .. } => *width,
        }
    }

    pub fn width(&self) -> usize {
        self.content_width() + 1 + FEATURE_COUNT
    }

    /// Calls `f(column, value)` for every non-zero entry of row `t`.
    #[inline]
    pub fn for_each_nonzero(&self, t: usize, mut f: impl FnMut(usize, f64)) {
        let cw = self.content_width();
        match &self.content {
            RowContent::OneHot { ids, .. } => {
                if let Some(c) = ids[t] {
                    f(c, 1.0);
                }
            }
            RowContent::Dense { values, width } => {
                for (c, &v) in values[t * width..(t + 1) * width].iter().enumerate() {
                    if v != 0.0 {
                        f(c, v);
                    }
                }
            }
        }
        if self.position[t] {
            f(cw, 1.0);
        }
        for (i, &v) in self.features.iter().enumerate() {
            if v != 0.0 {
                f(cw + 1 + i, v);
            }
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let w = self.width();
        let mut out = vec![0.0; self.rows() * w];
        for t in 0..self.rows() {
            self.for_each_nonzero(t, |c, v| out[t * w + c] = v);
        }
        out
    }

    /// Row-major text dump, one row per line.
    pub fn dump(&self) -> String {
        let w = self.width();
        let dense = self.to_dense();
        dense
            .chunks(w)
            .map(|r| {
                r.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Start of an `len`-wide window over `n` items that contains
/// `[lo, hi)`: the prefix when possible, else centred on the target.
fn window_start(n: usize, len: usize, lo: usize, hi: usize) -> Result<usize> {
    if n <= len || hi <= len {
        return Ok(0);
    }
    if hi - lo > len {
        return Err(Error::TargetTruncated);
    }
    let slack = len - (hi - lo);
    Ok(lo.saturating_sub(slack / 2).min(n - len))
}

fn feature_row(f: &FeatureVector) -> [f64; FEATURE_COUNT] {
    f.to_array().map(|b| if b { 1.0 } else { 0.0 })
}

/// Character matrix over the normalized tweet.
pub fn encode_char(sample: &PreparedSample, len: usize) -> Result<CharMatrix> {
    let alphabet = CharAlphabet::standard();
    let chars: Vec<char> = sample.normalized.normalized.chars().collect();
    let (lo, hi) = sample.char_range()?;
    let start = window_start(chars.len(), len, lo, hi)?;
    if chars.len() > len {
        log::warn!(
            "normalized tweet has {} chars; keeping [{start}, {})",
            chars.len(),
            start + len
        );
    }
    let mut ids = vec![None; len];
    let mut position = vec![false; len];
    for (row, &c) in chars.iter().skip(start).take(len).enumerate() {
        ids[row] = alphabet.index(c);
        let src = start + row;
        position[row] = src >= lo && src < hi;
    }
    Ok(SequenceMatrix {
        content: RowContent::OneHot {
            ids,
            width: CharAlphabet::SIZE,
        },
        position,
        features: feature_row(&sample.features),
    })
}

/// Word matrix over the normalized tokens, with embedding rows.
pub fn encode_word(
    sample: &PreparedSample,
    emb: &EmbeddingTable,
    len: usize,
) -> Result<WordMatrix> {
    let tokens = &sample.normalized.tokens;
    let (lo, hi) = sample.token_range()?;
    let start = window_start(tokens.len(), len, lo, hi)?;
    if tokens.len() > len {
        log::warn!(
            "tweet has {} tokens; keeping [{start}, {})",
            tokens.len(),
            start + len
        );
    }
    let d = emb.dim();
    let mut values = vec![0.0; len * d];
    let mut position = vec![false; len];
    for (row, tok) in tokens.iter().skip(start).take(len).enumerate() {
        for (dst, &x) in values[row * d..(row + 1) * d]
            .iter_mut()
            .zip(emb.lookup(&tok.text).iter())
        {
            *dst = x as f64;
        }
        let src = start + row;
        position[row] = src >= lo && src < hi;
    }
    Ok(SequenceMatrix {
        content: RowContent::Dense { values, width: d },
        position,
        features: feature_row(&sample.features),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::detect_numerals;

    fn prep(text: &str, surface: &str) -> PreparedSample {
        let s = detect_numerals(text)
            .into_iter()
            .find(|s| s.surface == surface)
            .unwrap();
        PreparedSample::new(text, s.offset, s.length, &FeatureExtractor::default()).unwrap()
    }

    #[test]
    fn bow_marks_vocabulary_words() {
        let a = prep("sold 5,838 shares", "5,838");
        let vocab = BowVocab::from_words(vec!["shares".into(), "zebra".into()]);
        let b = encode_bow(&a, &vocab);
        assert_eq!(b.indices, vec![0]);
        assert_eq!(b.dim(), 2 + 8);
        assert!(b.features.quantity);
        let dense = b.to_dense();
        assert_eq!(dense.iter().sum::<f64>(), 2.0);
        assert_eq!(dense[2 + 7], 1.0);

        let oov = encode_bow(&prep("up 10% today", "10"), &vocab);
        assert!(oov.indices.is_empty());
        assert!(oov.features.percentage);
    }

    #[test]
    fn bow_vocab_from_samples() {
        let s = [
            prep("up 10% today", "10"),
            prep("Long $AMZN Oct $240 Calls", "240"),
        ];
        let v = BowVocab::build(&s);
        assert!(v.get("TICKER").is_some());
        assert!(v.get("DD").is_some());
        assert!(v.words().windows(2).all(|w| w[0] < w[1]));
        let json = serde_json::to_string(&v).unwrap();
        let back: BowVocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get("today"), v.get("today"));
    }

    #[test]
    fn char_matrix_construction() {
        let s = prep("abc123defg", "123");
        let m = encode_char(&s, CHAR_SEQ_LEN).unwrap();
        assert_eq!(m.rows(), 140);
        assert_eq!(m.width(), 102 + 1 + 8);
        let on: Vec<usize> = (0..140).filter(|&t| m.position[t]).collect();
        assert_eq!(on, [3, 4, 5]);
        let RowContent::OneHot { ids, .. } = &m.content else {
            panic!()
        };
        assert!(ids[10..].iter().all(Option::is_none));
        assert_eq!(ids[3], CharAlphabet::standard().index('D'));

        let dense = m.to_dense();
        let w = m.width();
        for row in dense.chunks(w) {
            assert_eq!(&row[103..], &dense[103..w]);
            assert!(row[..102].iter().sum::<f64>() <= 1.0);
        }
    }

    #[test]
    fn char_matrix_out_of_alphabet_rows_are_zero() {
        let s = prep("é 5", "5");
        let m = encode_char(&s, 10).unwrap();
        let RowContent::OneHot { ids, .. } = &m.content else {
            panic!()
        };
        assert_eq!(ids[0], None);
        assert!(ids[2].is_some());
    }

    #[test]
    fn long_inputs_are_truncated_around_the_target() {
        let text = format!("{} 77", "x".repeat(197));
        let s = prep(&text, "77");
        let m = encode_char(&s, CHAR_SEQ_LEN).unwrap();
        assert_eq!(m.position.iter().filter(|&&p| p).count(), 2);
        let first = m.position.iter().position(|&p| p).unwrap();
        let RowContent::OneHot { ids, .. } = &m.content else {
            panic!()
        };
        let d = CharAlphabet::standard().index('D');
        assert_eq!((ids[first], ids[first + 1]), (d, d));

        let early = format!("77 {}", "x".repeat(197));
        let m = encode_char(&prep(&early, "77"), CHAR_SEQ_LEN).unwrap();
        assert!(m.position[0] && m.position[1]);

        assert!(matches!(
            window_start(300, 10, 100, 120),
            Err(Error::TargetTruncated)
        ));
        assert_eq!(window_start(300, 10, 100, 104).unwrap(), 97);
        assert_eq!(window_start(300, 10, 295, 300).unwrap(), 290);
    }

    #[test]
    fn word_matrix_construction() {
        let s = prep("up almost 10% since Q1", "10");
        let emb = EmbeddingTable::new(vec!["DD".into()], 3, vec![0.5, -1.0, 2.0]).unwrap();
        let m = encode_word(&s, &emb, WORD_SEQ_LEN).unwrap();
        assert_eq!(m.rows(), 25);
        assert_eq!(m.width(), 3 + 1 + 8);
        let on: Vec<usize> = (0..25).filter(|&t| m.position[t]).collect();
        assert_eq!(on, [2]);
        let RowContent::Dense { values, .. } = &m.content else {
            panic!()
        };
        assert_eq!(&values[6..9], &[0.5, -1.0, 2.0]);
        assert!(values[6 * 3..].iter().all(|&x| x == 0.0));
        assert_eq!(m.features[0], 1.0);
        assert_eq!(m.features[1], 1.0);
    }

    #[test]
    fn word_matrix_default_width() {
        let emb = EmbeddingTable::new(vec!["a".into()], 250, vec![0.0; 250]).unwrap();
        let m = encode_word(&prep("a 5 b c d", "5"), &emb, WORD_SEQ_LEN).unwrap();
        assert_eq!(m.width(), 259);
        let many = format!("{} 5", vec!["w"; 40].join(" "));
        let m = encode_word(&prep(&many, "5"), &emb, WORD_SEQ_LEN).unwrap();
        assert_eq!(m.position.iter().filter(|&&p| p).count(), 1);
    }

    #[test]
    fn position_sum_equals_target_length() {
        for (t, n) in [
            ("at 5,838 shares", "5,838"),
            ("$AAPL 8/17 gap", "8/17"),
            ("+2.00 x", "+2.00"),
        ] {
            let s = prep(t, n);
            let m = encode_char(&s, CHAR_SEQ_LEN).unwrap();
            assert_eq!(m.position.iter().filter(|&&p| p).count(), n.chars().count());
        }
    }

    #[test]
    fn dense_conversion_matches_nonzeros() {
        let s = prep("ab 1", "1");
        let m = encode_char(&s, 4).unwrap();
        let d = m.to_dense();
        let w = m.width();
        let mut count = 0;
        for t in 0..4 {
            m.for_each_nonzero(t, |c, v| {
                assert_eq!(d[t * w + c], v);
                count += 1;
            });
        }
        assert_eq!(count, d.iter().filter(|&&x| x != 0.0).count());
        assert_eq!(m.dump().lines().count(), 4);
    }
}
