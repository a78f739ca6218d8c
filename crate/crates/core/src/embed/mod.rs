//! Skip-gram word embeddings with negative sampling, and the text embedding
//! file format.

use std::borrow::Cow;
use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: DEFAULT_DIM,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

/// Token vectors stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    matrix: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(tokens: Vec<String>, dim: usize, matrix: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        if matrix.len() != tokens.len() * dim {
            return Err(Error::Shape(format!(
                "{} tokens x {dim} dims needs {} values, got {}",
                tokens.len(),
                tokens.len() * dim,
                matrix.len()
            )));
        }
        if let Some(x) = matrix.iter().find(|x| !x.is_finite()) {
            return Err(Error::Format(format!("non-finite embedding value {x}")));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Format(format!("invalid token {t:?}")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate token {t:?}")));
            }
        }
        Ok(EmbeddingTable {
            tokens,
            index,
            dim,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&i| &self.matrix[i * self.dim..(i + 1) * self.dim])
    }

    /// Row for `token`, or a unit-norm vector seeded by the token's hash.
    pub fn lookup(&self, token: &str) -> Cow<'_, [f32]> {
        match self.get(token) {
            Some(row) => Cow::Borrowed(row),
            None => Cow::Owned(oov_vector(token, self.dim)),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Header `<|V|> <d>`, then one `token v1 .. vd` line per row. Floats use
    /// the shortest representation that parses back to the same value.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.tokens.len(), self.dim)?;
        for (i, t) in self.tokens.iter().enumerate() {
            w.write_all(t.as_bytes())?;
            for x in &self.matrix[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(f)).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("missing header".into()))?
            .map_err(|e| Error::Format(e.to_string()))?;
        let mut it = header.split_whitespace();
        let parse = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad header {header:?}")))
        };
        let n = parse(it.next())?;
        let dim = parse(it.next())?;
        if it.next().is_some() || dim == 0 {
            return Err(Error::Format(format!("bad header {header:?}")));
        }
        let mut tokens = Vec::with_capacity(n);
        let mut matrix = Vec::with_capacity(n * dim);
        for row in 0..n {
            let line_no = row + 2;
            let line = match lines.next() {
                Some(l) => l.map_err(|e| Error::Format(e.to_string()))?,
                None => {
                    return Err(Error::Format(format!(
                        "truncated: expected {n} rows, found {row}"
                    )))
                }
            };
            let mut parts = line.split(' ');
            let token = parts.next().unwrap_or_default();
            let before = matrix.len();
            for p in parts {
                let x: f32 = p
                    .parse()
                    .map_err(|_| Error::Format(format!("line {line_no}: bad value {p:?}")))?;
                matrix.push(x);
            }
            if matrix.len() - before != dim {
                return Err(Error::Format(format!(
                    "line {line_no}: expected {dim} values, found {}",
                    matrix.len() - before
                )));
            }
            tokens.push(token.to_string());
        }
        if let Some(extra) = lines.next() {
            let extra = extra.map_err(|e| Error::Format(e.to_string()))?;
            if !extra.trim().is_empty() {
                return Err(Error::Format(format!("more than {n} rows")));
            }
        }
        Self::new(tokens, dim, matrix)
    }
}

/// Deterministic unit vector for an out-of-vocabulary token.
pub fn oov_vector(token: &str, dim: usize) -> Vec<f32> {
    let seed: [u8; 32] = Sha256::digest(token.as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn cosine(a: &[f32], b: &[f32]) -> f32 {
    let dot: f32 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f32>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f32>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Trains skip-gram with negative sampling on pre-tokenized sentences.
///
/// Vocabulary is ordered by descending count, ties by token. Negatives are
/// drawn from the unigram distribution raised to 0.75. Training is
/// single-threaded so results are bit-identical for a given seed.
pub fn train_skipgram<S: AsRef<str>>(
    corpus: &[Vec<S>],
    config: &SkipGramConfig,
) -> Result<EmbeddingTable> {
    if config.dim == 0 {
        return Err(Error::InvalidArgument(
            "embedding dimension must be positive".into(),
        ));
    }
    if config.window == 0 || config.negatives == 0 {
        return Err(Error::InvalidArgument(
            "window and negatives must be at least 1".into(),
        ));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for sent in corpus {
        for t in sent {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count.max(1))
        .collect();
    if vocab.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (*t, i))
        .collect();

    let mut cumulative = Vec::with_capacity(vocab.len());
    let mut acc = 0.0f64;
    for (_, c) in &vocab {
        acc += (*c as f64).powf(0.75);
        cumulative.push(acc);
    }

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| (rng.gen::<f32>() - 0.5) / dim as f32)
        .collect();
    let mut output = vec![0.0f32; vocab.len() * dim];
    let mut grad = vec![0.0f32; dim];

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| {
            s.iter()
                .filter_map(|t| index.get(t.as_ref()).copied())
                .collect()
        })
        .collect();
    let total: usize = sentences.iter().map(Vec::len).sum::<usize>() * config.epochs;
    let mut processed = 0usize;

    for _ in 0..config.epochs {
        for sent in &sentences {
            for (pos, &center) in sent.iter().enumerate() {
                let lr = config.learning_rate
                    * (1.0 - processed as f32 / (total as f32 + 1.0)).max(1e-4);
                processed += 1;
                let reach = rng.gen_range(1..=config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sent.len() - 1);
                for (cpos, &context) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let in_row = context * dim;
                    for k in 0..=config.negatives {
                        let (target, label) = if k == 0 {
                            (center, 1.0)
                        } else {
                            let u = rng.gen::<f64>() * acc;
                            let t = cumulative.partition_point(|&c| c <= u).min(vocab.len() - 1);
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out_row = target * dim;
                        let dot: f32 = (0..dim)
                            .map(|j| input[in_row + j] * output[out_row + j])
                            .sum();
                        let g = (label - sigmoid(dot)) * lr;
                        for j in 0..dim {
                            grad[j] += g * output[out_row + j];
                            output[out_row + j] += g * input[in_row + j];
                        }
                    }
                    for j in 0..dim {
                        input[in_row + j] += grad[j];
                    }
                }
            }
        }
    }
    let tokens = vocab.into_iter().map(|(t, _)| t.to_string()).collect();
    EmbeddingTable::new(tokens, dim, input)
}
