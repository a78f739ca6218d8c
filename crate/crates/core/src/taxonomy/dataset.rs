use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Category, Subcategory};
use crate::error::{Error, Result};
use crate::textprep;

#[derive(Debug, Clone, PartialEq)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    pub timestamp: Option<String>,
    pub cashtags: Vec<String>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Tweet {
            id: id.into(),
            text: text.into(),
            timestamp: None,
            cashtags: Vec::new(),
        }
    }

    /// Calendar date of the timestamp. Accepts `YYYY-MM-DD` or any ISO-8601
    /// datetime starting with one.
    pub fn date(&self) -> Option<NaiveDate> {
        self.timestamp.as_deref().and_then(parse_date_prefix)
    }

    /// Explicit cashtags if the record carried them, else the ones found in
    /// the text. Symbols are returned without the `$`, uppercased.
    pub fn tickers(&self) -> Vec<String> {
        if !self.cashtags.is_empty() {
            return self
                .cashtags
                .iter()
                .map(|c| c.trim_start_matches('$').to_uppercase())
                .collect();
        }
        textprep::cashtags(&self.text)
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

fn parse_date_prefix(s: &str) -> Option<NaiveDate> {
    let head = s.get(..10)?;
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

/// One numeral span inside a tweet. Offsets and lengths count Unicode scalar
/// values, not bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct NumeralInstance {
    pub tweet_id: String,
    pub offset: usize,
    pub length: usize,
    pub surface: String,
    pub category: Category,
    pub subcategory: Option<Subcategory>,
    /// Raw per-annotator labels before adjudication, when available.
    pub annotations: Option<Vec<Subcategory>>,
}

impl NumeralInstance {
    pub fn end(&self) -> usize {
        self.offset + self.length
    }

    /// Gold subcategory, or the sole leaf of a category that does not split.
    pub fn leaf(&self) -> Option<Subcategory> {
        match (self.subcategory, self.category.subcategories()) {
            (Some(s), _) => Some(s),
            (None, [only]) => Some(*only),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    tweets: Vec<Tweet>,
    instances: Vec<NumeralInstance>,
    by_id: HashMap<String, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TweetRecord {
    tweet_id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    cashtags: Vec<String>,
    #[serde(default)]
    instances: Vec<InstanceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceRecord {
    offset: usize,
    length: usize,
    category: String,
    subcategory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotations: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset, validating every instance against its tweet.
    pub fn new(tweets: Vec<Tweet>, instances: Vec<NumeralInstance>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(tweets.len());
        for (i, t) in tweets.iter().enumerate() {
            if by_id.insert(t.id.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate tweet_id `{}`",
                    t.id
                )));
            }
        }
        let ds = Dataset {
            tweets,
            instances,
            by_id,
        };
        for inst in &ds.instances {
            ds.validate_instance(inst)?;
        }
        Ok(ds)
    }

    fn validate_instance(&self, inst: &NumeralInstance) -> Result<()> {
        let tweet = self.tweet(&inst.tweet_id).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown tweet_id `{}`", inst.tweet_id))
        })?;
        validate_span(tweet, inst)
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn instances(&self) -> &[NumeralInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn tweet(&self, id: &str) -> Option<&Tweet> {
        self.by_id.get(id).map(|&i| &self.tweets[i])
    }

    /// The tweet an instance points into. Instances are validated on
    /// construction, so this cannot fail for instances of this dataset.
    pub fn tweet_of(&self, inst: &NumeralInstance) -> &Tweet {
        &self.tweets[self.by_id[&inst.tweet_id]]
    }

    /// Subset containing the given instances (by index) and only the tweets
    /// they reference.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let instances: Vec<_> = indices.iter().map(|&i| self.instances[i].clone()).collect();
        let mut keep = vec![false; self.tweets.len()];
        for inst in &instances {
            keep[self.by_id[&inst.tweet_id]] = true;
        }
        let tweets = self
            .tweets
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(t, _)| t.clone())
            .collect();
        Dataset::new(tweets, instances).expect("subset of a valid dataset is valid")
    }

    /// Concatenates two datasets; tweet ids must be disjoint.
    pub fn merge(mut self, other: Dataset) -> Result<Dataset> {
        self.tweets.extend(other.tweets);
        self.instances.extend(other.instances);
        Dataset::new(self.tweets, self.instances)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let ds = Self::from_reader(BufReader::new(file), path)?;
        let (found, total) = ds.detection_recall();
        if found < total {
            log::warn!(
                "{}: numeral detection recovers {found}/{total} annotated offsets",
                path.display()
            );
        }
        Ok(ds)
    }

    /// Parses line-delimited records. `origin` is only used in error messages.
    pub fn from_reader(reader: impl BufRead, origin: &Path) -> Result<Self> {
        let mut tweets = Vec::new();
        let mut instances = Vec::new();
        let mut seen = HashMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec_err = |message: String| Error::Record {
                path: origin.to_path_buf(),
                line: lineno,
                message,
            };
            let rec: TweetRecord =
                serde_json::from_str(&line).map_err(|e| rec_err(e.to_string()))?;
            if seen.insert(rec.tweet_id.clone(), lineno).is_some() {
                return Err(rec_err(format!("duplicate tweet_id `{}`", rec.tweet_id)));
            }
            let tweet = Tweet {
                id: rec.tweet_id,
                text: rec.text,
                timestamp: rec.timestamp,
                cashtags: rec.cashtags,
            };
            if let Some(ts) = &tweet.timestamp {
                if tweet.date().is_none() {
                    return Err(rec_err(format!("unparseable timestamp `{ts}`")));
                }
            }
            for ir in rec.instances {
                let inst = instance_from_record(&tweet, ir).map_err(|e| rec_err(e.to_string()))?;
                instances.push(inst);
            }
            tweets.push(tweet);
        }
        Dataset::new(tweets, instances)
    }

    /// Writes the dataset in the same line-delimited format `load` reads.
    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut per_tweet: HashMap<&str, Vec<&NumeralInstance>> = HashMap::new();
        for inst in &self.instances {
            per_tweet
                .entry(inst.tweet_id.as_str())
                .or_default()
                .push(inst);
        }
        for tweet in &self.tweets {
            let instances = per_tweet
                .get(tweet.id.as_str())
                .map(|v| v.iter().map(|i| record_from_instance(i)).collect())
                .unwrap_or_default();
            let rec = TweetRecord {
                tweet_id: tweet.id.clone(),
                text: tweet.text.clone(),
                timestamp: tweet.timestamp.clone(),
                cashtags: tweet.cashtags.clone(),
                instances,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// How many annotated offsets are also found by numeral detection.
    pub fn detection_recall(&self) -> (usize, usize) {
        let mut found = 0;
        let mut detected: HashMap<&str, Vec<usize>> = HashMap::new();
        for inst in &self.instances {
            let offsets = detected.entry(inst.tweet_id.as_str()).or_insert_with(|| {
                textprep::detect_numerals(&self.tweet_of(inst).text)
                    .into_iter()
                    .map(|s| s.offset)
                    .collect()
            });
            if offsets.contains(&inst.offset) {
                found += 1;
            }
        }
        (found, self.instances.len())
    }
}

fn instance_from_record(tweet: &Tweet, rec: InstanceRecord) -> Result<NumeralInstance> {
    let category: Category = rec.category.parse()?;
    let subcategory = rec
        .subcategory
        .as_deref()
        .map(str::parse::<Subcategory>)
        .transpose()?;
    let annotations = rec
        .annotations
        .map(|v| {
            v.iter()
                .map(|s| s.parse::<Subcategory>())
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let surface: String = tweet
        .text
        .chars()
        .skip(rec.offset)
        .take(rec.length)
        .collect();
    let inst = NumeralInstance {
        tweet_id: tweet.id.clone(),
        offset: rec.offset,
        length: rec.length,
        surface,
        category,
        subcategory,
        annotations,
    };
    validate_span(tweet, &inst)?;
    Ok(inst)
}

fn validate_span(tweet: &Tweet, inst: &NumeralInstance) -> Result<()> {
    if inst.length == 0 {
        return Err(Error::InvalidArgument("zero-length span".into()));
    }
    let len = tweet.char_len();
    if inst.end() > len {
        return Err(Error::InvalidArgument(format!(
            "span {}+{} exceeds text length {len}",
            inst.offset, inst.length
        )));
    }
    let slice: String = tweet
        .text
        .chars()
        .skip(inst.offset)
        .take(inst.length)
        .collect();
    if slice != inst.surface {
        return Err(Error::InvalidArgument(format!(
            "surface `{}` does not match text slice `{slice}`",
            inst.surface
        )));
    }
    if let Some(sub) = inst.subcategory {
        if sub.category() != inst.category {
            return Err(Error::ParentMismatch {
                category: inst.category.to_string(),
                subcategory: sub.to_string(),
            });
        }
    }
    Ok(())
}

fn record_from_instance(inst: &NumeralInstance) -> InstanceRecord {
    InstanceRecord {
        offset: inst.offset,
        length: inst.length,
        category: inst.category.to_string(),
        subcategory: inst.subcategory.map(|s| s.to_string()),
        annotations: inst
            .annotations
            .as_ref()
            .map(|v| v.iter().map(|s| s.to_string()).collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelShare {
    pub count: usize,
    /// Percentage of all instances, 0..=100.
    pub percent: f64,
}

/// Per-subcategory counts and percentages. Fails if any instance is
/// unlabeled at the subcategory level.
pub fn label_distribution(ds: &Dataset) -> Result<BTreeMap<Subcategory, LabelShare>> {
    let mut counts: BTreeMap<Subcategory, usize> = BTreeMap::new();
    for inst in ds.instances() {
        let sub = inst.subcategory.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unlabeled instance at {}:{}",
                inst.tweet_id, inst.offset
            ))
        })?;
        *counts.entry(sub).or_default() += 1;
    }
    let total = ds.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(s, count)| {
            (
                s,
                LabelShare {
                    count,
                    percent: 100.0 * count as f64 / total,
                },
            )
        })
        .collect())
}
