use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

macro_rules! resource {
    ($name:literal) => {
        include_str!(concat!("../../resources/", $name))
    };
}

/// Keyword lists behind the context features. Terms are lowercase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordTables {
    /// Percentage markers.
    pub key_p: HashSet<String>,
    /// Relative-change words and signs.
    pub key_r: HashSet<String>,
    /// Month names and abbreviations.
    pub key_m: HashSet<String>,
    /// Technical indicator names.
    pub key_i: HashSet<String>,
    /// Date-unit words.
    pub key_d: HashSet<String>,
    /// Time-unit words.
    pub key_t: HashSet<String>,
    /// call / put markers for options.
    pub option_markers: HashSet<String>,
}

fn terms(s: &str) -> HashSet<String> {
    s.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

impl KeywordTables {
    pub fn standard() -> &'static KeywordTables {
        static STD: OnceLock<KeywordTables> = OnceLock::new();
        STD.get_or_init(|| KeywordTables {
            key_p: terms(resource!("keywords/key_p.txt")),
            key_r: terms(resource!("keywords/key_r.txt")),
            key_m: terms(resource!("keywords/key_m.txt")),
            key_i: terms(resource!("keywords/key_i.txt")),
            key_d: terms(resource!("keywords/key_d.txt")),
            key_t: terms(resource!("keywords/key_t.txt")),
            option_markers: terms(resource!("keywords/option_markers.txt")),
        })
    }

    /// Loads `key_p.txt` ... `option_markers.txt` from a directory. Missing
    /// files fall back to the bundled lists.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let std = Self::standard();
        let read = |name: &str, fallback: &HashSet<String>| -> Result<HashSet<String>> {
            let path = dir.join(name);
            if path.exists() {
                let s = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Ok(terms(&s))
            } else {
                Ok(fallback.clone())
            }
        };
        Ok(KeywordTables {
            key_p: read("key_p.txt", &std.key_p)?,
            key_r: read("key_r.txt", &std.key_r)?,
            key_m: read("key_m.txt", &std.key_m)?,
            key_i: read("key_i.txt", &std.key_i)?,
            key_d: read("key_d.txt", &std.key_d)?,
            key_t: read("key_t.txt", &std.key_t)?,
            option_markers: read("option_markers.txt", &std.option_markers)?,
        })
    }

    pub fn extend_indicators<I, S>(&mut self, extra: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.key_i
            .extend(extra.into_iter().map(|s| s.as_ref().trim().to_lowercase()));
    }

    /// True if any table other than the noun lexicon lists `word`.
    pub fn claims(&self, word: &str) -> bool {
        self.key_p.contains(word)
            || self.key_m.contains(word)
            || self.key_i.contains(word)
            || contains_inflected(&self.key_d, word)
            || contains_inflected(&self.key_t, word)
            || contains_inflected(&self.option_markers, word)
    }
}

/// Membership allowing a plural `s` on `word`.
pub(crate) fn contains_inflected(set: &HashSet<String>, word: &str) -> bool {
    set.contains(word)
        || word
            .strip_suffix('s')
            .is_some_and(|w| !w.is_empty() && set.contains(w))
}

/// Decides whether a word is a noun. The default is a bundled lexicon; a
/// tagger-backed implementation can be swapped in.
pub trait NounTest: Send + Sync {
    fn is_noun(&self, word: &str) -> bool;
}

#[derive(Debug, Clone)]
pub struct NounLexicon {
    words: HashSet<String>,
}

impl NounLexicon {
    pub fn standard() -> &'static NounLexicon {
        static STD: OnceLock<NounLexicon> = OnceLock::new();
        STD.get_or_init(|| NounLexicon {
            words: terms(resource!("nouns.txt")),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(NounLexicon { words: terms(&s) })
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        NounLexicon {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }
}

impl NounTest for NounLexicon {
    fn is_noun(&self, word: &str) -> bool {
        contains_inflected(&self.words, word)
            || word
                .strip_suffix("es")
                .is_some_and(|w| !w.is_empty() && self.words.contains(w))
    }
}
