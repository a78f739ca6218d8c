//! Hand-crafted binary context features for a target numeral.

mod keywords;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{tokenize_spans, Token};

use keywords::contains_inflected;
pub use keywords::{KeywordTables, NounLexicon, NounTest};

pub const FEATURE_COUNT: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "percentage",
    "relative_change",
    "option_exercise",
    "option_maturity",
    "indicator",
    "date",
    "time",
    "quantity",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub percentage: bool,
    pub relative_change: bool,
    pub option_exercise: bool,
    pub option_maturity: bool,
    pub indicator: bool,
    pub date: bool,
    pub time: bool,
    pub quantity: bool,
}

impl FeatureVector {
    pub fn to_array(&self) -> [bool; FEATURE_COUNT] {
        [
            self.percentage,
            self.relative_change,
            self.option_exercise,
            self.option_maturity,
            self.indicator,
            self.date,
            self.time,
            self.quantity,
        ]
    }

    pub fn from_array(a: [bool; FEATURE_COUNT]) -> Self {
        FeatureVector {
            percentage: a[0],
            relative_change: a[1],
            option_exercise: a[2],
            option_maturity: a[3],
            indicator: a[4],
            date: a[5],
            time: a[6],
            quantity: a[7],
        }
    }

    /// 0/1 encoding in `FEATURE_NAMES` order.
    pub fn to_f32(&self) -> [f32; FEATURE_COUNT] {
        self.to_array().map(|b| if b { 1.0 } else { 0.0 })
    }

    pub fn get(&self, i: usize) -> bool {
        self.to_array()[i]
    }

    pub fn count(&self) -> usize {
        self.to_array().iter().filter(|&&b| b).count()
    }
}

const RELATIVE_WINDOW: usize = 5;
const CONNECTIVES: [&str; 6] = ["&", "and", "or", ",", "-", "/"];
const MAX_SKIP: usize = 4;

/// Tokens around a target numeral, on lowercased raw text.
struct Context {
    tokens: Vec<Token>,
    /// First and last token overlapping the target.
    first: usize,
    last: usize,
    /// Letters glued in front of the numeral, as in `q1` or `iphone7`.
    prefix: String,
    /// Letters glued after the numeral, as in `5dma`.
    suffix: String,
    surface: String,
}

impl Context {
    fn new(text: &str, offset: usize, length: usize) -> Result<Self> {
        let chars: Vec<char> = text
            .chars()
            .map(|c| {
                let mut l = c.to_lowercase();
                match (l.next(), l.next()) {
                    (Some(x), None) => x,
                    _ => c,
                }
            })
            .collect();
        let end = offset + length;
        if length == 0 || end > chars.len() {
            return Err(Error::InvalidArgument(format!(
                "numeral span {offset}+{length} outside text of {} chars",
                chars.len()
            )));
        }
        let lowered: String = chars.iter().collect();
        let tokens = tokenize_spans(&lowered);
        let hits: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.start < end && t.end > offset)
            .map(|(i, _)| i)
            .collect();
        let (first, last) = match (hits.first(), hits.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "numeral span {offset}+{length} covers no token"
                )))
            }
        };
        let head = &chars[tokens[first].start.min(offset)..offset];
        let glued = head.iter().rev().take_while(|c| c.is_alphabetic()).count();
        let prefix: String = head[head.len() - glued..].iter().collect();
        let suffix: String = chars[end..tokens[last].end.max(end)]
            .iter()
            .take_while(|c| c.is_alphabetic())
            .collect();
        Ok(Context {
            surface: chars[offset..end].iter().collect(),
            tokens,
            first,
            last,
            prefix,
            suffix,
        })
    }

    /// The word immediately following the numeral: a glued suffix or the
    /// next token.
    fn following(&self) -> Option<&str> {
        if !self.suffix.is_empty() {
            return Some(&self.suffix);
        }
        self.tokens.get(self.last + 1).map(|t| t.text.as_str())
    }

    fn after(&self) -> &[Token] {
        &self.tokens[self.last + 1..]
    }

    fn before(&self) -> &[Token] {
        &self.tokens[..self.first]
    }

    fn is_numeric_token(t: &str) -> bool {
        t.trim_start_matches(['+', '-', '.'])
            .starts_with(|c: char| c.is_ascii_digit())
    }
}

fn is_date_pattern(surface: &str) -> bool {
    let s = surface.trim_start_matches(['+', '-']);
    for sep in ['/', '-'] {
        let parts: Vec<&str> = s.split(sep).collect();
        if parts.len() >= 2
            && (sep == '/' || parts.len() == 3)
            && parts.len() <= 3
            && parts
                .iter()
                .all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_digit()))
        {
            return true;
        }
    }
    false
}

fn is_period_marker(prefix: &str, surface: &str) -> bool {
    match prefix {
        "q" => matches!(surface, "1" | "2" | "3" | "4"),
        "h" => matches!(surface, "1" | "2"),
        _ => false,
    }
}

/// Computes context features with configurable keyword tables and noun test.
pub struct FeatureExtractor<'a> {
    tables: &'a KeywordTables,
    nouns: &'a dyn NounTest,
}

impl Default for FeatureExtractor<'static> {
    fn default() -> Self {
        FeatureExtractor {
            tables: KeywordTables::standard(),
            nouns: NounLexicon::standard(),
        }
    }
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(tables: &'a KeywordTables, nouns: &'a dyn NounTest) -> Self {
        FeatureExtractor { tables, nouns }
    }

    pub fn tables(&self) -> &KeywordTables {
        self.tables
    }

    /// Features of the numeral at character `offset` with `length` chars.
    pub fn extract(&self, text: &str, offset: usize, length: usize) -> Result<FeatureVector> {
        let ctx = Context::new(text, offset, length)?;
        let k = self.tables;
        let following = ctx.following();

        let percentage = following.is_some_and(|w| k.key_p.contains(w));

        let signed = ctx.surface.starts_with(['+', '-']);
        let sign_before = ctx
            .before()
            .last()
            .is_some_and(|t| (t.text == "+" || t.text == "-") && t.end == offset);
        let window_hit = |toks: &[Token]| {
            toks.iter().any(|t| {
                t.text.chars().any(char::is_alphabetic) && contains_inflected(&k.key_r, &t.text)
            })
        };
        let before = ctx.before();
        let after = ctx.after();
        let relative_change = percentage
            && (signed
                || sign_before
                || window_hit(&before[before.len().saturating_sub(RELATIVE_WINDOW)..])
                || window_hit(&after[..after.len().min(RELATIVE_WINDOW)]));

        let option = after
            .iter()
            .any(|t| contains_inflected(&k.option_markers, &t.text));
        let month_before = k.key_m.contains(ctx.prefix.as_str()) || {
            let mut it = before.iter().rev();
            match it.next() {
                Some(t) if matches!(t.text.as_str(), "." | "-" | "/") => {
                    it.next().is_some_and(|t| k.key_m.contains(&t.text))
                }
                Some(t) => k.key_m.contains(&t.text),
                None => false,
            }
        };
        let option_maturity = option && month_before;
        let option_exercise = option && !month_before;

        let indicator = following.is_some_and(|w| k.key_i.contains(w)) || {
            let mut hit = false;
            for t in after.iter().take(MAX_SKIP + 1) {
                if k.key_i.contains(&t.text) {
                    hit = true;
                    break;
                }
                if !(CONNECTIVES.contains(&t.text.as_str()) || Context::is_numeric_token(&t.text)) {
                    break;
                }
            }
            hit && ctx.suffix.is_empty()
        };

        let date = following
            .is_some_and(|w| contains_inflected(&k.key_d, w) || k.key_m.contains(w))
            || is_date_pattern(&ctx.surface)
            || is_period_marker(&ctx.prefix, &ctx.surface);

        let time = following.is_some_and(|w| contains_inflected(&k.key_t, w));

        let quantity = following.is_some_and(|w| {
            w.chars().any(char::is_alphabetic) && !k.claims(w) && self.nouns.is_noun(w)
        }) && !is_date_pattern(&ctx.surface)
            && !is_period_marker(&ctx.prefix, &ctx.surface);

        Ok(FeatureVector {
            percentage,
            relative_change,
            option_exercise,
            option_maturity,
            indicator,
            date,
            time,
            quantity,
        })
    }
}

/// Features with the bundled keyword tables and noun lexicon.
pub fn extract_features(text: &str, offset: usize, length: usize) -> Result<FeatureVector> {
    FeatureExtractor::default().extract(text, offset, length)
}
