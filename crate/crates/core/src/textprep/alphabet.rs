use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const STANDARD: &str = include_str!("../../resources/alphabet.txt");
const HEADER: &str = "alphabet v1";

/// The 102-character set used by the character-level encoder.
///
/// The resource file has a version header line followed by one character per
/// line. Layout characters are escaped: `\s` space, `\t` tab, `\n` newline,
/// `\r` carriage return, `\\` backslash.
#[derive(Debug, Clone)]
pub struct CharAlphabet {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharAlphabet {
    pub const SIZE: usize = 102;

    pub fn standard() -> &'static CharAlphabet {
        static STD: OnceLock<CharAlphabet> = OnceLock::new();
        STD.get_or_init(|| CharAlphabet::parse(STANDARD).expect("bundled alphabet is valid"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&s)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::Format(format!(
                "alphabet must start with `{HEADER}`"
            )));
        }
        let mut chars = Vec::with_capacity(Self::SIZE);
        for (n, line) in lines.enumerate() {
            let c = match line {
                "\\s" => ' ',
                "\\t" => '\t',
                "\\n" => '\n',
                "\\r" => '\r',
                "\\\\" => '\\',
                other => {
                    let mut it = other.chars();
                    match (it.next(), it.next()) {
                        (Some(c), None) => c,
                        _ => {
                            return Err(Error::Format(format!(
                                "alphabet line {} is not a single character: {other:?}",
                                n + 2
                            )))
                        }
                    }
                }
            };
            chars.push(c);
        }
        let index: HashMap<char, usize> = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        if index.len() != chars.len() {
            return Err(Error::Format("alphabet contains duplicates".into()));
        }
        if chars.len() != Self::SIZE {
            return Err(Error::Format(format!(
                "alphabet has {} entries, expected {}",
                chars.len(),
                Self::SIZE
            )));
        }
        Ok(CharAlphabet { chars, index })
    }

    pub fn index(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    pub fn char_at(&self, i: usize) -> Option<char> {
        self.chars.get(i).copied()
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

/// Index of `c` in the standard alphabet.
pub fn char_index(c: char) -> Option<usize> {
    CharAlphabet::standard().index(c)
}
