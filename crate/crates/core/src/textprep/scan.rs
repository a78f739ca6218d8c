//! Character-level scanners for user ids, cashtags, URLs and numerals.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    UserId,
    Cashtag,
    Url,
}

impl EntityKind {
    pub fn placeholder(self) -> &'static str {
        match self {
            EntityKind::UserId => "ID",
            EntityKind::Cashtag => "TICKER",
            EntityKind::Url => "URL",
        }
    }
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entity {
    pub kind: EntityKind,
    pub start: usize,
    pub end: usize,
}

/// A detected numeral. Offsets are in characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumeralSpan {
    pub offset: usize,
    pub length: usize,
    pub surface: String,
}

impl NumeralSpan {
    pub fn end(&self) -> usize {
        self.offset + self.length
    }
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn starts_with_ci(chars: &[char], at: usize, pat: &str) -> bool {
    let mut i = at;
    for p in pat.chars() {
        match chars.get(i) {
            Some(c) if c.to_ascii_lowercase() == p => i += 1,
            _ => return false,
        }
    }
    true
}

/// A handle or ticker body that could be normalizer output: a placeholder,
/// or a leading `D` mask with no other uppercase letter.
fn mask_like(body: &[char]) -> bool {
    let placeholder = ["ID", "TICKER", "URL"]
        .iter()
        .any(|p| p.chars().eq(body.iter().copied()));
    placeholder
        || (body.first() == Some(&'D') && body[1..].iter().all(|c| !c.is_uppercase() || *c == 'D'))
}

/// Finds user ids, cashtags and URLs. An entity only starts where the
/// preceding character is not alphanumeric.
pub(crate) fn scan_entities(chars: &[char]) -> Vec<Entity> {
    let mut out = Vec::new();
    let mut i = 0;
    let n = chars.len();
    while i < n {
        let boundary = i == 0 || !is_word(chars[i - 1]);
        if !boundary {
            i += 1;
            continue;
        }
        if starts_with_ci(chars, i, "http://")
            || starts_with_ci(chars, i, "https://")
            || starts_with_ci(chars, i, "www.")
        {
            let mut end = i;
            while end < n && !chars[end].is_whitespace() {
                end += 1;
            }
            while end > i + 4 && matches!(chars[end - 1], '.' | ',' | ';' | ':' | '!' | '?' | ')') {
                end -= 1;
            }
            out.push(Entity {
                kind: EntityKind::Url,
                start: i,
                end,
            });
            i = end;
            continue;
        }
        let next_letter = chars
            .get(i + 1)
            .is_some_and(|c| c.is_alphabetic() || *c == '_');
        if chars[i] == '@' && next_letter {
            let mut end = i + 1;
            while end < n && is_word(chars[end]) {
                end += 1;
            }
            if end > i + 1 && !mask_like(&chars[i + 1..end]) {
                out.push(Entity {
                    kind: EntityKind::UserId,
                    start: i,
                    end,
                });
                i = end;
                continue;
            }
        }
        if chars[i] == '$' && chars.get(i + 1).is_some_and(|c| c.is_ascii_alphabetic()) {
            let mut end = i + 1;
            while end < n && is_word(chars[end]) {
                end += 1;
            }
            if mask_like(&chars[i + 1..end]) {
                i += 1;
                continue;
            }
            // Share-class suffix such as $BRK.B
            if end + 1 < n
                && chars[end] == '.'
                && chars[end + 1].is_ascii_alphabetic()
                && !chars.get(end + 2).is_some_and(|&c| is_word(c))
            {
                end += 2;
            }
            out.push(Entity {
                kind: EntityKind::Cashtag,
                start: i,
                end,
            });
            i = end;
            continue;
        }
        i += 1;
    }
    out
}

fn digit_run(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    i
}

fn is_digit_at(chars: &[char], i: usize) -> bool {
    chars.get(i).is_some_and(|c| c.is_ascii_digit())
}

/// Extends a numeral whose leading digit run ends at `end`.
fn extend_numeral(chars: &[char], start_digits: usize, mut end: usize) -> usize {
    let first_len = end - start_digits;

    // Dash dates: 2017-01-31, 31-01-17. A lone pair is a range and splits.
    if chars.get(end) == Some(&'-') && is_digit_at(chars, end + 1) {
        let second_end = digit_run(chars, end + 1);
        if chars.get(second_end) == Some(&'-') && is_digit_at(chars, second_end + 1) {
            return digit_run(chars, second_end + 1);
        }
        return end;
    }

    // Slash dates and fractions: 8/17, 1/2, 12/31/2017
    if chars.get(end) == Some(&'/') && is_digit_at(chars, end + 1) && first_len <= 4 {
        let second_end = digit_run(chars, end + 1);
        if second_end - (end + 1) <= 4 {
            end = second_end;
            if chars.get(end) == Some(&'/') && is_digit_at(chars, end + 1) {
                end = digit_run(chars, end + 1);
            }
            return end;
        }
        return end;
    }

    // Clock times: 9:30
    if chars.get(end) == Some(&':') && first_len <= 2 {
        let m_end = digit_run(chars, end + 1);
        if m_end - (end + 1) == 2 {
            return m_end;
        }
    }

    // Thousands groups: 5,838 and 1,000,000
    if first_len <= 3 {
        while chars.get(end) == Some(&',') {
            let g_end = digit_run(chars, end + 1);
            if g_end - (end + 1) == 3 {
                end = g_end;
            } else {
                break;
            }
        }
    }

    if chars.get(end) == Some(&'.') && is_digit_at(chars, end + 1) {
        end = digit_run(chars, end + 1);
    }
    end
}

fn is_sign_context(prev: Option<char>) -> bool {
    match prev {
        None => true,
        Some(p) => p.is_whitespace() || matches!(p, '(' | '[' | '{' | ':' | '=' | ',' | ';' | '~'),
    }
}

/// Detects numeral spans in raw text, ordered by offset and non-overlapping.
///
/// Digits inside user ids, cashtags and URLs are ignored. Ranges such as
/// `197-230` yield two numerals; digits glued to letters (`5dma`, `iphone7`,
/// `Q1`) yield just the digit run.
pub fn detect_numerals(text: &str) -> Vec<NumeralSpan> {
    let chars: Vec<char> = text.chars().collect();
    let entities = scan_entities(&chars);
    let mut spans = Vec::new();
    let mut ent_iter = entities.iter().peekable();
    let n = chars.len();
    let mut i = 0;
    while i < n {
        if let Some(e) = ent_iter.peek() {
            if i >= e.start {
                i = i.max(e.end);
                ent_iter.next();
                continue;
            }
        }
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let c = chars[i];
        let start;
        let digits_start;
        if c.is_ascii_digit() {
            start = i;
            digits_start = i;
        } else if matches!(c, '+' | '-')
            && is_sign_context(prev)
            && (is_digit_at(&chars, i + 1)
                || (chars.get(i + 1) == Some(&'.') && is_digit_at(&chars, i + 2)))
        {
            start = i;
            digits_start = i + 1;
        } else if c == '.' && is_digit_at(&chars, i + 1) && !prev.is_some_and(is_word) {
            start = i;
            digits_start = i;
        } else {
            i += 1;
            continue;
        }

        let end = if chars[digits_start] == '.' {
            digit_run(&chars, digits_start + 1)
        } else {
            let first_end = digit_run(&chars, digits_start);
            extend_numeral(&chars, digits_start, first_end)
        };
        spans.push(NumeralSpan {
            offset: start,
            length: end - start,
            surface: chars[start..end].iter().collect(),
        });
        i = end;
    }
    spans
}

/// Cashtag symbols in order of appearance, without `$`, uppercased.
pub fn cashtags(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    scan_entities(&chars)
        .into_iter()
        .filter(|e| e.kind == EntityKind::Cashtag)
        .map(|e| {
            chars[e.start + 1..e.end]
                .iter()
                .collect::<String>()
                .to_uppercase()
        })
        .collect()
}
