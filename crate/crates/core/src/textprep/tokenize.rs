use serde::Serialize;

/// A token with its half-open character range in the tokenized string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Digits, or the `D` mask that replaces them after normalization.
fn is_digitish(c: char) -> bool {
    c.is_ascii_digit() || c == 'D'
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Length of a `d-d-d` dash date starting at `i`, if any.
fn dash_date_len(chars: &[char], i: usize) -> Option<usize> {
    let mut j = i;
    for part in 0..3 {
        let s = j;
        while j < chars.len() && is_digitish(chars[j]) {
            j += 1;
        }
        if j == s {
            return None;
        }
        if part < 2 {
            if chars.get(j) != Some(&'-') {
                return None;
            }
            j += 1;
        }
    }
    if chars.get(j).is_some_and(|&c| is_word(c)) {
        return None;
    }
    Some(j - i)
}

/// Length of a dotted abbreviation like `a.m.` or `u.s.` starting at `i`.
fn abbreviation_len(chars: &[char], i: usize) -> Option<usize> {
    let mut j = i;
    let mut pairs = 0;
    while j + 1 < chars.len() && chars[j].is_alphabetic() && chars[j + 1] == '.' {
        if pairs > 0 || i == 0 || !is_word(chars[i - 1]) {
            j += 2;
            pairs += 1;
        } else {
            break;
        }
    }
    (pairs >= 2 && !chars.get(j).is_some_and(|&c| is_word(c))).then_some(j - i)
}

/// Splits on whitespace, then separates punctuation from word and numeral
/// cores. Decimal points, thousands commas, date slashes and clock colons
/// stay inside numerals, as do three-part dash dates and a leading sign.
/// Two-part dash ranges split around the dash.
pub(crate) fn tokenize_spans(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mut i = 0;
    let push = |out: &mut Vec<Token>, s: usize, e: usize| {
        out.push(Token {
            text: chars[s..e].iter().collect(),
            start: s,
            end: e,
        });
    };
    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let prev_is_word = prev.is_some_and(is_word);

        if let Some(len) = abbreviation_len(&chars, i) {
            push(&mut out, i, i + len);
            i += len;
            continue;
        }

        let starts_number = |k: usize| {
            chars.get(k).is_some_and(|&c| is_digitish(c))
                || (chars.get(k) == Some(&'.') && chars.get(k + 1).is_some_and(|&c| is_digitish(c)))
        };
        let signed = matches!(c, '+' | '-') && !prev_is_word && starts_number(i + 1);
        let leading_dot =
            c == '.' && !prev_is_word && chars.get(i + 1).is_some_and(|&c| is_digitish(c));

        if is_word(c) || signed || leading_dot {
            let start = i;
            let core = if signed { i + 1 } else { i };
            if let Some(len) = dash_date_len(&chars, core) {
                push(&mut out, start, core + len);
                i = core + len;
                continue;
            }
            let mut j = core + 1;
            while j < n {
                let cj = chars[j];
                if is_word(cj) {
                    j += 1;
                } else if matches!(cj, '.' | ',' | '/' | ':')
                    && is_digitish(chars[j - 1])
                    && chars.get(j + 1).is_some_and(|&c| is_digitish(c))
                {
                    j += 2;
                } else {
                    break;
                }
            }
            push(&mut out, start, j);
            i = j;
            continue;
        }

        push(&mut out, i, i + 1);
        i += 1;
    }
    out
}

/// Token strings of `text`. Works on raw or normalized text.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|t| t.text).collect()
}
