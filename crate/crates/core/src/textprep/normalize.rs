use super::alphabet::CharAlphabet;
use super::scan::{detect_numerals, scan_entities, NumeralSpan};
use super::tokenize::{tokenize_spans, Token};

/// Output of the tweet normalization pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTweet {
    pub original: String,
    pub normalized: String,
    pub tokens: Vec<Token>,
    /// `char_map[j]` is the original character index that produced
    /// normalized character `j`. Non-decreasing.
    pub char_map: Vec<usize>,
    /// Numeral spans in original-text coordinates.
    pub numeral_spans: Vec<NumeralSpan>,
}

impl NormalizedTweet {
    /// Normalized character indices whose source lies in `[start, end)` of
    /// the original text.
    pub fn normalized_range(&self, start: usize, end: usize) -> Option<(usize, usize)> {
        let lo = self.char_map.partition_point(|&o| o < start);
        let hi = self.char_map.partition_point(|&o| o < end);
        (lo < hi).then_some((lo, hi))
    }

    /// Indices into `tokens` whose source overlaps `[start, end)` of the
    /// original text.
    pub fn tokens_overlapping(&self, start: usize, end: usize) -> Vec<usize> {
        let Some((lo, hi)) = self.normalized_range(start, end) else {
            return Vec::new();
        };
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.start < hi && t.end > lo)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn token_texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }
}

const PLACEHOLDERS: [&str; 3] = ["ID", "TICKER", "URL"];

fn lower_char(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Normalizes a tweet: user ids, cashtags and URLs become `ID`, `TICKER` and
/// `URL`; every numeral digit becomes `D`; characters outside the alphabet
/// that are not letters or whitespace are dropped; the rest is lowercased.
///
/// Placeholders and mask characters keep their uppercase form. An uppercase
/// `D` survives lowercasing when its letter run has no other uppercase letter,
/// which keeps the function idempotent on its own output.
pub fn normalize(text: &str) -> NormalizedTweet {
    let alphabet = CharAlphabet::standard();
    let numeral_spans = detect_numerals(text);

    // Drop emoji and other symbols first so entity and letter-run boundaries
    // are computed on what survives.
    let mut kept: Vec<char> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    for (i, c) in text.chars().enumerate() {
        let c = if c.is_whitespace() && !alphabet.contains(c) {
            ' '
        } else {
            c
        };
        if alphabet.contains(c) || c.is_alphabetic() || c.is_ascii_digit() {
            kept.push(c);
            origin.push(i);
        }
    }

    let entities = scan_entities(&kept);
    let mut out = String::with_capacity(kept.len());
    let mut char_map = Vec::with_capacity(kept.len());
    let mut ent = entities.iter().peekable();
    let mut i = 0;
    while i < kept.len() {
        if let Some(e) = ent.peek() {
            if e.start == i {
                for ch in e.kind.placeholder().chars() {
                    out.push(ch);
                    char_map.push(origin[i]);
                }
                i = e.end;
                ent.next();
                continue;
            }
        }
        let c = kept[i];
        if c.is_ascii_digit() {
            out.push('D');
            char_map.push(origin[i]);
            i += 1;
        } else if c.is_alphabetic() {
            let mut end = i;
            while end < kept.len() && kept[end].is_alphabetic() {
                end += 1;
            }
            let run = &kept[i..end];
            let bounded = !kept
                .get(end)
                .is_some_and(|c| c.is_ascii_digit() || *c == '_')
                && !(i > 0 && (kept[i - 1].is_ascii_digit() || kept[i - 1] == '_'));
            let word: String = run.iter().collect();
            if bounded && PLACEHOLDERS.contains(&word.as_str()) {
                out.push_str(&word);
            } else {
                let keep_mask = run
                    .iter()
                    .all(|&ch| !ch.is_uppercase() || ch == 'D' || lower_char(ch) == ch);
                for &ch in run {
                    out.push(if keep_mask && ch == 'D' {
                        'D'
                    } else {
                        lower_char(ch)
                    });
                }
            }
            char_map.extend_from_slice(&origin[i..end]);
            i = end;
        } else {
            out.push(c);
            char_map.push(origin[i]);
            i += 1;
        }
    }

    let tokens = tokenize_spans(&out);
    NormalizedTweet {
        original: text.to_string(),
        normalized: out,
        tokens,
        char_map,
        numeral_spans,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn norm(s: &str) -> String {
        normalize(s).normalized
    }

    #[test]
    fn digit_masking_examples() {
        assert_eq!(norm("8/17"), "D/DD");
        assert_eq!(norm("5,838"), "D,DDD");
        assert_eq!(norm(""), "");
    }

    #[test]
    fn replacement_and_lowercase() {
        assert_eq!(
            norm("Long $AMZN Oct $240 Calls"),
            "long TICKER oct $DDD calls"
        );
        assert_eq!(norm("up almost 10% since Q1"), "up almost DD% since qD");
        assert_eq!(
            norm("hi @jimcramer see https://t.co/x1Y?a=2 now"),
            "hi ID see URL now"
        );
        assert_eq!(norm("riding 5DMA"), "riding Ddma");
        assert_eq!(norm("Break-out 200- DMA"), "break-out DDD- dma");
    }

    #[test]
    fn emojis_are_removed() {
        assert_eq!(norm("to the moon 🚀🚀 $TSLA"), "to the moon  TICKER");
        assert_eq!(norm("a😀$b"), "a$b");
        assert_eq!(norm("😀$ab"), "TICKER");
    }

    #[test]
    fn char_map_tracks_sources() {
        let n = normalize("$AB 5%");
        assert_eq!(n.normalized, "TICKER D%");
        assert_eq!(n.char_map, vec![0, 0, 0, 0, 0, 0, 3, 4, 5]);
        assert_eq!(n.normalized_range(4, 5), Some((7, 8)));
    }

    #[test]
    fn tokens_of_target() {
        let n = normalize("Long $AMZN Oct $240 Calls");
        let span = &n.numeral_spans[0];
        let toks = n.tokens_overlapping(span.offset, span.end());
        assert_eq!(toks.len(), 1);
        assert_eq!(n.tokens[toks[0]].text, "DDD");
    }

    fn no_stray_uppercase(s: &str) -> bool {
        // Uppercase only inside placeholders or as the digit mask.
        let mut rest = s.to_string();
        for p in PLACEHOLDERS {
            rest = rest.replace(p, "");
        }
        rest.chars()
            .all(|c| !c.is_uppercase() || c == 'D' || lower_char(c) == c)
    }

    proptest! {
        #[test]
        fn idempotent(s in "[ -~¢£™á😀é\t\n]{0,60}") {
            let once = norm(&s);
            prop_assert_eq!(norm(&once), once.clone());
            prop_assert!(once.chars().all(|c| !c.is_ascii_digit()));
            prop_assert!(no_stray_uppercase(&once), "{}", once);
        }

        #[test]
        fn char_map_monotone(s in "\\PC{0,60}") {
            let n = normalize(&s);
            prop_assert_eq!(n.char_map.len(), n.normalized.chars().count());
            prop_assert!(n.char_map.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
