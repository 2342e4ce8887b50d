//! Deterministic question tokenization.
//!
//! A token is either a maximal run of alphanumeric characters or a single
//! non-whitespace, non-alphanumeric character. Tokens are lowercased.

use std::ops::Range;

/// Byte ranges of every token in `text`, in order.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if word_start.is_none() {
                word_start = Some(i);
            }
            continue;
        }
        if let Some(start) = word_start.take() {
            spans.push(start..i);
        }
        if !ch.is_whitespace() {
            spans.push(i..i + ch.len_utf8());
        }
    }
    if let Some(start) = word_start {
        spans.push(start..text.len());
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    token_spans(&lower)
        .into_iter()
        .map(|span| lower[span].to_string())
        .collect()
}

pub fn token_count(text: &str) -> usize {
    token_spans(text).len()
}

/// True if `word` occurs in `text` as a whole token, case-insensitively.
pub fn contains_token(text: &str, word: &str) -> bool {
    let word = word.to_lowercase();
    tokenize(text).contains(&word)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_words_and_punctuation() {
        assert_eq!(tokenize("How many heads?"), ["how", "many", "heads", "?"]);
        assert_eq!(
            tokenize("What's the T1.age,  really"),
            ["what", "'", "s", "the", "t1", ".", "age", ",", "really"]
        );
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn spans_index_original_text() {
        let text = "Show all Singers.";
        let spans = token_spans(text);
        assert_eq!(&text[spans[2].clone()], "Singers");
        assert_eq!(&text[spans[3].clone()], ".");
    }

    proptest::proptest! {
        #[test]
        fn tokenization_is_idempotent_on_rejoined_tokens(s in "\\PC{0,60}") {
            let once = tokenize(&s);
            let again = tokenize(&once.join(" "));
            proptest::prop_assert_eq!(once, again);
        }
    }
}
