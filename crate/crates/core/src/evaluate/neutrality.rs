use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconHits {
    pub lexicon: String,
    pub hits: usize,
    /// `hits / total_tokens`, or 0 for an empty corpus.
    pub rate: f64,
    /// Hit count of each question, in input order.
    pub per_question: Vec<usize>,
    /// Distinct lexicon words that occurred.
    pub matched_words: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralityReport {
    pub questions: usize,
    pub total_tokens: usize,
    pub lexicons: Vec<LexiconHits>,
}

/// Counts tokens of `questions` equal to a word of each named lexicon.
/// Every token, punctuation included, counts toward the denominator.
pub fn neutrality_scan(questions: &[String], lexicons: &[(String, Vec<String>)]) -> Result<NeutralityReport> {
    if lexicons.is_empty() || lexicons.iter().any(|(_, words)| words.is_empty()) {
        return Err(Error::PreconditionViolation("neutrality scan needs non-empty lexicons".into()));
    }
    let tokenized: Vec<Vec<String>> = questions.iter().map(|q| tokenize(q)).collect();
    let total_tokens = tokenized.iter().map(Vec::len).sum();
    let lexicons = lexicons
        .iter()
        .map(|(name, words)| {
            let words: BTreeSet<String> = words.iter().map(|w| w.to_lowercase()).collect();
            let mut matched_words = BTreeSet::new();
            let per_question: Vec<usize> = tokenized
                .iter()
                .map(|tokens| {
                    tokens
                        .iter()
                        .filter(|t| {
                            let hit = words.contains(*t);
                            if hit {
                                matched_words.insert((*t).clone());
                            }
                            hit
                        })
                        .count()
                })
                .collect();
            let hits = per_question.iter().sum();
            LexiconHits {
                lexicon: name.clone(),
                hits,
                rate: if total_tokens == 0 { 0.0 } else { hits as f64 / total_tokens as f64 },
                per_question,
                matched_words,
            }
        })
        .collect();
    Ok(NeutralityReport {
        questions: questions.len(),
        total_tokens,
        lexicons,
    })
}
