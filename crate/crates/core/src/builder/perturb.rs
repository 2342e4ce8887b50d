use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::ModifierCategory;
use crate::relevance::{complete_with_retry, strip_terminal_punctuation, HumanLexicon, JudgeClient, RetryPolicy};
use crate::spider::Example;
use crate::text::{contains_token, token_count, token_spans};

/// Where the modifier goes relative to the head noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// `dumb driver`
    Attributive,
    /// `drivers who are dumb`
    RelativeClause,
}

impl Structure {
    pub const ALL: [Structure; 2] = [Structure::Attributive, Structure::RelativeClause];

    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Attributive => "attributive",
            Structure::RelativeClause => "relative_clause",
        }
    }
}

impl std::str::FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace('-', "_");
        Structure::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown structure `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Rule,
    Llm,
}

/// A question with one judgmental modifier inserted. The gold SQL is the
/// base example's, unchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedExample {
    pub base: Example,
    pub modifier: String,
    pub category: ModifierCategory,
    pub structure: Structure,
    pub perturbed_question: String,
    pub gold_sql: String,
    pub provenance: Provenance,
}

pub fn build_paraphrase_prompt(modifier: &str, question: &str) -> Result<String> {
    if modifier.trim().is_empty() {
        return Err(Error::PreconditionViolation("modifier must be non-empty".into()));
    }
    let question = strip_terminal_punctuation(question);
    Ok(format!(
        "{modifier}; {question}? Paraphrase into a new sentence given the token and the sentence."
    ))
}

/// Inserts `modifier` at the first token the lexicon recognizes as a human
/// noun. Everything else in the question is left byte-for-byte intact.
pub fn perturb_query_rule(
    example: &Example,
    modifier: &str,
    category: ModifierCategory,
    lexicon: &HumanLexicon,
    structure: Structure,
) -> Result<PerturbedExample> {
    let question = &example.question;
    let head = token_spans(question)
        .into_iter()
        .find(|span| lexicon.matches_token(&question[span.clone()].to_lowercase()))
        .ok_or_else(|| Error::NoHumanHeadNoun(example.example_id.clone()))?;
    let perturbed_question = match structure {
        Structure::Attributive => format!("{}{modifier} {}", &question[..head.start], &question[head.start..]),
        Structure::RelativeClause => format!("{} who are {modifier}{}", &question[..head.end], &question[head.end..]),
    };
    Ok(PerturbedExample {
        base: example.clone(),
        modifier: modifier.to_string(),
        category,
        structure,
        perturbed_question,
        gold_sql: example.gold_sql.clone(),
        provenance: Provenance::Rule,
    })
}

/// Largest token-count change accepted from a paraphrase.
pub const MAX_PARAPHRASE_TOKEN_DELTA: usize = 4;

/// Asks `client` to paraphrase the question around `modifier`. The answer is
/// kept only if it contains the modifier as a token and stays within
/// [`MAX_PARAPHRASE_TOKEN_DELTA`] tokens of the original; otherwise, or if
/// the client is unavailable, the rule path is used.
#[allow(clippy::too_many_arguments)]
pub fn perturb_query_llm(
    example: &Example,
    modifier: &str,
    category: ModifierCategory,
    client: &dyn JudgeClient,
    retry: RetryPolicy,
    lexicon: &HumanLexicon,
    structure: Structure,
) -> Result<PerturbedExample> {
    let prompt = build_paraphrase_prompt(modifier, &example.question)?;
    match complete_with_retry(client, &prompt, &example.example_id, retry) {
        Ok(answer) => {
            let answer = answer.trim();
            let delta = token_count(answer).abs_diff(token_count(&example.question));
            if contains_token(answer, modifier) && delta <= MAX_PARAPHRASE_TOKEN_DELTA {
                return Ok(PerturbedExample {
                    base: example.clone(),
                    modifier: modifier.to_string(),
                    category,
                    structure,
                    perturbed_question: answer.to_string(),
                    gold_sql: example.gold_sql.clone(),
                    provenance: Provenance::Llm,
                });
            }
            log::info!("paraphrase for {} rejected: {answer:?}", example.example_id);
        }
        Err(e @ Error::JudgeUnavailable { .. }) => {
            log::warn!("{e}; using rule perturbation");
        }
        Err(e) => return Err(e),
    }
    perturb_query_rule(example, modifier, category, lexicon, structure)
}
