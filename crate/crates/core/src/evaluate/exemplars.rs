use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spider::Example;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarMethod {
    /// Descending Jaccard similarity of lowercase token sets.
    TstJaccard,
    /// Ascending character Levenshtein distance of lowercase questions.
    TstStringDistance,
}

impl FromStr for ExemplarMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "tst_jaccard" | "jaccard" => Ok(ExemplarMethod::TstJaccard),
            "tst_string_distance" | "string_distance" | "levenshtein" => Ok(ExemplarMethod::TstStringDistance),
            _ => Err(Error::Config(format!("unknown exemplar method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExemplarQuery<'a> {
    pub question: &'a str,
    pub pool: &'a [Example],
    pub method: ExemplarMethod,
    pub k: usize,
}

/// Jaccard similarity as an exact fraction `(intersection, union)`; two
/// empty sets are identical, `(1, 1)`.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> (usize, usize) {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        (1, 1)
    } else {
        (inter, union)
    }
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.chars().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Indices of the `k` pool items most similar to the question, best first.
/// Equal scores keep pool order.
pub fn retrieve_exemplars(query: &ExemplarQuery<'_>) -> Result<Vec<usize>> {
    if query.pool.is_empty() || query.k == 0 || query.k > query.pool.len() {
        return Err(Error::PreconditionViolation(format!(
            "k = {} must be between 1 and the pool size {}",
            query.k,
            query.pool.len()
        )));
    }
    let mut order: Vec<usize> = (0..query.pool.len()).collect();
    match query.method {
        ExemplarMethod::TstJaccard => {
            let target: BTreeSet<String> = tokenize(query.question).into_iter().collect();
            let scores: Vec<(usize, usize)> = query
                .pool
                .iter()
                .map(|e| jaccard(&target, &e.question_tokens.iter().cloned().collect()))
                .collect();
            // a/b > c/d  <=>  a*d > c*b
            order.sort_by(|&x, &y| {
                let (a, b) = scores[x];
                let (c, d) = scores[y];
                (c * b).cmp(&(a * d))
            });
        }
        ExemplarMethod::TstStringDistance => {
            let target = query.question.to_lowercase();
            let distances: Vec<usize> = query
                .pool
                .iter()
                .map(|e| levenshtein(&target, &e.question.to_lowercase()))
                .collect();
            order.sort_by_key(|&i| distances[i]);
        }
    }
    order.truncate(query.k);
    Ok(order)
}
