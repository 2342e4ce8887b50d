//! Human-relevance classification of tables and questions.
//!
//! Three judgment sources are supported: an external text-completion judge
//! (with a JSON-lines answer cache), a recorded fixture, and a deterministic
//! lexicon fallback.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lexicon;
use crate::spider::{DatabaseSchema, Example, TableSchema};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Table,
    Query,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevancePrompt {
    pub kind: PromptKind,
    pub text: String,
}

impl RelevancePrompt {
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgmentSource {
    Llm,
    Lexicon,
    Fixture,
    Cache,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgment {
    pub subject_id: String,
    pub is_human_relevant: bool,
    pub source: JudgmentSource,
    /// The judge answered neither yes nor no; `is_human_relevant` is false.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguous: bool,
}

/// Text-in, text-out completion endpoint used as the relevance judge.
pub trait JudgeClient: Send + Sync {
    fn complete(&self, prompt: &str) -> std::result::Result<String, String>;
}

pub fn table_subject_id(db_id: &str, table: &str) -> String {
    format!("{db_id}.{table}")
}

pub fn build_table_prompt(table: &TableSchema) -> RelevancePrompt {
    let pk = if table.primary_key_columns.is_empty() {
        "none".to_string()
    } else {
        table
            .primary_key_columns
            .iter()
            .map(|&i| table.columns[i].name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let columns = table
        .columns
        .iter()
        .map(|c| c.display_name.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    RelevancePrompt {
        kind: PromptKind::Table,
        text: format!(
            "The table name is {}, the primary key is {pk}, and the column names are {columns}. Is the main object of this table human?",
            table.name
        ),
    }
}

/// Strips sentence-final punctuation so a template can supply its own.
pub(crate) fn strip_terminal_punctuation(text: &str) -> &str {
    text.trim_end()
        .trim_end_matches(|c: char| matches!(c, '.' | '?' | '!') || c.is_whitespace())
}

pub fn build_query_prompt(example: &Example) -> Result<RelevancePrompt> {
    let question = strip_terminal_punctuation(&example.question);
    if question.trim().is_empty() {
        return Err(Error::PreconditionViolation(format!(
            "example {} has an empty question",
            example.example_id
        )));
    }
    Ok(RelevancePrompt {
        kind: PromptKind::Query,
        text: format!("The query is: {question}. Is the query relevant to humans?"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Ambiguous,
}

/// Classifies a free-text answer by its first word.
pub fn parse_answer(response: &str) -> Answer {
    let first = response
        .split(|c: char| !c.is_alphanumeric())
        .find(|w| !w.is_empty())
        .map(str::to_lowercase);
    match first.as_deref() {
        Some("yes") => Answer::Yes,
        Some("no") => Answer::No,
        _ => Answer::Ambiguous,
    }
}

/// One line of the answer cache.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub subject_id: String,
    pub prompt_sha256: String,
    pub answer: String,
    pub source: JudgmentSource,
    pub timestamp: u64,
}

/// Answer cache keyed by subject. Backed by an append-only JSON-lines file
/// when constructed with [`JudgeCache::open`]. Writes are serialized.
#[derive(Debug, Default)]
pub struct JudgeCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, CacheRecord>>,
}

impl JudgeCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for record in parse_cache(&text, &path.display().to_string())? {
                entries.insert(record.subject_id.clone(), record);
            }
        }
        Ok(JudgeCache {
            path: Some(path),
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, subject_id: &str, prompt_sha256: &str) -> Option<CacheRecord> {
        let entries = self.entries.lock().expect("cache lock poisoned");
        entries
            .get(subject_id)
            .filter(|r| r.prompt_sha256 == prompt_sha256)
            .cloned()
    }

    pub fn put(&self, record: CacheRecord) -> Result<()> {
        let mut entries = self.entries.lock().expect("cache lock poisoned");
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            let line = serde_json::to_string(&record).expect("cache record serializes");
            writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
        }
        entries.insert(record.subject_id.clone(), record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Decodes cache JSON-lines; blank lines are skipped and later records win.
pub fn parse_cache(text: &str, source_name: &str) -> Result<Vec<CacheRecord>> {
    parse_jsonl(text, source_name)
}

pub(crate) fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str, source_name: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::malformed(source_name, format!("line {}", i + 1), e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::ZERO,
        }
    }
}

/// Calls `client` with bounded retries and exponential backoff.
pub(crate) fn complete_with_retry(
    client: &dyn JudgeClient,
    prompt: &str,
    subject: &str,
    retry: RetryPolicy,
) -> Result<String> {
    let attempts = retry.attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        match client.complete(prompt) {
            Ok(text) => return Ok(text),
            Err(e) => {
                log::warn!("judge call for {subject} failed (attempt {}): {e}", attempt + 1);
                last = e;
            }
        }
        if attempt + 1 < attempts && !retry.base_delay.is_zero() {
            thread::sleep(retry.base_delay * 2u32.pow(attempt));
        }
    }
    Err(Error::JudgeUnavailable {
        subject: subject.to_string(),
        attempts,
        message: last,
    })
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Judges one subject, consulting the cache before the client and recording
/// the answer after.
pub fn judge(
    subject_id: &str,
    prompt: &RelevancePrompt,
    client: &dyn JudgeClient,
    cache: &JudgeCache,
    retry: RetryPolicy,
) -> Result<RelevanceJudgment> {
    let digest = prompt.sha256();
    let (answer_text, source) = match cache.get(subject_id, &digest) {
        Some(record) => (record.answer, JudgmentSource::Cache),
        None => {
            let text = complete_with_retry(client, &prompt.text, subject_id, retry)?;
            cache.put(CacheRecord {
                subject_id: subject_id.to_string(),
                prompt_sha256: digest,
                answer: text.clone(),
                source: JudgmentSource::Llm,
                timestamp: now_secs(),
            })?;
            (text, JudgmentSource::Llm)
        }
    };
    let answer = parse_answer(&answer_text);
    if answer == Answer::Ambiguous {
        log::warn!("ambiguous judge answer for {subject_id}: {answer_text:?}");
    }
    Ok(RelevanceJudgment {
        subject_id: subject_id.to_string(),
        is_human_relevant: answer == Answer::Yes,
        source,
        ambiguous: answer == Answer::Ambiguous,
    })
}

/// A set of human-relevance lexicon terms (lowercase, singular).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanLexicon {
    terms: BTreeSet<String>,
}

impl HumanLexicon {
    pub fn new<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms: BTreeSet<String> = terms
            .into_iter()
            .map(|t| t.as_ref().trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        if terms.is_empty() {
            return Err(Error::PreconditionViolation("human lexicon is empty".into()));
        }
        Ok(HumanLexicon { terms })
    }

    /// One term per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or_default()),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn matches_token(&self, token: &str) -> bool {
        if self.terms.contains(token) {
            return true;
        }
        token
            .strip_suffix('s')
            .is_some_and(|stem| self.terms.contains(stem))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

impl Default for HumanLexicon {
    fn default() -> Self {
        HumanLexicon::new(lexicon::DEFAULT_HUMAN_TERMS).expect("default lexicon is non-empty")
    }
}

pub fn lexicon_judge(text: &str, lexicon: &HumanLexicon) -> bool {
    tokenize(text).iter().any(|t| lexicon.matches_token(t))
}

/// The subject text a lexicon judge inspects for a table: its name, key and
/// column names, without the fixed prompt wording.
pub fn table_lexicon_text(table: &TableSchema) -> String {
    let mut parts = vec![table.name.clone()];
    parts.extend(table.columns.iter().map(|c| c.name.clone()));
    parts.join(" ").replace('_', " ")
}

/// Fixture line: `{subject_id, is_human_relevant}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub subject_id: String,
    pub is_human_relevant: bool,
}

pub fn parse_fixture(text: &str, source_name: &str) -> Result<Vec<FixtureRecord>> {
    parse_jsonl(text, source_name)
}

/// Judgments for tables and questions, keyed by subject id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentSet {
    judgments: BTreeMap<String, RelevanceJudgment>,
}

impl JudgmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a judgment; subject ids must be unique.
    pub fn insert(&mut self, judgment: RelevanceJudgment) -> Result<()> {
        if self.judgments.contains_key(&judgment.subject_id) {
            return Err(Error::InvariantViolation(format!(
                "duplicate judgment for `{}`",
                judgment.subject_id
            )));
        }
        self.judgments.insert(judgment.subject_id.clone(), judgment);
        Ok(())
    }

    pub fn get(&self, subject_id: &str) -> Option<&RelevanceJudgment> {
        self.judgments.get(subject_id)
    }

    pub fn is_human(&self, subject_id: &str) -> Result<bool> {
        self.get(subject_id)
            .map(|j| j.is_human_relevant)
            .ok_or_else(|| Error::MissingJudgment(subject_id.to_string()))
    }

    pub fn is_table_human(&self, db_id: &str, table: &str) -> Result<bool> {
        self.is_human(&table_subject_id(db_id, table))
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RelevanceJudgment> {
        self.judgments.values()
    }

    pub fn from_fixture(text: &str, source_name: &str) -> Result<Self> {
        let mut set = JudgmentSet::new();
        for record in parse_fixture(text, source_name)? {
            set.insert(RelevanceJudgment {
                subject_id: record.subject_id,
                is_human_relevant: record.is_human_relevant,
                source: JudgmentSource::Fixture,
                ambiguous: false,
            })?;
        }
        Ok(set)
    }

    pub fn load_fixture(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_fixture(&text, &path.display().to_string())
    }

    /// Writes the set in fixture format, ordered by subject id.
    pub fn write_fixture(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for j in self.judgments.values() {
            let record = FixtureRecord {
                subject_id: j.subject_id.clone(),
                is_human_relevant: j.is_human_relevant,
            };
            let line = serde_json::to_string(&record).expect("fixture record serializes");
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Human-relevant table and database counts over `schemas`.
    pub fn human_counts(&self, schemas: &[DatabaseSchema]) -> Result<HumanCounts> {
        let mut counts = HumanCounts::default();
        for schema in schemas {
            let mut any = false;
            for table in &schema.tables {
                if self.is_table_human(&schema.db_id, &table.name)? {
                    counts.tables += 1;
                    any = true;
                }
            }
            if any {
                counts.databases += 1;
            }
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct HumanCounts {
    pub databases: usize,
    pub tables: usize,
}

/// Lexicon judgments for every table and example.
pub fn lexicon_judgments(
    schemas: &[DatabaseSchema],
    examples: &[Example],
    lexicon: &HumanLexicon,
) -> Result<JudgmentSet> {
    let mut set = JudgmentSet::new();
    for schema in schemas {
        for table in &schema.tables {
            set.insert(RelevanceJudgment {
                subject_id: table_subject_id(&schema.db_id, &table.name),
                is_human_relevant: lexicon_judge(&table_lexicon_text(table), lexicon),
                source: JudgmentSource::Lexicon,
                ambiguous: false,
            })?;
        }
    }
    for example in examples {
        set.insert(RelevanceJudgment {
            subject_id: example.example_id.clone(),
            is_human_relevant: lexicon_judge(&example.question, lexicon),
            source: JudgmentSource::Lexicon,
            ambiguous: false,
        })?;
    }
    Ok(set)
}

/// Judges every table and example through `client`, in parallel up to the
/// current rayon pool width. Output order is deterministic.
pub fn llm_judgments(
    schemas: &[DatabaseSchema],
    examples: &[Example],
    client: &dyn JudgeClient,
    cache: &JudgeCache,
    retry: RetryPolicy,
) -> Result<JudgmentSet> {
    use rayon::prelude::*;

    let mut subjects: Vec<(String, RelevancePrompt)> = Vec::new();
    for schema in schemas {
        for table in &schema.tables {
            subjects.push((table_subject_id(&schema.db_id, &table.name), build_table_prompt(table)));
        }
    }
    for example in examples {
        subjects.push((example.example_id.clone(), build_query_prompt(example)?));
    }
    let judged: Vec<Result<RelevanceJudgment>> = subjects
        .par_iter()
        .map(|(id, prompt)| judge(id, prompt, client, cache, retry))
        .collect();
    let mut set = JudgmentSet::new();
    for j in judged {
        set.insert(j?)?;
    }
    Ok(set)
}
