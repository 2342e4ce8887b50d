//! The pipeline stages behind the command-line subcommands. Each command
//! reads a [`RunConfig`], writes its files and returns a summary.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use crate::builder::{build_benchmark, read_benchmark, write_benchmark, BuildConfig, Manifest};
use crate::config::{JudgeMode, RunConfig};
use crate::error::{Error, Result};
use crate::evaluate::{
    accuracy, evaluate_benchmark, make_report, neutrality_scan, retrieve_exemplars, ExemplarMethod, ExemplarQuery,
    ItemResult, NeutralityReport, Percent, ReportRow,
};
use crate::lexicon::ModifierSet;
use crate::relevance::{
    lexicon_judgments, llm_judgments, table_subject_id, HumanLexicon, JudgeCache, JudgeClient, JudgmentSet,
    RetryPolicy,
};
use crate::spider::{load_examples, load_predictions, load_schemas, validate_examples, DatabaseSchema, Example};

/// Judgment files written by [`cmd_judge`].
pub const TABLE_JUDGMENTS: &str = "tables.jsonl";
pub const QUERY_JUDGMENTS: &str = "queries.jsonl";

/// Sizes the global worker pool. Has no effect once the pool exists.
pub fn configure_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool already initialised: {e}");
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    text
}

pub fn load_corpus_schemas(config: &RunConfig) -> Result<Vec<DatabaseSchema>> {
    load_schemas(RunConfig::require_path(&config.schemas, "schemas")?)
}

/// Concatenates every configured example file, in order.
pub fn load_corpus_examples(config: &RunConfig) -> Result<Vec<Example>> {
    if config.examples.is_empty() {
        return Err(Error::Config("missing required setting `examples`".into()));
    }
    let mut all = Vec::new();
    for path in &config.examples {
        if !path.exists() {
            return Err(Error::Config(format!("examples path {} does not exist", path.display())));
        }
        all.extend(load_examples(path)?);
    }
    Ok(all)
}

/// Reads judgments from a fixture file, or from the two files of a
/// [`cmd_judge`] output directory.
pub fn load_judgments(path: &Path) -> Result<JudgmentSet> {
    if !path.is_dir() {
        return JudgmentSet::load_fixture(path);
    }
    let mut set = JudgmentSet::new();
    for name in [TABLE_JUDGMENTS, QUERY_JUDGMENTS] {
        for j in JudgmentSet::load_fixture(path.join(name))?.iter() {
            set.insert(j.clone())?;
        }
    }
    Ok(set)
}

/// Counts calls that reach the wrapped client.
struct CountingClient<'a> {
    inner: &'a dyn JudgeClient,
    calls: AtomicUsize,
}

impl JudgeClient for CountingClient<'_> {
    fn complete(&self, prompt: &str) -> std::result::Result<String, String> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.complete(prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JudgeSummary {
    pub mode: &'static str,
    pub databases: usize,
    pub tables: usize,
    pub queries: usize,
    pub human_databases: usize,
    pub human_tables: usize,
    pub human_queries: usize,
    pub client_calls: usize,
}

/// Judges every table and question and writes [`TABLE_JUDGMENTS`] and
/// [`QUERY_JUDGMENTS`] into the output directory.
pub fn cmd_judge(config: &RunConfig, client: Option<&dyn JudgeClient>) -> Result<JudgeSummary> {
    let out = RunConfig::require(&config.out, "out")?;
    let schemas = load_corpus_schemas(config)?;
    let examples = load_corpus_examples(config)?;
    validate_examples(&examples, &schemas)?;

    let mut client_calls = 0;
    let judgments = match config.judge_mode {
        JudgeMode::Fixture => {
            let fixture = JudgmentSet::load_fixture(RunConfig::require_path(&config.fixture, "fixture")?)?;
            let mut set = JudgmentSet::new();
            let tables = schemas
                .iter()
                .flat_map(|s| s.tables.iter().map(|t| table_subject_id(&s.db_id, &t.name)));
            for id in tables.chain(examples.iter().map(|e| e.example_id.clone())) {
                let j = fixture.get(&id).ok_or(Error::MissingJudgment(id))?;
                set.insert(j.clone())?;
            }
            set
        }
        JudgeMode::Lexicon => {
            let lexicon = match &config.lexicon {
                Some(path) => HumanLexicon::load(path).map_err(|e| match e {
                    Error::PreconditionViolation(m) => Error::Config(format!("{}: {m}", path.display())),
                    other => other,
                })?,
                None => HumanLexicon::default(),
            };
            lexicon_judgments(&schemas, &examples, &lexicon)?
        }
        JudgeMode::Llm => {
            let inner = client.ok_or_else(|| Error::Config("judge mode llm requires an endpoint".into()))?;
            let cache = match &config.cache {
                Some(path) => JudgeCache::open(path)?,
                None => JudgeCache::in_memory(),
            };
            let counting = CountingClient {
                inner,
                calls: AtomicUsize::new(0),
            };
            let set = llm_judgments(&schemas, &examples, &counting, &cache, RetryPolicy::default())?;
            client_calls = counting.calls.load(Ordering::Relaxed);
            set
        }
    };

    let example_ids: BTreeSet<&str> = examples.iter().map(|e| e.example_id.as_str()).collect();
    let mut tables = JudgmentSet::new();
    let mut queries = JudgmentSet::new();
    for j in judgments.iter() {
        if example_ids.contains(j.subject_id.as_str()) {
            queries.insert(j.clone())?;
        } else {
            tables.insert(j.clone())?;
        }
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    tables.write_fixture(out.join(TABLE_JUDGMENTS))?;
    queries.write_fixture(out.join(QUERY_JUDGMENTS))?;

    let counts = judgments.human_counts(&schemas)?;
    Ok(JudgeSummary {
        mode: config.judge_mode.as_str(),
        databases: schemas.len(),
        tables: tables.len(),
        queries: queries.len(),
        human_databases: counts.databases,
        human_tables: counts.tables,
        human_queries: queries.iter().filter(|j| j.is_human_relevant).count(),
        client_calls,
    })
}

/// Builds one benchmark directory per enabled version under the output
/// directory. A paraphrasing client switches perturbation to LLM mode with
/// rule fallback.
pub fn cmd_build(config: &RunConfig, paraphraser: Option<&dyn JudgeClient>) -> Result<Vec<(PathBuf, Manifest)>> {
    let out = RunConfig::require(&config.out, "out")?;
    let schemas = load_corpus_schemas(config)?;
    let examples = load_corpus_examples(config)?;
    validate_examples(&examples, &schemas)?;
    let judgments = load_judgments(RunConfig::require_path(&config.judgments, "judgments")?)?;
    let modifier_sets: Vec<ModifierSet> = config.modifiers.iter().map(|&c| ModifierSet::default_for(c)).collect();
    let build = BuildConfig {
        structures: config.structures.clone(),
        ..BuildConfig::default()
    };
    let mut written = Vec::new();
    for &version in &config.versions {
        let benchmark = build_benchmark(&schemas, &examples, &judgments, &modifier_sets, version, &build, paraphraser)?;
        let dir = out.join(version.as_str());
        write_benchmark(&benchmark, &dir)?;
        written.push((dir, Manifest::of(&benchmark)));
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutcome {
    pub rows: Vec<ReportRow>,
    /// Rows whose Bias Score exceeds the fail-over threshold.
    pub over_threshold: Vec<ReportRow>,
}

/// Scores every prediction file against the benchmark and writes
/// `report.json`, `report.txt` and `verdicts/<label>.jsonl`.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluateOutcome> {
    let out = RunConfig::require(&config.out, "out")?;
    let benchmark = read_benchmark(RunConfig::require_path(&config.benchmark, "benchmark")?)?;
    if config.predictions.is_empty() {
        return Err(Error::Config("missing required setting `predictions`".into()));
    }
    let original = if config.original_predictions.is_empty() {
        None
    } else {
        Some((load_corpus_schemas(config)?, load_corpus_examples(config)?))
    };

    let mut rows = Vec::new();
    for source in &config.predictions {
        let predictions = load_predictions(&source.path, &source.label)?;
        let ori_acc: Option<Percent> = match (&original, config.original_predictions.iter().find(|s| s.label == source.label)) {
            (Some((schemas, examples)), Some(ori)) => {
                Some(accuracy(&load_predictions(&ori.path, &ori.label)?, examples, schemas)?)
            }
            _ => None,
        };
        let (model_rows, items) = evaluate_benchmark(&benchmark, &predictions, ori_acc)?;
        write_file(&out.join("verdicts").join(format!("{}.jsonl", source.label)), &items_jsonl(&items))?;
        rows.extend(model_rows);
    }
    make_report(&rows, out)?;
    let over_threshold = match config.fail_over {
        Some(t) => rows.iter().filter(|r| r.bias_score.as_f64() > t).cloned().collect(),
        None => Vec::new(),
    };
    Ok(EvaluateOutcome { rows, over_threshold })
}

fn items_jsonl(items: &[ItemResult]) -> String {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("item serializes"));
        text.push('\n');
    }
    text
}

/// Scans the configured questions for each enabled modifier lexicon and
/// writes `neutrality.json` when an output directory is set.
pub fn cmd_neutrality(config: &RunConfig) -> Result<NeutralityReport> {
    let examples = load_corpus_examples(config)?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("no questions to scan".into()));
    }
    let questions: Vec<String> = examples.into_iter().map(|e| e.question).collect();
    let lexicons: Vec<(String, Vec<String>)> = config
        .modifiers
        .iter()
        .map(|&c| (c.as_str().to_string(), ModifierSet::default_for(c).words))
        .collect();
    let report = neutrality_scan(&questions, &lexicons)?;
    if let Some(out) = &config.out {
        write_file(&out.join("neutrality.json"), &to_json(&report))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exemplar {
    pub rank: usize,
    pub pool_index: usize,
    pub example_id: String,
    pub question: String,
    pub query: String,
}

/// The `k` configured examples most similar to `question`.
pub fn cmd_exemplars(config: &RunConfig, question: &str, k: usize, method: ExemplarMethod) -> Result<Vec<Exemplar>> {
    let pool = load_corpus_examples(config)?;
    let ranked = retrieve_exemplars(&ExemplarQuery {
        question,
        pool: &pool,
        method,
        k,
    })?;
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(rank, i)| Exemplar {
            rank: rank + 1,
            pool_index: i,
            example_id: pool[i].example_id.clone(),
            question: pool[i].question.clone(),
            query: pool[i].gold_sql.clone(),
        })
        .collect())
}
