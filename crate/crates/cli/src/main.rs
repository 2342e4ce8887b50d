//! `sqlbias`: build social-bias Text-to-SQL benchmarks and score predictions.

mod http;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqlbias::commands::{self, configure_jobs};
use sqlbias::config::{ConfigFile, JudgeMode, RunConfig};
use sqlbias::evaluate::{render_report, ExemplarMethod};
use sqlbias::relevance::JudgeClient;
use sqlbias::{Error, Result};

use crate::http::HttpJudge;

#[derive(Parser)]
#[command(name = "sqlbias", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Judge which tables and questions concern people.
    Judge,
    /// Build one benchmark directory per enabled version.
    Build,
    /// Score prediction files against a benchmark directory.
    Evaluate,
    /// Measure modifier-lexicon frequency in a question corpus.
    Neutrality,
    /// Retrieve the most similar questions from the example pool.
    Exemplars {
        #[arg(long)]
        question: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value = "tst_jaccard")]
        method: String,
    },
}

/// Flags shared by every subcommand. Values given here override the
/// configuration file.
#[derive(Args)]
struct Flags {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Spider `tables.json`.
    #[arg(long, global = true)]
    schemas: Option<PathBuf>,
    /// Spider example file; repeatable.
    #[arg(long, global = true)]
    examples: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Benchmark directory to evaluate against.
    #[arg(long, global = true)]
    benchmark: Option<PathBuf>,
    /// `label=path` prediction file, one SQL per line; repeatable.
    #[arg(long, global = true)]
    predictions: Vec<String>,
    /// `label=path` predictions on the unperturbed examples; repeatable.
    #[arg(long, global = true)]
    original_predictions: Vec<String>,
    /// Judgment fixture file or `judge` output directory.
    #[arg(long, global = true)]
    judgments: Option<PathBuf>,
    /// llm, lexicon or fixture.
    #[arg(long, global = true)]
    judge_mode: Option<String>,
    /// Fixture read in fixture judge mode.
    #[arg(long, global = true)]
    fixture: Option<PathBuf>,
    /// Human-term lexicon, one term per line, for lexicon judge mode.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Judge answer cache (JSON lines).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Comma-separated versions: v1,v2,v3.
    #[arg(long, global = true)]
    versions: Option<String>,
    /// Comma-separated modifier categories.
    #[arg(long, global = true)]
    modifiers: Option<String>,
    /// Comma-separated structures: attributive,relative_clause.
    #[arg(long, global = true)]
    structure: Option<String>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Exit nonzero when any Bias Score exceeds this percentage.
    #[arg(long, global = true)]
    fail_over: Option<f64>,
    /// Reserved for sampling modes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Chat-completions URL for llm judge mode.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// Environment variable holding the endpoint's bearer token.
    #[arg(long, global = true)]
    token_env: Option<String>,
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Flags {
    fn into_config_file(self) -> (Option<PathBuf>, ConfigFile) {
        let file = ConfigFile {
            schemas: self.schemas,
            examples: non_empty(self.examples),
            out: self.out,
            benchmark: self.benchmark,
            predictions: non_empty(self.predictions),
            original_predictions: non_empty(self.original_predictions),
            judgments: self.judgments,
            cache: self.cache,
            fixture: self.fixture,
            lexicon: self.lexicon,
            judge_mode: self.judge_mode,
            versions: self.versions.map(|v| vec![v]),
            modifiers: self.modifiers.map(|v| vec![v]),
            structures: self.structure.map(|v| vec![v]),
            jobs: self.jobs,
            fail_over: self.fail_over,
            seed: self.seed,
            endpoint: self.endpoint,
            model: self.model,
            token_env: self.token_env,
        };
        (self.config, file)
    }
}

fn resolve(flags: Flags) -> Result<RunConfig> {
    let (path, from_flags) = flags.into_config_file();
    let base = match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    RunConfig::resolve(base.overridden_by(from_flags))
}

fn judge_client(config: &RunConfig) -> Option<HttpJudge> {
    let endpoint = config.endpoint.as_ref()?;
    let token = std::env::var(&endpoint.token_env).ok();
    if token.is_none() {
        log::warn!("{} is not set; calling {} without a token", endpoint.token_env, endpoint.url);
    }
    Some(HttpJudge::new(&endpoint.url, endpoint.model.clone(), token))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = resolve(cli.flags)?;
    configure_jobs(config.jobs);
    let client = judge_client(&config);
    let client_ref = client.as_ref().map(|c| c as &dyn JudgeClient);
    match cli.command {
        Command::Judge => {
            let s = commands::cmd_judge(&config, client_ref)?;
            println!("mode: {}", s.mode);
            println!("databases: {}", s.databases);
            println!("tables: {}", s.tables);
            println!("queries: {}", s.queries);
            println!("human databases: {}", s.human_databases);
            println!("human tables: {}", s.human_tables);
            println!("human queries: {}", s.human_queries);
            println!("client calls: {}", s.client_calls);
        }
        Command::Build => {
            let paraphraser = if config.judge_mode == JudgeMode::Llm { client_ref } else { None };
            for (dir, manifest) in commands::cmd_build(&config, paraphraser)? {
                println!("{}", dir.display());
                print_json(&manifest.stats);
            }
        }
        Command::Evaluate => {
            let outcome = commands::cmd_evaluate(&config)?;
            print!("{}", render_report(&outcome.rows));
            if !outcome.over_threshold.is_empty() {
                for row in &outcome.over_threshold {
                    eprintln!(
                        "error: {} {} {} Bias Score {} exceeds {}",
                        row.model_label,
                        row.version,
                        row.category,
                        row.bias_score,
                        config.fail_over.unwrap_or_default()
                    );
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Neutrality => {
            let report = commands::cmd_neutrality(&config)?;
            for l in &report.lexicons {
                println!("{}: {} / {} tokens ({:.4}%)", l.lexicon, l.hits, report.total_tokens, l.rate * 100.0);
            }
        }
        Command::Exemplars { question, k, method } => {
            let method: ExemplarMethod = method.parse()?;
            print_json(&commands::cmd_exemplars(&config, &question, k, method)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}
