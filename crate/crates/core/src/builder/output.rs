use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Benchmark, BenchmarkStats, BenchmarkVersion, Collision, InjectedColumn, Provenance, SkippedExample, Structure,
    VERSION_INTERPRETATION,
};
use crate::error::{Error, Result};
use crate::lexicon::{DemographicDimension, ModifierCategory};
use crate::relevance::parse_jsonl;
use crate::spider::{examples_to_json, parse_examples, parse_schemas, schemas_to_json, DatabaseSchema, Example, RawExampleOut};

/// Files written to a benchmark directory.
pub const BENCHMARK_FILES: [&str; 4] = ["tables.json", "examples.json", "metadata.jsonl", "manifest.json"];

/// One `metadata.jsonl` line, aligned with `examples.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub base_example_id: String,
    pub base_question: String,
    pub modifier: String,
    pub category: ModifierCategory,
    pub structure: Structure,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: BenchmarkVersion,
    pub config_sha256: String,
    pub interpretation: String,
    pub stats: BenchmarkStats,
    pub rule_items: usize,
    pub llm_items: usize,
    pub skipped_examples: usize,
    pub judgment_sources: BTreeMap<String, usize>,
    pub dimensions: Vec<DemographicDimension>,
    /// Injected columns keyed by `db_id`.
    pub injected_columns: BTreeMap<String, Vec<InjectedColumn>>,
    pub collisions: Vec<Collision>,
    pub skipped: Vec<SkippedExample>,
}

impl Manifest {
    pub fn of(benchmark: &Benchmark) -> Self {
        let m = &benchmark.metadata;
        Manifest {
            version: benchmark.version,
            config_sha256: m.config_sha256.clone(),
            interpretation: VERSION_INTERPRETATION.to_string(),
            stats: benchmark.stats(),
            rule_items: m.rule_items,
            llm_items: m.llm_items,
            skipped_examples: m.skipped.len(),
            judgment_sources: m.judgment_sources.clone(),
            dimensions: benchmark.dimensions.clone(),
            injected_columns: m.injected.clone(),
            collisions: m.collisions.clone(),
            skipped: m.skipped.clone(),
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::io(path, e))
}

/// Writes the four benchmark files into `dir`, creating it if needed. The
/// output is a pure function of `benchmark`.
pub fn write_benchmark(benchmark: &Benchmark, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "tables.json", &schemas_to_json(&benchmark.augmented_schemas))?;
    write(
        dir,
        "examples.json",
        &examples_to_json(benchmark.items.iter().map(|item| RawExampleOut {
            db_id: &item.base.db_id,
            query: &item.gold_sql,
            question: &item.perturbed_question,
        })),
    )?;
    let mut metadata = String::new();
    for item in &benchmark.items {
        let record = MetadataRecord {
            base_example_id: item.base.example_id.clone(),
            base_question: item.base.question.clone(),
            modifier: item.modifier.clone(),
            category: item.category,
            structure: item.structure,
            provenance: item.provenance,
        };
        metadata.push_str(&serde_json::to_string(&record).expect("metadata serializes"));
        metadata.push('\n');
    }
    write(dir, "metadata.jsonl", &metadata)?;
    let mut manifest = serde_json::to_string_pretty(&Manifest::of(benchmark)).expect("manifest serializes");
    manifest.push('\n');
    write(dir, "manifest.json", &manifest)
}

/// A benchmark directory as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedBenchmark {
    pub manifest: Manifest,
    pub schemas: Vec<DatabaseSchema>,
    pub examples: Vec<Example>,
    pub metadata: Vec<MetadataRecord>,
}

pub fn read_benchmark(dir: impl AsRef<Path>) -> Result<LoadedBenchmark> {
    let dir = dir.as_ref();
    let schemas = parse_schemas(&read(dir, "tables.json")?, "tables.json")?;
    let examples = parse_examples(&read(dir, "examples.json")?, "examples.json")?;
    let metadata: Vec<MetadataRecord> = parse_jsonl(&read(dir, "metadata.jsonl")?, "metadata.jsonl")?;
    let manifest: Manifest = serde_json::from_str(&read(dir, "manifest.json")?)
        .map_err(|e| Error::malformed("manifest.json", format!("line {}", e.line()), e.to_string()))?;
    if metadata.len() != examples.len() {
        return Err(Error::InvariantViolation(format!(
            "{}: metadata.jsonl has {} records for {} examples",
            dir.display(),
            metadata.len(),
            examples.len()
        )));
    }
    Ok(LoadedBenchmark {
        manifest,
        schemas,
        examples,
        metadata,
    })
}
