//! Benchmark construction: demographic columns are added to human-relevant
//! tables and judgmental modifiers to human-relevant questions, while the
//! gold SQL stays unchanged.

mod augment;
mod output;
mod perturb;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use augment::{augment_schema, injected_names, Augmented, Collision, InjectedColumn};
pub use output::{read_benchmark, write_benchmark, LoadedBenchmark, Manifest, MetadataRecord, BENCHMARK_FILES};
pub use perturb::{
    build_paraphrase_prompt, perturb_query_llm, perturb_query_rule, PerturbedExample, Provenance, Structure,
    MAX_PARAPHRASE_TOKEN_DELTA,
};

use crate::error::{Error, Result};
use crate::lexicon::{default_dimensions, DemographicDimension, ModifierSet};
use crate::relevance::{HumanLexicon, JudgeClient, JudgmentSet, RetryPolicy};
use crate::spider::{DatabaseSchema, Example};
use crate::text::token_count;

/// How the column counts of the three versions are read: each dimension gets
/// its own column in every version, plus one indicator per demographic from
/// v2 (first) and v3 (both).
pub const VERSION_INTERPRETATION: &str = "v1 adds one column per dimension (+7), v2 also an is_<first demographic> \
indicator per dimension (+14), v3 indicators for both demographics (+21)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkVersion {
    V1,
    V2,
    V3,
}

impl BenchmarkVersion {
    pub const ALL: [BenchmarkVersion; 3] = [BenchmarkVersion::V1, BenchmarkVersion::V2, BenchmarkVersion::V3];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkVersion::V1 => "v1",
            BenchmarkVersion::V2 => "v2",
            BenchmarkVersion::V3 => "v3",
        }
    }

    /// Columns injected per dimension.
    pub fn columns_per_dimension(self) -> usize {
        self.indicators_per_dimension() + 1
    }

    pub fn indicators_per_dimension(self) -> usize {
        match self {
            BenchmarkVersion::V1 => 0,
            BenchmarkVersion::V2 => 1,
            BenchmarkVersion::V3 => 2,
        }
    }
}

impl fmt::Display for BenchmarkVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase();
        BenchmarkVersion::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown benchmark version `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub dimensions: Vec<DemographicDimension>,
    /// Structures generated for every modifier.
    pub structures: Vec<Structure>,
    /// Head-noun lexicon for rule perturbation.
    pub lexicon: HumanLexicon,
    pub retry: RetryPolicy,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            dimensions: default_dimensions(),
            structures: vec![Structure::Attributive],
            lexicon: HumanLexicon::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkippedExample {
    pub example_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub config_sha256: String,
    pub human_databases: usize,
    pub human_tables: usize,
    pub human_examples: usize,
    /// Injected columns keyed by `db_id`.
    pub injected: BTreeMap<String, Vec<InjectedColumn>>,
    pub collisions: Vec<Collision>,
    pub skipped: Vec<SkippedExample>,
    pub rule_items: usize,
    pub llm_items: usize,
    /// Number of judgments consulted, by source.
    pub judgment_sources: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub version: BenchmarkVersion,
    pub dimensions: Vec<DemographicDimension>,
    pub original_schemas: Vec<DatabaseSchema>,
    pub augmented_schemas: Vec<DatabaseSchema>,
    pub items: Vec<PerturbedExample>,
    pub metadata: BuildMetadata,
}

/// Stable digest of everything that shapes the output besides the corpus.
fn config_digest(
    version: BenchmarkVersion,
    modifier_sets: &[ModifierSet],
    config: &BuildConfig,
    paraphrase: bool,
) -> String {
    let value = serde_json::json!({
        "version": version,
        "dimensions": config.dimensions,
        "modifier_sets": modifier_sets,
        "structures": config.structures,
        "lexicon": config.lexicon.terms().collect::<Vec<_>>(),
        "paraphrase": paraphrase,
    });
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

/// True if the question is judged human-relevant and its database has at
/// least one human-relevant table.
fn is_human_example(example: &Example, judgments: &JudgmentSet, human_dbs: &BTreeSet<&str>) -> Result<bool> {
    Ok(judgments.is_human(&example.example_id)? && human_dbs.contains(example.db_id.as_str()))
}

/// Builds one benchmark version. Output order follows `examples`, then
/// `modifier_sets`, words and `config.structures`; results do not depend on
/// thread scheduling.
pub fn build_benchmark(
    schemas: &[DatabaseSchema],
    examples: &[Example],
    judgments: &JudgmentSet,
    modifier_sets: &[ModifierSet],
    version: BenchmarkVersion,
    config: &BuildConfig,
    paraphraser: Option<&dyn JudgeClient>,
) -> Result<Benchmark> {
    let augmented: Vec<Augmented> = schemas
        .par_iter()
        .map(|s| augment_schema(s, version, &config.dimensions, judgments))
        .collect::<Result<_>>()?;

    let mut metadata = BuildMetadata {
        config_sha256: config_digest(version, modifier_sets, config, paraphraser.is_some()),
        ..BuildMetadata::default()
    };
    let counts = judgments.human_counts(schemas)?;
    metadata.human_databases = counts.databases;
    metadata.human_tables = counts.tables;

    let mut human_dbs = BTreeSet::new();
    for schema in schemas {
        for table in &schema.tables {
            if judgments.is_table_human(&schema.db_id, &table.name)? {
                human_dbs.insert(schema.db_id.as_str());
            }
        }
    }
    let known: HashMap<&str, ()> = schemas.iter().map(|s| (s.db_id.as_str(), ())).collect();

    let mut human_examples = Vec::new();
    for example in examples {
        if !known.contains_key(example.db_id.as_str()) {
            return Err(Error::UnknownDatabase {
                example_id: example.example_id.clone(),
                db_id: example.db_id.clone(),
            });
        }
        if is_human_example(example, judgments, &human_dbs)? {
            human_examples.push(example);
        }
    }
    metadata.human_examples = human_examples.len();

    let per_example: Vec<Result<(Vec<PerturbedExample>, Option<SkippedExample>)>> = human_examples
        .par_iter()
        .map(|example| {
            let mut items = Vec::new();
            let mut skipped = None;
            for set in modifier_sets {
                for word in &set.words {
                    for &structure in &config.structures {
                        let result = match paraphraser {
                            Some(client) => perturb_query_llm(
                                example,
                                word,
                                set.category,
                                client,
                                config.retry,
                                &config.lexicon,
                                structure,
                            ),
                            None => perturb_query_rule(example, word, set.category, &config.lexicon, structure),
                        };
                        match result {
                            Ok(item) => items.push(item),
                            Err(Error::NoHumanHeadNoun(id)) => {
                                skipped.get_or_insert(SkippedExample {
                                    example_id: id,
                                    reason: "no human head noun".into(),
                                });
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
            Ok((items, skipped))
        })
        .collect();

    let mut items = Vec::new();
    for result in per_example {
        let (mut batch, skipped) = result?;
        if let Some(s) = skipped {
            log::info!("skipped {}: {}", s.example_id, s.reason);
            metadata.skipped.push(s);
        }
        items.append(&mut batch);
    }
    metadata.rule_items = items.iter().filter(|i| i.provenance == Provenance::Rule).count();
    metadata.llm_items = items.len() - metadata.rule_items;

    for j in judgments.iter() {
        let source = serde_json::to_value(j.source).expect("source serializes");
        *metadata
            .judgment_sources
            .entry(source.as_str().unwrap_or_default().to_string())
            .or_default() += 1;
    }
    let mut augmented_schemas = Vec::with_capacity(augmented.len());
    for a in augmented {
        if !a.injected.is_empty() {
            metadata.injected.insert(a.schema.db_id.clone(), a.injected);
        }
        metadata.collisions.extend(a.collisions);
        augmented_schemas.push(a.schema);
    }

    Ok(Benchmark {
        version,
        dimensions: config.dimensions.clone(),
        original_schemas: schemas.to_vec(),
        augmented_schemas,
        items,
        metadata,
    })
}

/// Corpus statistics of a benchmark, as reported in its manifest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkStats {
    pub databases: usize,
    pub tables: usize,
    pub human_databases: usize,
    pub human_tables: usize,
    pub human_examples: usize,
    pub items: usize,
    pub avg_columns_per_table_before: f64,
    pub avg_columns_per_table: f64,
    pub avg_columns_per_human_table_before: f64,
    pub avg_columns_per_human_table: f64,
    pub avg_tokens_per_question_before: f64,
    pub avg_tokens_per_question: f64,
}

fn mean(total: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total as f64 / n as f64
    }
}

impl Benchmark {
    pub fn stats(&self) -> BenchmarkStats {
        let tables: usize = self.original_schemas.iter().map(|s| s.tables.len()).sum();
        let before: usize = self.original_schemas.iter().map(DatabaseSchema::column_count).sum();
        let after: usize = self.augmented_schemas.iter().map(DatabaseSchema::column_count).sum();
        let human: BTreeSet<(&str, &str)> = self
            .metadata
            .injected
            .iter()
            .flat_map(|(db, cols)| cols.iter().map(move |c| (db.as_str(), c.table.as_str())))
            .chain(
                self.metadata
                    .collisions
                    .iter()
                    .map(|c| (c.db_id.as_str(), c.table.as_str())),
            )
            .collect();
        let human_columns = |schemas: &[DatabaseSchema]| -> usize {
            schemas
                .iter()
                .flat_map(|s| s.tables.iter().map(move |t| (s, t)))
                .filter(|(s, t)| human.contains(&(s.db_id.as_str(), t.name.as_str())))
                .map(|(_, t)| t.columns.len())
                .sum()
        };
        let tokens_before: usize = self.items.iter().map(|i| token_count(&i.base.question)).sum();
        let tokens_after: usize = self.items.iter().map(|i| token_count(&i.perturbed_question)).sum();
        BenchmarkStats {
            databases: self.original_schemas.len(),
            tables,
            human_databases: self.metadata.human_databases,
            human_tables: self.metadata.human_tables,
            human_examples: self.metadata.human_examples,
            items: self.items.len(),
            avg_columns_per_table_before: mean(before, tables),
            avg_columns_per_table: mean(after, tables),
            avg_columns_per_human_table_before: mean(human_columns(&self.original_schemas), human.len()),
            avg_columns_per_human_table: mean(human_columns(&self.augmented_schemas), human.len()),
            avg_tokens_per_question_before: mean(tokens_before, self.items.len()),
            avg_tokens_per_question: mean(tokens_after, self.items.len()),
        }
    }
}

#[cfg(test)]
mod tests;
