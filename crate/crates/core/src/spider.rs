//! Spider-format schemas, examples and prediction files.
//!
//! `tables.json` stores columns in one database-wide list whose first entry is
//! the `*` pseudo-column (table index -1). Primary and foreign keys are global
//! indices into that list. The in-memory model is per table instead: the `*`
//! entry is dropped on load and re-emitted on serialization, and keys are
//! stored as `(table, column)` locators.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Text,
    Number,
    Time,
    Boolean,
    Others,
}

impl ColumnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Text => "text",
            ColumnType::Number => "number",
            ColumnType::Time => "time",
            ColumnType::Boolean => "boolean",
            ColumnType::Others => "others",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "text" => ColumnType::Text,
            "number" => ColumnType::Number,
            "time" => ColumnType::Time,
            "boolean" => ColumnType::Boolean,
            "others" => ColumnType::Others,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub display_name: String,
    pub col_type: ColumnType,
    pub table_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub name: String,
    pub display_name: String,
    pub columns: Vec<ColumnSchema>,
    /// Indices into `columns`.
    pub primary_key_columns: Vec<usize>,
}

impl TableSchema {
    /// Case-insensitive column lookup.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnLocator {
    pub table: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatabaseSchema {
    pub db_id: String,
    pub tables: Vec<TableSchema>,
    pub foreign_keys: Vec<(ColumnLocator, ColumnLocator)>,
    /// Whether the source file carried the `*` pseudo-column.
    pub has_star_column: bool,
}

impl DatabaseSchema {
    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables
            .iter()
            .position(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn column(&self, loc: ColumnLocator) -> Option<&ColumnSchema> {
        self.tables.get(loc.table)?.columns.get(loc.column)
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    /// Checks every type invariant of the schema model.
    pub fn validate(&self) -> Result<()> {
        let ctx = |msg: String| Error::InvariantViolation(format!("database `{}`: {msg}", self.db_id));
        for (ti, table) in self.tables.iter().enumerate() {
            let mut seen = HashSet::new();
            for column in &table.columns {
                if column.name.trim().is_empty() {
                    return Err(ctx(format!("table `{}` has a column with an empty name", table.name)));
                }
                if column.table_index != ti {
                    return Err(ctx(format!(
                        "column `{}` claims table {} but is stored in table {ti}",
                        column.name, column.table_index
                    )));
                }
                if !seen.insert(column.name.to_lowercase()) {
                    return Err(ctx(format!(
                        "table `{}` has duplicate column `{}`",
                        table.name, column.name
                    )));
                }
            }
            if let Some(&bad) = table
                .primary_key_columns
                .iter()
                .find(|&&pk| pk >= table.columns.len())
            {
                return Err(ctx(format!(
                    "table `{}` primary key index {bad} out of range",
                    table.name
                )));
            }
        }
        for (a, b) in &self.foreign_keys {
            for loc in [a, b] {
                if self.column(*loc).is_none() {
                    return Err(ctx(format!("foreign key references missing column {loc:?}")));
                }
            }
        }
        Ok(())
    }
}

/// A natural-language question with its gold SQL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub example_id: String,
    pub db_id: String,
    pub question: String,
    pub gold_sql: String,
    pub question_tokens: Vec<String>,
}

impl Example {
    pub fn new(example_id: impl Into<String>, db_id: impl Into<String>, question: impl Into<String>, gold_sql: impl Into<String>) -> Self {
        let question = question.into();
        Example {
            example_id: example_id.into(),
            db_id: db_id.into(),
            question_tokens: tokenize(&question),
            question,
            gold_sql: gold_sql.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionFile {
    pub model_label: String,
    pub predictions: Vec<String>,
}

impl PredictionFile {
    pub fn check_alignment(&self, examples: usize) -> Result<()> {
        if self.predictions.len() != examples {
            return Err(Error::LengthMismatch {
                predictions: self.predictions.len(),
                examples,
            });
        }
        Ok(())
    }
}

impl fmt::Display for ColumnLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.table, self.column)
    }
}

// ---------------------------------------------------------------------------
// tables.json

#[derive(Deserialize)]
struct RawDatabase {
    db_id: String,
    table_names_original: Vec<String>,
    #[serde(default)]
    table_names: Option<Vec<String>>,
    column_names_original: Vec<(i64, String)>,
    #[serde(default)]
    column_names: Option<Vec<(i64, String)>>,
    column_types: Vec<String>,
    primary_keys: Vec<RawPrimaryKey>,
    foreign_keys: Vec<(usize, usize)>,
}

/// Newer Spider releases nest composite keys as lists.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawPrimaryKey {
    Single(usize),
    Composite(Vec<usize>),
}

#[derive(Serialize)]
struct RawDatabaseOut<'a> {
    column_names: Vec<(i64, &'a str)>,
    column_names_original: Vec<(i64, &'a str)>,
    column_types: Vec<&'static str>,
    db_id: &'a str,
    foreign_keys: Vec<(usize, usize)>,
    primary_keys: Vec<usize>,
    table_names: Vec<&'a str>,
    table_names_original: Vec<&'a str>,
}

pub fn load_schemas(path: impl AsRef<Path>) -> Result<Vec<DatabaseSchema>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schemas(&text, &path.display().to_string())
}

/// Decodes a `tables.json` document. `source_name` only labels errors.
pub fn parse_schemas(text: &str, source_name: &str) -> Result<Vec<DatabaseSchema>> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::malformed(source_name, format!("line {}", e.line()), e.to_string()))?;
    let Value::Array(items) = value else {
        return Err(Error::malformed(source_name, "$", "expected a JSON array of databases"));
    };

    let mut seen_ids = HashSet::new();
    let mut schemas = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let db_hint = item
            .get("db_id")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| "?".into());
        let location = format!("[{i}] (db_id={db_hint})");
        let raw: RawDatabase = serde_json::from_value(item)
            .map_err(|e| Error::malformed(source_name, location.clone(), e.to_string()))?;
        let schema = convert_raw(raw, source_name, &location)?;
        if !seen_ids.insert(schema.db_id.clone()) {
            return Err(Error::InvariantViolation(format!(
                "duplicate db_id `{}` in {source_name}",
                schema.db_id
            )));
        }
        schemas.push(schema);
    }
    Ok(schemas)
}

fn convert_raw(raw: RawDatabase, source_name: &str, location: &str) -> Result<DatabaseSchema> {
    let field = |name: &str, msg: String| Error::malformed(source_name, format!("{location}.{name}"), msg);
    let invariant = |msg: String| Error::InvariantViolation(format!("database `{}`: {msg}", raw.db_id));

    let n_cols = raw.column_names_original.len();
    if raw.column_types.len() != n_cols {
        return Err(field(
            "column_types",
            format!("{} types for {n_cols} columns", raw.column_types.len()),
        ));
    }
    if let Some(names) = &raw.column_names {
        if names.len() != n_cols {
            return Err(field("column_names", format!("{} entries for {n_cols} columns", names.len())));
        }
    }
    if let Some(names) = &raw.table_names {
        if names.len() != raw.table_names_original.len() {
            return Err(field(
                "table_names",
                format!("{} entries for {} tables", names.len(), raw.table_names_original.len()),
            ));
        }
    }

    let mut tables: Vec<TableSchema> = raw
        .table_names_original
        .iter()
        .enumerate()
        .map(|(i, name)| TableSchema {
            name: name.clone(),
            display_name: raw
                .table_names
                .as_ref()
                .map(|n| n[i].clone())
                .unwrap_or_else(|| name.clone()),
            columns: Vec::new(),
            primary_key_columns: Vec::new(),
        })
        .collect();

    // global column index -> locator (None for the star column)
    let mut global: Vec<Option<ColumnLocator>> = Vec::with_capacity(n_cols);
    let mut has_star_column = false;
    for (g, (table_index, name)) in raw.column_names_original.iter().enumerate() {
        if *table_index < 0 {
            if name != "*" {
                return Err(invariant(format!("column {g} `{name}` has negative table index")));
            }
            has_star_column = true;
            global.push(None);
            continue;
        }
        let ti = *table_index as usize;
        let Some(table) = tables.get_mut(ti) else {
            return Err(invariant(format!("column {g} `{name}` references missing table {ti}")));
        };
        let col_type = ColumnType::parse(&raw.column_types[g])
            .ok_or_else(|| field(&format!("column_types[{g}]"), format!("unknown type `{}`", raw.column_types[g])))?;
        let display_name = raw
            .column_names
            .as_ref()
            .map(|n| n[g].1.clone())
            .unwrap_or_else(|| name.clone());
        global.push(Some(ColumnLocator {
            table: ti,
            column: table.columns.len(),
        }));
        table.columns.push(ColumnSchema {
            name: name.clone(),
            display_name,
            col_type,
            table_index: ti,
        });
    }

    let resolve = |g: usize, what: &str| -> Result<ColumnLocator> {
        global
            .get(g)
            .copied()
            .flatten()
            .ok_or_else(|| invariant(format!("{what} references invalid column index {g}")))
    };

    for pk in &raw.primary_keys {
        let indices = match pk {
            RawPrimaryKey::Single(g) => std::slice::from_ref(g),
            RawPrimaryKey::Composite(gs) => gs.as_slice(),
        };
        for &g in indices {
            let loc = resolve(g, "primary key")?;
            let pks = &mut tables[loc.table].primary_key_columns;
            if !pks.contains(&loc.column) {
                pks.push(loc.column);
            }
        }
    }

    let mut foreign_keys = Vec::with_capacity(raw.foreign_keys.len());
    for &(a, b) in &raw.foreign_keys {
        foreign_keys.push((resolve(a, "foreign key")?, resolve(b, "foreign key")?));
    }

    let schema = DatabaseSchema {
        db_id: raw.db_id,
        tables,
        foreign_keys,
        has_star_column,
    };
    schema.validate()?;
    Ok(schema)
}

/// Encodes schemas as a Spider `tables.json` document.
pub fn schemas_to_json(schemas: &[DatabaseSchema]) -> String {
    let out: Vec<RawDatabaseOut<'_>> = schemas.iter().map(to_raw).collect();
    if out.is_empty() {
        return "[]".to_string();
    }
    let mut text = serde_json::to_string_pretty(&out).expect("schema serialization is infallible");
    text.push('\n');
    text
}

pub fn serialize_schemas(schemas: &[DatabaseSchema], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, schemas_to_json(schemas)).map_err(|e| Error::io(path, e))
}

fn to_raw(schema: &DatabaseSchema) -> RawDatabaseOut<'_> {
    let mut column_names = Vec::new();
    let mut column_names_original = Vec::new();
    let mut column_types = Vec::new();
    let mut offsets = Vec::with_capacity(schema.tables.len());

    if schema.has_star_column {
        column_names.push((-1, "*"));
        column_names_original.push((-1, "*"));
        column_types.push(ColumnType::Text.as_str());
    }
    for (ti, table) in schema.tables.iter().enumerate() {
        offsets.push(column_names_original.len());
        for column in &table.columns {
            column_names.push((ti as i64, column.display_name.as_str()));
            column_names_original.push((ti as i64, column.name.as_str()));
            column_types.push(column.col_type.as_str());
        }
    }
    let global = |loc: &ColumnLocator| offsets[loc.table] + loc.column;

    RawDatabaseOut {
        column_names,
        column_names_original,
        column_types,
        db_id: &schema.db_id,
        foreign_keys: schema
            .foreign_keys
            .iter()
            .map(|(a, b)| (global(a), global(b)))
            .collect(),
        primary_keys: schema
            .tables
            .iter()
            .enumerate()
            .flat_map(|(ti, t)| {
                t.primary_key_columns
                    .iter()
                    .map(move |&c| ColumnLocator { table: ti, column: c })
            })
            .map(|loc| global(&loc))
            .collect(),
        table_names: schema.tables.iter().map(|t| t.display_name.as_str()).collect(),
        table_names_original: schema.tables.iter().map(|t| t.name.as_str()).collect(),
    }
}

// ---------------------------------------------------------------------------
// examples

#[derive(Deserialize)]
struct RawExample {
    db_id: String,
    question: String,
    query: String,
}

#[derive(Serialize)]
pub(crate) struct RawExampleOut<'a> {
    pub db_id: &'a str,
    pub query: &'a str,
    pub question: &'a str,
}

pub fn load_examples(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_examples(&text, &file_name)
}

/// Decodes a Spider example array. Ids are `<file_name>:<index>`.
pub fn parse_examples(text: &str, file_name: &str) -> Result<Vec<Example>> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::malformed(file_name, format!("line {}", e.line()), e.to_string()))?;
    let Value::Array(items) = value else {
        return Err(Error::malformed(file_name, "$", "expected a JSON array of examples"));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let raw: RawExample = serde_json::from_value(item)
                .map_err(|e| Error::malformed(file_name, format!("[{i}]"), e.to_string()))?;
            Ok(Example::new(format!("{file_name}:{i}"), raw.db_id, raw.question, raw.query))
        })
        .collect()
}

/// Every example's `db_id` must name a loaded schema.
pub fn validate_examples(examples: &[Example], schemas: &[DatabaseSchema]) -> Result<()> {
    let ids: HashSet<&str> = schemas.iter().map(|s| s.db_id.as_str()).collect();
    for example in examples {
        if !ids.contains(example.db_id.as_str()) {
            return Err(Error::UnknownDatabase {
                example_id: example.example_id.clone(),
                db_id: example.db_id.clone(),
            });
        }
    }
    Ok(())
}

pub(crate) fn examples_to_json<'a>(rows: impl IntoIterator<Item = RawExampleOut<'a>>) -> String {
    let rows: Vec<RawExampleOut<'a>> = rows.into_iter().collect();
    if rows.is_empty() {
        return "[]".to_string();
    }
    let mut text = serde_json::to_string_pretty(&rows).expect("example serialization is infallible");
    text.push('\n');
    text
}

/// Index schemas by `db_id`.
pub fn schema_index(schemas: &[DatabaseSchema]) -> HashMap<&str, &DatabaseSchema> {
    schemas.iter().map(|s| (s.db_id.as_str(), s)).collect()
}

// ---------------------------------------------------------------------------
// predictions

pub fn load_predictions(path: impl AsRef<Path>, model_label: impl Into<String>) -> Result<PredictionFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    Ok(parse_predictions(&text, model_label))
}

/// One prediction per line; `\r\n` and `\n` are equivalent and a trailing
/// newline does not start a new prediction.
pub fn parse_predictions(text: &str, model_label: impl Into<String>) -> PredictionFile {
    PredictionFile {
        model_label: model_label.into(),
        predictions: text.lines().map(str::to_string).collect(),
    }
}
