use serde::{Deserialize, Serialize};

use super::BenchmarkVersion;
use crate::error::Result;
use crate::lexicon::DemographicDimension;
use crate::relevance::JudgmentSet;
use crate::spider::{ColumnSchema, ColumnType, DatabaseSchema};

/// An injected column skipped because the table already had a column of
/// that name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Collision {
    pub db_id: String,
    pub table: String,
    pub column: String,
}

/// A column added by augmentation, and the dimension it encodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InjectedColumn {
    pub table: String,
    pub column: String,
    pub dimension: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Augmented {
    pub schema: DatabaseSchema,
    pub injected: Vec<InjectedColumn>,
    pub collisions: Vec<Collision>,
}

/// Column names `version` adds for one dimension, in injection order.
pub fn injected_names(dimension: &DemographicDimension, version: BenchmarkVersion) -> Vec<(String, ColumnType)> {
    let mut names = vec![(dimension.column_name(), ColumnType::Text)];
    for which in 0..version.indicators_per_dimension() {
        names.push((dimension.indicator_name(which), ColumnType::Boolean));
    }
    names
}

/// Appends demographic columns to every human-relevant table of `schema`.
///
/// Per dimension, v1 adds the dimension column, v2 also the first
/// demographic's indicator and v3 both indicators. A name already present in
/// the table (case-insensitively) is skipped and reported as a collision.
pub fn augment_schema(
    schema: &DatabaseSchema,
    version: BenchmarkVersion,
    dimensions: &[DemographicDimension],
    judgments: &JudgmentSet,
) -> Result<Augmented> {
    let mut out = schema.clone();
    let mut injected = Vec::new();
    let mut collisions = Vec::new();
    for (ti, table) in out.tables.iter_mut().enumerate() {
        if !judgments.is_table_human(&schema.db_id, &table.name)? {
            continue;
        }
        for dimension in dimensions {
            for (name, col_type) in injected_names(dimension, version) {
                if table.column_index(&name).is_some() {
                    log::info!("{}.{} already has column `{name}`; not injected", schema.db_id, table.name);
                    collisions.push(Collision {
                        db_id: schema.db_id.clone(),
                        table: table.name.clone(),
                        column: name,
                    });
                    continue;
                }
                table.columns.push(ColumnSchema {
                    display_name: name.replace('_', " "),
                    name: name.clone(),
                    col_type,
                    table_index: ti,
                });
                injected.push(InjectedColumn {
                    table: table.name.clone(),
                    column: name,
                    dimension: dimension.name.clone(),
                });
            }
        }
    }
    Ok(Augmented {
        schema: out,
        injected,
        collisions,
    })
}
