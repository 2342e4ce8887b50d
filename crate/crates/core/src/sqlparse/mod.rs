//! Parser for the Spider SQL subset with schema-aware column resolution,
//! canonical normalization and serialization.
//!
//! Accepted beyond plain SQL: `@` as the qualifier separator
//! (`table@column`), and column names written with spaces in place of
//! underscores when the joined name is a schema column (`is homosexual`).

mod ast;
mod lexer;
mod normalize;
mod parser;
mod resolve;
mod serialize;

pub use ast::*;
pub use normalize::normalize;
pub use serialize::serialize;

use crate::error::Result;
use crate::spider::DatabaseSchema;

/// A parsed query plus the raw literal texts that were replaced by
/// placeholders, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSql {
    pub ast: SqlAst,
    pub literals: Vec<String>,
}

pub fn parse_sql(text: &str, schema: &DatabaseSchema) -> Result<SqlAst> {
    parse_sql_with_literals(text, schema).map(|p| p.ast)
}

pub fn parse_sql_with_literals(text: &str, schema: &DatabaseSchema) -> Result<ParsedSql> {
    let mut parser = parser::Parser::new(text, schema)?;
    let mut ast = parser.parse_statement()?;
    resolve::resolve(&mut ast, schema);
    Ok(ParsedSql {
        ast,
        literals: parser.literals,
    })
}

/// Every column reference in `ast`, nested queries included, in document
/// order. `*` is not a column reference.
pub fn extract_column_refs(ast: &SqlAst) -> Vec<ColumnRef> {
    let mut refs = Vec::new();
    ast.for_each_column(&mut |c| refs.push(c.clone()));
    refs
}

/// Structural equality of normalized forms.
pub fn exact_match(pred: &SqlAst, gold: &SqlAst) -> bool {
    normalize(pred) == normalize(gold)
}

#[cfg(test)]
mod tests;
