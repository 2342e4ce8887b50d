//! Binding of column references to schema columns.
//!
//! Each `SELECT` core opens a scope holding its `FROM` sources. A reference
//! is looked up in the innermost scope first, then in enclosing scopes, so
//! correlated subqueries resolve against the outer query.

use super::ast::*;
use crate::spider::{ColumnLocator, DatabaseSchema};

/// One `FROM` source as seen by name lookup.
#[derive(Debug, Clone)]
pub(crate) struct Source {
    pub alias: Option<String>,
    /// Table name, or empty for a derived table.
    pub name: String,
    pub table: Option<usize>,
    /// Output column names of a derived table.
    pub derived_columns: Vec<String>,
}

pub(crate) type Scope = Vec<Source>;

pub(crate) fn scope_of(from: &FromClause) -> Scope {
    from.sources
        .iter()
        .map(|s| match s {
            TableSource::Table {
                name,
                alias,
                table_index,
            } => Source {
                alias: alias.clone(),
                name: name.clone(),
                table: *table_index,
                derived_columns: Vec::new(),
            },
            TableSource::Subquery { query, alias } => Source {
                alias: alias.clone(),
                name: String::new(),
                table: None,
                derived_columns: output_columns(query),
            },
        })
        .collect()
}

fn output_columns(q: &SqlAst) -> Vec<String> {
    q.select_items
        .iter()
        .filter_map(|item| match (&item.alias, &item.expr) {
            (Some(a), _) => Some(a.clone()),
            (None, Expr::Column(c)) => Some(c.column_name.clone()),
            _ => None,
        })
        .collect()
}

/// Position of the source a qualifier names within one scope: alias match
/// first, then table name.
fn find_qualified(scope: &Scope, qualifier: &str) -> Option<usize> {
    scope
        .iter()
        .position(|s| s.alias.as_deref() == Some(qualifier))
        .or_else(|| scope.iter().position(|s| !s.name.is_empty() && s.name == qualifier))
}

/// Finds the `(scope depth, source index)` a reference binds to. `has_column`
/// reports whether a base table contains a column.
pub(crate) fn bind(
    scopes: &[Scope],
    column: &ColumnRef,
    has_column: &dyn Fn(usize, &ColumnRef) -> bool,
) -> Option<(usize, usize)> {
    for depth in (0..scopes.len()).rev() {
        let scope = &scopes[depth];
        let found = match &column.table_alias_or_name {
            Some(q) => find_qualified(scope, q),
            None => scope.iter().position(|s| match s.table {
                Some(t) => has_column(t, column),
                None => s.derived_columns.contains(&column.column_name),
            }),
        };
        if let Some(i) = found {
            return Some((depth, i));
        }
    }
    None
}

/// Fills `resolution` of every column reference in `ast` and all nested
/// queries. Unknown tables or columns leave `resolution` empty.
pub(crate) fn resolve(ast: &mut SqlAst, schema: &DatabaseSchema) {
    resolve_query(ast, schema, &mut Vec::new());
}

fn resolve_query(q: &mut SqlAst, schema: &DatabaseSchema, scopes: &mut Vec<Scope>) {
    for source in &mut q.from.sources {
        if let TableSource::Subquery { query, .. } = source {
            resolve_query(query, schema, scopes);
        }
    }
    scopes.push(scope_of(&q.from));
    {
        let mut visit = |c: &mut ColumnRef, scopes: &[Scope]| resolve_column(c, schema, scopes);
        walk_core_mut(q, scopes, &mut visit, &mut |sub, scopes| resolve_query(sub, schema, scopes));
    }
    scopes.pop();
    if let Some(set) = &mut q.set_op {
        resolve_query(&mut set.rhs, schema, scopes);
    }
}

fn resolve_column(c: &mut ColumnRef, schema: &DatabaseSchema, scopes: &[Scope]) {
    let has_column = |t: usize, c: &ColumnRef| schema.tables[t].column_index(&c.column_name).is_some();
    c.resolution = bind(scopes, c, &has_column).and_then(|(d, i)| {
        let table = scopes[d][i].table?;
        let column = schema.tables[table].column_index(&c.column_name)?;
        Some(ColumnLocator { table, column })
    });
}

pub(crate) type ColumnVisitor<'f> = dyn FnMut(&mut ColumnRef, &[Scope]) + 'f;
pub(crate) type QueryVisitor<'f> = dyn FnMut(&mut SqlAst, &mut Vec<Scope>) + 'f;

/// Visits the column references owned by one `SELECT` core (not its `FROM`
/// subqueries or set-operation arm), handing nested expression subqueries to
/// `on_subquery` with the current scope stack.
pub(crate) fn walk_core_mut(
    q: &mut SqlAst,
    scopes: &mut Vec<Scope>,
    on_column: &mut ColumnVisitor<'_>,
    on_subquery: &mut QueryVisitor<'_>,
) {
    let mut w = Walker {
        scopes,
        on_column,
        on_subquery,
    };
    for item in &mut q.select_items {
        w.expr(&mut item.expr);
    }
    for p in &mut q.from.join_conditions {
        w.predicate(p);
    }
    for p in &mut q.where_conjuncts {
        w.predicate(p);
    }
    for e in &mut q.group_by {
        w.expr(e);
    }
    for p in &mut q.having {
        w.predicate(p);
    }
    for o in &mut q.order_by {
        w.expr(&mut o.expr);
    }
}

struct Walker<'s, 'f> {
    scopes: &'s mut Vec<Scope>,
    on_column: &'s mut ColumnVisitor<'f>,
    on_subquery: &'s mut QueryVisitor<'f>,
}

impl Walker<'_, '_> {
    fn expr(&mut self, e: &mut Expr) {
        match e {
            Expr::Column(c) => (self.on_column)(c, self.scopes),
            Expr::Aggregate { arg, .. } | Expr::Negate(arg) => self.expr(arg),
            Expr::Function { args, .. } => args.iter_mut().for_each(|a| self.expr(a)),
            Expr::Binary { left, right, .. } => {
                self.expr(left);
                self.expr(right);
            }
            Expr::Subquery(q) => (self.on_subquery)(q, self.scopes),
            Expr::Star { .. } | Expr::Value | Expr::Null => {}
        }
    }

    fn predicate(&mut self, p: &mut Predicate) {
        match p {
            Predicate::Cond(c) => {
                self.expr(&mut c.left);
                match &mut c.right {
                    Operand::Single(e) => self.expr(e),
                    Operand::Range(a, b) => {
                        self.expr(a);
                        self.expr(b);
                    }
                    Operand::List(items) => items.iter_mut().for_each(|e| self.expr(e)),
                }
            }
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter_mut().for_each(|p| self.predicate(p)),
            Predicate::Not(p) => self.predicate(p),
            Predicate::Exists(q) => (self.on_subquery)(q, self.scopes),
        }
    }
}
