use super::ast::*;
use super::parser::{conjuncts, flatten_or};
use super::resolve::{bind, scope_of, walk_core_mut, Scope};
use super::serialize::{expr_text, predicate_text};

/// Canonical form used for exact-match comparison.
///
/// Table aliases become positional (`t1`, `t2`, ... at the top level and
/// `d<depth>t<i>` in nested queries), every bound column is qualified with
/// its source's canonical alias, conjunct lists and `GROUP BY` are sorted by
/// their serialized text, and column-to-column equalities are ordered.
/// Select items and `ORDER BY` keep their order.
pub fn normalize(ast: &SqlAst) -> SqlAst {
    let mut out = ast.clone();
    let mut scopes = Vec::new();
    let mut canon = Vec::new();
    normalize_query(&mut out, &mut scopes, &mut canon);
    out
}

fn canonical_alias(depth: usize, index: usize) -> String {
    if depth == 0 {
        format!("t{}", index + 1)
    } else {
        format!("d{depth}t{}", index + 1)
    }
}

/// `scopes` holds the enclosing scopes under their written aliases and
/// `canon` the canonical alias of each of their sources.
fn normalize_query(q: &mut SqlAst, scopes: &mut Vec<Scope>, canon: &mut Vec<Vec<String>>) {
    let depth = scopes.len();
    for source in &mut q.from.sources {
        if let TableSource::Subquery { query, .. } = source {
            normalize_query(query, scopes, canon);
        }
    }
    let scope = scope_of(&q.from);
    canon.push((0..scope.len()).map(|i| canonical_alias(depth, i)).collect());
    scopes.push(scope);

    // Written aliases are needed for lookup until every reference in this
    // core and its nested subqueries is rewritten, so the stack is shared
    // through a cell.
    let canon_cell = std::cell::RefCell::new(std::mem::take(canon));
    {
        let has_column = |t: usize, c: &ColumnRef| c.resolution.is_some_and(|r| r.table == t);
        let mut on_column = |c: &mut ColumnRef, scopes: &[Scope]| {
            if let Some((d, i)) = bind(scopes, c, &has_column) {
                c.table_alias_or_name = Some(canon_cell.borrow()[d][i].clone());
            }
        };
        let mut on_subquery = |sub: &mut SqlAst, scopes: &mut Vec<Scope>| {
            let mut inner = std::mem::take(&mut *canon_cell.borrow_mut());
            normalize_query(sub, scopes, &mut inner);
            *canon_cell.borrow_mut() = inner;
        };
        walk_core_mut(q, scopes, &mut on_column, &mut on_subquery);
    }
    *canon = canon_cell.into_inner();

    // star qualifiers follow the same renaming
    let names = canon.last().expect("pushed above").clone();
    for item in &mut q.select_items {
        rename_star(&mut item.expr, scopes.last().expect("pushed above"), &names);
    }
    for (source, name) in q.from.sources.iter_mut().zip(&names) {
        match source {
            TableSource::Table { alias, .. } | TableSource::Subquery { alias, .. } => {
                *alias = Some(name.clone())
            }
        }
    }
    scopes.pop();
    canon.pop();

    q.from.join_conditions = canonical_conjuncts(std::mem::take(&mut q.from.join_conditions));
    q.where_conjuncts = canonical_conjuncts(std::mem::take(&mut q.where_conjuncts));
    q.having = canonical_conjuncts(std::mem::take(&mut q.having));
    for item in &mut q.select_items {
        fold_literals(&mut item.expr);
    }
    for e in &mut q.group_by {
        fold_literals(e);
    }
    q.group_by.sort_by_cached_key(expr_text);
    for o in &mut q.order_by {
        fold_literals(&mut o.expr);
    }
    if let Some(set) = &mut q.set_op {
        normalize_query(&mut set.rhs, scopes, canon);
    }
}

fn rename_star(e: &mut Expr, scope: &Scope, names: &[String]) {
    match e {
        Expr::Star {
            qualifier: Some(q),
        } => {
            let found = scope
                .iter()
                .position(|s| s.alias.as_deref() == Some(q.as_str()))
                .or_else(|| scope.iter().position(|s| s.name == *q));
            if let Some(i) = found {
                *q = names[i].clone();
            }
        }
        Expr::Aggregate { arg, .. } => rename_star(arg, scope, names),
        _ => {}
    }
}

/// `-literal` is the same placeholder as `literal`.
fn fold_literals(e: &mut Expr) {
    match e {
        Expr::Negate(inner) => {
            fold_literals(inner);
            if **inner == Expr::Value {
                *e = Expr::Value;
            }
        }
        Expr::Aggregate { arg, .. } => fold_literals(arg),
        Expr::Function { args, .. } => args.iter_mut().for_each(fold_literals),
        Expr::Binary { left, right, .. } => {
            fold_literals(left);
            fold_literals(right);
        }
        Expr::Column(_) | Expr::Star { .. } | Expr::Value | Expr::Null | Expr::Subquery(_) => {}
    }
}

fn canonical_conjuncts(ps: Vec<Predicate>) -> Vec<Predicate> {
    let mut out: Vec<Predicate> = ps
        .into_iter()
        .flat_map(conjuncts)
        .map(canonical_predicate)
        .flat_map(conjuncts)
        .collect();
    out.sort_by_cached_key(predicate_text);
    out
}

fn canonical_predicate(p: Predicate) -> Predicate {
    match p {
        Predicate::Cond(mut c) => {
            fold_literals(&mut c.left);
            match &mut c.right {
                Operand::Single(e) => fold_literals(e),
                Operand::Range(a, b) => {
                    fold_literals(a);
                    fold_literals(b);
                }
                Operand::List(items) => items.iter_mut().for_each(fold_literals),
            }
            if matches!(c.op, CmpOp::Eq | CmpOp::Ne) {
                if let Operand::Single(right @ Expr::Column(_)) = &mut c.right {
                    if matches!(c.left, Expr::Column(_)) && expr_text(&c.left) > expr_text(right) {
                        std::mem::swap(&mut c.left, right);
                    }
                }
            }
            Predicate::Cond(c)
        }
        Predicate::And(ps) => {
            let mut parts = canonical_conjuncts(ps);
            if parts.len() == 1 {
                parts.pop().expect("one part")
            } else {
                Predicate::And(parts)
            }
        }
        Predicate::Or(ps) => {
            let mut parts = flatten_or(ps.into_iter().map(canonical_predicate).collect());
            parts.sort_by_cached_key(predicate_text);
            if parts.len() == 1 {
                parts.pop().expect("one part")
            } else {
                Predicate::Or(parts)
            }
        }
        Predicate::Not(inner) => Predicate::Not(Box::new(canonical_predicate(*inner))),
        Predicate::Exists(q) => Predicate::Exists(q),
    }
}
