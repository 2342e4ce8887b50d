use std::fmt::Write;

use super::ast::*;
use super::parser::is_reserved;

/// Canonical SQL text of `ast`: uppercase keywords, lowercase identifiers,
/// every literal printed as `'value'`.
pub fn serialize(ast: &SqlAst) -> String {
    let mut out = String::new();
    write_query(ast, &mut out);
    out
}

pub(crate) fn predicate_text(p: &Predicate) -> String {
    let mut out = String::new();
    write_predicate(p, &mut out, false);
    out
}

pub(crate) fn expr_text(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

pub(crate) fn ident(name: &str) -> String {
    let bare = !name.is_empty()
        && name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && !name.chars().all(|c| c.is_ascii_digit())
        && !is_reserved(name);
    if bare {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

fn join<T>(out: &mut String, items: &[T], sep: &str, mut f: impl FnMut(&T, &mut String)) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        f(item, out);
    }
}

fn write_query(q: &SqlAst, out: &mut String) {
    out.push_str("SELECT ");
    if q.distinct {
        out.push_str("DISTINCT ");
    }
    join(out, &q.select_items, ", ", |item, out| {
        write_expr(&item.expr, out);
        if let Some(alias) = &item.alias {
            let _ = write!(out, " AS {}", ident(alias));
        }
    });
    if !q.from.sources.is_empty() {
        out.push_str(" FROM ");
        join(out, &q.from.sources, " JOIN ", |source, out| match source {
            TableSource::Table { name, alias, .. } => {
                out.push_str(&ident(name));
                if let Some(a) = alias {
                    let _ = write!(out, " AS {}", ident(a));
                }
            }
            TableSource::Subquery { query, alias } => {
                out.push('(');
                write_query(query, out);
                out.push(')');
                if let Some(a) = alias {
                    let _ = write!(out, " AS {}", ident(a));
                }
            }
        });
        if !q.from.join_conditions.is_empty() {
            out.push_str(" ON ");
            write_conjuncts(&q.from.join_conditions, out);
        }
    }
    if !q.where_conjuncts.is_empty() {
        out.push_str(" WHERE ");
        write_conjuncts(&q.where_conjuncts, out);
    }
    if !q.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        join(out, &q.group_by, ", ", write_expr);
    }
    if !q.having.is_empty() {
        out.push_str(" HAVING ");
        write_conjuncts(&q.having, out);
    }
    if !q.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        join(out, &q.order_by, ", ", |o, out| {
            write_expr(&o.expr, out);
            out.push_str(match o.direction {
                Direction::Asc => " ASC",
                Direction::Desc => " DESC",
            });
        });
    }
    if let Some(n) = q.limit {
        let _ = write!(out, " LIMIT {n}");
    }
    if let Some(set) = &q.set_op {
        let _ = write!(out, " {} ", set.op.as_str());
        write_query(&set.rhs, out);
    }
}

fn write_conjuncts(ps: &[Predicate], out: &mut String) {
    join(out, ps, " AND ", |p, out| write_predicate(p, out, true));
}

/// `nested` parenthesizes `AND` groups that appear inside another operator.
fn write_predicate(p: &Predicate, out: &mut String, nested: bool) {
    match p {
        Predicate::Cond(c) => write_condition(c, out),
        Predicate::And(ps) => {
            if nested {
                out.push('(');
            }
            join(out, ps, " AND ", |p, out| write_predicate(p, out, true));
            if nested {
                out.push(')');
            }
        }
        Predicate::Or(ps) => {
            out.push('(');
            join(out, ps, " OR ", |p, out| write_predicate(p, out, true));
            out.push(')');
        }
        Predicate::Not(inner) => {
            out.push_str("NOT (");
            write_predicate(inner, out, false);
            out.push(')');
        }
        Predicate::Exists(q) => {
            out.push_str("EXISTS (");
            write_query(q, out);
            out.push(')');
        }
    }
}

fn write_condition(c: &Condition, out: &mut String) {
    write_expr(&c.left, out);
    let _ = write!(out, " {} ", c.op.as_str());
    match &c.right {
        Operand::Single(e) => write_expr(e, out),
        Operand::Range(low, high) => {
            write_expr(low, out);
            out.push_str(" AND ");
            write_expr(high, out);
        }
        Operand::List(items) => {
            out.push('(');
            join(out, items, ", ", write_expr);
            out.push(')');
        }
    }
}

fn write_operand(e: &Expr, out: &mut String) {
    if matches!(e, Expr::Binary { .. }) {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Column(c) => {
            if let Some(q) = &c.table_alias_or_name {
                let _ = write!(out, "{}.", ident(q));
            }
            out.push_str(&ident(&c.column_name));
        }
        Expr::Star { qualifier } => {
            if let Some(q) = qualifier {
                let _ = write!(out, "{}.", ident(q));
            }
            out.push('*');
        }
        Expr::Value => out.push_str("'value'"),
        Expr::Null => out.push_str("NULL"),
        Expr::Aggregate {
            func,
            distinct,
            arg,
        } => {
            let _ = write!(out, "{}(", func.as_str());
            if *distinct {
                out.push_str("DISTINCT ");
            }
            write_expr(arg, out);
            out.push(')');
        }
        Expr::Function { name, args } => {
            let _ = write!(out, "{}(", ident(name));
            join(out, args, ", ", write_expr);
            out.push(')');
        }
        Expr::Binary { op, left, right } => {
            write_operand(left, out);
            let _ = write!(out, " {} ", op.as_str());
            write_operand(right, out);
        }
        Expr::Negate(inner) => {
            out.push('-');
            write_operand(inner, out);
        }
        Expr::Subquery(q) => {
            out.push('(');
            write_query(q, out);
            out.push(')');
        }
    }
}
