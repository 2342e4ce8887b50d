use std::fmt;

use crate::spider::{ColumnLocator, DatabaseSchema};

/// A parsed query over the Spider SQL subset. Literals are not retained; every
/// string or number compares equal (see [`Expr::Value`]).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SqlAst {
    pub distinct: bool,
    pub select_items: Vec<SelectItem>,
    pub from: FromClause,
    /// Top-level `AND` operands of the `WHERE` clause.
    pub where_conjuncts: Vec<Predicate>,
    pub group_by: Vec<Expr>,
    /// Top-level `AND` operands of the `HAVING` clause.
    pub having: Vec<Predicate>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub set_op: Option<SetOperation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

/// Tables joined in `FROM`, with every `ON` condition collected into one
/// conjunct list. Comma joins and `JOIN` are not distinguished.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FromClause {
    pub sources: Vec<TableSource>,
    pub join_conditions: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableSource {
    Table {
        name: String,
        alias: Option<String>,
        /// Index into the bound schema's tables, when the name is known.
        table_index: Option<usize>,
    },
    Subquery {
        query: Box<SqlAst>,
        alias: Option<String>,
    },
}

impl TableSource {
    pub fn alias(&self) -> Option<&str> {
        match self {
            TableSource::Table { alias, .. } | TableSource::Subquery { alias, .. } => alias.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregation {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl Aggregation {
    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "count" => Aggregation::Count,
            "sum" => Aggregation::Sum,
            "avg" => Aggregation::Avg,
            "min" => Aggregation::Min,
            "max" => Aggregation::Max,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Count => "count",
            Aggregation::Sum => "sum",
            Aggregation::Avg => "avg",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Column(ColumnRef),
    /// `*` or `qualifier.*`
    Star { qualifier: Option<String> },
    /// Placeholder for any string or number literal.
    Value,
    Null,
    Aggregate {
        func: Aggregation,
        distinct: bool,
        arg: Box<Expr>,
    },
    Function { name: String, args: Vec<Expr> },
    Binary {
        op: ArithOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Negate(Box<Expr>),
    Subquery(Box<SqlAst>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub table_alias_or_name: Option<String>,
    pub column_name: String,
    pub resolution: Option<ColumnLocator>,
}

impl ColumnRef {
    pub fn new(qualifier: Option<&str>, column: &str) -> Self {
        ColumnRef {
            table_alias_or_name: qualifier.map(str::to_lowercase),
            column_name: column.to_lowercase(),
            resolution: None,
        }
    }

    /// `table.column` using the resolved table name, or the written
    /// qualifier when unresolved.
    pub fn qualified_name(&self, schema: &DatabaseSchema) -> String {
        match self.resolution {
            Some(loc) => format!(
                "{}.{}",
                schema.tables[loc.table].name.to_lowercase(),
                schema.tables[loc.table].columns[loc.column].name.to_lowercase()
            ),
            None => match &self.table_alias_or_name {
                Some(q) => format!("{q}.{}", self.column_name),
                None => self.column_name.clone(),
            },
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table_alias_or_name {
            Some(q) => write!(f, "{q}.{}", self.column_name),
            None => f.write_str(&self.column_name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
    Like,
    NotLike,
    Between,
    NotBetween,
    Is,
    IsNot,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::In => "IN",
            CmpOp::NotIn => "NOT IN",
            CmpOp::Like => "LIKE",
            CmpOp::NotLike => "NOT LIKE",
            CmpOp::Between => "BETWEEN",
            CmpOp::NotBetween => "NOT BETWEEN",
            CmpOp::Is => "IS",
            CmpOp::IsNot => "IS NOT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Single(Expr),
    /// Both bounds of `BETWEEN`.
    Range(Expr, Expr),
    /// Parenthesized value list of `IN`.
    List(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub left: Expr,
    pub op: CmpOp,
    pub right: Operand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    Cond(Condition),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
    Exists(Box<SqlAst>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderItem {
    pub expr: Expr,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Intersect,
    Except,
}

impl SetOp {
    pub fn as_str(self) -> &'static str {
        match self {
            SetOp::Union => "UNION",
            SetOp::Intersect => "INTERSECT",
            SetOp::Except => "EXCEPT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetOperation {
    pub op: SetOp,
    pub rhs: Box<SqlAst>,
}

// ---------------------------------------------------------------------------
// traversal

impl Expr {
    /// Visits column references in this expression, entering subqueries.
    pub fn for_each_column<'a>(&'a self, f: &mut dyn FnMut(&'a ColumnRef)) {
        match self {
            Expr::Column(c) => f(c),
            Expr::Aggregate { arg, .. } | Expr::Negate(arg) => arg.for_each_column(f),
            Expr::Function { args, .. } => args.iter().for_each(|a| a.for_each_column(f)),
            Expr::Binary { left, right, .. } => {
                left.for_each_column(f);
                right.for_each_column(f);
            }
            Expr::Subquery(q) => q.for_each_column(f),
            Expr::Star { .. } | Expr::Value | Expr::Null => {}
        }
    }
}

impl Predicate {
    pub fn for_each_column<'a>(&'a self, f: &mut dyn FnMut(&'a ColumnRef)) {
        match self {
            Predicate::Cond(c) => {
                c.left.for_each_column(f);
                match &c.right {
                    Operand::Single(e) => e.for_each_column(f),
                    Operand::Range(a, b) => {
                        a.for_each_column(f);
                        b.for_each_column(f);
                    }
                    Operand::List(items) => items.iter().for_each(|e| e.for_each_column(f)),
                }
            }
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.for_each_column(f)),
            Predicate::Not(p) => p.for_each_column(f),
            Predicate::Exists(q) => q.for_each_column(f),
        }
    }
}

impl SqlAst {
    /// Visits every column reference in document order, including nested
    /// subqueries and set-operation arms.
    pub fn for_each_column<'a>(&'a self, f: &mut dyn FnMut(&'a ColumnRef)) {
        for item in &self.select_items {
            item.expr.for_each_column(f);
        }
        for source in &self.from.sources {
            if let TableSource::Subquery { query, .. } = source {
                query.for_each_column(f);
            }
        }
        for p in &self.from.join_conditions {
            p.for_each_column(f);
        }
        for p in &self.where_conjuncts {
            p.for_each_column(f);
        }
        for e in &self.group_by {
            e.for_each_column(f);
        }
        for p in &self.having {
            p.for_each_column(f);
        }
        for o in &self.order_by {
            o.expr.for_each_column(f);
        }
        if let Some(set) = &self.set_op {
            set.rhs.for_each_column(f);
        }
    }
}
