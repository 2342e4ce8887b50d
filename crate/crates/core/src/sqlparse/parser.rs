use std::collections::HashMap;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use crate::error::{Error, Result};
use crate::spider::DatabaseSchema;

/// Words that never start or continue an identifier in bare form.
pub(crate) const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "union", "intersect",
    "except", "all", "distinct", "as", "on", "join", "inner", "left", "right", "full", "outer",
    "cross", "natural", "and", "or", "not", "in", "like", "between", "is", "null", "exists",
    "asc", "desc",
];

pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Longest repaired identifier that may span this many words.
const MAX_REPAIR_WORDS: usize = 4;

pub(crate) struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end_offset: usize,
    /// Lowercased schema column names, keyed by their space/underscore
    /// folded form.
    columns: HashMap<String, String>,
    pub(crate) literals: Vec<String>,
    schema: &'a DatabaseSchema,
}

fn fold(name: &str) -> String {
    name.to_lowercase().replace(' ', "_")
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &str, schema: &'a DatabaseSchema) -> Result<Self> {
        let tokens = lex(text)?;
        let mut columns = HashMap::new();
        for table in &schema.tables {
            for column in &table.columns {
                let lower = column.name.to_lowercase();
                columns.entry(fold(&lower)).or_insert(lower);
            }
        }
        Ok(Parser {
            tokens,
            pos: 0,
            end_offset: text.len(),
            columns,
            literals: Vec::new(),
            schema,
        })
    }

    // -- token helpers -----------------------------------------------------

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + ahead).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.end_offset, |t| t.offset)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Unparseable {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w == kw)
    }

    fn is_kw_at(&self, ahead: usize, kw: &str) -> bool {
        matches!(self.peek_at(ahead), Some(Tok::Word(w)) if w == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(format!("expected {}", kw.to_uppercase()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn starts_select(&self, ahead: usize) -> bool {
        self.is_kw_at(ahead, "select")
    }

    // -- statements --------------------------------------------------------

    pub(crate) fn parse_statement(&mut self) -> Result<SqlAst> {
        if self.tokens.is_empty() {
            return self.error("empty query");
        }
        let ast = self.query()?;
        while self.eat(&Tok::Semicolon) {}
        if self.pos < self.tokens.len() {
            return self.error("unexpected trailing input");
        }
        Ok(ast)
    }

    fn query(&mut self) -> Result<SqlAst> {
        let mut ast = if self.peek() == Some(&Tok::LParen) && self.starts_select(1) {
            self.pos += 1;
            let inner = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            inner
        } else {
            self.select_core()?
        };
        let op = if self.eat_kw("union") {
            Some(SetOp::Union)
        } else if self.eat_kw("intersect") {
            Some(SetOp::Intersect)
        } else if self.eat_kw("except") {
            Some(SetOp::Except)
        } else {
            None
        };
        if let Some(op) = op {
            self.eat_kw("all");
            let rhs = self.query()?;
            // attach to the end of an existing chain from a parenthesized arm
            let mut tail = &mut ast;
            while tail.set_op.is_some() {
                tail = &mut tail.set_op.as_mut().expect("checked").rhs;
            }
            tail.set_op = Some(SetOperation {
                op,
                rhs: Box::new(rhs),
            });
        }
        Ok(ast)
    }

    fn select_core(&mut self) -> Result<SqlAst> {
        self.expect_kw("select")?;
        let mut ast = SqlAst {
            distinct: self.eat_kw("distinct"),
            ..SqlAst::default()
        };
        if !ast.distinct {
            self.eat_kw("all");
        }
        loop {
            ast.select_items.push(self.select_item()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        if self.eat_kw("from") {
            ast.from = self.parse_from()?;
        }
        if self.eat_kw("where") {
            ast.where_conjuncts = conjuncts(self.predicate()?);
        }
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            loop {
                ast.group_by.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        if self.eat_kw("having") {
            ast.having = conjuncts(self.predicate()?);
        }
        if self.eat_kw("order") {
            self.expect_kw("by")?;
            loop {
                let expr = self.expr()?;
                let direction = if self.eat_kw("desc") {
                    Direction::Desc
                } else {
                    self.eat_kw("asc");
                    Direction::Asc
                };
                ast.order_by.push(OrderItem { expr, direction });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        if self.eat_kw("limit") {
            match self.peek() {
                Some(Tok::Num(n)) => match n.parse::<u64>() {
                    Ok(v) => {
                        ast.limit = Some(v);
                        self.pos += 1;
                    }
                    Err(_) => return self.error("LIMIT needs a non-negative integer"),
                },
                // a placeholdered limit
                Some(Tok::Str(s)) if s.eq_ignore_ascii_case("value") => {
                    ast.limit = Some(1);
                    self.pos += 1;
                }
                _ => return self.error("LIMIT needs a non-negative integer"),
            }
        }
        Ok(ast)
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        let expr = self.expr()?;
        let alias = if self.eat_kw("as") {
            Some(self.identifier()?)
        } else {
            None
        };
        Ok(SelectItem { expr, alias })
    }

    /// A bare or quoted identifier in a definition position.
    fn identifier(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Word(w)) if !is_reserved(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(Tok::Quoted(w)) | Some(Tok::Str(w)) => {
                let w = w.to_lowercase();
                self.pos += 1;
                Ok(w)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn parse_from(&mut self) -> Result<FromClause> {
        let mut from = FromClause::default();
        from.sources.push(self.table_source()?);
        loop {
            if self.eat(&Tok::Comma) {
                from.sources.push(self.table_source()?);
                continue;
            }
            if self.join_keyword() {
                from.sources.push(self.table_source()?);
                if self.eat_kw("on") {
                    from.join_conditions.extend(conjuncts(self.predicate()?));
                }
                continue;
            }
            if self.eat_kw("on") {
                from.join_conditions.extend(conjuncts(self.predicate()?));
                continue;
            }
            break;
        }
        Ok(from)
    }

    /// Consumes `[NATURAL] [INNER|LEFT|RIGHT|FULL|CROSS] [OUTER] JOIN`.
    fn join_keyword(&mut self) -> bool {
        let start = self.pos;
        self.eat_kw("natural");
        for kw in ["inner", "left", "right", "full", "cross"] {
            if self.eat_kw(kw) {
                break;
            }
        }
        self.eat_kw("outer");
        if self.eat_kw("join") {
            true
        } else {
            self.pos = start;
            false
        }
    }

    fn table_source(&mut self) -> Result<TableSource> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let query = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            let alias = self.table_alias()?;
            return Ok(TableSource::Subquery {
                query: Box::new(query),
                alias,
            });
        }
        let name = match self.peek() {
            Some(Tok::Word(w)) if !is_reserved(w) => w.clone(),
            Some(Tok::Quoted(w)) => w.clone(),
            _ => return self.error("expected table name"),
        };
        self.pos += 1;
        let alias = self.table_alias()?;
        let table_index = self.schema.table_index(&name);
        Ok(TableSource::Table {
            name,
            alias,
            table_index,
        })
    }

    fn table_alias(&mut self) -> Result<Option<String>> {
        if self.eat_kw("as") {
            return self.identifier().map(Some);
        }
        match self.peek() {
            Some(Tok::Word(w)) if !is_reserved(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(Some(w))
            }
            _ => Ok(None),
        }
    }

    // -- predicates --------------------------------------------------------

    fn predicate(&mut self) -> Result<Predicate> {
        let mut parts = vec![self.and_predicate()?];
        while self.eat_kw("or") {
            parts.push(self.and_predicate()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Predicate::Or(flatten_or(parts))
        })
    }

    fn and_predicate(&mut self) -> Result<Predicate> {
        let mut parts = vec![self.not_predicate()?];
        while self.eat_kw("and") {
            parts.push(self.not_predicate()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Predicate::And(parts.into_iter().flat_map(conjuncts).collect())
        })
    }

    fn not_predicate(&mut self) -> Result<Predicate> {
        if self.eat_kw("not") {
            return Ok(Predicate::Not(Box::new(self.not_predicate()?)));
        }
        self.atom_predicate()
    }

    fn atom_predicate(&mut self) -> Result<Predicate> {
        if self.eat_kw("exists") {
            self.expect(&Tok::LParen, "`(`")?;
            let q = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(Predicate::Exists(Box::new(q)));
        }
        if self.peek() == Some(&Tok::LParen) && !self.starts_select(1) {
            let save = self.pos;
            let saved_literals = self.literals.len();
            self.pos += 1;
            if let Ok(p) = self.predicate() {
                if self.eat(&Tok::RParen) && !self.continues_expression() {
                    return Ok(p);
                }
            }
            // not a grouped predicate; reparse as an expression
            self.pos = save;
            self.literals.truncate(saved_literals);
        }
        let left = self.expr()?;
        self.condition_tail(left)
    }

    /// True if the next token continues an arithmetic or comparison
    /// expression, so a preceding parenthesized group was an operand.
    fn continues_expression(&self) -> bool {
        match self.peek() {
            Some(Tok::Op(_)) | Some(Tok::Star) => true,
            Some(Tok::Word(w)) => matches!(w.as_str(), "in" | "like" | "between" | "is")
                || (w == "not" && matches!(self.peek_at(1), Some(Tok::Word(n)) if matches!(n.as_str(), "in" | "like" | "between"))),
            _ => false,
        }
    }

    fn condition_tail(&mut self, left: Expr) -> Result<Predicate> {
        let cmp = match self.peek() {
            Some(Tok::Op(op)) => match *op {
                "=" => Some(CmpOp::Eq),
                "!=" => Some(CmpOp::Ne),
                "<" => Some(CmpOp::Lt),
                "<=" => Some(CmpOp::Le),
                ">" => Some(CmpOp::Gt),
                ">=" => Some(CmpOp::Ge),
                _ => None,
            },
            _ => None,
        };
        if let Some(op) = cmp {
            self.pos += 1;
            let right = self.expr()?;
            return Ok(cond(left, op, Operand::Single(right)));
        }
        let negated = self.eat_kw("not");
        if self.eat_kw("in") {
            let right = self.in_operand()?;
            let op = if negated { CmpOp::NotIn } else { CmpOp::In };
            return Ok(cond(left, op, right));
        }
        if self.eat_kw("like") {
            let right = self.expr()?;
            let op = if negated { CmpOp::NotLike } else { CmpOp::Like };
            return Ok(cond(left, op, Operand::Single(right)));
        }
        if self.eat_kw("between") {
            let low = self.expr()?;
            self.expect_kw("and")?;
            let high = self.expr()?;
            let op = if negated { CmpOp::NotBetween } else { CmpOp::Between };
            return Ok(cond(left, op, Operand::Range(low, high)));
        }
        if !negated && self.eat_kw("is") {
            let op = if self.eat_kw("not") { CmpOp::IsNot } else { CmpOp::Is };
            let right = self.expr()?;
            return Ok(cond(left, op, Operand::Single(right)));
        }
        self.error("expected comparison operator")
    }

    fn in_operand(&mut self) -> Result<Operand> {
        self.expect(&Tok::LParen, "`(`")?;
        if self.starts_select(0) || (self.peek() == Some(&Tok::LParen) && self.starts_select(1)) {
            let q = self.query()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(Operand::Single(Expr::Subquery(Box::new(q))));
        }
        let mut items = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                items.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen, "`)`")?;
        }
        Ok(Operand::List(items))
    }

    // -- expressions -------------------------------------------------------

    fn expr(&mut self) -> Result<Expr> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op("+")) => ArithOp::Add,
                Some(Tok::Op("-")) => ArithOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let right = self.term()?;
            left = binary(op, left, right);
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => ArithOp::Mul,
                Some(Tok::Op("/")) => ArithOp::Div,
                Some(Tok::Op("%")) => ArithOp::Mod,
                _ => break,
            };
            self.pos += 1;
            let right = self.unary()?;
            left = binary(op, left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Op("-")) {
            return Ok(Expr::Negate(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Op("+")) {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("unexpected end of query");
        };
        match tok {
            Tok::Num(n) => {
                self.pos += 1;
                self.literals.push(n);
                Ok(Expr::Value)
            }
            Tok::Str(s) => {
                self.pos += 1;
                self.literals.push(s);
                Ok(Expr::Value)
            }
            Tok::Star => {
                self.pos += 1;
                Ok(Expr::Star { qualifier: None })
            }
            Tok::LParen => {
                self.pos += 1;
                let e = if self.starts_select(0) {
                    Expr::Subquery(Box::new(self.query()?))
                } else {
                    self.expr()?
                };
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Quoted(name) => {
                self.pos += 1;
                self.column_tail(name)
            }
            Tok::Word(w) => {
                if w == "null" {
                    self.pos += 1;
                    return Ok(Expr::Null);
                }
                if self.peek_at(1) == Some(&Tok::LParen) && !is_reserved(&w) {
                    self.pos += 2;
                    return self.call(w);
                }
                if is_reserved(&w) {
                    // a keyword can only start a column name spelled with spaces
                    if let Some(name) = self.repair(&w, self.pos + 1) {
                        return Ok(self.unqualified(name));
                    }
                    return self.error(format!("unexpected keyword {}", w.to_uppercase()));
                }
                self.pos += 1;
                self.column_tail(w)
            }
            _ => self.error("expected expression"),
        }
    }

    /// Parses a call after its opening parenthesis.
    fn call(&mut self, name: String) -> Result<Expr> {
        if let Some(func) = Aggregation::from_name(&name) {
            let distinct = self.eat_kw("distinct");
            let arg = self.expr()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(Expr::Aggregate {
                func,
                distinct,
                arg: Box::new(arg),
            });
        }
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen, "`)`")?;
        }
        Ok(Expr::Function { name, args })
    }

    /// Parses what follows a leading identifier: `.column`, `.*`, or nothing.
    fn column_tail(&mut self, first: String) -> Result<Expr> {
        if self.eat(&Tok::Dot) {
            if self.eat(&Tok::Star) {
                return Ok(Expr::Star {
                    qualifier: Some(first),
                });
            }
            let name = match self.peek() {
                Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => w.clone(),
                _ => return self.error("expected column name after `.`"),
            };
            self.pos += 1;
            let name = self.repair_and_consume(name);
            return Ok(Expr::Column(ColumnRef {
                table_alias_or_name: Some(first),
                column_name: name,
                resolution: None,
            }));
        }
        let name = self.repair_and_consume(first);
        Ok(self.unqualified(name))
    }

    fn unqualified(&self, name: String) -> Expr {
        Expr::Column(ColumnRef {
            table_alias_or_name: None,
            column_name: name,
            resolution: None,
        })
    }

    fn repair_and_consume(&mut self, name: String) -> String {
        match self.repair(&name, self.pos) {
            Some(repaired) => repaired,
            None => name,
        }
    }

    /// Joins `first` with the bare words starting at token `from` into the
    /// longest schema column name, consuming the joined words. Returns None
    /// (consuming nothing) when no join matches a column.
    fn repair(&mut self, first: &str, from: usize) -> Option<String> {
        let mut words = Vec::new();
        while words.len() < MAX_REPAIR_WORDS {
            match self.tokens.get(from + words.len()).map(|t| &t.tok) {
                Some(Tok::Word(w)) if !is_reserved(w) => words.push(w.clone()),
                _ => break,
            }
        }
        for k in (1..=words.len()).rev() {
            let candidate = format!("{first}_{}", words[..k].join("_"));
            if let Some(column) = self.columns.get(&candidate) {
                let column = column.clone();
                self.pos = from + k;
                return Some(column);
            }
        }
        None
    }
}

fn cond(left: Expr, op: CmpOp, right: Operand) -> Predicate {
    Predicate::Cond(Condition { left, op, right })
}

fn binary(op: ArithOp, left: Expr, right: Expr) -> Expr {
    Expr::Binary {
        op,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Top-level `AND` operands of a predicate.
pub(crate) fn conjuncts(p: Predicate) -> Vec<Predicate> {
    match p {
        Predicate::And(parts) => parts.into_iter().flat_map(conjuncts).collect(),
        other => vec![other],
    }
}

pub(crate) fn flatten_or(parts: Vec<Predicate>) -> Vec<Predicate> {
    parts
        .into_iter()
        .flat_map(|p| match p {
            Predicate::Or(inner) => flatten_or(inner),
            other => vec![other],
        })
        .collect()
}
