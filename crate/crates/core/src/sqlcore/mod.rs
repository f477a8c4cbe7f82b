//! SQL-subset logical forms over a [`Database`](crate::datamodel::Database).
//!
//! The subset covers single-level `SELECT` with aggregates, equi-joins, a
//! boolean `WHERE` tree, `GROUP BY` with an aggregate `HAVING`, `ORDER BY`
//! with `LIMIT`, `IN`/`EXISTS` subqueries and one chain of set operations.
//! Column references are always qualified (`table.column`).

mod check;
mod decompose;
mod exec;
mod like;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::datamodel::CondOp;
use crate::datamodel::Value;

pub use check::{check_query, Scope};
pub use decompose::decompose_sql;
pub use exec::{execute_sql, ResultSet};
pub use like::like_matches;
pub use parse::parse_sql;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Agg {
    Avg,
    Count,
    Max,
    Min,
    Sum,
}

impl Agg {
    pub const ALL: [Agg; 5] = [Agg::Avg, Agg::Count, Agg::Max, Agg::Min, Agg::Sum];

    pub fn keyword(self) -> &'static str {
        match self {
            Agg::Avg => "AVG",
            Agg::Count => "COUNT",
            Agg::Max => "MAX",
            Agg::Min => "MIN",
            Agg::Sum => "SUM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: &str, column: &str) -> Self {
        ColumnRef {
            table: table.to_string(),
            column: column.to_string(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Target {
    Star,
    Column(ColumnRef),
}

/// A select item, order key or aggregate argument: `t.c`, `*`, `AGG(t.c)`, `COUNT(*)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SelectItem {
    pub agg: Option<Agg>,
    pub target: Target,
}

impl SelectItem {
    pub fn column(table: &str, column: &str) -> Self {
        SelectItem {
            agg: None,
            target: Target::Column(ColumnRef::new(table, column)),
        }
    }

    pub fn agg(agg: Agg, table: &str, column: &str) -> Self {
        SelectItem {
            agg: Some(agg),
            target: Target::Column(ColumnRef::new(table, column)),
        }
    }

    pub fn count_star() -> Self {
        SelectItem {
            agg: Some(Agg::Count),
            target: Target::Star,
        }
    }

    pub fn star() -> Self {
        SelectItem {
            agg: None,
            target: Target::Star,
        }
    }

    pub fn column_ref(&self) -> Option<&ColumnRef> {
        match &self.target {
            Target::Column(c) => Some(c),
            Target::Star => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JoinClause {
    pub table: String,
    pub left: ColumnRef,
    pub right: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FromClause {
    pub table: String,
    pub joins: Vec<JoinClause>,
}

impl FromClause {
    pub fn table(name: &str) -> Self {
        FromClause {
            table: name.to_string(),
            joins: Vec::new(),
        }
    }

    pub fn tables(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.table.as_str()).chain(self.joins.iter().map(|j| j.table.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// `col op literal` with op one of `= != > < >= <=`.
    Compare {
        column: ColumnRef,
        op: CondOp,
        value: Value,
    },
    Between {
        column: ColumnRef,
        negated: bool,
        low: Value,
        high: Value,
    },
    InList {
        column: ColumnRef,
        negated: bool,
        values: Vec<Value>,
    },
    InQuery {
        column: ColumnRef,
        negated: bool,
        query: Box<SqlQuery>,
    },
    Like {
        column: ColumnRef,
        negated: bool,
        pattern: String,
    },
    IsNull {
        column: ColumnRef,
        negated: bool,
    },
    Exists {
        query: Box<SqlQuery>,
    },
}

impl Condition {
    pub fn compare(table: &str, column: &str, op: CondOp, value: Value) -> Self {
        Condition::Compare {
            column: ColumnRef::new(table, column),
            op,
            value,
        }
    }

    pub fn column(&self) -> Option<&ColumnRef> {
        match self {
            Condition::Compare { column, .. }
            | Condition::Between { column, .. }
            | Condition::InList { column, .. }
            | Condition::InQuery { column, .. }
            | Condition::Like { column, .. }
            | Condition::IsNull { column, .. } => Some(column),
            Condition::Exists { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoolExpr {
    Cond(Condition),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    /// Left-deep conjunction of the given conditions; `None` when empty.
    pub fn conjunction(conds: Vec<Condition>) -> Option<BoolExpr> {
        let mut it = conds.into_iter();
        let first = BoolExpr::Cond(it.next()?);
        Some(it.fold(first, |acc, c| {
            BoolExpr::And(Box::new(acc), Box::new(BoolExpr::Cond(c)))
        }))
    }

    pub fn conditions(&self) -> Vec<&Condition> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a BoolExpr, out: &mut Vec<&'a Condition>) {
            match e {
                BoolExpr::Cond(c) => out.push(c),
                BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }
}

/// `HAVING AGG(target) op literal`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Having {
    pub agg: Agg,
    pub target: Target,
    pub op: CondOp,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrderBy {
    pub key: SelectItem,
    pub descending: bool,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SetOp {
    Union,
    Intersect,
    Except,
}

impl SetOp {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOp::Union => "UNION",
            SetOp::Intersect => "INTERSECT",
            SetOp::Except => "EXCEPT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SqlQuery {
    pub select: Vec<SelectItem>,
    pub from: FromClause,
    pub where_clause: Option<BoolExpr>,
    pub group_by: Vec<ColumnRef>,
    pub having: Option<Having>,
    pub order_by: Option<OrderBy>,
    pub set_op: Option<(SetOp, Box<SqlQuery>)>,
}

impl SqlQuery {
    pub fn simple(select: Vec<SelectItem>, table: &str) -> Self {
        SqlQuery {
            select,
            from: FromClause::table(table),
            where_clause: None,
            group_by: Vec::new(),
            having: None,
            order_by: None,
            set_op: None,
        }
    }

    /// True when the query (ignoring any set-op tail) aggregates rows.
    pub fn is_aggregate(&self) -> bool {
        !self.group_by.is_empty()
            || self.having.is_some()
            || self.select.iter().any(|s| s.agg.is_some())
            || self.order_by.as_ref().is_some_and(|o| o.key.agg.is_some())
    }
}

/// Canonical rendering: uppercase keywords, single spaces, fixed clause order.
pub fn print_sql(q: &SqlQuery) -> String {
    q.to_string()
}

pub(crate) fn write_value(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Null => f.write_str("NULL"),
        Value::Number(n) => f.write_str(&crate::text::format_number(*n)),
        Value::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
    }
}

struct Lit<'a>(&'a Value);

impl fmt::Display for Lit<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_value(f, self.0)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Star => f.write_str("*"),
            Target::Column(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.agg {
            Some(a) => write!(f, "{}({})", a.keyword(), self.target),
            None => write!(f, "{}", self.target),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let not = |n: &bool| if *n { "NOT " } else { "" };
        match self {
            Condition::Compare { column, op, value } => {
                write!(f, "{column} {} {}", op.symbol(), Lit(value))
            }
            Condition::Between {
                column,
                negated,
                low,
                high,
            } => write!(
                f,
                "{column} {}BETWEEN {} AND {}",
                not(negated),
                Lit(low),
                Lit(high)
            ),
            Condition::InList {
                column,
                negated,
                values,
            } => {
                write!(f, "{column} {}IN (", not(negated))?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_value(f, v)?;
                }
                f.write_str(")")
            }
            Condition::InQuery {
                column,
                negated,
                query,
            } => write!(f, "{column} {}IN ({query})", not(negated)),
            Condition::Like {
                column,
                negated,
                pattern,
            } => write!(
                f,
                "{column} {}LIKE {}",
                not(negated),
                Lit(&Value::Text(pattern.clone()))
            ),
            Condition::IsNull { column, negated } => {
                write!(f, "{column} IS {}NULL", not(negated))
            }
            Condition::Exists { query } => write!(f, "EXISTS ({query})"),
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Cond(c) => write!(f, "{c}"),
            BoolExpr::Or(a, b) => {
                write!(f, "{a} OR ")?;
                match b.as_ref() {
                    BoolExpr::Or(..) => write!(f, "({b})"),
                    _ => write!(f, "{b}"),
                }
            }
            BoolExpr::And(a, b) => {
                match a.as_ref() {
                    BoolExpr::Or(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                f.write_str(" AND ")?;
                match b.as_ref() {
                    BoolExpr::Cond(_) => write!(f, "{b}"),
                    _ => write!(f, "({b})"),
                }
            }
        }
    }
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, s) in self.select.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, " FROM {}", self.from.table)?;
        for j in &self.from.joins {
            write!(f, " JOIN {} ON {} = {}", j.table, j.left, j.right)?;
        }
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            for (i, c) in self.group_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
        }
        if let Some(h) = &self.having {
            write!(
                f,
                " HAVING {}({}) {} {}",
                h.agg.keyword(),
                h.target,
                h.op.symbol(),
                Lit(&h.value)
            )?;
        }
        if let Some(o) = &self.order_by {
            write!(
                f,
                " ORDER BY {} {}",
                o.key,
                if o.descending { "DESC" } else { "ASC" }
            )?;
            if let Some(n) = o.limit {
                write!(f, " LIMIT {n}")?;
            }
        }
        if let Some((op, rhs)) = &self.set_op {
            write!(f, " {} {rhs}", op.keyword())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn print_count_where() {
        let mut q = SqlQuery::simple(vec![SelectItem::count_star()], "head");
        q.where_clause = BoolExpr::conjunction(vec![Condition::compare(
            "head",
            "age",
            CondOp::Gt,
            Value::Number(56.0),
        )]);
        assert_eq!(
            print_sql(&q),
            "SELECT COUNT(*) FROM head WHERE head.age > 56"
        );
    }

    #[test]
    fn print_clause_order() {
        let mut q = SqlQuery::simple(vec![SelectItem::column("head", "name")], "head");
        q.order_by = Some(OrderBy {
            key: SelectItem::column("head", "age"),
            descending: true,
            limit: Some(1),
        });
        q.group_by = vec![ColumnRef::new("head", "name")];
        q.where_clause = BoolExpr::conjunction(vec![Condition::compare(
            "head",
            "name",
            CondOp::Eq,
            Value::Text("O'Neil".into()),
        )]);
        assert_eq!(
            print_sql(&q),
            "SELECT head.name FROM head WHERE head.name = 'O''Neil' GROUP BY head.name ORDER BY head.age DESC LIMIT 1"
        );
    }
}
