use super::{Agg, BoolExpr, ColumnRef, CondOp, Condition, SelectItem, SqlQuery, Target};
use crate::datamodel::{ColumnType, Database, Value};
use crate::error::{Error, Result};

/// Columns visible to a query after its `FROM` clause, in join order.
#[derive(Debug, Clone)]
pub struct Scope {
    pub columns: Vec<(ColumnRef, ColumnType)>,
}

impl Scope {
    pub fn build(q: &SqlQuery, db: &Database) -> Result<Scope> {
        let mut columns = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        for name in q.from.tables() {
            if seen.contains(&name) {
                return Err(Error::exec(format!("table {name} appears twice in FROM")));
            }
            seen.push(name);
            let table = db
                .table(name)
                .ok_or_else(|| Error::exec(format!("unknown table {name}")))?;
            for c in &table.columns {
                columns.push((ColumnRef::new(name, &c.name), c.ty));
            }
        }
        Ok(Scope { columns })
    }

    pub fn index(&self, c: &ColumnRef) -> Result<usize> {
        self.columns
            .iter()
            .position(|(r, _)| r == c)
            .ok_or_else(|| Error::exec(format!("unknown column {c}")))
    }

    pub fn ty(&self, c: &ColumnRef) -> Result<ColumnType> {
        Ok(self.columns[self.index(c)?].1)
    }
}

fn value_type(v: &Value) -> Option<ColumnType> {
    match v {
        Value::Null => None,
        Value::Number(_) => Some(ColumnType::Number),
        Value::Text(_) => Some(ColumnType::Text),
    }
}

fn type_name(t: ColumnType) -> &'static str {
    match t {
        ColumnType::Number => "number",
        ColumnType::Text => "text",
    }
}

fn check_literal(what: &str, ty: ColumnType, v: &Value) -> Result<()> {
    match value_type(v) {
        Some(vt) if vt == ty => Ok(()),
        Some(vt) => Err(Error::exec(format!(
            "type mismatch: {what} is {} but literal {v} is {}",
            type_name(ty),
            type_name(vt)
        ))),
        None => Err(Error::exec(format!("NULL literal compared with {what}"))),
    }
}

/// Output type of an aggregate or plain item (not `*`).
fn item_type(scope: &Scope, agg: Option<Agg>, target: &Target) -> Result<ColumnType> {
    match (agg, target) {
        (Some(Agg::Count), Target::Star) => Ok(ColumnType::Number),
        (_, Target::Star) => Err(Error::exec("'*' is only valid in SELECT or COUNT(*)")),
        (None, Target::Column(c)) => scope.ty(c),
        (Some(Agg::Count), Target::Column(c)) => scope.ty(c).map(|_| ColumnType::Number),
        (Some(Agg::Max | Agg::Min), Target::Column(c)) => scope.ty(c),
        (Some(a @ (Agg::Sum | Agg::Avg)), Target::Column(c)) => match scope.ty(c)? {
            ColumnType::Number => Ok(ColumnType::Number),
            ColumnType::Text => Err(Error::exec(format!(
                "{}({c}) applied to text column",
                a.keyword()
            ))),
        },
    }
}

fn check_condition(scope: &Scope, cond: &Condition, db: &Database) -> Result<()> {
    match cond {
        Condition::Compare { column, op, value } => {
            if !CondOp::COMPARISONS.contains(op) {
                return Err(Error::exec(format!("{} is not a comparison", op.symbol())));
            }
            check_literal(&column.to_string(), scope.ty(column)?, value)
        }
        Condition::Between {
            column, low, high, ..
        } => {
            let ty = scope.ty(column)?;
            check_literal(&column.to_string(), ty, low)?;
            check_literal(&column.to_string(), ty, high)
        }
        Condition::InList { column, values, .. } => {
            let ty = scope.ty(column)?;
            if values.is_empty() {
                return Err(Error::exec("IN list is empty"));
            }
            values
                .iter()
                .try_for_each(|v| check_literal(&column.to_string(), ty, v))
        }
        Condition::InQuery { column, query, .. } => {
            let ty = scope.ty(column)?;
            let out = check_query(query, db)?;
            if out.len() != 1 {
                return Err(Error::exec(format!(
                    "IN subquery must return one column, got {}",
                    out.len()
                )));
            }
            if out[0] != ty {
                return Err(Error::exec(format!(
                    "type mismatch: {column} is {} but IN subquery returns {}",
                    type_name(ty),
                    type_name(out[0])
                )));
            }
            Ok(())
        }
        Condition::Like { column, .. } => match scope.ty(column)? {
            ColumnType::Text => Ok(()),
            ColumnType::Number => Err(Error::exec(format!(
                "LIKE applied to number column {column}"
            ))),
        },
        Condition::IsNull { column, .. } => scope.ty(column).map(|_| ()),
        Condition::Exists { query } => check_query(query, db).map(|_| ()),
    }
}

fn check_bool(scope: &Scope, e: &BoolExpr, db: &Database) -> Result<()> {
    match e {
        BoolExpr::Cond(c) => check_condition(scope, c, db),
        BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
            check_bool(scope, a, db)?;
            check_bool(scope, b, db)
        }
    }
}

fn select_types(scope: &Scope, items: &[SelectItem]) -> Result<Vec<ColumnType>> {
    let mut out = Vec::new();
    for s in items {
        match (s.agg, &s.target) {
            (None, Target::Star) => out.extend(scope.columns.iter().map(|(_, t)| *t)),
            (agg, target) => out.push(item_type(scope, agg, target)?),
        }
    }
    Ok(out)
}

/// Resolves every reference of `q` against `db` and type-checks literals,
/// aggregates and set-operation arity. Returns the output column types.
pub fn check_query(q: &SqlQuery, db: &Database) -> Result<Vec<ColumnType>> {
    if q.select.is_empty() {
        return Err(Error::exec("empty select list"));
    }
    let scope = Scope::build(q, db)?;
    for (i, j) in q.from.joins.iter().enumerate() {
        let visible: Vec<&str> = q.from.tables().take(i + 2).collect();
        for c in [&j.left, &j.right] {
            if !visible.contains(&c.table.as_str()) {
                return Err(Error::exec(format!(
                    "join condition references {c} before its table"
                )));
            }
        }
        let (lt, rt) = (scope.ty(&j.left)?, scope.ty(&j.right)?);
        if lt != rt {
            return Err(Error::exec(format!(
                "type mismatch in join: {} is {} but {} is {}",
                j.left,
                type_name(lt),
                j.right,
                type_name(rt)
            )));
        }
    }
    if let Some(w) = &q.where_clause {
        check_bool(&scope, w, db)?;
    }
    for g in &q.group_by {
        scope.ty(g)?;
    }
    if let Some(h) = &q.having {
        let ty = item_type(&scope, Some(h.agg), &h.target)?;
        if !CondOp::COMPARISONS.contains(&h.op) {
            return Err(Error::exec(format!(
                "HAVING operator {} is not a comparison",
                h.op.symbol()
            )));
        }
        check_literal(&format!("{}({})", h.agg.keyword(), h.target), ty, &h.value)?;
    }
    if let Some(o) = &q.order_by {
        item_type(&scope, o.key.agg, &o.key.target)?;
    }
    let types = select_types(&scope, &q.select)?;
    if let Some((op, rhs)) = &q.set_op {
        let rt = check_query(rhs, db)?;
        if rt != types {
            return Err(Error::exec(format!(
                "{} operands have incompatible columns ({} vs {})",
                op.keyword(),
                types.len(),
                rt.len()
            )));
        }
    }
    Ok(types)
}
