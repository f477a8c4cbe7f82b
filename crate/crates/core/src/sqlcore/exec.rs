use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::check::{check_query, Scope};
use super::like::like_matches;
use super::{Agg, BoolExpr, CondOp, Condition, SelectItem, SetOp, SqlQuery, Target};
use crate::datamodel::{Database, Value};
use crate::error::Result;

/// Rows produced by a query together with their column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultSet {
    /// No rows, only null cells, or a single aggregate cell equal to zero.
    pub fn is_empty(&self) -> bool {
        if self.rows.iter().all(|r| r.iter().all(Value::is_null)) {
            return true;
        }
        self.rows.len() == 1
            && self.rows[0].len() == 1
            && self.columns[0].starts_with("COUNT(")
            && self.rows[0][0] == Value::Number(0.0)
    }

    /// Non-null cell values rendered as strings, sorted and deduplicated.
    pub fn answers(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .rows
            .iter()
            .flatten()
            .filter(|v| !v.is_null())
            .map(|v| v.to_string())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Three-way comparison of two non-null values of the same type.
pub(crate) fn compare_values(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y),
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

pub(crate) fn op_holds(op: CondOp, cell: &Value, lit: &Value) -> bool {
    let Some(ord) = compare_values(cell, lit) else {
        return false;
    };
    match op {
        CondOp::Eq => ord == Ordering::Equal,
        CondOp::Ne => ord != Ordering::Equal,
        CondOp::Gt => ord == Ordering::Greater,
        CondOp::Lt => ord == Ordering::Less,
        CondOp::Ge => ord != Ordering::Less,
        CondOp::Le => ord != Ordering::Greater,
        _ => false,
    }
}

/// Ordering used by `ORDER BY`: nulls greater than every value.
pub(crate) fn order_values(a: &Value, b: &Value) -> Ordering {
    match (a.is_null(), b.is_null()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => compare_values(a, b).unwrap_or(Ordering::Equal),
    }
}

pub(crate) fn aggregate<'a>(agg: Agg, values: impl Iterator<Item = &'a Value>) -> Value {
    let present: Vec<&Value> = values.filter(|v| !v.is_null()).collect();
    match agg {
        Agg::Count => Value::Number(present.len() as f64),
        Agg::Sum | Agg::Avg => {
            if present.is_empty() {
                return Value::Null;
            }
            let sum: f64 = present.iter().filter_map(|v| v.as_number()).sum();
            if agg == Agg::Sum {
                Value::Number(sum)
            } else {
                Value::Number(sum / present.len() as f64)
            }
        }
        Agg::Max | Agg::Min => {
            let want = if agg == Agg::Max {
                Ordering::Greater
            } else {
                Ordering::Less
            };
            let mut best: Option<&Value> = None;
            for v in present {
                if best.is_none_or(|b| compare_values(v, b) == Some(want)) {
                    best = Some(v);
                }
            }
            best.cloned().unwrap_or(Value::Null)
        }
    }
}

/// Combines two result row lists with set semantics, keeping first-seen order.
pub(crate) fn combine(op: SetOp, left: Vec<Vec<Value>>, right: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    let mut seen = HashSet::new();
    let left: Vec<Vec<Value>> = left
        .into_iter()
        .filter(|r| seen.insert(r.clone()))
        .collect();
    let right_set: HashSet<Vec<Value>> = right.iter().cloned().collect();
    match op {
        SetOp::Union => {
            let mut out = left;
            for r in right {
                if seen.insert(r.clone()) {
                    out.push(r);
                }
            }
            out
        }
        SetOp::Intersect => left.into_iter().filter(|r| right_set.contains(r)).collect(),
        SetOp::Except => left
            .into_iter()
            .filter(|r| !right_set.contains(r))
            .collect(),
    }
}

pub(crate) fn output_labels(q: &SqlQuery, scope: &Scope) -> Vec<String> {
    let mut out = Vec::new();
    for s in &q.select {
        match (s.agg, &s.target) {
            (None, Target::Star) => out.extend(scope.columns.iter().map(|(c, _)| c.to_string())),
            _ => out.push(s.to_string()),
        }
    }
    out
}

enum Sub {
    Values(HashSet<Value>),
    NonEmpty(bool),
}

type SubCache = HashMap<usize, Sub>;

fn key(q: &SqlQuery) -> usize {
    q as *const SqlQuery as usize
}

fn prepare(e: &BoolExpr, db: &Database, cache: &mut SubCache) -> Result<()> {
    match e {
        BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
            prepare(a, db, cache)?;
            prepare(b, db, cache)
        }
        BoolExpr::Cond(Condition::InQuery { query, .. }) => {
            let rs = run(query, db)?;
            let values = rs.rows.into_iter().filter_map(|mut r| {
                let v = r.swap_remove(0);
                (!v.is_null()).then_some(v)
            });
            cache.insert(key(query), Sub::Values(values.collect()));
            Ok(())
        }
        BoolExpr::Cond(Condition::Exists { query }) => {
            let rs = run(query, db)?;
            cache.insert(key(query), Sub::NonEmpty(!rs.rows.is_empty()));
            Ok(())
        }
        BoolExpr::Cond(_) => Ok(()),
    }
}

fn holds(e: &BoolExpr, row: &[Value], scope: &Scope, cache: &SubCache) -> Result<bool> {
    Ok(match e {
        BoolExpr::And(a, b) => holds(a, row, scope, cache)? && holds(b, row, scope, cache)?,
        BoolExpr::Or(a, b) => holds(a, row, scope, cache)? || holds(b, row, scope, cache)?,
        BoolExpr::Cond(c) => {
            let cell = match c.column() {
                Some(col) => &row[scope.index(col)?],
                None => &Value::Null,
            };
            match c {
                Condition::Compare { op, value, .. } => op_holds(*op, cell, value),
                Condition::Between {
                    negated, low, high, ..
                } => {
                    !cell.is_null()
                        && (op_holds(CondOp::Ge, cell, low) && op_holds(CondOp::Le, cell, high))
                            != *negated
                }
                Condition::InList {
                    negated, values, ..
                } => {
                    !cell.is_null()
                        && values.iter().any(|v| op_holds(CondOp::Eq, cell, v)) != *negated
                }
                Condition::InQuery { negated, query, .. } => match cache.get(&key(query)) {
                    Some(Sub::Values(set)) => !cell.is_null() && set.contains(cell) != *negated,
                    _ => false,
                },
                Condition::Like {
                    negated, pattern, ..
                } => match cell {
                    Value::Text(t) => like_matches(t, pattern) != *negated,
                    _ => false,
                },
                Condition::IsNull { negated, .. } => cell.is_null() != *negated,
                Condition::Exists { query } => {
                    matches!(cache.get(&key(query)), Some(Sub::NonEmpty(true)))
                }
            }
        }
    })
}

fn item_value(item: &SelectItem, rows: &[&Vec<Value>], scope: &Scope) -> Result<Vec<Value>> {
    Ok(match (item.agg, &item.target) {
        (None, Target::Star) => match rows.first() {
            Some(r) => r.to_vec(),
            None => vec![Value::Null; scope.columns.len()],
        },
        (None, Target::Column(c)) => {
            let i = scope.index(c)?;
            vec![rows.first().map_or(Value::Null, |r| r[i].clone())]
        }
        (Some(Agg::Count), Target::Star) => vec![Value::Number(rows.len() as f64)],
        (Some(a), Target::Column(c)) => {
            let i = scope.index(c)?;
            vec![aggregate(a, rows.iter().map(|r| &r[i]))]
        }
        (Some(_), Target::Star) => vec![Value::Null],
    })
}

fn run(q: &SqlQuery, db: &Database) -> Result<ResultSet> {
    let scope = Scope::build(q, db)?;
    let base = db.table(&q.from.table).expect("checked");
    let mut rows: Vec<Vec<Value>> = base.rows.clone();
    let mut width = base.columns.len();
    for j in &q.from.joins {
        let t = db.table(&j.table).expect("checked");
        let li = scope.index(&j.left)?;
        let ri = scope.index(&j.right)?;
        let mut next = Vec::new();
        for r in &rows {
            for tr in &t.rows {
                let cell = |i: usize| if i < width { &r[i] } else { &tr[i - width] };
                if op_holds(CondOp::Eq, cell(li), cell(ri)) {
                    let mut joined = r.clone();
                    joined.extend(tr.iter().cloned());
                    next.push(joined);
                }
            }
        }
        rows = next;
        width += t.columns.len();
    }
    if let Some(w) = &q.where_clause {
        let mut cache = SubCache::new();
        prepare(w, db, &mut cache)?;
        let mut kept = Vec::new();
        for r in rows {
            if holds(w, &r, &scope, &cache)? {
                kept.push(r);
            }
        }
        rows = kept;
    }

    // (output row, order key)
    let mut out: Vec<(Vec<Value>, Value)> = Vec::new();
    if q.is_aggregate() {
        let mut groups: Vec<Vec<&Vec<Value>>> = Vec::new();
        if q.group_by.is_empty() {
            groups.push(rows.iter().collect());
        } else {
            let idx: Vec<usize> = q
                .group_by
                .iter()
                .map(|g| scope.index(g))
                .collect::<Result<_>>()?;
            let mut pos: HashMap<Vec<Value>, usize> = HashMap::new();
            for r in &rows {
                let k: Vec<Value> = idx.iter().map(|&i| r[i].clone()).collect();
                let n = groups.len();
                let g = *pos.entry(k).or_insert(n);
                if g == n {
                    groups.push(Vec::new());
                }
                groups[g].push(r);
            }
        }
        for g in groups {
            if let Some(h) = &q.having {
                let item = SelectItem {
                    agg: Some(h.agg),
                    target: h.target.clone(),
                };
                let v = item_value(&item, &g, &scope)?.remove(0);
                if !op_holds(h.op, &v, &h.value) {
                    continue;
                }
            }
            let mut row = Vec::new();
            for s in &q.select {
                row.extend(item_value(s, &g, &scope)?);
            }
            let k = match &q.order_by {
                Some(o) => item_value(&o.key, &g, &scope)?.remove(0),
                None => Value::Null,
            };
            out.push((row, k));
        }
    } else {
        for r in &rows {
            let one = [r];
            let mut row = Vec::new();
            for s in &q.select {
                row.extend(item_value(s, &one, &scope)?);
            }
            let k = match &q.order_by {
                Some(o) => item_value(&o.key, &one, &scope)?.remove(0),
                None => Value::Null,
            };
            out.push((row, k));
        }
    }
    if let Some(o) = &q.order_by {
        if o.descending {
            out.sort_by(|a, b| order_values(&b.1, &a.1));
        } else {
            out.sort_by(|a, b| order_values(&a.1, &b.1));
        }
        if let Some(n) = o.limit {
            out.truncate(n as usize);
        }
    }
    let mut result_rows: Vec<Vec<Value>> = out.into_iter().map(|(r, _)| r).collect();
    if let Some((op, rhs)) = &q.set_op {
        let right = run(rhs, db)?;
        result_rows = combine(*op, result_rows, right.rows);
    }
    Ok(ResultSet {
        columns: output_labels(q, &scope),
        rows: result_rows,
    })
}

/// Executes `q` against `db` after resolving and type-checking it.
pub fn execute_sql(q: &SqlQuery, db: &Database) -> Result<ResultSet> {
    check_query(q, db)?;
    run(q, db)
}

#[cfg(test)]
mod tests {
    use super::super::parse_sql;
    use super::*;
    use crate::datamodel::{Column, ColumnType, Table};

    fn db() -> Database {
        let n = |x: f64| Value::Number(x);
        let t = |s: &str| Value::Text(s.into());
        Database::new(vec![
            Table {
                name: "head".into(),
                columns: vec![
                    Column::new("name", ColumnType::Text),
                    Column::new("age", ColumnType::Number),
                    Column::new("dept", ColumnType::Number),
                ],
                rows: vec![
                    vec![t("Kyle"), n(52.0), n(1.0)],
                    vec![t("Ann"), n(61.0), n(2.0)],
                    vec![t("Bo"), n(70.0), n(1.0)],
                    vec![t("Cy"), Value::Null, Value::Null],
                ],
            },
            Table {
                name: "dept".into(),
                columns: vec![
                    Column::new("id", ColumnType::Number),
                    Column::new("title", ColumnType::Text),
                ],
                rows: vec![vec![n(1.0), t("Sales")], vec![n(2.0), t("Ops")]],
            },
            Table {
                name: "empty".into(),
                columns: vec![Column::new("x", ColumnType::Number)],
                rows: vec![],
            },
        ])
        .unwrap()
    }

    fn rows(sql: &str) -> Vec<Vec<String>> {
        let rs = execute_sql(&parse_sql(sql).unwrap(), &db()).unwrap();
        rs.rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect()
    }

    fn err(sql: &str) -> String {
        execute_sql(&parse_sql(sql).unwrap(), &db())
            .unwrap_err()
            .to_string()
    }

    #[test]
    fn count_older_than() {
        assert_eq!(
            rows("SELECT COUNT(*) FROM head WHERE head.age > 56"),
            [["2"]]
        );
    }

    #[test]
    fn star_on_empty_table() {
        assert!(rows("SELECT * FROM empty").is_empty());
        assert_eq!(rows("SELECT COUNT(*) FROM empty"), [["0"]]);
        assert_eq!(rows("SELECT MAX(empty.x) FROM empty"), [["NULL"]]);
    }

    #[test]
    fn aggregates_skip_nulls() {
        assert_eq!(rows("SELECT COUNT(head.age) FROM head"), [["3"]]);
        assert_eq!(rows("SELECT AVG(head.age) FROM head"), [["61"]]);
        assert_eq!(rows("SELECT MIN(head.name) FROM head"), [["Ann"]]);
    }

    #[test]
    fn join_group_order() {
        assert_eq!(
            rows("SELECT dept.title, COUNT(*) FROM head JOIN dept ON head.dept = dept.id GROUP BY dept.title ORDER BY COUNT(*) DESC"),
            [["Sales", "2"], ["Ops", "1"]]
        );
        assert_eq!(
            rows("SELECT head.name FROM head ORDER BY head.age DESC LIMIT 2"),
            [["Cy"], ["Bo"]]
        );
        assert_eq!(
            rows("SELECT head.name FROM head ORDER BY head.age ASC"),
            [["Kyle"], ["Ann"], ["Bo"], ["Cy"]]
        );
        assert_eq!(
            rows("SELECT head.dept FROM head GROUP BY head.dept HAVING COUNT(*) > 1"),
            [["1"]]
        );
    }

    #[test]
    fn conditions() {
        assert_eq!(
            rows("SELECT head.name FROM head WHERE head.name LIKE 'k%'"),
            [["Kyle"]]
        );
        assert_eq!(
            rows("SELECT head.name FROM head WHERE head.age IS NULL"),
            [["Cy"]]
        );
        assert_eq!(
            rows("SELECT head.name FROM head WHERE head.age NOT BETWEEN 55 AND 65"),
            [["Kyle"], ["Bo"]]
        );
        assert_eq!(
            rows("SELECT head.name FROM head WHERE head.dept IN (SELECT dept.id FROM dept WHERE dept.title = 'Ops')"),
            [["Ann"]]
        );
        assert_eq!(
            rows("SELECT head.name FROM head WHERE head.dept NOT IN (2) AND EXISTS (SELECT dept.id FROM dept)"),
            [["Kyle"], ["Bo"]]
        );
        assert_eq!(
            rows(
                "SELECT head.name FROM head WHERE head.age = 52 OR head.age = 70 AND head.dept = 2"
            ),
            [["Kyle"]]
        );
    }

    #[test]
    fn set_operations() {
        assert_eq!(
            rows("SELECT head.dept FROM head UNION SELECT dept.id FROM dept"),
            [["1"], ["2"], ["NULL"]]
        );
        assert_eq!(
            rows("SELECT head.dept FROM head INTERSECT SELECT dept.id FROM dept WHERE dept.id = 2"),
            [["2"]]
        );
        assert!(rows("SELECT head.dept FROM head EXCEPT SELECT head.dept FROM head").is_empty());
    }

    #[test]
    fn static_errors() {
        assert!(err("SELECT nope.a FROM nope").contains("unknown table"));
        assert!(err("SELECT head.nope FROM head").contains("unknown column"));
        assert!(err("SELECT head.name FROM head WHERE head.name > 3").contains("type mismatch"));
        assert!(err("SELECT SUM(head.name) FROM head").contains("text"));
        assert!(err("SELECT head.name FROM head WHERE head.age LIKE 'x'").contains("LIKE"));
        assert!(
            err("SELECT head.name FROM head UNION SELECT head.age FROM head").contains("UNION")
        );
        assert!(
            err("SELECT head.name FROM head JOIN head ON head.age = head.age").contains("twice")
        );
    }

    #[test]
    fn emptiness() {
        let rs = |s: &str| execute_sql(&parse_sql(s).unwrap(), &db()).unwrap();
        assert!(rs("SELECT COUNT(*) FROM head WHERE head.age > 100").is_empty());
        assert!(rs("SELECT MAX(head.age) FROM head WHERE head.age > 100").is_empty());
        assert!(!rs("SELECT COUNT(*) FROM head").is_empty());
    }
}
