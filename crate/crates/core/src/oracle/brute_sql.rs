use std::cmp::Ordering;
use std::collections::HashMap;

use crate::datamodel::{Database, Value};
use crate::error::{Error, Result};
use crate::sqlcore::{
    check_query, Agg, BoolExpr, CondOp, Condition, ResultSet, SelectItem, SetOp, SqlQuery, Target,
};

/// Same result as [`execute_sql`](crate::sqlcore::execute_sql), computed over
/// the full cross product of the `FROM` tables with join conditions applied
/// as filters. Reference resolution and typing use the shared checker.
pub fn brute_execute_sql(q: &SqlQuery, db: &Database) -> Result<ResultSet> {
    check_query(q, db)?;
    let mut memo = HashMap::new();
    eval(q, db, &mut memo)
}

type Memo = HashMap<String, Vec<Vec<Value>>>;

fn cmp_vals(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y),
        (Value::Text(x), Value::Text(y)) => Some(x.as_str().cmp(y.as_str())),
        _ => None,
    }
}

fn same(a: &Value, b: &Value) -> bool {
    (a.is_null() && b.is_null()) || cmp_vals(a, b) == Some(Ordering::Equal)
}

fn same_row(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(x, y))
}

fn test(op: CondOp, a: &Value, b: &Value) -> bool {
    match (op, cmp_vals(a, b)) {
        (_, None) => false,
        (CondOp::Eq, Some(o)) => o == Ordering::Equal,
        (CondOp::Ne, Some(o)) => o != Ordering::Equal,
        (CondOp::Gt, Some(o)) => o == Ordering::Greater,
        (CondOp::Lt, Some(o)) => o == Ordering::Less,
        (CondOp::Ge, Some(o)) => o == Ordering::Greater || o == Ordering::Equal,
        (CondOp::Le, Some(o)) => o == Ordering::Less || o == Ordering::Equal,
        _ => false,
    }
}

fn like(t: &[char], p: &[char]) -> bool {
    match p.split_first() {
        None => t.is_empty(),
        Some(('%', rest)) => (0..=t.len()).any(|i| like(&t[i..], rest)),
        Some(('_', rest)) => !t.is_empty() && like(&t[1..], rest),
        Some((c, rest)) => t.first() == Some(c) && like(&t[1..], rest),
    }
}

fn lower(s: &str) -> Vec<char> {
    s.to_lowercase().chars().collect()
}

struct Rel {
    labels: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Rel {
    fn col(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::exec(format!("unknown column {label}")))
    }
}

fn subquery_rows(q: &SqlQuery, db: &Database, memo: &mut Memo) -> Result<Vec<Vec<Value>>> {
    let k = q.to_string();
    if let Some(r) = memo.get(&k) {
        return Ok(r.clone());
    }
    let rows = eval(q, db, memo)?.rows;
    memo.insert(k, rows.clone());
    Ok(rows)
}

fn truth(e: &BoolExpr, rel: &Rel, row: &[Value], db: &Database, memo: &mut Memo) -> Result<bool> {
    let c = match e {
        BoolExpr::And(a, b) => {
            let x = truth(a, rel, row, db, memo)?;
            let y = truth(b, rel, row, db, memo)?;
            return Ok(x && y);
        }
        BoolExpr::Or(a, b) => {
            let x = truth(a, rel, row, db, memo)?;
            let y = truth(b, rel, row, db, memo)?;
            return Ok(x || y);
        }
        BoolExpr::Cond(c) => c,
    };
    let cell = match c.column() {
        Some(col) => row[rel.col(&col.to_string())?].clone(),
        None => Value::Null,
    };
    Ok(match c {
        Condition::Compare { op, value, .. } => test(*op, &cell, value),
        Condition::Between {
            negated, low, high, ..
        } => {
            if cell.is_null() {
                false
            } else {
                let inside = test(CondOp::Ge, &cell, low) && test(CondOp::Le, &cell, high);
                inside ^ negated
            }
        }
        Condition::InList {
            negated, values, ..
        } => {
            if cell.is_null() {
                false
            } else {
                let found = values.iter().any(|v| test(CondOp::Eq, &cell, v));
                found ^ negated
            }
        }
        Condition::InQuery { negated, query, .. } => {
            let rows = subquery_rows(query, db, memo)?;
            if cell.is_null() {
                false
            } else {
                let found = rows.iter().any(|r| test(CondOp::Eq, &cell, &r[0]));
                found ^ negated
            }
        }
        Condition::Like {
            negated, pattern, ..
        } => match &cell {
            Value::Text(t) => like(&lower(t), &lower(pattern)) ^ negated,
            _ => false,
        },
        Condition::IsNull { negated, .. } => cell.is_null() ^ negated,
        Condition::Exists { query } => !subquery_rows(query, db, memo)?.is_empty(),
    })
}

fn agg_of(agg: Agg, vals: Vec<Value>) -> Value {
    let vals: Vec<Value> = vals.into_iter().filter(|v| !v.is_null()).collect();
    match agg {
        Agg::Count => Value::Number(vals.len() as f64),
        _ if vals.is_empty() => Value::Null,
        Agg::Sum | Agg::Avg => {
            let mut total = 0.0;
            for v in &vals {
                if let Value::Number(n) = v {
                    total += n;
                }
            }
            if agg == Agg::Avg {
                Value::Number(total / vals.len() as f64)
            } else {
                Value::Number(total)
            }
        }
        Agg::Max | Agg::Min => {
            let mut best = vals[0].clone();
            for v in &vals[1..] {
                let o = cmp_vals(v, &best);
                if (agg == Agg::Max && o == Some(Ordering::Greater))
                    || (agg == Agg::Min && o == Some(Ordering::Less))
                {
                    best = v.clone();
                }
            }
            best
        }
    }
}

/// Value of one item over a group of rows (a single row for plain queries).
fn item_over(item: &SelectItem, rel: &Rel, group: &[&Vec<Value>]) -> Result<Vec<Value>> {
    match (item.agg, &item.target) {
        (None, Target::Star) => Ok(match group.first() {
            Some(r) => (*r).clone(),
            None => rel.labels.iter().map(|_| Value::Null).collect(),
        }),
        (None, Target::Column(c)) => {
            let i = rel.col(&c.to_string())?;
            Ok(vec![group
                .first()
                .map(|r| r[i].clone())
                .unwrap_or(Value::Null)])
        }
        (Some(Agg::Count), Target::Star) => Ok(vec![Value::Number(group.len() as f64)]),
        (Some(a), Target::Column(c)) => {
            let i = rel.col(&c.to_string())?;
            Ok(vec![agg_of(
                a,
                group.iter().map(|r| r[i].clone()).collect(),
            )])
        }
        (Some(_), Target::Star) => Err(Error::exec("aggregate over *")),
    }
}

fn eval(q: &SqlQuery, db: &Database, memo: &mut Memo) -> Result<ResultSet> {
    let mut rel = Rel {
        labels: Vec::new(),
        rows: vec![Vec::new()],
    };
    for name in q.from.tables() {
        let t = db
            .table(name)
            .ok_or_else(|| Error::exec(format!("unknown table {name}")))?;
        rel.labels
            .extend(t.columns.iter().map(|c| format!("{name}.{}", c.name)));
        let mut product = Vec::new();
        for left in &rel.rows {
            for right in &t.rows {
                let mut r = left.clone();
                r.extend(right.iter().cloned());
                product.push(r);
            }
        }
        rel.rows = product;
    }
    let mut kept = Vec::new();
    for row in &rel.rows {
        let mut ok = true;
        for j in &q.from.joins {
            let a = &row[rel.col(&j.left.to_string())?];
            let b = &row[rel.col(&j.right.to_string())?];
            ok &= test(CondOp::Eq, a, b);
        }
        if ok {
            if let Some(w) = &q.where_clause {
                ok = truth(w, &rel, row, db, memo)?;
            }
        }
        if ok {
            kept.push(row.clone());
        }
    }

    let aggregated = !q.group_by.is_empty()
        || q.having.is_some()
        || q.select.iter().any(|s| s.agg.is_some())
        || q.order_by.as_ref().is_some_and(|o| o.key.agg.is_some());
    let groups: Vec<Vec<&Vec<Value>>> = if !aggregated {
        kept.iter().map(|r| vec![r]).collect()
    } else if q.group_by.is_empty() {
        vec![kept.iter().collect()]
    } else {
        let idx: Vec<usize> = q
            .group_by
            .iter()
            .map(|g| rel.col(&g.to_string()))
            .collect::<Result<_>>()?;
        let mut keyed: Vec<(Vec<Value>, Vec<&Vec<Value>>)> = Vec::new();
        for r in &kept {
            let k: Vec<Value> = idx.iter().map(|&i| r[i].clone()).collect();
            match keyed.iter_mut().find(|(kk, _)| same_row(kk, &k)) {
                Some((_, g)) => g.push(r),
                None => keyed.push((k, vec![r])),
            }
        }
        keyed.into_iter().map(|(_, g)| g).collect()
    };

    let mut produced: Vec<(Vec<Value>, Value)> = Vec::new();
    for g in groups {
        if let Some(h) = &q.having {
            let item = SelectItem {
                agg: Some(h.agg),
                target: h.target.clone(),
            };
            let v = item_over(&item, &rel, &g)?;
            if !test(h.op, &v[0], &h.value) {
                continue;
            }
        }
        let mut out = Vec::new();
        for s in &q.select {
            out.extend(item_over(s, &rel, &g)?);
        }
        let key = match &q.order_by {
            Some(o) => item_over(&o.key, &rel, &g)?.remove(0),
            None => Value::Null,
        };
        produced.push((out, key));
    }
    if let Some(o) = &q.order_by {
        let asc = |a: &Value, b: &Value| match (a.is_null(), b.is_null()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => cmp_vals(a, b).unwrap_or(Ordering::Equal),
        };
        produced.sort_by(|x, y| {
            if o.descending {
                asc(&y.1, &x.1)
            } else {
                asc(&x.1, &y.1)
            }
        });
        if let Some(n) = o.limit {
            produced.truncate(n as usize);
        }
    }
    let mut rows: Vec<Vec<Value>> = produced.into_iter().map(|(r, _)| r).collect();

    if let Some((op, rhs)) = &q.set_op {
        let right = eval(rhs, db, memo)?.rows;
        let mut left: Vec<Vec<Value>> = Vec::new();
        for r in rows {
            if !left.iter().any(|x| same_row(x, &r)) {
                left.push(r);
            }
        }
        rows = match op {
            SetOp::Union => {
                let mut all = left;
                for r in right {
                    if !all.iter().any(|x| same_row(x, &r)) {
                        all.push(r);
                    }
                }
                all
            }
            SetOp::Intersect => left
                .into_iter()
                .filter(|r| right.iter().any(|x| same_row(x, r)))
                .collect(),
            SetOp::Except => left
                .into_iter()
                .filter(|r| !right.iter().any(|x| same_row(x, r)))
                .collect(),
        };
    }
    let mut columns = Vec::new();
    for s in &q.select {
        if s.agg.is_none() && s.target == Target::Star {
            columns.extend(rel.labels.iter().cloned());
        } else {
            columns.push(s.to_string());
        }
    }
    Ok(ResultSet { columns, rows })
}
