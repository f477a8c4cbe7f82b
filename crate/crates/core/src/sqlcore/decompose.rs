use std::collections::HashSet;

use super::{BoolExpr, ColumnRef, CondOp, Condition, SelectItem, SqlQuery};
use crate::datamodel::{Primitive, Value};

/// Splits a query into primitives and operation names.
///
/// Column references without a literal become TbCl primitives and each
/// literal operand becomes a TbClVl primitive carrying its conditional
/// operator (`BETWEEN` and `IN` lists yield one per literal, `IS NULL`
/// carries a null value). `*` yields no primitive. Primitives are
/// deduplicated in first-seen order.
pub fn decompose_sql(q: &SqlQuery) -> (Vec<Primitive>, Vec<String>) {
    let mut prims = Vec::new();
    let mut ops = Vec::new();
    walk(q, &mut prims, &mut ops);
    let mut seen = HashSet::new();
    prims.retain(|p| seen.insert(p.clone()));
    (prims, ops)
}

fn tb_cl(c: &ColumnRef) -> Primitive {
    Primitive::tb_cl(&c.table, &c.column)
}

fn tb_cl_vl(c: &ColumnRef, op: CondOp, v: &Value) -> Primitive {
    Primitive::tb_cl_vl(&c.table, &c.column, op, v.clone())
}

fn item(s: &SelectItem, prims: &mut Vec<Primitive>, ops: &mut Vec<String>) {
    if let Some(a) = s.agg {
        ops.push(a.keyword().into());
    }
    if let Some(c) = s.column_ref() {
        prims.push(tb_cl(c));
    }
}

fn walk_bool(e: &BoolExpr, prims: &mut Vec<Primitive>, ops: &mut Vec<String>) {
    match e {
        BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
            ops.push(
                if matches!(e, BoolExpr::And(..)) {
                    "AND"
                } else {
                    "OR"
                }
                .into(),
            );
            walk_bool(a, prims, ops);
            walk_bool(b, prims, ops);
        }
        BoolExpr::Cond(c) => match c {
            Condition::Compare { column, op, value } => prims.push(tb_cl_vl(column, *op, value)),
            Condition::Between {
                column,
                negated,
                low,
                high,
            } => {
                let op = if *negated {
                    CondOp::NotBetween
                } else {
                    CondOp::Between
                };
                prims.push(tb_cl_vl(column, op, low));
                prims.push(tb_cl_vl(column, op, high));
            }
            Condition::InList {
                column,
                negated,
                values,
            } => {
                let op = if *negated { CondOp::NotIn } else { CondOp::In };
                prims.extend(values.iter().map(|v| tb_cl_vl(column, op, v)));
            }
            Condition::InQuery { column, query, .. } => {
                prims.push(tb_cl(column));
                walk(query, prims, ops);
            }
            Condition::Like {
                column,
                negated,
                pattern,
            } => {
                let op = if *negated {
                    CondOp::NotLike
                } else {
                    CondOp::Like
                };
                prims.push(tb_cl_vl(column, op, &Value::Text(pattern.clone())));
            }
            Condition::IsNull { column, negated } => {
                let op = if *negated { CondOp::IsNot } else { CondOp::Is };
                prims.push(tb_cl_vl(column, op, &Value::Null));
            }
            Condition::Exists { query } => {
                ops.push("EXISTS".into());
                walk(query, prims, ops);
            }
        },
    }
}

fn walk(q: &SqlQuery, prims: &mut Vec<Primitive>, ops: &mut Vec<String>) {
    ops.push("SELECT".into());
    for s in &q.select {
        item(s, prims, ops);
    }
    for j in &q.from.joins {
        ops.push("JOIN".into());
        prims.push(tb_cl(&j.left));
        prims.push(tb_cl(&j.right));
    }
    if let Some(w) = &q.where_clause {
        ops.push("WHERE".into());
        walk_bool(w, prims, ops);
    }
    if !q.group_by.is_empty() {
        ops.push("GROUP BY".into());
        prims.extend(q.group_by.iter().map(tb_cl));
    }
    if let Some(h) = &q.having {
        ops.push("HAVING".into());
        item(
            &SelectItem {
                agg: Some(h.agg),
                target: h.target.clone(),
            },
            prims,
            ops,
        );
    }
    if let Some(o) = &q.order_by {
        ops.push("ORDER BY".into());
        item(&o.key, prims, ops);
        if o.limit.is_some() {
            ops.push("LIMIT".into());
        }
    }
    if let Some((op, rhs)) = &q.set_op {
        ops.push(op.keyword().into());
        walk(rhs, prims, ops);
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_sql;
    use super::*;

    fn decomp(s: &str) -> (Vec<Primitive>, Vec<String>) {
        decompose_sql(&parse_sql(s).unwrap())
    }

    #[test]
    fn single_column() {
        let (p, o) = decomp("SELECT t.a FROM t");
        assert_eq!(p, vec![Primitive::tb_cl("t", "a")]);
        assert_eq!(o, vec!["SELECT"]);
    }

    #[test]
    fn count_where() {
        let (p, o) = decomp("SELECT COUNT(*) FROM head WHERE head.age > 56");
        assert_eq!(
            p,
            vec![Primitive::tb_cl_vl(
                "head",
                "age",
                CondOp::Gt,
                Value::Number(56.0)
            )]
        );
        assert_eq!(o, vec!["SELECT", "COUNT", "WHERE"]);
    }

    #[test]
    fn union_collects_both_branches() {
        let (p, o) = decomp("SELECT t.a FROM t UNION SELECT u.b FROM u WHERE u.c = 'x'");
        assert_eq!(
            p,
            vec![
                Primitive::tb_cl("t", "a"),
                Primitive::tb_cl("u", "b"),
                Primitive::tb_cl_vl("u", "c", CondOp::Eq, Value::Text("x".into()))
            ]
        );
        assert!(o.contains(&"UNION".to_string()));
    }

    #[test]
    fn between_in_and_null_operands() {
        let (p, _) = decomp(
            "SELECT t.a FROM t WHERE t.b BETWEEN 1 AND 2 AND t.c IN ('x') AND t.d IS NOT NULL",
        );
        assert_eq!(p.len(), 5);
        assert_eq!(
            p[4],
            Primitive::tb_cl_vl("t", "d", CondOp::IsNot, Value::Null)
        );
    }
}
