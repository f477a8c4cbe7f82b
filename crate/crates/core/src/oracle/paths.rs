use std::collections::BTreeSet;

use crate::datamodel::{
    ColumnType, Database, Direction, KnowledgeBase, Object, Payload, Primitive,
};
use crate::sexpr::SExpr;
use crate::sqlcore::{Agg, BoolExpr, Condition, SelectItem, SqlQuery};

/// `(relation, direction)` pairs of every triple touching `entity`, by full scan.
fn scan_edges(kb: &KnowledgeBase, entity: &str) -> Vec<(String, Direction, Object)> {
    let mut out = Vec::new();
    for t in kb.triples() {
        if t.subject == entity {
            out.push((t.relation.clone(), Direction::Out, t.object.clone()));
        }
        if t.object.as_entity() == Some(entity) {
            out.push((
                t.relation.clone(),
                Direction::In,
                Object::Entity(t.subject.clone()),
            ));
        }
    }
    out
}

fn hop(rel: &str, dir: Direction, inner: SExpr) -> SExpr {
    match dir {
        Direction::In => SExpr::join(rel, inner),
        Direction::Out => SExpr::join_rev(rel, inner),
    }
}

/// Entities reached from `entity` over `(rel, dir)`, by full scan.
fn frontier(kb: &KnowledgeBase, entity: &str, rel: &str, dir: Direction) -> BTreeSet<String> {
    scan_edges(kb, entity)
        .into_iter()
        .filter(|(r, d, _)| r == rel && *d == dir)
        .filter_map(|(_, _, o)| o.as_entity().map(str::to_string))
        .collect()
}

/// Second-hop `(relation, direction)` pairs leaving the frontier of one first hop.
/// Without backtracking the pair that returns along the first hop is excluded.
fn second_hops_from(
    kb: &KnowledgeBase,
    entity: &str,
    rel: &str,
    dir: Direction,
    allow_backtrack: bool,
) -> BTreeSet<(String, Direction)> {
    let mut out = BTreeSet::new();
    for x in frontier(kb, entity, rel, dir) {
        for (r2, d2, _) in scan_edges(kb, &x) {
            if !allow_backtrack && r2 == rel && d2 == dir.reverse() {
                continue;
            }
            out.insert((r2, d2));
        }
    }
    out
}

/// Every one- and two-hop form anchored at a linked entity: the exhaustive
/// baseline whose size grows with the product of the fan-outs.
pub fn enumerate_logical_forms_kb(
    linked: &[String],
    kb: &KnowledgeBase,
    allow_backtrack: bool,
) -> Vec<SExpr> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for e in linked {
        let firsts: BTreeSet<(String, Direction)> = scan_edges(kb, e)
            .into_iter()
            .map(|(r, d, _)| (r, d))
            .collect();
        for (r, d) in firsts {
            let one = hop(&r, d, SExpr::entity(e));
            if seen.insert(one.clone()) {
                out.push(one.clone());
            }
            for (r2, d2) in second_hops_from(kb, e, &r, d, allow_backtrack) {
                let two = hop(&r2, d2, one.clone());
                if seen.insert(two.clone()) {
                    out.push(two);
                }
            }
        }
    }
    out
}

/// Second-hop pairs reachable from any of the given first-hop primitives.
pub fn reachable_second_hops(
    first_hops: &[Primitive],
    kb: &KnowledgeBase,
    allow_backtrack: bool,
) -> BTreeSet<(String, Direction)> {
    let mut out = BTreeSet::new();
    for p in first_hops {
        if let Payload::FirstHop {
            entity,
            relation,
            direction,
        } = p.payload()
        {
            out.extend(second_hops_from(
                kb,
                entity,
                relation,
                *direction,
                allow_backtrack,
            ));
        }
    }
    out
}

fn select_items(db: &Database, table: &str) -> Vec<SelectItem> {
    let t = db.table(table).expect("table exists");
    let mut items = vec![SelectItem::count_star()];
    for c in &t.columns {
        items.push(SelectItem::column(table, &c.name));
        let aggs: &[Agg] = match c.ty {
            ColumnType::Number => &Agg::ALL,
            ColumnType::Text => &[Agg::Count, Agg::Max, Agg::Min],
        };
        items.extend(aggs.iter().map(|a| SelectItem::agg(*a, table, &c.name)));
    }
    items
}

/// Exhaustive single-table forms: every select item of a table combined with
/// no condition or with one of the value primitives of that table.
pub fn enumerate_logical_forms_db(db: &Database, values: &[Primitive]) -> Vec<SqlQuery> {
    let mut out = Vec::new();
    for t in db.tables() {
        let conds: Vec<Condition> = values
            .iter()
            .filter_map(|p| match p.payload() {
                Payload::TbClVl {
                    table,
                    column,
                    op,
                    value,
                } if *table == t.name => {
                    Some(Condition::compare(table, column, *op, value.clone()))
                }
                _ => None,
            })
            .collect();
        for item in select_items(db, &t.name) {
            let mut q = SqlQuery::simple(vec![item], &t.name);
            out.push(q.clone());
            for c in &conds {
                q.where_clause = Some(BoolExpr::Cond(c.clone()));
                out.push(q.clone());
            }
        }
    }
    out
}

/// Size of [`enumerate_logical_forms_db`] without materializing the forms.
pub fn count_logical_forms_db(db: &Database, values: &[Primitive]) -> usize {
    db.tables()
        .iter()
        .map(|t| {
            let items: usize = 1 + t
                .columns
                .iter()
                .map(|c| match c.ty {
                    ColumnType::Number => 6,
                    ColumnType::Text => 4,
                })
                .sum::<usize>();
            let conds = values
                .iter()
                .filter(
                    |p| matches!(p.payload(), Payload::TbClVl { table, .. } if *table == t.name),
                )
                .count();
            items * (1 + conds)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Triple;

    #[test]
    fn single_triple() {
        let kb = KnowledgeBase::from_triples(vec![Triple::entity("e1", "r1", "e2")]);
        let forms = enumerate_logical_forms_kb(&["e1".into()], &kb, false);
        assert_eq!(forms, vec![SExpr::join_rev("r1", SExpr::entity("e1"))]);
        let with_inverse = enumerate_logical_forms_kb(&["e1".into()], &kb, true);
        assert_eq!(with_inverse.len(), 2);
        assert!(enumerate_logical_forms_kb(&[], &kb, false).is_empty());
    }
}
