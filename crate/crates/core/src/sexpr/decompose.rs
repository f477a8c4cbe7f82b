use super::{JoinRel, SExpr};
use crate::datamodel::{Direction, Primitive};

/// Splits a form into primitives and the operator names in pre-order.
///
/// A `JOIN` applied directly to an entity yields a FirstHop; a `JOIN` applied
/// to such a first-hop join yields a SecondHop. The relation argument of
/// `ARGMAX`/`ARGMIN`/comparisons is read off the entities of the set they
/// constrain, so it is reported as an outgoing SecondHop. Primitives are
/// deduplicated in first-seen order.
pub fn decompose_sexpr(ast: &SExpr) -> (Vec<Primitive>, Vec<String>) {
    let mut prims = Vec::new();
    let mut ops = Vec::new();
    walk(ast, &mut prims, &mut ops);
    let mut seen = std::collections::HashSet::new();
    prims.retain(|p| seen.insert(p.clone()));
    (prims, ops)
}

fn direction(rel: &JoinRel) -> Direction {
    match rel {
        JoinRel::Forward(_) => Direction::In,
        JoinRel::Reverse(_) => Direction::Out,
    }
}

fn walk(e: &SExpr, prims: &mut Vec<Primitive>, ops: &mut Vec<String>) {
    match e {
        SExpr::Entity(_) => {}
        SExpr::Join(rel, inner) => {
            ops.push("JOIN".into());
            if matches!(rel, JoinRel::Reverse(_)) {
                ops.push("R".into());
            }
            walk(inner, prims, ops);
            match inner.as_ref() {
                SExpr::Entity(ent) => {
                    prims.push(Primitive::first_hop(ent, rel.relation(), direction(rel)));
                }
                SExpr::Join(_, inner2) if matches!(inner2.as_ref(), SExpr::Entity(_)) => {
                    prims.push(Primitive::second_hop(rel.relation(), direction(rel)));
                }
                _ => {}
            }
        }
        SExpr::And(a, b) => {
            ops.push("AND".into());
            walk(a, prims, ops);
            walk(b, prims, ops);
        }
        SExpr::Count(inner) => {
            ops.push("COUNT".into());
            walk(inner, prims, ops);
        }
        SExpr::ArgMax(inner, r) | SExpr::ArgMin(inner, r) => {
            ops.push(
                if matches!(e, SExpr::ArgMax(..)) {
                    "ARGMAX"
                } else {
                    "ARGMIN"
                }
                .into(),
            );
            walk(inner, prims, ops);
            prims.push(Primitive::second_hop(r, Direction::Out));
        }
        SExpr::Compare(op, r, _) => {
            ops.push(op.keyword().into());
            prims.push(Primitive::second_hop(r, Direction::Out));
        }
    }
}
