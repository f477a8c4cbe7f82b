use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::datamodel::{KnowledgeBase, Literal, Object};
use crate::error::{Error, Result};
use crate::sexpr::{CmpOp, Denotation, JoinRel, SExpr};

fn numeric(l: &Literal) -> Option<f64> {
    match l {
        Literal::Int(i) => Some(*i as f64),
        Literal::Float(f) => Some(*f),
        Literal::Str(s) => s.trim().parse::<f64>().ok().filter(|f| f.is_finite()),
    }
}

fn cmp(a: &Literal, b: &Literal) -> Result<Ordering> {
    match (numeric(a), numeric(b), a, b) {
        (Some(x), Some(y), _, _) => Ok(x.partial_cmp(&y).unwrap_or(Ordering::Equal)),
        (None, None, Literal::Str(x), Literal::Str(y)) => Ok(x.as_str().cmp(y.as_str())),
        _ => Err(Error::exec("mixed numeric and text comparison")),
    }
}

fn holds(op: CmpOp, o: Ordering) -> bool {
    match op {
        CmpOp::Lt => o.is_lt(),
        CmpOp::Le => o.is_le(),
        CmpOp::Gt => o.is_gt(),
        CmpOp::Ge => o.is_ge(),
    }
}

/// Same denotation as [`execute_sexpr`](crate::sexpr::execute_sexpr), computed
/// by scanning every triple of the store for every node.
pub fn brute_execute_sexpr(ast: &SExpr, kb: &KnowledgeBase) -> Result<Denotation> {
    match ast {
        SExpr::Count(inner) => Ok(Denotation::Count(eval(inner, kb)?.len())),
        e => Ok(Denotation::Set(eval(e, kb)?)),
    }
}

fn eval(e: &SExpr, kb: &KnowledgeBase) -> Result<BTreeSet<Object>> {
    let mut out = BTreeSet::new();
    match e {
        SExpr::Entity(id) => {
            out.insert(Object::Entity(id.clone()));
        }
        SExpr::Join(JoinRel::Forward(r), inner) => {
            let s = eval(inner, kb)?;
            for t in kb.triples() {
                if &t.relation == r && s.contains(&t.object) {
                    out.insert(Object::Entity(t.subject.clone()));
                }
            }
        }
        SExpr::Join(JoinRel::Reverse(r), inner) => {
            let s = eval(inner, kb)?;
            for t in kb.triples() {
                if &t.relation == r && s.contains(&Object::Entity(t.subject.clone())) {
                    out.insert(t.object.clone());
                }
            }
        }
        SExpr::And(a, b) => {
            let a = eval(a, kb)?;
            let b = eval(b, kb)?;
            for x in a {
                if b.contains(&x) {
                    out.insert(x);
                }
            }
        }
        SExpr::Count(_) => return Err(Error::exec("COUNT below the root")),
        SExpr::ArgMax(inner, r) | SExpr::ArgMin(inner, r) => {
            let s = eval(inner, kb)?;
            let mut pairs: Vec<(String, Literal)> = Vec::new();
            for t in kb.triples() {
                if &t.relation != r || !s.contains(&Object::Entity(t.subject.clone())) {
                    continue;
                }
                if let Object::Literal(l) = &t.object {
                    pairs.push((t.subject.clone(), l.clone()));
                }
            }
            let nums = pairs.iter().filter(|(_, l)| numeric(l).is_some()).count();
            if nums > 0 && nums < pairs.len() {
                return Err(Error::exec("mixed values under ARGMAX/ARGMIN"));
            }
            let max = matches!(e, SExpr::ArgMax(..));
            for (subj, l) in &pairs {
                let mut best = true;
                for (_, other) in &pairs {
                    let o = cmp(other, l)?;
                    if (max && o.is_gt()) || (!max && o.is_lt()) {
                        best = false;
                    }
                }
                if best {
                    out.insert(Object::Entity(subj.clone()));
                }
            }
        }
        SExpr::Compare(op, r, lit) => {
            for t in kb.triples() {
                if &t.relation != r {
                    continue;
                }
                if let Object::Literal(l) = &t.object {
                    if holds(*op, cmp(l, lit)?) {
                        out.insert(Object::Entity(t.subject.clone()));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Triple;
    use crate::sexpr::parse_sexpr;

    #[test]
    fn empty_kb_joins_are_empty() {
        let kb = KnowledgeBase::default();
        let d = brute_execute_sexpr(&parse_sexpr("(JOIN r e)").unwrap(), &kb).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn and_of_same_is_same() {
        let kb = KnowledgeBase::from_triples(vec![
            Triple::entity("a", "r", "b"),
            Triple::entity("c", "r", "b"),
        ]);
        let s = parse_sexpr("(JOIN r b)").unwrap();
        let and = SExpr::and(s.clone(), s.clone());
        assert_eq!(
            brute_execute_sexpr(&and, &kb).unwrap(),
            brute_execute_sexpr(&s, &kb).unwrap()
        );
    }
}
