use std::cmp::Ordering;
use std::collections::BTreeSet;

use super::{JoinRel, SExpr};
use crate::datamodel::{compare_literals, KnowledgeBase, Literal, Object};
use crate::error::{Error, Result};

/// Result of executing an S-expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Denotation {
    Set(BTreeSet<Object>),
    Count(usize),
}

impl Denotation {
    /// Answer strings, sorted.
    pub fn answers(&self) -> Vec<String> {
        match self {
            Denotation::Set(s) => {
                let mut v: Vec<String> = s.iter().map(|o| o.to_string()).collect();
                v.sort();
                v.dedup();
                v
            }
            Denotation::Count(n) => vec![n.to_string()],
        }
    }

    /// A count of zero is treated as empty, like an empty set.
    pub fn is_empty(&self) -> bool {
        match self {
            Denotation::Set(s) => s.is_empty(),
            Denotation::Count(n) => *n == 0,
        }
    }
}

/// Executes `ast` against the indexed store.
pub fn execute_sexpr(ast: &SExpr, kb: &KnowledgeBase) -> Result<Denotation> {
    match ast {
        SExpr::Count(inner) => Ok(Denotation::Count(eval(inner, kb)?.len())),
        other => Ok(Denotation::Set(eval(other, kb)?)),
    }
}

fn eval(e: &SExpr, kb: &KnowledgeBase) -> Result<BTreeSet<Object>> {
    match e {
        SExpr::Entity(id) => Ok(BTreeSet::from([Object::Entity(id.clone())])),
        SExpr::Join(JoinRel::Forward(r), inner) => {
            let targets = eval(inner, kb)?;
            let mut out = BTreeSet::new();
            let mut literal_targets = false;
            for t in &targets {
                match t {
                    Object::Entity(o) => {
                        for (rel, s) in kb.in_edges(o) {
                            if rel == r {
                                out.insert(s.clone());
                            }
                        }
                    }
                    Object::Literal(_) => literal_targets = true,
                }
            }
            if literal_targets {
                for t in kb.relation_triples(r) {
                    if matches!(t.object, Object::Literal(_)) && targets.contains(&t.object) {
                        out.insert(Object::Entity(t.subject.clone()));
                    }
                }
            }
            Ok(out)
        }
        SExpr::Join(JoinRel::Reverse(r), inner) => {
            let sources = eval(inner, kb)?;
            let mut out = BTreeSet::new();
            for s in sources.iter().filter_map(Object::as_entity) {
                for (rel, o) in kb.out_edges(s) {
                    if rel == r {
                        out.insert(o.clone());
                    }
                }
            }
            Ok(out)
        }
        SExpr::And(a, b) => {
            let a = eval(a, kb)?;
            let b = eval(b, kb)?;
            Ok(a.intersection(&b).cloned().collect())
        }
        SExpr::Count(_) => Err(Error::exec("COUNT may only appear at the root")),
        SExpr::ArgMax(inner, r) | SExpr::ArgMin(inner, r) => {
            let want = if matches!(e, SExpr::ArgMax(..)) {
                Ordering::Greater
            } else {
                Ordering::Less
            };
            let set = eval(inner, kb)?;
            let mut values: Vec<(&str, &Literal)> = Vec::new();
            for s in set.iter().filter_map(Object::as_entity) {
                for (rel, o) in kb.out_edges(s) {
                    if let (true, Object::Literal(l)) = (rel == r, o) {
                        values.push((s, l));
                    }
                }
            }
            extremal(&values, want)
        }
        SExpr::Compare(op, r, lit) => {
            let mut out = BTreeSet::new();
            for t in kb.relation_triples(r) {
                if let Object::Literal(o) = &t.object {
                    if op.holds(compare_literals(o, lit)?) {
                        out.insert(Object::Entity(t.subject.clone()));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Subjects attaining the extremum; errors when numeric and text values mix.
fn extremal(values: &[(&str, &Literal)], want: Ordering) -> Result<BTreeSet<Object>> {
    let numeric = values
        .iter()
        .filter(|(_, l)| l.as_number().is_some())
        .count();
    if numeric != 0 && numeric != values.len() {
        return Err(Error::exec(
            "ARGMAX/ARGMIN over mixed numeric and text values",
        ));
    }
    let mut best: Option<&Literal> = None;
    for (_, l) in values {
        match best {
            None => best = Some(l),
            Some(b) if compare_literals(l, b)? == want => best = Some(l),
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    if let Some(b) = best {
        for (s, l) in values {
            if compare_literals(l, b)? == Ordering::Equal {
                out.insert(Object::Entity(s.to_string()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::parse_sexpr;
    use super::*;
    use crate::datamodel::Triple;

    fn kb() -> KnowledgeBase {
        KnowledgeBase::from_triples(vec![
            Triple::entity("alice", "nationality", "france"),
            Triple::entity("bob", "nationality", "france"),
            Triple::entity("carol", "nationality", "spain"),
            Triple::literal("alice", "age", Literal::Int(40)),
            Triple::literal("bob", "age", Literal::Int(52)),
            Triple::literal("carol", "age", Literal::Int(52)),
            Triple::literal("bob", "nick", Literal::Str("B".into())),
            Triple::entity("france", "capital", "paris"),
        ])
    }

    fn run(s: &str) -> Result<Denotation> {
        execute_sexpr(&parse_sexpr(s).unwrap(), &kb())
    }

    fn set(items: &[&str]) -> Denotation {
        Denotation::Set(
            items
                .iter()
                .map(|e| Object::Entity(e.to_string()))
                .collect(),
        )
    }

    #[test]
    fn one_triple_join() {
        let kb = KnowledgeBase::from_triples(vec![Triple::entity("e1", "r1", "e2")]);
        let d = execute_sexpr(&parse_sexpr("(JOIN r1 e2)").unwrap(), &kb).unwrap();
        assert_eq!(d, set(&["e1"]));
    }

    #[test]
    fn forward_reverse_and_count() {
        assert_eq!(
            run("(JOIN nationality france)").unwrap(),
            set(&["alice", "bob"])
        );
        assert_eq!(run("(JOIN (R capital) france)").unwrap(), set(&["paris"]));
        assert_eq!(
            run("(COUNT (JOIN nationality france))").unwrap(),
            Denotation::Count(2)
        );
        assert_eq!(
            run("(AND (JOIN nationality france) (JOIN nationality france))").unwrap(),
            run("(JOIN nationality france)").unwrap()
        );
    }

    #[test]
    fn join_through_literal_values() {
        // people with the same age as bob
        assert_eq!(
            run("(JOIN age (JOIN (R age) bob))").unwrap(),
            set(&["bob", "carol"])
        );
    }

    #[test]
    fn argmax_returns_all_ties() {
        assert_eq!(
            run("(ARGMAX (JOIN nationality france) age)").unwrap(),
            set(&["bob"])
        );
        assert_eq!(
            run("(ARGMIN (JOIN nationality france) age)").unwrap(),
            set(&["alice"])
        );
        let all =
            "(ARGMAX (AND (JOIN age (JOIN (R age) bob)) (JOIN age (JOIN (R age) carol))) age)";
        assert_eq!(run(all).unwrap(), set(&["bob", "carol"]));
        assert_eq!(
            run("(ARGMAX (JOIN nationality france) capital)").unwrap(),
            set(&[])
        );
    }

    #[test]
    fn compare_numeric_and_type_error() {
        assert_eq!(run("(GT age 45)").unwrap(), set(&["bob", "carol"]));
        assert_eq!(run("(LE age 40)").unwrap(), set(&["alice"]));
        assert!(run("(GT nick 3)").is_err());
        assert_eq!(run("(GE nick \"A\")").unwrap(), set(&["bob"]));
    }

    #[test]
    fn nested_count_is_rejected() {
        let ast = SExpr::and(SExpr::count(SExpr::entity("a")), SExpr::entity("a"));
        assert!(execute_sexpr(&ast, &kb()).is_err());
    }

    #[test]
    fn empty_kb_joins_are_empty() {
        let kb = KnowledgeBase::default();
        let d = execute_sexpr(&parse_sexpr("(JOIN r (JOIN (R s) e))").unwrap(), &kb).unwrap();
        assert!(d.is_empty());
    }
}
