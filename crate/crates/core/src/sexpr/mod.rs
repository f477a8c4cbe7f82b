//! S-expression logical forms over a knowledge base.
//!
//! Grammar (operators uppercase, prefix notation, whitespace separated):
//!
//! ```text
//! expr := ENTITY
//!       | (JOIN rel expr) | (AND expr expr) | (COUNT expr)
//!       | (ARGMAX expr REL) | (ARGMIN expr REL)
//!       | (LT REL lit) | (LE REL lit) | (GT REL lit) | (GE REL lit)
//! rel  := REL | (R REL)
//! lit  := integer | float | "quoted string"
//! ```
//!
//! `COUNT` may only appear at the root.

mod decompose;
mod exec;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::datamodel::Literal;

pub use decompose::decompose_sexpr;
pub use exec::{execute_sexpr, Denotation};
pub use parse::parse_sexpr;

/// Comparison operator of a `Compare` node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 4] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn keyword(self) -> &'static str {
        match self {
            CmpOp::Lt => "LT",
            CmpOp::Le => "LE",
            CmpOp::Gt => "GT",
            CmpOp::Ge => "GE",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

/// Relation argument of `JOIN`; `Reverse` is the `(R r)` form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum JoinRel {
    Forward(String),
    Reverse(String),
}

impl JoinRel {
    pub fn relation(&self) -> &str {
        match self {
            JoinRel::Forward(r) | JoinRel::Reverse(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SExpr {
    Entity(String),
    Join(JoinRel, Box<SExpr>),
    And(Box<SExpr>, Box<SExpr>),
    Count(Box<SExpr>),
    ArgMax(Box<SExpr>, String),
    ArgMin(Box<SExpr>, String),
    Compare(CmpOp, String, Literal),
}

impl SExpr {
    pub fn entity(e: &str) -> SExpr {
        SExpr::Entity(e.to_string())
    }

    pub fn join(rel: &str, inner: SExpr) -> SExpr {
        SExpr::Join(JoinRel::Forward(rel.to_string()), Box::new(inner))
    }

    pub fn join_rev(rel: &str, inner: SExpr) -> SExpr {
        SExpr::Join(JoinRel::Reverse(rel.to_string()), Box::new(inner))
    }

    pub fn and(a: SExpr, b: SExpr) -> SExpr {
        SExpr::And(Box::new(a), Box::new(b))
    }

    pub fn count(inner: SExpr) -> SExpr {
        SExpr::Count(Box::new(inner))
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            SExpr::Entity(_) | SExpr::Compare(..) => 1,
            SExpr::Join(_, e) | SExpr::Count(e) | SExpr::ArgMax(e, _) | SExpr::ArgMin(e, _) => {
                1 + e.size()
            }
            SExpr::And(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Longest chain of nested nodes.
    pub fn depth(&self) -> usize {
        match self {
            SExpr::Entity(_) | SExpr::Compare(..) => 1,
            SExpr::Join(_, e) | SExpr::Count(e) | SExpr::ArgMax(e, _) | SExpr::ArgMin(e, _) => {
                1 + e.depth()
            }
            SExpr::And(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

/// Canonical rendering: single spaces, uppercase operators.
pub fn print_sexpr(ast: &SExpr) -> String {
    ast.to_string()
}

fn write_literal(f: &mut fmt::Formatter<'_>, lit: &Literal) -> fmt::Result {
    match lit {
        Literal::Int(i) => write!(f, "{i}"),
        Literal::Float(x) => write!(f, "{x:?}"),
        Literal::Str(s) => {
            f.write_str("\"")?;
            for c in s.chars() {
                match c {
                    '"' => f.write_str("\\\"")?,
                    '\\' => f.write_str("\\\\")?,
                    c => write!(f, "{c}")?,
                }
            }
            f.write_str("\"")
        }
    }
}

impl fmt::Display for JoinRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JoinRel::Forward(r) => f.write_str(r),
            JoinRel::Reverse(r) => write!(f, "(R {r})"),
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Entity(e) => f.write_str(e),
            SExpr::Join(r, e) => write!(f, "(JOIN {r} {e})"),
            SExpr::And(a, b) => write!(f, "(AND {a} {b})"),
            SExpr::Count(e) => write!(f, "(COUNT {e})"),
            SExpr::ArgMax(e, r) => write!(f, "(ARGMAX {e} {r})"),
            SExpr::ArgMin(e, r) => write!(f, "(ARGMIN {e} {r})"),
            SExpr::Compare(op, r, lit) => {
                write!(f, "({} {r} ", op.keyword())?;
                write_literal(f, lit)?;
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn print_basic_forms() {
        assert_eq!(print_sexpr(&SExpr::entity("e1")), "e1");
        assert_eq!(
            print_sexpr(&SExpr::join("r1", SExpr::entity("e1"))),
            "(JOIN r1 e1)"
        );
        assert_eq!(
            print_sexpr(&SExpr::Compare(
                CmpOp::Ge,
                "age".into(),
                Literal::Float(5.0)
            )),
            "(GE age 5.0)"
        );
        assert_eq!(
            print_sexpr(&SExpr::Compare(
                CmpOp::Lt,
                "nick".into(),
                Literal::Str("a\"b".into())
            )),
            "(LT nick \"a\\\"b\")"
        );
    }
}
