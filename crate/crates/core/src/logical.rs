//! Modality-independent logical forms and execution against a store.

use std::fmt;

use crate::datamodel::{Database, KnowledgeBase, Modality, Primitive};
use crate::error::Result;
use crate::sexpr::{decompose_sexpr, execute_sexpr, parse_sexpr, SExpr};
use crate::sqlcore::{decompose_sql, execute_sql, parse_sql, SqlQuery};

/// Printed form of [`LogicalForm::NoAnswer`].
pub const NO_ANSWER: &str = "NO_ANSWER";

/// A logical form of either modality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
// Forms are compared by value and rarely moved, so the SQL variant stays inline.
#[allow(clippy::large_enum_variant)]
pub enum LogicalForm {
    Kb(SExpr),
    Db(SqlQuery),
    /// Sentinel returned when no primitive is available; executes to no answers.
    NoAnswer,
}

impl LogicalForm {
    pub fn parse(text: &str, modality: Modality) -> Result<LogicalForm> {
        if text.trim() == NO_ANSWER {
            return Ok(LogicalForm::NoAnswer);
        }
        match modality {
            Modality::Kb => parse_sexpr(text).map(LogicalForm::Kb),
            Modality::Db => parse_sql(text).map(LogicalForm::Db),
        }
    }

    pub fn decompose(&self) -> (Vec<Primitive>, Vec<String>) {
        match self {
            LogicalForm::Kb(e) => decompose_sexpr(e),
            LogicalForm::Db(q) => decompose_sql(q),
            LogicalForm::NoAnswer => (Vec::new(), Vec::new()),
        }
    }

    pub fn primitives(&self) -> Vec<Primitive> {
        self.decompose().0
    }
}

impl fmt::Display for LogicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicalForm::Kb(e) => write!(f, "{e}"),
            LogicalForm::Db(q) => write!(f, "{q}"),
            LogicalForm::NoAnswer => f.write_str(NO_ANSWER),
        }
    }
}

/// A loaded store a logical form executes against.
#[derive(Debug, Clone, Copy)]
pub enum Store<'a> {
    Kb(&'a KnowledgeBase),
    Db(&'a Database),
}

impl Store<'_> {
    pub fn modality(&self) -> Modality {
        match self {
            Store::Kb(_) => Modality::Kb,
            Store::Db(_) => Modality::Db,
        }
    }
}

/// A store held by value, e.g. one loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum OwnedStore {
    Kb(KnowledgeBase),
    Db(Database),
}

impl OwnedStore {
    pub fn view(&self) -> Store<'_> {
        match self {
            OwnedStore::Kb(kb) => Store::Kb(kb),
            OwnedStore::Db(db) => Store::Db(db),
        }
    }
}

/// Outcome of a successful execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    /// Answer strings, sorted and deduplicated.
    pub answers: Vec<String>,
    /// Whether the result counts as empty (no rows, no entities, or a zero count).
    pub empty: bool,
}

/// Executes `lf` against `store`; a modality mismatch is an execution error.
pub fn execute(lf: &LogicalForm, store: Store<'_>) -> Result<Execution> {
    match (lf, store) {
        (LogicalForm::Kb(e), Store::Kb(kb)) => {
            let d = execute_sexpr(e, kb)?;
            Ok(Execution {
                answers: d.answers(),
                empty: d.is_empty(),
            })
        }
        (LogicalForm::Db(q), Store::Db(db)) => {
            let rs = execute_sql(q, db)?;
            Ok(Execution {
                answers: rs.answers(),
                empty: rs.is_empty(),
            })
        }
        (LogicalForm::NoAnswer, _) => Ok(Execution {
            answers: Vec::new(),
            empty: true,
        }),
        _ => Err(crate::Error::exec(
            "logical form does not match the store modality",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Triple;

    #[test]
    fn no_answer_round_trips_and_executes() {
        let lf = LogicalForm::parse("NO_ANSWER", Modality::Db).unwrap();
        assert_eq!(lf, LogicalForm::NoAnswer);
        assert_eq!(lf.to_string(), NO_ANSWER);
        let kb = KnowledgeBase::default();
        let ex = execute(&lf, Store::Kb(&kb)).unwrap();
        assert!(ex.empty && ex.answers.is_empty());
    }

    #[test]
    fn kb_execution() {
        let kb = KnowledgeBase::from_triples(vec![Triple::entity("e1", "r1", "e2")]);
        let lf = LogicalForm::parse("(JOIN r1 e2)", Modality::Kb).unwrap();
        let ex = execute(&lf, Store::Kb(&kb)).unwrap();
        assert_eq!(ex.answers, vec!["e1"]);
        assert!(!ex.empty);
        let count = LogicalForm::parse("(COUNT (JOIN r1 e1))", Modality::Kb).unwrap();
        assert!(execute(&count, Store::Kb(&kb)).unwrap().empty);
    }
}
