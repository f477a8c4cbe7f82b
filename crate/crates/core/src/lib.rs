//! Primitive-based semantic parsing over knowledge bases and databases.
//!
//! Questions are answered in three stages. The [`enumerator`] lists the
//! schema elements (primitives) relevant to a question, the [`ranker`]
//! scores them per category, and the [`generator`] composes the top-ranked
//! primitives into executable logical forms: S-expressions ([`sexpr`]) over
//! a [`KnowledgeBase`](datamodel::KnowledgeBase) or SQL queries
//! ([`sqlcore`]) over a [`Database`](datamodel::Database).

pub mod datamodel;
pub mod enumerator;
pub mod error;
pub mod generator;
pub mod logical;
pub mod oracle;
pub mod pipeline;
pub mod ranker;
pub mod sexpr;
pub mod sqlcore;
pub mod text;
pub mod toy;

pub use error::{Error, Result};
