//! Stores, questions and primitives.
//!
//! A [`KnowledgeBase`] is an immutable triple store indexed by subject,
//! object and relation. A [`Database`] is an immutable list of typed tables.
//! Both are loaded once and then shared read-only across the pipeline.

mod db;
mod kb;
mod primitive;
mod question;

pub use db::{
    load_db, write_db, Column, ColumnType, Database, SchemaFile, SchemaTable, Table, Value,
};
pub use kb::{
    compare_literals, load_kb, write_triples_tsv, Direction, KnowledgeBase, Literal, Object, Triple,
};
pub use primitive::{Category, CondOp, Payload, Primitive};
pub use question::{
    answer_value_string, load_questions, parse_questions, questions_to_jsonl, Modality, Question,
};
