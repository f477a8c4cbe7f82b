//! Brute-force reference implementations.
//!
//! These are index-free and slow on purpose. They back the differential
//! tests of the executors and the candidate-count comparison of the
//! benchmark, which contrasts full logical-form enumeration with the
//! additive primitive enumeration.

mod brute_sexpr;
mod brute_sql;
pub mod gen;
mod paths;

pub use brute_sexpr::brute_execute_sexpr;
pub use brute_sql::brute_execute_sql;
pub use paths::{
    count_logical_forms_db, enumerate_logical_forms_db, enumerate_logical_forms_kb,
    reachable_second_hops,
};
