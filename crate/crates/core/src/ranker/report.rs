use serde::Serialize;

use super::model::PrimitiveScorer;
use super::rank_all;
use super::train::RankerItem;
use crate::error::Result;

/// One line of a recall table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallRow {
    pub config: String,
    pub k: usize,
    pub recall: f64,
}

/// Recall@k per `k`. The main row counts a question as a hit when every gold
/// primitive sits within the top `k` of its category; a second row labelled
/// `<config>/per_primitive` counts gold primitives individually. Questions
/// without gold primitives are ignored.
pub fn ranker_recall_report<S: PrimitiveScorer + ?Sized>(
    scorer: &S,
    items: &[RankerItem<'_>],
    ks: &[usize],
    config: &str,
) -> Result<Vec<RecallRow>> {
    let mut ranks: Vec<Vec<Option<usize>>> = Vec::new();
    for item in items.iter().filter(|i| !i.gold.is_empty()) {
        let ranked = rank_all(scorer, &item.question.text, &item.enumeration)?;
        ranks.push(item.gold.iter().map(|g| ranked.rank_of(g)).collect());
    }
    let mut rows = Vec::new();
    for &k in ks {
        let within = |r: &Option<usize>| r.is_some_and(|r| r <= k);
        let q_hits = ranks.iter().filter(|rs| rs.iter().all(within)).count();
        let p_total: usize = ranks.iter().map(Vec::len).sum();
        let p_hits: usize = ranks
            .iter()
            .map(|rs| rs.iter().filter(|r| within(r)).count())
            .sum();
        rows.push(RecallRow {
            config: config.to_string(),
            k,
            recall: ratio(q_hits, ranks.len()),
        });
        rows.push(RecallRow {
            config: format!("{config}/per_primitive"),
            k,
            recall: ratio(p_hits, p_total),
        });
    }
    Ok(rows)
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Recall rows as CSV with header `config,k,recall`.
pub fn recall_csv(rows: &[RecallRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| crate::Error::Eval(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::Error::Eval(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
