//! Question-relevant primitive enumeration.
//!
//! For a knowledge base the candidates are the relations around the linked
//! entities (first hops) and the relations one step further (second hops),
//! kept as separate lists so their number grows additively with the fan-outs.
//! For a database they are every `table.column` plus literal conditions built
//! from fuzzy-matched cell values and numbers mentioned in the question.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::datamodel::{
    Category, ColumnType, CondOp, Database, Direction, KnowledgeBase, Payload, Primitive, Question,
    Value,
};
use crate::logical::Store;
use crate::text::{fuzzy_similarity, numbers, question_phrases};

/// Enumeration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnumConfig {
    /// Minimum similarity for entity-name and cell-value matches.
    pub fuzzy_threshold: f64,
    /// Longest question n-gram considered when matching names and cells.
    pub max_ngram: usize,
    /// Operators paired with each question number and number column.
    pub numeric_ops: Vec<CondOp>,
    /// Whether a second hop may return along the first hop's own edge.
    pub allow_backtrack: bool,
    /// Add same-row companion values for fuzzy-matched cells.
    pub supplement_columns: bool,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            fuzzy_threshold: 0.85,
            max_ngram: 5,
            numeric_ops: vec![CondOp::Eq, CondOp::Gt, CondOp::Lt, CondOp::Ge, CondOp::Le],
            allow_backtrack: false,
            supplement_columns: false,
        }
    }
}

/// Candidates of one question, one list per category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub question_id: String,
    pub first_hop: Vec<Primitive>,
    pub second_hop: Vec<Primitive>,
    pub tb_cl: Vec<Primitive>,
    pub tb_cl_vl: Vec<Primitive>,
}

impl EnumerationResult {
    pub fn category(&self, cat: Category) -> &[Primitive] {
        match cat {
            Category::FirstHop => &self.first_hop,
            Category::SecondHop => &self.second_hop,
            Category::TbCl => &self.tb_cl,
            Category::TbClVl => &self.tb_cl_vl,
        }
    }

    pub fn category_mut(&mut self, cat: Category) -> &mut Vec<Primitive> {
        match cat {
            Category::FirstHop => &mut self.first_hop,
            Category::SecondHop => &mut self.second_hop,
            Category::TbCl => &mut self.tb_cl,
            Category::TbClVl => &mut self.tb_cl_vl,
        }
    }

    /// Per-category counts in [`Category::ALL`] order.
    pub fn counts(&self) -> [usize; 4] {
        Category::ALL.map(|c| self.category(c).len())
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn contains(&self, p: &Primitive) -> bool {
        self.category(p.category()).contains(p)
    }

    fn push(&mut self, p: Primitive) {
        let list = self.category_mut(p.category());
        if !list.contains(&p) {
            list.push(p);
        }
    }
}

/// Entity ids for a question: the given mentions verbatim when present,
/// otherwise entities whose display name fuzzy-matches a question phrase,
/// best match first.
pub fn link_entities(question: &Question, kb: &KnowledgeBase, cfg: &EnumConfig) -> Vec<String> {
    if let Some(m) = &question.entity_mentions {
        return m.clone();
    }
    let phrases = question_phrases(&question.text, cfg.max_ngram);
    let mut scored: Vec<(f64, &String)> = kb
        .names()
        .iter()
        .filter_map(|(id, name)| {
            let s = fuzzy_similarity(&phrases, name);
            (s >= cfg.fuzzy_threshold).then_some((s, id))
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().map(|(_, id)| id.clone()).collect()
}

/// Entities reached from `entity` over one `(relation, direction)` step.
pub fn hop_frontier<'a>(
    kb: &'a KnowledgeBase,
    entity: &str,
    relation: &'a str,
    direction: Direction,
) -> impl Iterator<Item = &'a str> + 'a {
    kb.entity_neighbors(entity, relation, direction)
}

/// Second-hop `(relation, direction)` pairs available after a first hop.
pub fn second_hops_after(
    kb: &KnowledgeBase,
    entity: &str,
    relation: &str,
    direction: Direction,
    allow_backtrack: bool,
) -> BTreeSet<(String, Direction)> {
    let mut out = BTreeSet::new();
    let frontier: BTreeSet<&str> = hop_frontier(kb, entity, relation, direction).collect();
    for x in frontier {
        for d2 in [Direction::In, Direction::Out] {
            for (r2, _) in kb.edges(x, d2) {
                if !allow_backtrack && r2 == relation && d2 == direction.reverse() {
                    continue;
                }
                out.insert((r2.clone(), d2));
            }
        }
    }
    out
}

fn first_hops_of(kb: &KnowledgeBase, entity: &str) -> Vec<(String, Direction)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for d in [Direction::In, Direction::Out] {
        for (r, _) in kb.edges(entity, d) {
            if seen.insert((r.clone(), d)) {
                out.push((r.clone(), d));
            }
        }
    }
    out
}

/// First hops around each linked entity and the second hops reachable from them.
pub fn enumerate_kb_primitives(
    question: &Question,
    kb: &KnowledgeBase,
    linked: &[String],
    cfg: &EnumConfig,
) -> EnumerationResult {
    let mut res = EnumerationResult {
        question_id: question.id.clone(),
        ..Default::default()
    };
    for e in linked {
        for (r, d) in first_hops_of(kb, e) {
            res.push(Primitive::first_hop(e, &r, d));
            for (r2, d2) in second_hops_after(kb, e, &r, d, cfg.allow_backtrack) {
                res.push(Primitive::second_hop(&r2, d2));
            }
        }
    }
    res
}

/// Every column, plus conditions from matched text cells and question numbers.
pub fn enumerate_db_primitives(
    question: &Question,
    db: &Database,
    cfg: &EnumConfig,
) -> EnumerationResult {
    let mut res = EnumerationResult {
        question_id: question.id.clone(),
        ..Default::default()
    };
    let phrases = question_phrases(&question.text, cfg.max_ngram);
    let nums = numbers(&question.text);
    let mut matched = Vec::new();
    for t in db.tables() {
        for c in &t.columns {
            res.push(Primitive::tb_cl(&t.name, &c.name));
        }
    }
    for t in db.tables() {
        for (ci, c) in t.columns.iter().enumerate() {
            match c.ty {
                ColumnType::Text => {
                    let mut seen = BTreeSet::new();
                    for row in &t.rows {
                        if let Value::Text(cell) = &row[ci] {
                            if seen.insert(cell.as_str())
                                && fuzzy_similarity(&phrases, cell) >= cfg.fuzzy_threshold
                            {
                                let p = Primitive::tb_cl_vl(
                                    &t.name,
                                    &c.name,
                                    CondOp::Eq,
                                    row[ci].clone(),
                                );
                                matched.push(p.clone());
                                res.push(p);
                            }
                        }
                    }
                }
                ColumnType::Number => {
                    for n in &nums {
                        for op in &cfg.numeric_ops {
                            res.push(Primitive::tb_cl_vl(
                                &t.name,
                                &c.name,
                                *op,
                                Value::Number(*n),
                            ));
                        }
                    }
                }
            }
        }
    }
    if cfg.supplement_columns {
        for p in supplement_column_names(db, &matched) {
            res.push(p);
        }
    }
    res
}

/// Same-row companions of matched cells: for the first row holding each
/// matched value, every other non-null cell as an equality condition.
pub fn supplement_column_names(db: &Database, matched: &[Primitive]) -> Vec<Primitive> {
    let mut out: Vec<Primitive> = Vec::new();
    for p in matched {
        let Payload::TbClVl {
            table,
            column,
            value,
            ..
        } = p.payload()
        else {
            continue;
        };
        let Some(t) = db.table(table) else { continue };
        let Some(ci) = t.column_index(column) else {
            continue;
        };
        let Some(row) = t.rows.iter().find(|r| &r[ci] == value) else {
            continue;
        };
        for (j, cell) in row.iter().enumerate() {
            if j == ci || cell.is_null() {
                continue;
            }
            let q = Primitive::tb_cl_vl(table, &t.columns[j].name, CondOp::Eq, cell.clone());
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

/// Enumerates against whichever store the question targets.
pub fn enumerate(question: &Question, store: Store<'_>, cfg: &EnumConfig) -> EnumerationResult {
    match store {
        Store::Kb(kb) => {
            let linked = link_entities(question, kb, cfg);
            enumerate_kb_primitives(question, kb, &linked, cfg)
        }
        Store::Db(db) => enumerate_db_primitives(question, db, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Column, Modality, Table, Triple};
    use crate::oracle::enumerate_logical_forms_kb;
    use crate::oracle::gen::star_kb;

    fn q(text: &str) -> Question {
        Question::new("q1", text, Modality::Db)
    }

    #[test]
    fn explicit_mentions_pass_through() {
        let kb = KnowledgeBase::default();
        let question = Question::new("q", "anything", Modality::Kb).with_mentions(&["e7"]);
        assert_eq!(
            link_entities(&question, &kb, &EnumConfig::default()),
            vec!["e7"]
        );
    }

    #[test]
    fn exact_and_fuzzy_name_matches() {
        let names = [
            ("m.1", "Azeotrope"),
            ("m.2", "department head"),
            ("m.3", "company"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        let kb = KnowledgeBase::new(vec![], names);
        let cfg = EnumConfig::default();
        let a = Question::new("a", "What boils Azeotrope at?", Modality::Kb);
        assert_eq!(link_entities(&a, &kb, &cfg), vec!["m.1"]);
        let b = Question::new(
            "b",
            "How many heads of departments are older than 56?",
            Modality::Kb,
        );
        assert_eq!(link_entities(&b, &kb, &cfg), vec!["m.2"]);
    }

    #[test]
    fn star_counts_are_additive() {
        let kb = star_kb(5, 7);
        let question = Question::new("s", "", Modality::Kb);
        let res =
            enumerate_kb_primitives(&question, &kb, &["center".into()], &EnumConfig::default());
        assert_eq!((res.first_hop.len(), res.second_hop.len()), (5, 7));
        let forms = enumerate_logical_forms_kb(&["center".into()], &kb, false);
        assert_eq!(forms.len(), 5 + 35);
        assert!(enumerate_kb_primitives(&question, &kb, &[], &EnumConfig::default()).total() == 0);
    }

    #[test]
    fn single_triple_with_backtracking() {
        let kb = KnowledgeBase::from_triples(vec![Triple::entity("e1", "r1", "e2")]);
        let question = Question::new("s", "", Modality::Kb);
        let cfg = EnumConfig {
            allow_backtrack: true,
            ..Default::default()
        };
        let res = enumerate_kb_primitives(&question, &kb, &["e1".into()], &cfg);
        assert_eq!(
            res.first_hop,
            vec![Primitive::first_hop("e1", "r1", Direction::Out)]
        );
        assert_eq!(
            res.second_hop,
            vec![Primitive::second_hop("r1", Direction::In)]
        );
        let strict =
            enumerate_kb_primitives(&question, &kb, &["e1".into()], &EnumConfig::default());
        assert!(strict.second_hop.is_empty());
    }

    fn head_db() -> Database {
        Database::new(vec![
            Table {
                name: "head".into(),
                columns: vec![
                    Column::new("name", ColumnType::Text),
                    Column::new("age", ColumnType::Number),
                ],
                rows: vec![
                    vec![Value::Text("Kyle".into()), Value::Number(52.0)],
                    vec![Value::Text("Ann".into()), Value::Number(61.0)],
                ],
            },
            Table {
                name: "dept".into(),
                columns: vec![
                    Column::new("id", ColumnType::Number),
                    Column::new("title", ColumnType::Text),
                    Column::new("budget", ColumnType::Number),
                ],
                rows: vec![],
            },
        ])
        .unwrap()
    }

    #[test]
    fn schema_only() {
        let res = enumerate_db_primitives(
            &q("Which heads are there?"),
            &head_db(),
            &EnumConfig::default(),
        );
        assert_eq!(res.tb_cl.len(), 5);
        assert!(res.tb_cl_vl.is_empty());
    }

    #[test]
    fn numbers_pair_with_number_columns() {
        let res = enumerate_db_primitives(
            &q("How many heads of departments are older than 56?"),
            &head_db(),
            &EnumConfig::default(),
        );
        let want = Primitive::tb_cl_vl("head", "age", CondOp::Gt, Value::Number(56.0));
        assert!(res.tb_cl_vl.contains(&want));
        // three number columns times five operators
        assert_eq!(res.tb_cl_vl.len(), 15);
    }

    #[test]
    fn cell_values_match() {
        let res =
            enumerate_db_primitives(&q("How old is Kyle?"), &head_db(), &EnumConfig::default());
        assert_eq!(
            res.tb_cl_vl,
            vec![Primitive::tb_cl_vl(
                "head",
                "name",
                CondOp::Eq,
                Value::Text("Kyle".into())
            )]
        );
    }

    #[test]
    fn supplement_companions() {
        let db = Database::new(vec![Table {
            name: "player".into(),
            columns: vec![
                Column::new("name", ColumnType::Text),
                Column::new("pick#", ColumnType::Number),
                Column::new("round", ColumnType::Text),
            ],
            rows: vec![
                vec![
                    Value::Text("Kyle".into()),
                    Value::Number(7.0),
                    Value::Text("3rd".into()),
                ],
                vec![Value::Text("Bo".into()), Value::Null, Value::Null],
            ],
        }])
        .unwrap();
        let kyle = Primitive::tb_cl_vl("player", "name", CondOp::Eq, Value::Text("Kyle".into()));
        assert_eq!(
            supplement_column_names(&db, &[kyle]),
            vec![
                Primitive::tb_cl_vl("player", "pick#", CondOp::Eq, Value::Number(7.0)),
                Primitive::tb_cl_vl("player", "round", CondOp::Eq, Value::Text("3rd".into())),
            ]
        );
        assert!(supplement_column_names(&db, &[]).is_empty());
        let bo = Primitive::tb_cl_vl("player", "name", CondOp::Eq, Value::Text("Bo".into()));
        assert!(supplement_column_names(&db, &[bo]).is_empty());
    }
}
