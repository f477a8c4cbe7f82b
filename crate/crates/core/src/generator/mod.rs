//! Composition of final logical forms from ranked primitives.
//!
//! A grammar-constrained beam search builds candidate S-expressions or SQL
//! queries from the supplied primitives, a linear [`CompositionScorer`]
//! orders them, and execution-augmented inference returns the first
//! candidate with a non-empty answer, falling back to a rule-based form.

mod db;
mod features;
mod kb;
mod scorer;
mod train;
mod triggers;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use features::{
    feature_index, feature_names, form_features, is_position_feature, used_primitives,
    ComposeContext, Features, Op, COMPOSITION_DIM,
};
pub use scorer::CompositionScorer;
pub use train::{train_composition_scorer, ComposerConfig, ComposerItem, ComposerReport};
pub use triggers::{Trigger, Triggers};

use crate::datamodel::{Category, Payload, Primitive};
use crate::logical::{execute, LogicalForm, Store};
use crate::ranker::{filter_reachable, RankedPrimitives};
use crate::sexpr::{JoinRel, SExpr};
use crate::sqlcore::{BoolExpr, Condition, SelectItem, SqlQuery};

/// Search limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Partial forms (KB bases, SQL select heads) kept before expansion.
    pub beam: usize,
    /// Candidates returned.
    pub k: usize,
    /// WHERE sets kept per select head.
    pub inner_beam: usize,
    pub max_where: usize,
    pub set_ops: bool,
    pub allow_backtrack: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            beam: 20,
            k: 10,
            inner_beam: 8,
            max_where: 3,
            set_ops: true,
            allow_backtrack: false,
        }
    }
}

/// A scored composition.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub form: LogicalForm,
    pub score: f64,
    pub primitives: Vec<Primitive>,
}

/// Permutes each category list independently with a seeded RNG.
pub fn shuffle_ranked(ranked: &RankedPrimitives, seed: u64) -> RankedPrimitives {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ranked.clone();
    for c in Category::ALL {
        out.category_mut(c).shuffle(&mut rng);
    }
    out
}

/// Text form of the generator input. KB:
/// `[X; <|second_hop|> s1, s2 ; <|first_hop|> f1, f2]`; DB:
/// `[X; |t1| c1, c2 op v |t2| ...]` with tables in order of first appearance.
/// Empty KB categories are left out. With a seed, each category is shuffled first.
pub fn linearize_input(
    question: &str,
    ranked: &RankedPrimitives,
    shuffle_seed: Option<u64>,
) -> String {
    let shuffled;
    let ranked = match shuffle_seed {
        Some(s) => {
            shuffled = shuffle_ranked(ranked, s);
            &shuffled
        }
        None => ranked,
    };
    let kb_part = |c: Category, tag: &str| -> Option<String> {
        let items: Vec<String> = ranked
            .primitives(c)
            .map(|p| p.surface().to_string())
            .collect();
        (!items.is_empty()).then(|| format!("{tag} {}", items.join(", ")))
    };
    let kb: Vec<String> = [
        kb_part(Category::SecondHop, "<|second_hop|>"),
        kb_part(Category::FirstHop, "<|first_hop|>"),
    ]
    .into_iter()
    .flatten()
    .collect();
    let mut tables: Vec<(String, Vec<String>)> = Vec::new();
    let mut add = |table: &str, item: String| match tables.iter_mut().find(|(t, _)| t == table) {
        Some((_, items)) => items.push(item),
        None => tables.push((table.to_string(), vec![item])),
    };
    for p in ranked
        .primitives(Category::TbCl)
        .chain(ranked.primitives(Category::TbClVl))
    {
        match p.payload() {
            Payload::TbCl { table, column } => add(table, column.clone()),
            Payload::TbClVl {
                table,
                column,
                op,
                value,
            } => add(
                table,
                format!("{column} {} {value}", op.symbol().to_lowercase()),
            ),
            _ => {}
        }
    }
    let db: Vec<String> = tables
        .into_iter()
        .map(|(t, items)| format!("|{t}| {}", items.join(", ")))
        .collect();
    let mut parts = kb;
    if !db.is_empty() {
        parts.push(db.join(" "));
    }
    format!("[{question}; {}]", parts.join(" ; "))
}

/// All candidate forms with features, before the final top-k cut.
pub fn candidate_pool(
    ctx: &ComposeContext<'_>,
    scorer: &CompositionScorer,
    cfg: &GeneratorConfig,
) -> Vec<(LogicalForm, Features)> {
    match ctx.store {
        Store::Kb(kb) => kb::kb_pool(ctx, kb, scorer, cfg),
        Store::Db(db) => db::db_pool(ctx, db, scorer, cfg),
    }
}

/// Top `k` candidates in descending score order; ties break on the printed form.
pub fn compose_candidates(
    question: &str,
    ranked: &RankedPrimitives,
    store: Store<'_>,
    scorer: &CompositionScorer,
    cfg: &GeneratorConfig,
) -> Vec<Candidate> {
    let ctx = ComposeContext::new(question, ranked, store, cfg.allow_backtrack);
    top_candidates(&ctx, scorer, cfg)
}

pub(crate) fn top_candidates(
    ctx: &ComposeContext<'_>,
    scorer: &CompositionScorer,
    cfg: &GeneratorConfig,
) -> Vec<Candidate> {
    let mut scored: Vec<(f64, String, LogicalForm)> = candidate_pool(ctx, scorer, cfg)
        .into_iter()
        .map(|(lf, f)| (scorer.score(&f), lf.to_string(), lf))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    scored.truncate(cfg.k);
    scored
        .into_iter()
        .map(|(score, _, form)| Candidate {
            primitives: used_primitives(&form),
            form,
            score,
        })
        .collect()
}

/// Where the final form of an inference came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Candidate,
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub form: LogicalForm,
    pub answers: Vec<String>,
    pub source: Source,
}

/// Returns the first candidate that executes to a non-empty answer, else the
/// rule-based fallback. The returned form always executes without error.
pub fn execution_augmented_infer(
    candidates: &[Candidate],
    store: Store<'_>,
    ranked: &RankedPrimitives,
    allow_backtrack: bool,
) -> Inference {
    for c in candidates {
        if let Ok(ex) = execute(&c.form, store) {
            if !ex.empty {
                return Inference {
                    form: c.form.clone(),
                    answers: ex.answers,
                    source: Source::Candidate,
                };
            }
        }
    }
    let form = fallback_form(ranked, store, allow_backtrack);
    let answers = execute(&form, store).map(|e| e.answers).unwrap_or_default();
    Inference {
        form,
        answers,
        source: Source::Fallback,
    }
}

fn executes(lf: &LogicalForm, store: Store<'_>) -> Option<bool> {
    execute(lf, store).ok().map(|e| !e.empty)
}

/// Rule-based form from the top primitives. KB: `(JOIN r e)` from the top
/// first hop, extended by the best reachable second hop when the one-hop
/// form is empty. DB: `SELECT t.c FROM t` from the top column, with the top
/// condition on that table added when the result stays non-empty. Without
/// usable primitives the no-answer sentinel is returned.
pub fn fallback_form(
    ranked: &RankedPrimitives,
    store: Store<'_>,
    allow_backtrack: bool,
) -> LogicalForm {
    match store {
        Store::Kb(kb) => {
            let Some(top) = ranked.first_hop.first() else {
                return LogicalForm::NoAnswer;
            };
            let Payload::FirstHop {
                entity,
                relation,
                direction,
            } = top.primitive.payload()
            else {
                return LogicalForm::NoAnswer;
            };
            let jr = |r: &str, d| match d {
                crate::datamodel::Direction::In => JoinRel::Forward(r.to_string()),
                crate::datamodel::Direction::Out => JoinRel::Reverse(r.to_string()),
            };
            let one = SExpr::Join(
                jr(relation, *direction),
                Box::new(SExpr::Entity(entity.clone())),
            );
            let one_lf = LogicalForm::Kb(one.clone());
            if executes(&one_lf, store) == Some(true) {
                return one_lf;
            }
            let reachable = filter_reachable(
                &ranked.first_hop[..1],
                &ranked.second_hop,
                kb,
                allow_backtrack,
            );
            if let Some(Payload::SecondHop {
                relation: r2,
                direction: d2,
            }) = reachable.first().map(|s| s.primitive.payload())
            {
                let two = LogicalForm::Kb(SExpr::Join(jr(r2, *d2), Box::new(one)));
                if executes(&two, store).is_some() {
                    return two;
                }
            }
            if executes(&one_lf, store).is_some() {
                one_lf
            } else {
                LogicalForm::NoAnswer
            }
        }
        Store::Db(db) => {
            let col = ranked
                .tb_cl
                .first()
                .and_then(|s| match s.primitive.payload() {
                    Payload::TbCl { table, column } => Some((table.clone(), column.clone())),
                    _ => None,
                })
                .or_else(|| {
                    ranked
                        .tb_cl_vl
                        .first()
                        .and_then(|s| match s.primitive.payload() {
                            Payload::TbClVl { table, column, .. } => {
                                Some((table.clone(), column.clone()))
                            }
                            _ => None,
                        })
                });
            let Some((table, column)) = col else {
                return LogicalForm::NoAnswer;
            };
            let base = SqlQuery::simple(vec![SelectItem::column(&table, &column)], &table);
            let cond = ranked
                .tb_cl_vl
                .iter()
                .find_map(|s| match s.primitive.payload() {
                    Payload::TbClVl {
                        table: t,
                        column: c,
                        op,
                        value,
                    } if *t == table && crate::datamodel::CondOp::COMPARISONS.contains(op) => {
                        Some(Condition::compare(t, c, *op, value.clone()))
                    }
                    _ => None,
                });
            if let Some(c) = cond {
                let mut q = base.clone();
                q.where_clause = Some(BoolExpr::Cond(c));
                let lf = LogicalForm::Db(q);
                if executes(&lf, Store::Db(db)) == Some(true) {
                    return lf;
                }
            }
            let lf = LogicalForm::Db(base);
            if executes(&lf, store).is_some() {
                lf
            } else {
                LogicalForm::NoAnswer
            }
        }
    }
}
