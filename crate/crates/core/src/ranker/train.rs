use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, Idf, QuestionContext};
use super::loss::{contrastive_grad, contrastive_loss};
use super::model::{PrimitiveScorer, RankerModel};
use super::sampling::{bootstrap_negatives, sample_negatives, NegativeStrategy, TrainingExample};
use super::TopK;
use crate::datamodel::{Category, Modality, Payload, Primitive, Question};
use crate::enumerator::{enumerate, EnumConfig, EnumerationResult};
use crate::error::{Error, Result};
use crate::logical::{LogicalForm, Store};

/// Ranker training and inference settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankerConfig {
    pub features: FeatureConfig,
    pub epochs: usize,
    pub lr: f64,
    pub k_negatives: usize,
    pub strategy: NegativeStrategy,
    /// Bootstrap after every this many epochs; 0 disables bootstrapping.
    pub bootstrap_every: usize,
    pub top_k: TopK,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self::for_modality(Modality::Kb)
    }
}

impl RankerConfig {
    /// 3 epochs, 96 negatives and bootstrapping every epoch for KBs; 10
    /// epochs, 48 negatives and every second epoch for databases.
    pub fn for_modality(m: Modality) -> Self {
        let (epochs, k_negatives, bootstrap_every) = match m {
            Modality::Kb => (3, 96, 1),
            Modality::Db => (10, 48, 2),
        };
        RankerConfig {
            features: FeatureConfig::default(),
            epochs,
            lr: 0.05,
            k_negatives,
            strategy: NegativeStrategy::Hard,
            bootstrap_every,
            top_k: TopK::default(),
        }
    }
}

/// A question with its gold primitives and enumerated candidates.
#[derive(Debug, Clone)]
pub struct RankerItem<'a> {
    pub question: Question,
    pub gold: Vec<Primitive>,
    pub enumeration: EnumerationResult,
    pub store: Store<'a>,
}

/// Parses golds and enumerates candidates. With `teacher_forcing`, KB
/// questions are linked to the entities of their gold first hops.
pub fn prepare_items<'a>(
    questions: &[Question],
    store: Store<'a>,
    cfg: &EnumConfig,
    teacher_forcing: bool,
) -> Result<Vec<RankerItem<'a>>> {
    questions
        .iter()
        .map(|q| {
            let gold = match &q.gold_logical_form {
                Some(text) => LogicalForm::parse(text, q.modality)
                    .map_err(|e| Error::Train(format!("question {}: gold form: {e}", q.id)))?
                    .primitives(),
                None => Vec::new(),
            };
            let mut question = q.clone();
            if teacher_forcing && q.modality == Modality::Kb {
                let mut ents: Vec<String> = Vec::new();
                for p in &gold {
                    if let Payload::FirstHop { entity, .. } = p.payload() {
                        if !ents.contains(entity) {
                            ents.push(entity.clone());
                        }
                    }
                }
                if !ents.is_empty() {
                    question.entity_mentions = Some(ents);
                }
            }
            let enumeration = enumerate(&question, store, cfg);
            Ok(RankerItem {
                question,
                gold,
                enumeration,
                store,
            })
        })
        .collect()
}

/// Training statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean contrastive loss of each epoch.
    pub epoch_loss: Vec<f64>,
    pub examples: usize,
    /// Questions whose gold primitives were all enumerated.
    pub covered_questions: usize,
    pub questions_with_gold: usize,
    /// Gold primitives missing from the enumeration, skipped.
    pub unenumerated_primitives: usize,
    pub bootstrap_added: usize,
}

impl TrainReport {
    pub fn coverage(&self) -> f64 {
        if self.questions_with_gold == 0 {
            0.0
        } else {
            self.covered_questions as f64 / self.questions_with_gold as f64
        }
    }
}

/// Builds one example per enumerated gold primitive with a non-empty pool.
pub fn build_examples(items: &[RankerItem<'_>], report: &mut TrainReport) -> Vec<TrainingExample> {
    let mut out = Vec::new();
    for (qi, item) in items.iter().enumerate() {
        if item.gold.is_empty() {
            continue;
        }
        report.questions_with_gold += 1;
        let missing = item
            .gold
            .iter()
            .filter(|g| !item.enumeration.contains(g))
            .count();
        report.unenumerated_primitives += missing;
        if missing == 0 {
            report.covered_questions += 1;
        }
        let gold_first: Vec<Primitive> = item
            .gold
            .iter()
            .filter(|g| g.category() == Category::FirstHop)
            .cloned()
            .collect();
        let kb = match item.store {
            Store::Kb(kb) => Some(kb),
            Store::Db(_) => None,
        };
        for g in item.gold.iter().filter(|g| item.enumeration.contains(g)) {
            let pool: Vec<Primitive> = item
                .enumeration
                .category(g.category())
                .iter()
                .filter(|p| !item.gold.contains(p))
                .cloned()
                .collect();
            if pool.is_empty() {
                continue;
            }
            out.push(TrainingExample::new(
                qi,
                &item.question.text,
                g.clone(),
                pool,
                &gold_first,
                kb,
                false,
            ));
        }
    }
    out
}

/// Trains a linear ranker with SGD on the contrastive loss. Deterministic
/// for a given seed; gold primitives absent from the enumeration are skipped.
pub fn train_ranker(
    items: &[RankerItem<'_>],
    cfg: &RankerConfig,
    seed: u64,
) -> Result<(RankerModel, TrainReport)> {
    let mut report = TrainReport::default();
    let mut examples = build_examples(items, &mut report);
    report.examples = examples.len();
    if examples.is_empty() {
        return Err(Error::Train(
            "no trainable example: no gold primitive was enumerated with a negative".into(),
        ));
    }
    let idf = Idf::fit(items.iter().map(|i| i.question.text.as_str()));
    let mut model = RankerModel::new(cfg.features.clone(), idf);
    let contexts: Vec<QuestionContext> = items
        .iter()
        .map(|i| model.context(&i.question.text))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &ei in &order {
            let ex = &examples[ei];
            let mut negs: Vec<Primitive> =
                ex.negatives.iter().take(cfg.k_negatives).cloned().collect();
            let fresh = sample_negatives(cfg.strategy, ex, cfg.k_negatives, &mut rng);
            for p in fresh {
                if negs.len() >= cfg.k_negatives {
                    break;
                }
                if !negs.contains(&p) {
                    negs.push(p);
                }
            }
            let ctx = &contexts[ex.question];
            let fpos = model.featurize(ctx, &ex.positive);
            let fnegs: Vec<Vec<f64>> = negs.iter().map(|n| model.featurize(ctx, n)).collect();
            let spos = model.score_features(&fpos)?;
            let snegs = fnegs
                .iter()
                .map(|f| model.score_features(f))
                .collect::<Result<Vec<_>>>()?;
            total += contrastive_loss(spos, &snegs)?;
            let (gpos, gnegs) = contrastive_grad(spos, &snegs)?;
            let mut grad_b = gpos;
            for (w, x) in model.weights.iter_mut().zip(&fpos) {
                *w -= cfg.lr * gpos * x;
            }
            for (g, f) in gnegs.iter().zip(&fnegs) {
                grad_b += g;
                for (w, x) in model.weights.iter_mut().zip(f) {
                    *w -= cfg.lr * g * x;
                }
            }
            model.bias -= cfg.lr * grad_b;
        }
        report.epoch_loss.push(total / examples.len() as f64);
        if cfg.bootstrap_every > 0
            && (epoch + 1) % cfg.bootstrap_every == 0
            && epoch + 1 < cfg.epochs
        {
            report.bootstrap_added += bootstrap_negatives(&model, &mut examples, cfg.k_negatives)?;
        }
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Column, ColumnType, Database, Table};
    use crate::ranker::{rank_topk, ranker_recall_report};

    /// Tables whose column names appear verbatim in exactly one question each.
    pub(crate) fn separable() -> (Database, Vec<Question>) {
        let words = [
            "salary",
            "budget",
            "height",
            "weight",
            "color",
            "price",
            "rating",
            "speed",
            "capacity",
            "population",
            "altitude",
            "distance",
        ];
        let tables = ["alpha", "beta", "gamma"];
        let mut ts = Vec::new();
        for (ti, t) in tables.iter().enumerate() {
            let cols = words[ti * 4..ti * 4 + 4]
                .iter()
                .map(|w| Column::new(w, ColumnType::Number))
                .collect();
            ts.push(Table {
                name: t.to_string(),
                columns: cols,
                rows: vec![],
            });
        }
        let db = Database::new(ts).unwrap();
        let mut qs = Vec::new();
        for (i, w) in words.iter().enumerate() {
            let t = tables[i / 4];
            for (j, lead) in ["what is the", "show every", "list the"].iter().enumerate() {
                let text = format!("{lead} {w} of each {t}");
                qs.push(
                    Question::new(&format!("q{i}_{j}"), &text, Modality::Db)
                        .with_gold(&format!("SELECT {t}.{w} FROM {t}")),
                );
            }
        }
        (db, qs)
    }

    fn train(
        db: &Database,
        qs: &[Question],
        cfg: &RankerConfig,
        seed: u64,
    ) -> (RankerModel, TrainReport) {
        let items = prepare_items(qs, Store::Db(db), &EnumConfig::default(), true).unwrap();
        train_ranker(&items, cfg, seed).unwrap()
    }

    #[test]
    fn separable_corpus_reaches_full_recall() {
        let (db, qs) = separable();
        let cfg = RankerConfig::for_modality(Modality::Db);
        let (m, report) = train(&db, &qs, &cfg, 7);
        let items = prepare_items(&qs, Store::Db(&db), &EnumConfig::default(), true).unwrap();
        let rows = ranker_recall_report(&m, &items, &[1], "all").unwrap();
        assert_eq!(rows[0].recall, 1.0);
        for w in report.epoch_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-3, "{:?}", report.epoch_loss);
        }
        let q = &items[0];
        let r = rank_topk(&m, &q.question.text, &q.enumeration, &TopK::uniform(1)).unwrap();
        assert_eq!(r.tb_cl[0].primitive, q.gold[0]);
    }

    #[test]
    fn zero_lr_keeps_initial_weights() {
        let (db, qs) = separable();
        let cfg = RankerConfig {
            lr: 0.0,
            ..RankerConfig::for_modality(Modality::Db)
        };
        let (m, _) = train(&db, &qs, &cfg, 1);
        assert!(m.weights.iter().all(|w| *w == 0.0) && m.bias == 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let (db, qs) = separable();
        let cfg = RankerConfig::for_modality(Modality::Db);
        assert_eq!(train(&db, &qs, &cfg, 5).0, train(&db, &qs, &cfg, 5).0);
    }

    #[test]
    fn no_trainable_example_errors() {
        let (db, _) = separable();
        let qs =
            vec![Question::new("x", "nothing", Modality::Db)
                .with_gold("SELECT alpha.zzz FROM alpha")];
        let items: Vec<RankerItem> =
            prepare_items(&qs, Store::Db(&db), &EnumConfig::default(), true).unwrap();
        assert!(matches!(
            train_ranker(&items, &RankerConfig::default(), 0),
            Err(Error::Train(_))
        ));
    }
}
