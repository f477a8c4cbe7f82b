//! Primitive ranking: lexical featurization, a linear scorer trained with a
//! contrastive objective, negative sampling with bootstrapping, reachability
//! filtering of second hops, and recall reporting.

mod features;
mod loss;
mod model;
mod report;
mod sampling;
mod train;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use features::{
    column_value_proximity, featurize, op_cues, FeatureConfig, Idf, QuestionContext, BASE_FEATURES,
    BASE_FEATURE_NAMES,
};
pub use loss::{contrastive_grad, contrastive_loss};
pub use model::{PrimitiveScorer, RankerModel};
pub use report::{ranker_recall_report, recall_csv, RecallRow};
pub use sampling::{
    bootstrap_negatives, hard_candidates, sample_negatives, NegativeStrategy, TrainingExample,
};
pub use train::{prepare_items, train_ranker, RankerConfig, RankerItem, TrainReport};

use crate::datamodel::{Category, KnowledgeBase, Payload, Primitive};
use crate::enumerator::{second_hops_after, EnumerationResult};
use crate::error::Result;

/// How many primitives to keep per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopK {
    pub first_hop: usize,
    pub second_hop: usize,
    pub tb_cl: usize,
    pub tb_cl_vl: usize,
}

impl Default for TopK {
    fn default() -> Self {
        TopK {
            first_hop: 10,
            second_hop: 10,
            tb_cl: 15,
            tb_cl_vl: 5,
        }
    }
}

impl TopK {
    pub fn uniform(k: usize) -> Self {
        TopK {
            first_hop: k,
            second_hop: k,
            tb_cl: k,
            tb_cl_vl: k,
        }
    }

    pub fn get(&self, cat: Category) -> usize {
        match cat {
            Category::FirstHop => self.first_hop,
            Category::SecondHop => self.second_hop,
            Category::TbCl => self.tb_cl,
            Category::TbClVl => self.tb_cl_vl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrimitive {
    pub primitive: Primitive,
    pub score: f64,
}

/// Ranked primitive lists per category, best first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedPrimitives {
    pub first_hop: Vec<ScoredPrimitive>,
    pub second_hop: Vec<ScoredPrimitive>,
    pub tb_cl: Vec<ScoredPrimitive>,
    pub tb_cl_vl: Vec<ScoredPrimitive>,
}

impl RankedPrimitives {
    pub fn category(&self, cat: Category) -> &[ScoredPrimitive] {
        match cat {
            Category::FirstHop => &self.first_hop,
            Category::SecondHop => &self.second_hop,
            Category::TbCl => &self.tb_cl,
            Category::TbClVl => &self.tb_cl_vl,
        }
    }

    pub fn category_mut(&mut self, cat: Category) -> &mut Vec<ScoredPrimitive> {
        match cat {
            Category::FirstHop => &mut self.first_hop,
            Category::SecondHop => &mut self.second_hop,
            Category::TbCl => &mut self.tb_cl,
            Category::TbClVl => &mut self.tb_cl_vl,
        }
    }

    /// Builds lists in the given order with zero scores.
    pub fn from_lists(lists: [Vec<Primitive>; 4]) -> Self {
        let mut out = RankedPrimitives::default();
        for (cat, list) in Category::ALL.into_iter().zip(lists) {
            *out.category_mut(cat) = list
                .into_iter()
                .map(|primitive| ScoredPrimitive {
                    primitive,
                    score: 0.0,
                })
                .collect();
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        Category::ALL.iter().all(|c| self.category(*c).is_empty())
    }

    /// 1-based rank of `p` within its category.
    pub fn rank_of(&self, p: &Primitive) -> Option<usize> {
        self.category(p.category())
            .iter()
            .position(|s| &s.primitive == p)
            .map(|i| i + 1)
    }

    pub fn primitives(&self, cat: Category) -> impl Iterator<Item = &Primitive> {
        self.category(cat).iter().map(|s| &s.primitive)
    }

    pub fn truncate(&mut self, top_k: &TopK) {
        for cat in Category::ALL {
            self.category_mut(cat).truncate(top_k.get(cat));
        }
    }

    /// Every category reversed; used to probe order sensitivity.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        for cat in Category::ALL {
            out.category_mut(cat).reverse();
        }
        out
    }
}

/// Scores every enumerated primitive and keeps the top `k` of each category
/// in descending score order; ties keep enumeration order.
pub fn rank_topk<S: PrimitiveScorer + ?Sized>(
    scorer: &S,
    question_text: &str,
    enumeration: &EnumerationResult,
    top_k: &TopK,
) -> Result<RankedPrimitives> {
    let mut out = rank_all(scorer, question_text, enumeration)?;
    out.truncate(top_k);
    Ok(out)
}

/// Like [`rank_topk`] without truncation.
pub fn rank_all<S: PrimitiveScorer + ?Sized>(
    scorer: &S,
    question_text: &str,
    enumeration: &EnumerationResult,
) -> Result<RankedPrimitives> {
    let ctx = scorer.context(question_text);
    let mut out = RankedPrimitives::default();
    for cat in Category::ALL {
        let mut scored = enumeration
            .category(cat)
            .iter()
            .map(|p| {
                Ok(ScoredPrimitive {
                    primitive: p.clone(),
                    score: scorer.score(&ctx, p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        scored.sort_by(|a, b| b.score.total_cmp(&a.score));
        *out.category_mut(cat) = scored;
    }
    Ok(out)
}

/// Keeps the second hops that continue some retained first hop, under the
/// same no-backtrack rule as enumeration. Order is preserved.
pub fn filter_reachable(
    first: &[ScoredPrimitive],
    second: &[ScoredPrimitive],
    kb: &KnowledgeBase,
    allow_backtrack: bool,
) -> Vec<ScoredPrimitive> {
    let mut reachable: BTreeSet<(String, crate::datamodel::Direction)> = BTreeSet::new();
    for f in first {
        if let Payload::FirstHop {
            entity,
            relation,
            direction,
        } = f.primitive.payload()
        {
            reachable.extend(second_hops_after(
                kb,
                entity,
                relation,
                *direction,
                allow_backtrack,
            ));
        }
    }
    second
        .iter()
        .filter(|s| match s.primitive.payload() {
            Payload::SecondHop {
                relation,
                direction,
            } => reachable.contains(&(relation.clone(), *direction)),
            _ => false,
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Direction, Triple};

    struct ByLen;

    impl PrimitiveScorer for ByLen {
        fn context(&self, text: &str) -> QuestionContext {
            QuestionContext::new(text, 3)
        }
        fn score(&self, _: &QuestionContext, p: &Primitive) -> Result<f64> {
            Ok(p.surface().len() as f64)
        }
    }

    fn enumeration(cols: &[&str]) -> EnumerationResult {
        EnumerationResult {
            tb_cl: cols.iter().map(|c| Primitive::tb_cl("t", c)).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn topk_orders_and_truncates() {
        let e = enumeration(&["a", "ccc", "bb", "dd"]);
        let r = rank_topk(&ByLen, "q", &e, &TopK::uniform(3)).unwrap();
        let names: Vec<&str> = r.tb_cl.iter().map(|s| s.primitive.surface()).collect();
        assert_eq!(names, vec!["t.ccc", "t.bb", "t.dd"]);
        let all = rank_topk(&ByLen, "q", &e, &TopK::uniform(99)).unwrap();
        assert_eq!(all.tb_cl.len(), 4);
        assert_eq!(&all.tb_cl[..3], &r.tb_cl[..]);
    }

    fn ranked(ps: Vec<Primitive>) -> Vec<ScoredPrimitive> {
        ps.into_iter()
            .map(|primitive| ScoredPrimitive {
                primitive,
                score: 0.0,
            })
            .collect()
    }

    #[test]
    fn reachability_uses_any_first_hop() {
        let kb = KnowledgeBase::from_triples(vec![
            Triple::entity("x1", "r1", "e"),
            Triple::entity("x2", "r2", "e"),
            Triple::entity("x3", "r3", "e"),
            Triple::entity("x3", "s", "y"),
        ]);
        let first = ranked(vec![
            Primitive::first_hop("e", "r1", Direction::In),
            Primitive::first_hop("e", "r2", Direction::In),
            Primitive::first_hop("e", "r3", Direction::In),
        ]);
        let second = ranked(vec![
            Primitive::second_hop("s", Direction::Out),
            Primitive::second_hop("absent", Direction::Out),
        ]);
        let kept = filter_reachable(&first, &second, &kb, false);
        assert_eq!(
            kept,
            ranked(vec![Primitive::second_hop("s", Direction::Out)])
        );
    }
}
