use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::PrimitiveScorer;
use crate::datamodel::{Category, KnowledgeBase, Payload, Primitive};
use crate::enumerator::second_hops_after;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeStrategy {
    Random,
    Hard,
}

/// One positive primitive of a training question with its candidate pool.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    /// Index of the question in the training corpus.
    pub question: usize,
    pub question_text: String,
    pub category: Category,
    pub positive: Primitive,
    /// Same-category enumerated candidates that are not gold for this question.
    pub pool: Vec<Primitive>,
    /// Members of `pool` satisfying the hard-negative rule, in pool order.
    pub hard: Vec<Primitive>,
    /// False positives collected by bootstrapping.
    pub negatives: Vec<Primitive>,
}

impl TrainingExample {
    pub fn new(
        question: usize,
        question_text: &str,
        positive: Primitive,
        pool: Vec<Primitive>,
        gold_first_hops: &[Primitive],
        kb: Option<&KnowledgeBase>,
        allow_backtrack: bool,
    ) -> Self {
        let hard = hard_candidates(&positive, &pool, gold_first_hops, kb, allow_backtrack);
        TrainingExample {
            question,
            question_text: question_text.to_string(),
            category: positive.category(),
            positive,
            pool,
            hard,
            negatives: Vec::new(),
        }
    }
}

/// Pool members that are hard for `positive`: first hops on the same anchor
/// entity, second hops reachable from a gold first hop, columns of the same
/// table, and conditions on the same column.
pub fn hard_candidates(
    positive: &Primitive,
    pool: &[Primitive],
    gold_first_hops: &[Primitive],
    kb: Option<&KnowledgeBase>,
    allow_backtrack: bool,
) -> Vec<Primitive> {
    let reachable = match (positive.payload(), kb) {
        (Payload::SecondHop { .. }, Some(kb)) => gold_first_hops
            .iter()
            .filter_map(|f| match f.payload() {
                Payload::FirstHop {
                    entity,
                    relation,
                    direction,
                } => Some(second_hops_after(
                    kb,
                    entity,
                    relation,
                    *direction,
                    allow_backtrack,
                )),
                _ => None,
            })
            .flatten()
            .collect(),
        _ => std::collections::BTreeSet::new(),
    };
    pool.iter()
        .filter(|c| match (positive.payload(), c.payload()) {
            (Payload::FirstHop { entity: a, .. }, Payload::FirstHop { entity: b, .. }) => a == b,
            (
                Payload::SecondHop { .. },
                Payload::SecondHop {
                    relation,
                    direction,
                },
            ) => reachable.contains(&(relation.clone(), *direction)),
            (Payload::TbCl { table: a, .. }, Payload::TbCl { table: b, .. }) => a == b,
            (
                Payload::TbClVl {
                    table: a,
                    column: ac,
                    ..
                },
                Payload::TbClVl {
                    table: b,
                    column: bc,
                    ..
                },
            ) => a == b && ac == bc,
            _ => false,
        })
        .cloned()
        .collect()
}

fn shuffled<'a, R: Rng>(mut items: Vec<&'a Primitive>, rng: &mut R) -> Vec<&'a Primitive> {
    items.shuffle(rng);
    items
}

/// Up to `k` negatives drawn without replacement. Hard sampling takes hard
/// candidates first and pads with random pool members.
pub fn sample_negatives<R: Rng>(
    strategy: NegativeStrategy,
    example: &TrainingExample,
    k: usize,
    rng: &mut R,
) -> Vec<Primitive> {
    let pool: Vec<&Primitive> = example
        .pool
        .iter()
        .filter(|p| **p != example.positive)
        .collect();
    let mut out: Vec<Primitive> = Vec::new();
    if strategy == NegativeStrategy::Hard {
        let hard: Vec<&Primitive> = example
            .hard
            .iter()
            .filter(|p| **p != example.positive)
            .collect();
        out.extend(shuffled(hard, rng).into_iter().take(k).cloned());
    }
    if out.len() < k {
        let rest: Vec<&Primitive> = pool.into_iter().filter(|p| !out.contains(p)).collect();
        let need = k - out.len();
        out.extend(shuffled(rest, rng).into_iter().take(need).cloned());
    }
    out
}

/// Adds every pool candidate scoring at or above the positive to the
/// example's negatives, highest first, keeping at most `cap` in total.
/// Returns the number of negatives added.
pub fn bootstrap_negatives<S: PrimitiveScorer + ?Sized>(
    scorer: &S,
    examples: &mut [TrainingExample],
    cap: usize,
) -> Result<usize> {
    let mut added = 0;
    for ex in examples.iter_mut() {
        let ctx = scorer.context(&ex.question_text);
        let pos = scorer.score(&ctx, &ex.positive)?;
        let mut fps: Vec<(f64, usize)> = Vec::new();
        for (i, c) in ex.pool.iter().enumerate() {
            let s = scorer.score(&ctx, c)?;
            if s >= pos {
                fps.push((s, i));
            }
        }
        fps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, i) in fps {
            if ex.negatives.len() >= cap {
                break;
            }
            let c = &ex.pool[i];
            if !ex.negatives.contains(c) {
                ex.negatives.push(c.clone());
                added += 1;
            }
        }
    }
    Ok(added)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{CondOp, Direction, Triple, Value};
    use crate::ranker::features::QuestionContext;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example(pos: Primitive, pool: Vec<Primitive>) -> TrainingExample {
        TrainingExample::new(0, "q", pos, pool, &[], None, false)
    }

    #[test]
    fn small_pool_is_returned_whole() {
        let pool: Vec<Primitive> = (0..5)
            .map(|i| Primitive::tb_cl("t", &format!("c{i}")))
            .collect();
        let ex = example(Primitive::tb_cl("t", "gold"), pool.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in [NegativeStrategy::Random, NegativeStrategy::Hard] {
            let mut got = sample_negatives(s, &ex, 96, &mut rng);
            got.sort();
            assert_eq!(got, pool);
        }
    }

    #[test]
    fn same_table_comes_first() {
        let pool = vec![
            Primitive::tb_cl("dept", "budget"),
            Primitive::tb_cl("head", "name"),
        ];
        let ex = example(Primitive::tb_cl("head", "age"), pool);
        let got = sample_negatives(
            NegativeStrategy::Hard,
            &ex,
            2,
            &mut ChaCha8Rng::seed_from_u64(3),
        );
        assert_eq!(
            got,
            vec![
                Primitive::tb_cl("head", "name"),
                Primitive::tb_cl("dept", "budget")
            ]
        );
        let vl = Primitive::tb_cl_vl("head", "age", CondOp::Gt, Value::Number(56.0));
        let pool = vec![
            Primitive::tb_cl_vl("head", "id", CondOp::Gt, Value::Number(56.0)),
            Primitive::tb_cl_vl("head", "age", CondOp::Lt, Value::Number(56.0)),
        ];
        assert_eq!(
            hard_candidates(&vl, &pool, &[], None, false),
            vec![pool[1].clone()]
        );
    }

    #[test]
    fn second_hop_hard_negatives_are_reachable() {
        let kb = KnowledgeBase::from_triples(vec![
            Triple::entity("a", "r1", "e"),
            Triple::entity("a", "r2", "b"),
            Triple::entity("c", "r3", "a"),
            Triple::entity("z", "r4", "y"),
        ]);
        let fh = Primitive::first_hop("e", "r1", Direction::In);
        let pos = Primitive::second_hop("r2", Direction::Out);
        let pool = vec![
            Primitive::second_hop("r4", Direction::Out),
            Primitive::second_hop("r3", Direction::In),
        ];
        let ex = TrainingExample::new(
            0,
            "q",
            pos,
            pool,
            std::slice::from_ref(&fh),
            Some(&kb),
            false,
        );
        assert_eq!(ex.hard, vec![Primitive::second_hop("r3", Direction::In)]);
        let reach = second_hops_after(&kb, "e", "r1", Direction::In, false);
        for h in &ex.hard {
            let Payload::SecondHop {
                relation,
                direction,
            } = h.payload()
            else {
                unreachable!()
            };
            assert!(reach.contains(&(relation.clone(), *direction)));
        }
    }

    #[test]
    fn empty_pool_gives_nothing() {
        let ex = example(Primitive::tb_cl("t", "a"), vec![]);
        assert!(sample_negatives(
            NegativeStrategy::Hard,
            &ex,
            4,
            &mut ChaCha8Rng::seed_from_u64(0)
        )
        .is_empty());
    }

    struct Fixed(Vec<(Primitive, f64)>);

    impl PrimitiveScorer for Fixed {
        fn context(&self, text: &str) -> QuestionContext {
            QuestionContext::new(text, 3)
        }
        fn score(&self, _: &QuestionContext, p: &Primitive) -> Result<f64> {
            Ok(self.0.iter().find(|(q, _)| q == p).map_or(0.0, |(_, s)| *s))
        }
    }

    fn three() -> (Primitive, Primitive, Primitive) {
        (
            Primitive::tb_cl("t", "pos"),
            Primitive::tb_cl("t", "a"),
            Primitive::tb_cl("t", "b"),
        )
    }

    #[test]
    fn perfect_model_leaves_examples_unchanged() {
        let (p, a, b) = three();
        let mut exs = vec![example(p.clone(), vec![a.clone(), b.clone()])];
        let before = exs.clone();
        let scorer = Fixed(vec![(p, 2.0), (a, 1.0), (b, 0.0)]);
        assert_eq!(bootstrap_negatives(&scorer, &mut exs, 10).unwrap(), 0);
        assert_eq!(exs, before);
    }

    #[test]
    fn one_false_positive_enters() {
        let (p, a, b) = three();
        let mut exs = vec![example(p.clone(), vec![a.clone(), b.clone()])];
        let scorer = Fixed(vec![(p, 1.0), (a, 0.0), (b.clone(), 3.0)]);
        bootstrap_negatives(&scorer, &mut exs, 10).unwrap();
        assert_eq!(exs[0].negatives, vec![b]);
    }

    #[test]
    fn ties_count_and_keep_pool_order() {
        let (p, a, b) = three();
        let mut exs = vec![example(p, vec![a.clone(), b.clone()])];
        bootstrap_negatives(&Fixed(vec![]), &mut exs, 10).unwrap();
        assert_eq!(exs[0].negatives, vec![a.clone(), b]);
        let (p, a2, b2) = three();
        let mut capped = vec![example(p, vec![a2, b2])];
        bootstrap_negatives(&Fixed(vec![]), &mut capped, 1).unwrap();
        assert_eq!(capped[0].negatives, vec![a]);
    }
}
