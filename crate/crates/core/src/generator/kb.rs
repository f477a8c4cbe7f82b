use std::collections::BTreeSet;

use super::features::{form_features, ComposeContext, Features};
use super::scorer::CompositionScorer;
use super::GeneratorConfig;
use crate::datamodel::{Direction, KnowledgeBase, Literal, Payload, Primitive};
use crate::enumerator::second_hops_after;
use crate::logical::LogicalForm;
use crate::ranker::filter_reachable;
use crate::sexpr::{CmpOp, JoinRel, SExpr};

fn rel(relation: &str, d: Direction) -> JoinRel {
    match d {
        Direction::In => JoinRel::Forward(relation.to_string()),
        Direction::Out => JoinRel::Reverse(relation.to_string()),
    }
}

fn number_literal(n: f64) -> Literal {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        Literal::Int(n as i64)
    } else {
        Literal::Float(n)
    }
}

struct Base {
    form: SExpr,
    entity: String,
    first: Primitive,
    /// Outgoing relations of the base's frontier, for one-hop bases.
    out_relations: Vec<String>,
}

fn sorted_surfaces(list: impl Iterator<Item = Primitive>) -> Vec<Primitive> {
    let mut v: Vec<Primitive> = list.collect();
    v.sort_by(|a, b| a.surface().cmp(b.surface()).then_with(|| a.cmp(b)));
    v.dedup();
    v
}

/// Candidate S-expressions with their features. Bases are pruned to the
/// beam width using order-free scores.
pub(crate) fn kb_pool(
    ctx: &ComposeContext<'_>,
    kb: &KnowledgeBase,
    scorer: &CompositionScorer,
    cfg: &GeneratorConfig,
) -> Vec<(LogicalForm, Features)> {
    let firsts = sorted_surfaces(ctx.ranked.first_hop.iter().map(|s| s.primitive.clone()));
    let seconds = sorted_surfaces(
        filter_reachable(
            &ctx.ranked.first_hop,
            &ctx.ranked.second_hop,
            kb,
            ctx.allow_backtrack,
        )
        .into_iter()
        .map(|s| s.primitive),
    );
    let mut bases: Vec<(f64, String, Base)> = Vec::new();
    let push_base = |b: Base, bases: &mut Vec<(f64, String, Base)>| {
        let lf = LogicalForm::Kb(b.form.clone());
        if let Some(f) = form_features(&lf, ctx) {
            bases.push((scorer.order_free_score(&f), lf.to_string(), b));
        }
    };
    for f in &firsts {
        let Payload::FirstHop {
            entity,
            relation,
            direction,
        } = f.payload()
        else {
            continue;
        };
        let one = SExpr::Join(
            rel(relation, *direction),
            Box::new(SExpr::Entity(entity.clone())),
        );
        let reach: BTreeSet<(String, Direction)> =
            second_hops_after(kb, entity, relation, *direction, ctx.allow_backtrack);
        let mut outs = Vec::new();
        for s in &seconds {
            let Payload::SecondHop {
                relation: r2,
                direction: d2,
            } = s.payload()
            else {
                continue;
            };
            if !reach.contains(&(r2.clone(), *d2)) {
                continue;
            }
            if *d2 == Direction::Out {
                outs.push(r2.clone());
            }
            push_base(
                Base {
                    form: SExpr::Join(rel(r2, *d2), Box::new(one.clone())),
                    entity: entity.clone(),
                    first: f.clone(),
                    out_relations: Vec::new(),
                },
                &mut bases,
            );
        }
        push_base(
            Base {
                form: one,
                entity: entity.clone(),
                first: f.clone(),
                out_relations: outs,
            },
            &mut bases,
        );
    }
    bases.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    bases.truncate(cfg.beam);

    let mut forms: Vec<SExpr> = Vec::new();
    for (_, _, b) in &bases {
        forms.push(b.form.clone());
        forms.push(SExpr::count(b.form.clone()));
        for r in &b.out_relations {
            forms.push(SExpr::ArgMax(Box::new(b.form.clone()), r.clone()));
            forms.push(SExpr::ArgMin(Box::new(b.form.clone()), r.clone()));
            for n in &ctx.numbers {
                for op in CmpOp::ALL {
                    let cmp = SExpr::Compare(op, r.clone(), number_literal(*n));
                    forms.push(SExpr::and(b.form.clone(), cmp));
                }
            }
        }
    }
    for (i, (_, _, a)) in bases.iter().enumerate() {
        for (_, _, b) in &bases[i + 1..] {
            if a.first == b.first || a.entity == b.entity {
                continue;
            }
            let key = |x: &Base| {
                (
                    ctx.mention_position(ctx.entity_name(&x.entity)),
                    LogicalForm::Kb(x.form.clone()).to_string(),
                )
            };
            let (l, r) = if key(a) <= key(b) { (a, b) } else { (b, a) };
            let and = SExpr::and(l.form.clone(), r.form.clone());
            forms.push(SExpr::count(and.clone()));
            forms.push(and);
        }
    }
    let mut seen = BTreeSet::new();
    forms
        .into_iter()
        .filter_map(|e| {
            let lf = LogicalForm::Kb(e);
            if !seen.insert(lf.to_string()) {
                return None;
            }
            form_features(&lf, ctx).map(|f| (lf, f))
        })
        .collect()
}
