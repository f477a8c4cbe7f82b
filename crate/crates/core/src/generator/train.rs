use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{form_features, ComposeContext};
use super::scorer::CompositionScorer;
use super::{candidate_pool, shuffle_ranked, GeneratorConfig};
use crate::error::{Error, Result};
use crate::logical::{LogicalForm, Store};
use crate::ranker::RankedPrimitives;

/// Composition scorer training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposerConfig {
    pub epochs: usize,
    pub lr: f64,
    pub margin: f64,
    /// Highest-scoring non-gold candidates used as negatives per question.
    pub negatives: usize,
    /// Shuffle primitives within each category on every training pass.
    pub shuffle: bool,
}

impl Default for ComposerConfig {
    fn default() -> Self {
        ComposerConfig {
            epochs: 10,
            lr: 0.1,
            margin: 1.0,
            negatives: 20,
            shuffle: true,
        }
    }
}

/// A training question with its gold form and the ranker's output.
#[derive(Debug, Clone)]
pub struct ComposerItem<'a> {
    pub id: String,
    pub question: String,
    pub gold: LogicalForm,
    pub ranked: RankedPrimitives,
    pub store: Store<'a>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComposerReport {
    /// Margin violations per epoch.
    pub epoch_violations: Vec<usize>,
    pub trained_questions: usize,
    /// Questions whose gold form uses a primitive the ranker did not supply.
    pub skipped: Vec<String>,
}

/// Pairwise hinge training starting from the default priors: the beam
/// negatives that come within `margin` of the gold form share one step of
/// size `lr` towards the gold features. The returned weights are the
/// average over all steps. Deterministic for a given seed.
pub fn train_composition_scorer(
    items: &[ComposerItem<'_>],
    gen: &GeneratorConfig,
    cfg: &ComposerConfig,
    seed: u64,
) -> Result<(CompositionScorer, ComposerReport)> {
    let mut report = ComposerReport::default();
    let mut usable = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let ctx = ComposeContext::new(
            &item.question,
            &item.ranked,
            item.store,
            gen.allow_backtrack,
        );
        if form_features(&item.gold, &ctx).is_some() {
            usable.push(i);
        } else {
            report.skipped.push(item.id.clone());
        }
    }
    report.trained_questions = usable.len();
    if usable.is_empty() {
        return Err(Error::Train(
            "no trainable composition: every gold form uses unavailable primitives".into(),
        ));
    }
    let mut scorer = CompositionScorer::default();
    let mut sum = vec![0.0; scorer.weights().len()];
    let mut steps = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.epochs {
        usable.shuffle(&mut rng);
        let mut violations = 0;
        for &i in &usable {
            let item = &items[i];
            let shuffled;
            let ranked = if cfg.shuffle {
                shuffled = shuffle_ranked(&item.ranked, rng.gen());
                &shuffled
            } else {
                &item.ranked
            };
            let ctx = ComposeContext::new(&item.question, ranked, item.store, gen.allow_backtrack);
            let Some(gold_f) = form_features(&item.gold, &ctx) else {
                continue;
            };
            let gold_key = item.gold.to_string();
            let mut pool: Vec<(f64, String, _)> = candidate_pool(&ctx, &scorer, gen)
                .into_iter()
                .map(|(lf, f)| (scorer.score(&f), lf.to_string(), f))
                .filter(|(_, key, _)| *key != gold_key)
                .collect();
            pool.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            pool.truncate(cfg.negatives);
            let gold_s = scorer.score(&gold_f);
            let violators: Vec<_> = pool
                .iter()
                .filter(|(s, _, _)| gold_s - s < cfg.margin)
                .collect();
            if !violators.is_empty() {
                violations += violators.len();
                let step = cfg.lr / violators.len() as f64;
                for (_, _, f) in violators {
                    scorer.update(&gold_f, f, step);
                }
            }
            for (acc, w) in sum.iter_mut().zip(scorer.weights()) {
                *acc += w;
            }
            steps += 1;
        }
        report.epoch_violations.push(violations);
    }
    if steps > 0 {
        scorer =
            CompositionScorer::from_weights(sum.into_iter().map(|w| w / steps as f64).collect())?;
    }
    Ok((scorer, report))
}
