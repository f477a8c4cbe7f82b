use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{
    cross_index, feature_index, feature_names, is_position_feature, op_index, Features, Op,
    COMPOSITION_DIM,
};
use super::triggers::Trigger;
use crate::error::{Error, Result};

/// Linear scorer over composition features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScorerRepr", into = "ScorerRepr")]
pub struct CompositionScorer {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScorerRepr {
    weights: BTreeMap<String, f64>,
}

impl TryFrom<ScorerRepr> for CompositionScorer {
    type Error = String;

    fn try_from(r: ScorerRepr) -> std::result::Result<Self, String> {
        let mut weights = vec![0.0; COMPOSITION_DIM];
        for (name, w) in r.weights {
            let i = feature_index(&name)
                .ok_or_else(|| format!("unknown composition feature {name:?}"))?;
            if !w.is_finite() {
                return Err(format!("non-finite weight for {name:?}"));
            }
            weights[i] = w;
        }
        Ok(CompositionScorer { weights })
    }
}

impl From<CompositionScorer> for ScorerRepr {
    fn from(s: CompositionScorer) -> Self {
        ScorerRepr {
            weights: feature_names()
                .iter()
                .zip(&s.weights)
                .filter(|(_, w)| **w != 0.0)
                .map(|(n, w)| (n.clone(), *w))
                .collect(),
        }
    }
}

/// Operator/trigger pairs that reinforce each other in the default priors.
const PAIRS: &[(Op, Trigger)] = &[
    (Op::Count, Trigger::Count),
    (Op::CountStar, Trigger::Count),
    (Op::Max, Trigger::MaxWord),
    (Op::Min, Trigger::MinWord),
    (Op::ArgMax, Trigger::SupMax),
    (Op::ArgMin, Trigger::SupMin),
    (Op::ArgMax, Trigger::MaxWord),
    (Op::ArgMin, Trigger::MinWord),
    (Op::Sum, Trigger::Sum),
    (Op::Avg, Trigger::Avg),
    (Op::OrderDesc, Trigger::SupMax),
    (Op::OrderAsc, Trigger::SupMin),
    (Op::Limit, Trigger::SupMax),
    (Op::Limit, Trigger::SupMin),
    (Op::OrderAsc, Trigger::Order),
    (Op::Group, Trigger::Group),
    (Op::And, Trigger::And),
    (Op::MultiSelect, Trigger::And),
    (Op::Or, Trigger::Or),
    (Op::Union, Trigger::Or),
    (Op::Except, Trigger::Except),
    (Op::Compare, Trigger::CmpCue),
];

impl Default for CompositionScorer {
    /// Hand-set priors: trust ranker scores, penalize every operation and
    /// reward operations whose trigger words occur in the question.
    fn default() -> Self {
        let mut w = vec![0.0; COMPOSITION_DIM];
        let set = |w: &mut Vec<f64>, name: &str, v: f64| {
            if let Some(i) = feature_index(name) {
                w[i] = v;
            }
        };
        for c in ["fh", "sh", "tb_cl", "tb_cl_vl"] {
            set(&mut w, &format!("{c}.prob"), 1.0);
            set(&mut w, &format!("{c}.gap"), 0.5);
            set(&mut w, &format!("{c}.n"), -0.3);
        }
        for o in Op::ALL {
            w[op_index(o)] = -1.0;
        }
        w[op_index(Op::Where)] = 0.0;
        w[op_index(Op::TwoHop)] = -0.5;
        for o in [Op::Group, Op::Union, Op::Intersect, Op::Except] {
            w[op_index(o)] = -2.0;
        }
        for (o, t) in PAIRS {
            w[cross_index(*o, *t)] = 2.5;
        }
        set(&mut w, "misc.coverage", 1.0);
        set(&mut w, "misc.unused_numbers", -2.0);
        set(&mut w, "misc.unused_cells", -2.0);
        set(&mut w, "misc.unused_entities", -1.5);
        set(&mut w, "misc.compare_cue", 1.0);
        set(&mut w, "misc.key_near_trigger", 1.0);
        set(&mut w, "misc.key_far_from_trigger", -1.0);
        set(&mut w, "misc.select_filtered", -1.5);
        set(&mut w, "misc.reused_numbers", -1.5);
        set(&mut w, "misc.cond_proximity", 1.0);
        CompositionScorer { weights: w }
    }
}

impl CompositionScorer {
    pub fn zeros() -> Self {
        CompositionScorer {
            weights: vec![0.0; COMPOSITION_DIM],
        }
    }

    /// A scorer from a full weight vector in registry order.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != COMPOSITION_DIM || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Model(format!(
                "composition weights must be {COMPOSITION_DIM} finite values"
            )));
        }
        Ok(CompositionScorer { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.weights[i])
    }

    pub fn score(&self, f: &Features) -> f64 {
        f.iter().map(|(i, v)| self.weights[*i] * v).sum()
    }

    /// Score ignoring features that depend on primitive order; used for
    /// pruning so that the candidate pool does not depend on input order.
    pub fn order_free_score(&self, f: &Features) -> f64 {
        f.iter()
            .filter(|(i, _)| !is_position_feature(*i))
            .map(|(i, v)| self.weights[*i] * v)
            .sum()
    }

    /// `w += scale * (a - b)`.
    pub fn update(&mut self, a: &Features, b: &Features, scale: f64) {
        for (i, v) in a {
            self.weights[*i] += scale * v;
        }
        for (i, v) in b {
            self.weights[*i] -= scale * v;
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Model(format!("{}: {e}", path.display())))
    }
}
