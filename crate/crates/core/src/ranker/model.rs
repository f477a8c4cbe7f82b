use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureConfig, Idf, QuestionContext};
use crate::datamodel::{Primitive, Question};
use crate::error::{Error, Result};

/// Anything that scores a primitive against a question. The linear
/// [`RankerModel`] is the built-in implementation.
pub trait PrimitiveScorer: Sync {
    fn context(&self, question_text: &str) -> QuestionContext;
    fn score(&self, ctx: &QuestionContext, p: &Primitive) -> Result<f64>;
}

/// Linear scorer over lexical features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankerModel {
    pub features: FeatureConfig,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub idf: Idf,
}

impl RankerModel {
    /// All-zero weights.
    pub fn new(features: FeatureConfig, idf: Idf) -> Self {
        RankerModel {
            weights: vec![0.0; features.dim()],
            features,
            bias: 0.0,
            idf,
        }
    }

    pub fn featurize(&self, ctx: &QuestionContext, p: &Primitive) -> Vec<f64> {
        featurize(ctx, p, &self.features, &self.idf)
    }

    /// `w · f + b`; errors when `f` does not match the weight length.
    pub fn score_features(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.weights.len() {
            return Err(Error::Model(format!(
                "feature length {} does not match weight length {}",
                f.len(),
                self.weights.len()
            )));
        }
        let s = self.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        if !s.is_finite() {
            return Err(Error::Model("non-finite score".into()));
        }
        Ok(s)
    }

    /// Score of a primitive for a question; the category is read off the primitive.
    pub fn score(&self, question: &Question, p: &Primitive) -> Result<f64> {
        let ctx = QuestionContext::of(question, &self.features);
        PrimitiveScorer::score(self, &ctx, p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: RankerModel = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if m.weights.len() != m.features.dim() {
            return Err(Error::Model(format!(
                "{}: {} weights for {} features",
                path.display(),
                m.weights.len(),
                m.features.dim()
            )));
        }
        Ok(m)
    }
}

impl PrimitiveScorer for RankerModel {
    fn context(&self, question_text: &str) -> QuestionContext {
        QuestionContext::new(question_text, self.features.ngram)
    }

    fn score(&self, ctx: &QuestionContext, p: &Primitive) -> Result<f64> {
        self.score_features(&self.featurize(ctx, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{CondOp, Modality, Value};

    fn q(text: &str) -> Question {
        Question::new("q", text, Modality::Db)
    }

    #[test]
    fn zero_model_scores_zero() {
        let m = RankerModel::new(FeatureConfig::default(), Idf::default());
        assert_eq!(
            m.score(&q("anything"), &Primitive::tb_cl("a", "b"))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn jaccard_projection() {
        let mut m = RankerModel::new(FeatureConfig::default(), Idf::default());
        m.weights[2] = 1.0;
        let p = Primitive::tb_cl("head", "age");
        let f = m.featurize(&m.context("age of heads"), &p);
        assert_eq!(m.score(&q("age of heads"), &p).unwrap(), f[2]);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let m = RankerModel::new(FeatureConfig::default(), Idf::default());
        assert!(m.score_features(&[1.0]).is_err());
    }

    #[test]
    fn overlap_weight_is_monotone() {
        let mut m = RankerModel::new(FeatureConfig::default(), Idf::default());
        let hi = m.featurize(&m.context("head age"), &Primitive::tb_cl("head", "age"));
        let mut lo = hi.clone();
        lo[0] -= 1.0;
        let gap0 = m.score_features(&hi).unwrap() - m.score_features(&lo).unwrap();
        m.weights[0] = 0.7;
        let gap1 = m.score_features(&hi).unwrap() - m.score_features(&lo).unwrap();
        assert!(gap1 >= gap0);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut m = RankerModel::new(FeatureConfig::default(), Idf::fit(["a b", "b c"]));
        m.weights[5] = -0.25;
        m.save(&path).unwrap();
        assert_eq!(RankerModel::load(&path).unwrap(), m);
        let p = Primitive::tb_cl_vl("head", "age", CondOp::Gt, Value::Number(56.0));
        assert!(m.score(&q("older than 56"), &p).unwrap().is_finite());
    }
}
