use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::datamodel::{Category, CondOp, Payload, Primitive, Question};
use crate::text::{
    attribute_hint, char_ngrams, content_tokens, content_tokens_with_hints, format_number, jaccard,
    numbers, stem, tokenize,
};

/// Number of lexical features computed for every (question, primitive) pair.
pub const BASE_FEATURES: usize = 8;

pub const BASE_FEATURE_NAMES: [&str; BASE_FEATURES] = [
    "token_overlap",
    "idf_overlap",
    "char_ngram_jaccard",
    "length_ratio",
    "numeric_copresence",
    "op_cue_agreement",
    "overlap_fraction",
    "value_proximity",
];

/// Question tokens between a column word and its value that still count as near.
const PROXIMITY_WINDOW: usize = 4;

/// Featurization settings stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Character n-gram size of the Jaccard feature.
    pub ngram: usize,
    /// Adds a category one-hot block and a per-category copy of the lexical
    /// features, letting each category weight them differently.
    pub category_conditioning: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram: 3,
            category_conditioning: true,
        }
    }
}

impl FeatureConfig {
    /// Vector length: lexical block, category one-hot, per-category blocks.
    pub fn dim(&self) -> usize {
        BASE_FEATURES + Category::ALL.len() + Category::ALL.len() * BASE_FEATURES
    }
}

/// Inverse document frequencies over training questions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Idf {
    pub weights: BTreeMap<String, f64>,
    pub unseen: f64,
}

impl Idf {
    pub fn fit<'a>(texts: impl IntoIterator<Item = &'a str>) -> Idf {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n = 0usize;
        for t in texts {
            n += 1;
            let toks: HashSet<String> = content_tokens(t).into_iter().collect();
            for tok in toks {
                *df.entry(tok).or_default() += 1;
            }
        }
        let total = (n + 1) as f64;
        Idf {
            weights: df
                .into_iter()
                .map(|(t, d)| (t, (total / (d + 1) as f64).ln() + 1.0))
                .collect(),
            unseen: total.ln() + 1.0,
        }
    }

    pub fn get(&self, token: &str) -> f64 {
        self.weights
            .get(token)
            .copied()
            .unwrap_or(if self.weights.is_empty() {
                1.0
            } else {
                self.unseen
            })
    }
}

/// Question-side quantities shared by all of its primitives.
#[derive(Debug, Clone)]
pub struct QuestionContext {
    pub text: String,
    pub tokens: HashSet<String>,
    pub token_count: usize,
    pub grams: HashSet<String>,
    pub numbers: HashSet<String>,
    pub op_cues: Vec<CondOp>,
    /// Stemmed question tokens in order, each with the attribute it hints at.
    pub sequence: Vec<(String, Option<&'static str>)>,
    /// Unstemmed question tokens in order.
    pub raw: Vec<String>,
}

impl QuestionContext {
    pub fn new(text: &str, ngram: usize) -> Self {
        let toks = content_tokens_with_hints(text);
        QuestionContext {
            text: text.to_string(),
            token_count: toks.len(),
            tokens: toks.into_iter().collect(),
            grams: char_ngrams(text, ngram),
            numbers: numbers(text).into_iter().map(format_number).collect(),
            op_cues: op_cues(text),
            sequence: tokenize(text)
                .iter()
                .map(|t| (stem(t), attribute_hint(t)))
                .collect(),
            raw: tokenize(text),
        }
    }

    pub fn of(question: &Question, cfg: &FeatureConfig) -> Self {
        Self::new(&question.text, cfg.ngram)
    }
}

const GT_CUES: &[&str] = &[
    "above",
    "after",
    "bigger",
    "exceed",
    "exceeding",
    "greater",
    "heavier",
    "higher",
    "larger",
    "later",
    "longer",
    "more",
    "older",
    "over",
    "taller",
];
const LT_CUES: &[&str] = &[
    "before", "below", "earlier", "fewer", "less", "lighter", "lower", "shorter", "smaller",
    "under", "younger",
];
const NE_CUES: &[&str] = &["except", "excluding", "not", "other"];

/// Comparison operators suggested by the wording of a question.
pub fn op_cues(text: &str) -> Vec<CondOp> {
    let toks = tokenize(text);
    let has_pair = |a: &str, b: &[&str]| {
        toks.windows(2)
            .any(|w| w[0] == a && b.contains(&w[1].as_str()))
    };
    let mut out = Vec::new();
    let ge = has_pair("at", &["least"])
        || has_pair("or", &["more", "greater", "older", "higher", "above"]);
    let le = has_pair("at", &["most"])
        || has_pair("or", &["less", "fewer", "younger", "lower", "below"]);
    if ge {
        out.push(CondOp::Ge);
    }
    if le {
        out.push(CondOp::Le);
    }
    if !ge && toks.iter().any(|t| GT_CUES.contains(&t.as_str())) {
        out.push(CondOp::Gt);
    }
    if !le && toks.iter().any(|t| LT_CUES.contains(&t.as_str())) {
        out.push(CondOp::Lt);
    }
    if toks.iter().any(|t| NE_CUES.contains(&t.as_str())) {
        out.push(CondOp::Ne);
    }
    out
}

/// Lexical features of one primitive against a question, laid out as
/// `[base | category one-hot | per-category copies of base]`. Without
/// category conditioning the last two blocks are zero.
pub fn featurize(ctx: &QuestionContext, p: &Primitive, cfg: &FeatureConfig, idf: &Idf) -> Vec<f64> {
    let base = base_features(ctx, p, idf, cfg.ngram);
    let mut out = vec![0.0; cfg.dim()];
    out[..BASE_FEATURES].copy_from_slice(&base);
    if cfg.category_conditioning {
        let ci = p.category().index();
        out[BASE_FEATURES + ci] = 1.0;
        let start = BASE_FEATURES + Category::ALL.len() + ci * BASE_FEATURES;
        out[start..start + BASE_FEATURES].copy_from_slice(&base);
    }
    out
}

fn base_features(
    ctx: &QuestionContext,
    p: &Primitive,
    idf: &Idf,
    ngram: usize,
) -> [f64; BASE_FEATURES] {
    let mut ptoks: BTreeSet<String> = content_tokens(&p.lexical_text()).into_iter().collect();
    let proximity = value_proximity(ctx, p);
    if let Payload::TbClVl {
        table,
        column,
        value,
        ..
    } = p.payload()
    {
        if proximity == 0.0
            && value.as_number().is_some()
            && local_op_cues(ctx, &value.to_string()).is_some()
        {
            // A mentioned number whose column is not mentioned nearby: the
            // column words elsewhere in the question belong to another condition.
            let keep: HashSet<String> = content_tokens(table).into_iter().collect();
            for t in content_tokens(column) {
                if !keep.contains(&t) {
                    ptoks.remove(&t);
                }
            }
        }
    }
    let overlap: Vec<&String> = ptoks.iter().filter(|t| ctx.tokens.contains(*t)).collect();
    let idf_overlap: f64 = overlap.iter().map(|t| idf.get(t)).sum();
    let jac = jaccard(&ctx.grams, &char_ngrams(p.surface(), ngram));
    let (a, b) = (
        ctx.text.chars().count() as f64,
        p.surface().chars().count() as f64,
    );
    let length_ratio = if a.max(b) > 0.0 {
        a.min(b) / a.max(b)
    } else {
        0.0
    };
    let numeric = tokenize(p.surface())
        .iter()
        .filter_map(|t| t.parse::<f64>().ok())
        .any(|n| ctx.numbers.contains(&format_number(n)));
    let cue = match p.payload() {
        Payload::TbClVl { op, value, .. } => {
            let cues =
                local_op_cues(ctx, &value.to_string()).unwrap_or_else(|| ctx.op_cues.clone());
            match op {
                CondOp::Eq => cues.is_empty(),
                op if op.is_ordering() || *op == CondOp::Ne => cues.contains(op),
                _ => false,
            }
        }
        _ => false,
    };
    let fraction = if ptoks.is_empty() {
        0.0
    } else {
        overlap.len() as f64 / ptoks.len() as f64
    };
    [
        overlap.len() as f64,
        idf_overlap,
        jac,
        length_ratio,
        f64::from(u8::from(numeric)),
        f64::from(u8::from(cue)),
        fraction,
        proximity,
    ]
}

/// Tokens before and after a numeric mention that are searched for its cue.
const CUE_BEFORE: usize = 3;
const CUE_AFTER: usize = 2;

/// Cues around the mentions of a numeric value, or `None` if the value is
/// not a number mentioned in the question.
fn local_op_cues(ctx: &QuestionContext, value: &str) -> Option<Vec<CondOp>> {
    let n = format_number(value.trim().parse::<f64>().ok()?);
    let mut out: Vec<CondOp> = Vec::new();
    let mut found = false;
    for (j, t) in ctx.raw.iter().enumerate() {
        if t.parse::<f64>().ok().map(format_number).as_deref() != Some(n.as_str()) {
            continue;
        }
        found = true;
        let window =
            ctx.raw[j.saturating_sub(CUE_BEFORE)..(j + CUE_AFTER + 1).min(ctx.raw.len())].join(" ");
        for op in op_cues(&window) {
            if !out.contains(&op) {
                out.push(op);
            }
        }
    }
    found.then_some(out)
}

/// Proximity of a condition's column and value in the question. For a bare
/// column, its proximity to the nearest mentioned number, which marks it as
/// a likely filter column. Zero for other categories.
fn value_proximity(ctx: &QuestionContext, p: &Primitive) -> f64 {
    match p.payload() {
        Payload::TbClVl { column, value, .. } => {
            column_value_proximity(&ctx.sequence, column, &value.to_string())
        }
        Payload::TbCl { column, .. } => ctx
            .numbers
            .iter()
            .map(|n| column_value_proximity(&ctx.sequence, column, n))
            .fold(0.0, f64::max),
        _ => 0.0,
    }
}

/// `1 - (d - 1) / window` where `d` is the smallest distance in `sequence` (stemmed
/// tokens with attribute hints) between a token of `column` and the first
/// token of `value`, within [`PROXIMITY_WINDOW`]; zero if there is none.
pub fn column_value_proximity(
    sequence: &[(String, Option<&'static str>)],
    column: &str,
    value: &str,
) -> f64 {
    let col: HashSet<String> = content_tokens(column).into_iter().collect();
    let val: Vec<String> = tokenize(value).iter().map(|t| stem(t)).collect();
    let Some(first) = val.first() else { return 0.0 };
    let col_at: Vec<usize> = sequence
        .iter()
        .enumerate()
        .filter(|(_, (t, h))| col.contains(t) || h.is_some_and(|h| col.contains(h)))
        .map(|(i, _)| i)
        .collect();
    let mut best: Option<usize> = None;
    for (j, (t, _)) in sequence.iter().enumerate() {
        if t != first {
            continue;
        }
        for &i in &col_at {
            let d = i.abs_diff(j);
            if d <= PROXIMITY_WINDOW && best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
    }
    best.map_or(0.0, |d| {
        1.0 - d.saturating_sub(1) as f64 / PROXIMITY_WINDOW as f64
    })
}
