use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::OnceLock;

use super::triggers::{Trigger, Triggers};
use crate::datamodel::{Category, CondOp, Payload, Primitive, Value};
use crate::logical::{LogicalForm, Store};
use crate::ranker::{column_value_proximity, op_cues, RankedPrimitives};
use crate::sexpr::{CmpOp, SExpr};
use crate::sqlcore::{Agg, BoolExpr, ColumnRef, Condition, SetOp, SqlQuery, Target};
use crate::text::{content_tokens, content_tokens_with_hints, format_number, numbers};

/// Structural operations a composed form can contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Count,
    CountStar,
    Max,
    Min,
    Sum,
    Avg,
    ArgMax,
    ArgMin,
    Compare,
    And,
    TwoHop,
    Where,
    Or,
    OrderAsc,
    OrderDesc,
    Limit,
    Group,
    Union,
    Intersect,
    Except,
    Join,
    MultiSelect,
}

impl Op {
    pub const ALL: [Op; 22] = [
        Op::Count,
        Op::CountStar,
        Op::Max,
        Op::Min,
        Op::Sum,
        Op::Avg,
        Op::ArgMax,
        Op::ArgMin,
        Op::Compare,
        Op::And,
        Op::TwoHop,
        Op::Where,
        Op::Or,
        Op::OrderAsc,
        Op::OrderDesc,
        Op::Limit,
        Op::Group,
        Op::Union,
        Op::Intersect,
        Op::Except,
        Op::Join,
        Op::MultiSelect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Count => "count",
            Op::CountStar => "count_star",
            Op::Max => "max",
            Op::Min => "min",
            Op::Sum => "sum",
            Op::Avg => "avg",
            Op::ArgMax => "argmax",
            Op::ArgMin => "argmin",
            Op::Compare => "compare",
            Op::And => "and",
            Op::TwoHop => "two_hop",
            Op::Where => "where",
            Op::Or => "or",
            Op::OrderAsc => "order_asc",
            Op::OrderDesc => "order_desc",
            Op::Limit => "limit",
            Op::Group => "group",
            Op::Union => "union",
            Op::Intersect => "intersect",
            Op::Except => "except",
            Op::Join => "join",
            Op::MultiSelect => "multi_select",
        }
    }
}

const PRIM_FEATURES: [&str; 6] = ["score", "prob", "gap", "pos_recip", "pos_first", "n"];
const POSITION_FEATURES: [&str; 2] = ["pos_recip", "pos_first"];
const MISC_FEATURES: [&str; 10] = [
    "coverage",
    "unused_numbers",
    "unused_cells",
    "unused_entities",
    "compare_cue",
    "key_near_trigger",
    "key_far_from_trigger",
    "select_filtered",
    "reused_numbers",
    "cond_proximity",
];

/// Tokens after a superlative, aggregate or ordering word that count as its argument.
const KEY_WINDOW: usize = 3;

fn cat_prefix(c: Category) -> &'static str {
    match c {
        Category::FirstHop => "fh",
        Category::SecondHop => "sh",
        Category::TbCl => "tb_cl",
        Category::TbClVl => "tb_cl_vl",
    }
}

const OPS_AT: usize = 4 * PRIM_FEATURES.len();
const CROSS_AT: usize = OPS_AT + Op::ALL.len();
const MISC_AT: usize = CROSS_AT + Op::ALL.len() * Trigger::ALL.len();

/// Number of composition features.
pub const COMPOSITION_DIM: usize = MISC_AT + MISC_FEATURES.len();

/// Names of all composition features in index order.
pub fn feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut out = Vec::with_capacity(COMPOSITION_DIM);
        for c in Category::ALL {
            for f in PRIM_FEATURES {
                out.push(format!("{}.{f}", cat_prefix(c)));
            }
        }
        for o in Op::ALL {
            out.push(format!("op.{}", o.name()));
        }
        for o in Op::ALL {
            for t in Trigger::ALL {
                out.push(format!("op.{}&trig.{}", o.name(), t.name()));
            }
        }
        for m in MISC_FEATURES {
            out.push(format!("misc.{m}"));
        }
        out
    })
}

/// Index of a feature by name.
pub fn feature_index(name: &str) -> Option<usize> {
    static INDEX: OnceLock<HashMap<&'static str, usize>> = OnceLock::new();
    INDEX
        .get_or_init(|| {
            feature_names()
                .iter()
                .enumerate()
                .map(|(i, n)| (n.as_str(), i))
                .collect()
        })
        .get(name)
        .copied()
}

/// Whether a feature depends on the order in which primitives were supplied.
pub fn is_position_feature(i: usize) -> bool {
    i < OPS_AT && POSITION_FEATURES.contains(&PRIM_FEATURES[i % PRIM_FEATURES.len()])
}

pub fn op_index(o: Op) -> usize {
    OPS_AT + Op::ALL.iter().position(|x| *x == o).unwrap_or(0)
}

pub fn cross_index(o: Op, t: Trigger) -> usize {
    let oi = Op::ALL.iter().position(|x| *x == o).unwrap_or(0);
    let ti = Trigger::ALL.iter().position(|x| *x == t).unwrap_or(0);
    CROSS_AT + oi * Trigger::ALL.len() + ti
}

fn misc_index(name: &str) -> usize {
    MISC_AT + MISC_FEATURES.iter().position(|m| *m == name).unwrap_or(0)
}

/// Sparse feature vector.
pub type Features = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy)]
struct PrimStat {
    score: f64,
    prob: f64,
    gap: f64,
    position: usize,
}

/// Per-primitive quantities that do not depend on the form using it.
#[derive(Debug, Clone)]
struct PrimInfo {
    stat: PrimStat,
    /// Question-coverage tokens: lexical text plus, for first hops, the entity name.
    covered: Vec<String>,
    /// Column-value proximity of a condition; zero otherwise.
    proximity: f64,
}

/// Question-level state shared by all candidates of one question.
pub struct ComposeContext<'a> {
    pub question: String,
    pub ranked: RankedPrimitives,
    pub store: Store<'a>,
    pub allow_backtrack: bool,
    pub triggers: Triggers,
    pub numbers: Vec<f64>,
    lower: String,
    question_tokens: HashSet<String>,
    stats: HashMap<Primitive, PrimInfo>,
    /// Text cells among the ranked conditions.
    cells: BTreeSet<String>,
    /// Entities among the ranked first hops.
    entities: BTreeSet<String>,
    cmp_cues: Vec<CondOp>,
    /// Stemmed question tokens paired with the attribute they hint at.
    tokens: Vec<(String, Option<&'static str>)>,
    key_triggers: Vec<usize>,
}

impl<'a> ComposeContext<'a> {
    pub fn new(
        question: &str,
        ranked: &RankedPrimitives,
        store: Store<'a>,
        allow_backtrack: bool,
    ) -> Self {
        let triggers = Triggers::detect(question);
        let mut stats = HashMap::new();
        for c in Category::ALL {
            let list = ranked.category(c);
            let max = list
                .iter()
                .map(|s| s.score)
                .fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = list.iter().map(|s| (s.score - max).exp()).sum();
            for (i, s) in list.iter().enumerate() {
                stats.entry(s.primitive.clone()).or_insert(PrimStat {
                    score: s.score,
                    prob: (s.score - max).exp() / z,
                    gap: s.score - max,
                    position: i,
                });
            }
        }
        let cells = ranked
            .tb_cl_vl
            .iter()
            .filter_map(|s| match s.primitive.payload() {
                Payload::TbClVl {
                    value: Value::Text(t),
                    ..
                } => Some(Value::Text(t.clone()).to_string()),
                _ => None,
            })
            .collect();
        let entities = ranked
            .first_hop
            .iter()
            .filter_map(|s| match s.primitive.payload() {
                Payload::FirstHop { entity, .. } => Some(entity.clone()),
                _ => None,
            })
            .collect();
        let trigger_words: HashSet<String> = ["how", "many", "number", "count"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let raw = crate::text::tokenize(question);
        let key_triggers = raw
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                [
                    Trigger::MaxWord,
                    Trigger::MinWord,
                    Trigger::SupMax,
                    Trigger::SupMin,
                    Trigger::Avg,
                    Trigger::Sum,
                    Trigger::Order,
                ]
                .iter()
                .any(|tr| tr.matches(t))
            })
            .map(|(i, _)| i)
            .collect();
        let tokens = raw
            .iter()
            .map(|t| (crate::text::stem(t), crate::text::attribute_hint(t)))
            .collect();
        let mut ctx = ComposeContext {
            question: question.to_string(),
            tokens,
            key_triggers,
            ranked: ranked.clone(),
            store,
            allow_backtrack,
            triggers,
            numbers: numbers(question),
            lower: question.to_lowercase(),
            question_tokens: content_tokens_with_hints(question)
                .into_iter()
                .filter(|t| !trigger_words.contains(t))
                .collect(),
            stats: HashMap::new(),
            cells,
            entities,
            cmp_cues: op_cues(question),
        };
        ctx.stats = stats
            .into_iter()
            .map(|(p, stat)| {
                let info = ctx.prim_info(&p, stat);
                (p, info)
            })
            .collect();
        ctx
    }

    fn prim_info(&self, p: &Primitive, stat: PrimStat) -> PrimInfo {
        let mut covered = content_tokens(&p.lexical_text());
        let mut proximity = 0.0;
        match p.payload() {
            Payload::FirstHop { entity, .. } => {
                covered.extend(content_tokens(self.entity_name(entity)))
            }
            Payload::TbClVl { column, value, .. } => {
                proximity = column_value_proximity(&self.tokens, column, &value.to_string());
            }
            _ => {}
        }
        PrimInfo {
            stat,
            covered,
            proximity,
        }
    }

    pub fn supplied(&self, p: &Primitive) -> bool {
        self.stats.contains_key(p)
    }

    /// Byte offset of the first mention of `phrase` (or one of its words)
    /// in the question, used to order commutative parts like the question does.
    pub fn mention_position(&self, phrase: &str) -> usize {
        let lower = phrase.to_lowercase();
        if let Some(i) = self.lower.find(&lower) {
            return i;
        }
        crate::text::tokenize(&lower)
            .iter()
            .filter_map(|t| self.lower.find(t.as_str()))
            .min()
            .unwrap_or(usize::MAX)
    }

    /// Whether a column or relation name is the argument of an aggregate,
    /// superlative or ordering word: one of its tokens follows the word
    /// closely, or the word itself hints at it (`oldest` → `age`).
    pub fn near_key_trigger(&self, name: &str) -> bool {
        let name_toks: HashSet<String> = content_tokens(name).into_iter().collect();
        self.key_triggers.iter().any(|&p| {
            self.tokens[p].1.is_some_and(|h| name_toks.contains(h))
                || (p + 1..=p + KEY_WINDOW)
                    .filter_map(|i| self.tokens.get(i))
                    .any(|(t, _)| name_toks.contains(t))
        })
    }

    pub fn entity_name<'b>(&'b self, entity: &'b str) -> &'b str {
        match self.store {
            Store::Kb(kb) => kb.name(entity).unwrap_or(entity),
            Store::Db(_) => entity,
        }
    }
}

/// Primitives a form relies on, excluding join keys which the grammar
/// derives from the schema.
pub fn used_primitives(form: &LogicalForm) -> Vec<Primitive> {
    let prims = form.primitives();
    let LogicalForm::Db(q) = form else {
        return prims;
    };
    let mut keys = HashSet::new();
    let mut explicit = HashSet::new();
    collect_sql_columns(q, &mut keys, &mut explicit);
    prims
        .into_iter()
        .filter(|p| match p.payload() {
            Payload::TbCl { table, column } => {
                let c = (table.clone(), column.clone());
                !keys.contains(&c) || explicit.contains(&c)
            }
            _ => true,
        })
        .collect()
}

fn collect_sql_columns(
    q: &SqlQuery,
    keys: &mut HashSet<(String, String)>,
    explicit: &mut HashSet<(String, String)>,
) {
    for j in &q.from.joins {
        keys.insert((j.left.table.clone(), j.left.column.clone()));
        keys.insert((j.right.table.clone(), j.right.column.clone()));
    }
    let mut add = |c: &crate::sqlcore::ColumnRef| {
        explicit.insert((c.table.clone(), c.column.clone()));
    };
    for s in &q.select {
        if let Some(c) = s.column_ref() {
            add(c);
        }
    }
    for c in &q.group_by {
        add(c);
    }
    if let Some(o) = &q.order_by {
        if let Some(c) = o.key.column_ref() {
            add(c);
        }
    }
    if let Some((_, r)) = &q.set_op {
        collect_sql_columns(r, keys, explicit);
    }
}

fn sexpr_keys(e: &SExpr, keys: &mut Vec<String>) {
    match e {
        SExpr::ArgMax(inner, r) | SExpr::ArgMin(inner, r) => {
            keys.push(r.clone());
            sexpr_keys(inner, keys);
        }
        SExpr::Join(_, inner) | SExpr::Count(inner) => sexpr_keys(inner, keys),
        SExpr::And(a, b) => {
            sexpr_keys(a, keys);
            sexpr_keys(b, keys);
        }
        SExpr::Entity(_) | SExpr::Compare(..) => {}
    }
}

fn sql_keys(q: &SqlQuery, keys: &mut Vec<String>) {
    for s in &q.select {
        if let (Some(a), Some(c)) = (s.agg, s.column_ref()) {
            if a != Agg::Count {
                keys.push(c.column.clone());
            }
        }
    }
    if let Some(c) = q.order_by.as_ref().and_then(|o| o.key.column_ref()) {
        keys.push(c.column.clone());
    }
    if let Some((_, r)) = &q.set_op {
        sql_keys(r, keys);
    }
}

fn sexpr_ops(e: &SExpr, ops: &mut BTreeSet<Op>, literals: &mut Vec<f64>, cmps: &mut Vec<CmpOp>) {
    match e {
        SExpr::Entity(_) => {}
        SExpr::Join(_, inner) => {
            if matches!(inner.as_ref(), SExpr::Join(..)) {
                ops.insert(Op::TwoHop);
            }
            sexpr_ops(inner, ops, literals, cmps);
        }
        SExpr::And(a, b) => {
            ops.insert(Op::And);
            sexpr_ops(a, ops, literals, cmps);
            sexpr_ops(b, ops, literals, cmps);
        }
        SExpr::Count(inner) => {
            ops.insert(Op::Count);
            sexpr_ops(inner, ops, literals, cmps);
        }
        SExpr::ArgMax(inner, _) => {
            ops.insert(Op::ArgMax);
            sexpr_ops(inner, ops, literals, cmps);
        }
        SExpr::ArgMin(inner, _) => {
            ops.insert(Op::ArgMin);
            sexpr_ops(inner, ops, literals, cmps);
        }
        SExpr::Compare(op, _, lit) => {
            ops.insert(Op::Compare);
            cmps.push(*op);
            if let Some(n) = lit.as_number() {
                literals.push(n);
            }
        }
    }
}

fn sql_ops(q: &SqlQuery, ops: &mut BTreeSet<Op>, literals: &mut Vec<f64>) {
    let plain = q.select.iter().filter(|s| s.agg.is_none()).count();
    if plain >= 2 && q.group_by.is_empty() {
        ops.insert(Op::MultiSelect);
    }
    let mut agg_op = |a: Agg, t: &Target| {
        ops.insert(match (a, t) {
            (Agg::Count, Target::Star) => Op::CountStar,
            (Agg::Count, _) => Op::Count,
            (Agg::Max, _) => Op::Max,
            (Agg::Min, _) => Op::Min,
            (Agg::Sum, _) => Op::Sum,
            (Agg::Avg, _) => Op::Avg,
        });
    };
    for s in &q.select {
        if let Some(a) = s.agg {
            agg_op(a, &s.target);
        }
    }
    if let Some(o) = &q.order_by {
        if let Some(a) = o.key.agg {
            agg_op(a, &o.key.target);
        }
        ops.insert(if o.descending {
            Op::OrderDesc
        } else {
            Op::OrderAsc
        });
        if o.limit.is_some() {
            ops.insert(Op::Limit);
        }
    }
    if !q.from.joins.is_empty() {
        ops.insert(Op::Join);
    }
    if !q.group_by.is_empty() || q.having.is_some() {
        ops.insert(Op::Group);
    }
    if let Some(w) = &q.where_clause {
        ops.insert(Op::Where);
        if has_or(w) {
            ops.insert(Op::Or);
        }
        for c in w.conditions() {
            match c {
                Condition::Compare {
                    value: Value::Number(n),
                    ..
                } => literals.push(*n),
                Condition::Between { low, high, .. } => {
                    for v in [low, high] {
                        if let Value::Number(n) = v {
                            literals.push(*n);
                        }
                    }
                }
                Condition::InList { values, .. } => {
                    literals.extend(values.iter().filter_map(|v| match v {
                        Value::Number(n) => Some(*n),
                        _ => None,
                    }))
                }
                _ => {}
            }
        }
    }
    if let Some((op, r)) = &q.set_op {
        ops.insert(match op {
            SetOp::Union => Op::Union,
            SetOp::Intersect => Op::Intersect,
            SetOp::Except => Op::Except,
        });
        sql_ops(r, ops, literals);
    }
}

/// Plain select columns that are also constrained by a WHERE clause,
/// including the WHERE clause of a set-operation operand.
fn select_filtered(q: &SqlQuery) -> usize {
    let mut filtered: HashSet<&ColumnRef> = HashSet::new();
    let mut part = Some(q);
    while let Some(p) = part {
        if let Some(w) = &p.where_clause {
            filtered.extend(w.conditions().into_iter().filter_map(|c| c.column()));
        }
        part = p.set_op.as_ref().map(|(_, r)| r.as_ref());
    }
    q.select
        .iter()
        .filter(|s| s.agg.is_none())
        .filter_map(|s| s.column_ref())
        .filter(|c| filtered.contains(c))
        .count()
}

fn has_or(e: &BoolExpr) -> bool {
    match e {
        BoolExpr::Cond(_) => false,
        BoolExpr::Or(..) => true,
        BoolExpr::And(a, b) => has_or(a) || has_or(b),
    }
}

fn cmp_to_cond(op: CmpOp) -> CondOp {
    match op {
        CmpOp::Lt => CondOp::Lt,
        CmpOp::Le => CondOp::Le,
        CmpOp::Gt => CondOp::Gt,
        CmpOp::Ge => CondOp::Ge,
    }
}

/// Composition features of a complete form, or `None` when the form uses a
/// primitive that was not supplied.
pub fn form_features(form: &LogicalForm, ctx: &ComposeContext<'_>) -> Option<Features> {
    let used = used_primitives(form);
    let mut dense: HashMap<usize, f64> = HashMap::new();
    let mut add = |i: usize, v: f64| {
        if v != 0.0 {
            *dense.entry(i).or_default() += v;
        }
    };
    let mut covered: HashSet<String> = HashSet::new();
    let mut used_entities = BTreeSet::new();
    let mut used_values: HashSet<String> = HashSet::new();
    for p in &used {
        let info = ctx.stats.get(p)?;
        let st = &info.stat;
        let base = p.category().index() * PRIM_FEATURES.len();
        add(base, st.score);
        add(base + 1, st.prob);
        add(base + 2, st.gap);
        add(base + 3, 1.0 / (1.0 + st.position as f64));
        add(base + 4, f64::from(u8::from(st.position == 0)));
        add(base + 5, 1.0);
        covered.extend(info.covered.iter().cloned());
        add(misc_index("cond_proximity"), info.proximity);
        match p.payload() {
            Payload::FirstHop { entity, .. } => {
                used_entities.insert(entity.clone());
            }
            Payload::TbClVl { value, .. } => {
                used_values.insert(value.to_string());
            }
            _ => {}
        }
    }
    let mut ops = BTreeSet::new();
    let mut literals = Vec::new();
    let mut cmps = Vec::new();
    match form {
        LogicalForm::Kb(e) => sexpr_ops(e, &mut ops, &mut literals, &mut cmps),
        LogicalForm::Db(q) => sql_ops(q, &mut ops, &mut literals),
        LogicalForm::NoAnswer => {}
    }
    for o in &ops {
        add(op_index(*o), 1.0);
        for t in ctx.triggers.iter() {
            add(cross_index(*o, t), 1.0);
        }
    }
    if let LogicalForm::Db(q) = form {
        covered.extend(q.from.tables().flat_map(content_tokens));
        add(misc_index("select_filtered"), select_filtered(q) as f64);
    }
    if !ctx.question_tokens.is_empty() {
        let hit = ctx
            .question_tokens
            .iter()
            .filter(|t| covered.contains(*t))
            .count();
        add(
            misc_index("coverage"),
            hit as f64 / ctx.question_tokens.len() as f64,
        );
    }
    let used_numbers: HashSet<String> = literals.iter().map(|n| format_number(*n)).collect();
    let unused_numbers = ctx
        .numbers
        .iter()
        .map(|n| format_number(*n))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|n| !used_numbers.contains(n))
        .count();
    add(misc_index("unused_numbers"), unused_numbers as f64);
    add(
        misc_index("reused_numbers"),
        (literals.len() - used_numbers.len()) as f64,
    );
    add(
        misc_index("unused_cells"),
        ctx.cells
            .iter()
            .filter(|c| !used_values.contains(*c))
            .count() as f64,
    );
    add(
        misc_index("unused_entities"),
        ctx.entities
            .iter()
            .filter(|e| !used_entities.contains(*e))
            .count() as f64,
    );
    let agree = cmps
        .iter()
        .filter(|c| ctx.cmp_cues.contains(&cmp_to_cond(**c)))
        .count();
    add(misc_index("compare_cue"), agree as f64);
    let mut keys = Vec::new();
    match form {
        LogicalForm::Kb(e) => sexpr_keys(e, &mut keys),
        LogicalForm::Db(q) => sql_keys(q, &mut keys),
        LogicalForm::NoAnswer => {}
    }
    let near = keys.iter().filter(|k| ctx.near_key_trigger(k)).count();
    add(misc_index("key_near_trigger"), near as f64);
    add(
        misc_index("key_far_from_trigger"),
        (keys.len() - near) as f64,
    );
    let mut out: Features = dense.into_iter().collect();
    out.sort_by_key(|(i, _)| *i);
    Some(out)
}
