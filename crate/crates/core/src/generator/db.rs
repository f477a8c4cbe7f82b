use std::collections::{BTreeSet, HashMap};

use super::features::{form_features, ComposeContext, Features};
use super::scorer::CompositionScorer;
use super::GeneratorConfig;
use crate::datamodel::{ColumnType, Database, Payload, Primitive, Value};
use crate::logical::LogicalForm;
use crate::sqlcore::{
    check_query, Agg, BoolExpr, ColumnRef, Condition, FromClause, JoinClause, OrderBy, SelectItem,
    SetOp, SqlQuery,
};

fn column_type(db: &Database, c: &ColumnRef) -> Option<ColumnType> {
    let t = db.table(&c.table)?;
    t.columns
        .iter()
        .find(|col| col.name == c.column)
        .map(|col| col.ty)
}

/// `FROM` clause covering `tables` (first one leading), joined on the first
/// column name the two tables share. At most two tables.
fn from_clause(db: &Database, tables: &[String]) -> Option<FromClause> {
    match tables {
        [t] => Some(FromClause::table(t)),
        [a, b] => {
            let ta = db.table(a)?;
            let tb = db.table(b)?;
            let shared = ta
                .columns
                .iter()
                .find(|c| tb.columns.iter().any(|d| d.name == c.name && d.ty == c.ty))?;
            Some(FromClause {
                table: a.clone(),
                joins: vec![JoinClause {
                    table: b.clone(),
                    left: ColumnRef::new(a, &shared.name),
                    right: ColumnRef::new(b, &shared.name),
                }],
            })
        }
        _ => None,
    }
}

fn push_table(tables: &mut Vec<String>, t: &str) {
    if !tables.iter().any(|x| x == t) {
        tables.push(t.to_string());
    }
}

/// A select clause with its own table and grouping.
#[derive(Clone)]
struct Head {
    select: Vec<SelectItem>,
    table: String,
    group_by: Vec<ColumnRef>,
    order_by: Option<OrderBy>,
    plain: bool,
}

impl Head {
    fn query(&self, db: &Database, conds: &[Condition], or: bool) -> Option<SqlQuery> {
        let mut tables = vec![self.table.clone()];
        for c in conds {
            push_table(&mut tables, &c.column()?.table);
        }
        let from = from_clause(db, &tables)?;
        let where_clause = if or && conds.len() == 2 {
            Some(BoolExpr::Or(
                Box::new(BoolExpr::Cond(conds[0].clone())),
                Box::new(BoolExpr::Cond(conds[1].clone())),
            ))
        } else {
            BoolExpr::conjunction(conds.to_vec())
        };
        Some(SqlQuery {
            select: self.select.clone(),
            from,
            where_clause,
            group_by: self.group_by.clone(),
            having: None,
            order_by: self.order_by.clone(),
            set_op: None,
        })
    }
}

fn condition(p: &Primitive) -> Option<Condition> {
    match p.payload() {
        Payload::TbClVl {
            table,
            column,
            op,
            value,
        } if crate::datamodel::CondOp::COMPARISONS.contains(op)
            && !matches!(value, Value::Null) =>
        {
            Some(Condition::compare(table, column, *op, value.clone()))
        }
        _ => None,
    }
}

fn heads(
    ctx: &ComposeContext<'_>,
    db: &Database,
    cols: &[ColumnRef],
    tables: &[String],
) -> Vec<Head> {
    let mut out = Vec::new();
    let head = |select: Vec<SelectItem>, table: &str| Head {
        select,
        table: table.to_string(),
        group_by: Vec::new(),
        order_by: None,
        plain: true,
    };
    for c in cols {
        out.push(head(
            vec![SelectItem::column(&c.table, &c.column)],
            &c.table,
        ));
    }
    for (i, a) in cols.iter().enumerate() {
        for b in &cols[i + 1..] {
            if a.table != b.table {
                continue;
            }
            let key = |c: &ColumnRef| (ctx.mention_position(&c.column), c.to_string());
            let (x, y) = if key(a) <= key(b) { (a, b) } else { (b, a) };
            out.push(head(
                vec![
                    SelectItem::column(&x.table, &x.column),
                    SelectItem::column(&y.table, &y.column),
                ],
                &x.table,
            ));
        }
    }
    for c in cols {
        if column_type(db, c) == Some(ColumnType::Number) {
            for a in [Agg::Max, Agg::Min, Agg::Sum, Agg::Avg] {
                let mut h = head(vec![SelectItem::agg(a, &c.table, &c.column)], &c.table);
                h.plain = false;
                out.push(h);
            }
        }
        let mut grouped = head(
            vec![
                SelectItem::column(&c.table, &c.column),
                SelectItem::count_star(),
            ],
            &c.table,
        );
        grouped.group_by = vec![c.clone()];
        grouped.plain = false;
        out.push(grouped.clone());
        for descending in [true, false] {
            let mut top = grouped.clone();
            top.select.truncate(1);
            top.order_by = Some(OrderBy {
                key: SelectItem::count_star(),
                descending,
                limit: Some(1),
            });
            out.push(top);
        }
    }
    for t in tables {
        let mut h = head(vec![SelectItem::count_star()], t);
        h.plain = false;
        out.push(h);
    }
    out
}

/// The `inner_beam` best orderings of a plain head's bare query, keyed on
/// one of the head table's columns.
fn head_orders(
    ctx: &ComposeContext<'_>,
    db: &Database,
    h: &Head,
    cols: &[ColumnRef],
    scorer: &CompositionScorer,
    cfg: &GeneratorConfig,
) -> Vec<OrderBy> {
    let Some(base) = h.query(db, &[], false) else {
        return Vec::new();
    };
    let mut options: Vec<(f64, String, OrderBy)> = Vec::new();
    for c in cols.iter().filter(|c| c.table == h.table) {
        for descending in [true, false] {
            for limit in [Some(1), None] {
                let order = OrderBy {
                    key: SelectItem::column(&c.table, &c.column),
                    descending,
                    limit,
                };
                let mut q = base.clone();
                q.order_by = Some(order.clone());
                if let Some((lf, f)) = scored(ctx, db, q) {
                    options.push((scorer.order_free_score(&f), lf.to_string(), order));
                }
            }
        }
    }
    options.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    options.truncate(cfg.inner_beam);
    options.into_iter().map(|(_, _, o)| o).collect()
}

fn scored(ctx: &ComposeContext<'_>, db: &Database, q: SqlQuery) -> Option<(LogicalForm, Features)> {
    check_query(&q, db).ok()?;
    let lf = LogicalForm::Db(q);
    let f = form_features(&lf, ctx)?;
    Some((lf, f))
}

/// Candidate queries built clause by clause: select heads pruned to the beam
/// width, then up to `inner_beam` WHERE sets and `inner_beam` orderings per
/// head, then set operation extensions. Pruning uses order-free scores.
pub(crate) fn db_pool(
    ctx: &ComposeContext<'_>,
    db: &Database,
    scorer: &CompositionScorer,
    cfg: &GeneratorConfig,
) -> Vec<(LogicalForm, Features)> {
    let mut cols: Vec<ColumnRef> = ctx
        .ranked
        .tb_cl
        .iter()
        .filter_map(|s| match s.primitive.payload() {
            Payload::TbCl { table, column } => Some(ColumnRef::new(table, column)),
            _ => None,
        })
        .collect();
    cols.sort();
    cols.dedup();
    let mut conds: Vec<Condition> = ctx
        .ranked
        .tb_cl_vl
        .iter()
        .filter_map(|s| condition(&s.primitive))
        .collect();
    conds.sort();
    conds.dedup();
    let mut tables: Vec<String> = cols.iter().map(|c| c.table.clone()).collect();
    tables.extend(
        conds
            .iter()
            .filter_map(|c| c.column().map(|c| c.table.clone())),
    );
    tables.sort();
    tables.dedup();

    let rank = |mut v: Vec<(f64, String, usize)>, keep: usize| {
        v.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        v.truncate(keep);
        v
    };

    let all_heads = heads(ctx, db, &cols, &tables);
    let mut head_scores = Vec::new();
    for (i, h) in all_heads.iter().enumerate() {
        if let Some((lf, f)) = h.query(db, &[], false).and_then(|q| scored(ctx, db, q)) {
            head_scores.push((scorer.order_free_score(&f), lf.to_string(), i));
        }
    }
    let kept_heads = rank(head_scores, cfg.beam);

    let cond_key = |c: &Condition| {
        let pos = match c {
            Condition::Compare { value, column, .. } => match value {
                Value::Text(t) => ctx.mention_position(t),
                Value::Number(n) => ctx.mention_position(&crate::text::format_number(*n)),
                Value::Null => ctx.mention_position(&column.column),
            },
            _ => usize::MAX,
        };
        (pos, c.to_string())
    };
    let mut where_sets: Vec<(Vec<Condition>, bool)> = Vec::new();
    let n = conds.len();
    for size in 1..=cfg.max_where.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let mut set: Vec<Condition> = idx.iter().map(|i| conds[*i].clone()).collect();
            set.sort_by_key(|c| cond_key(c));
            if size == 2 {
                where_sets.push((set.clone(), true));
            }
            where_sets.push((set, false));
            let mut k = size;
            while k > 0 && idx[k - 1] == n - size + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    let mut partials: Vec<(usize, Vec<Condition>, bool)> = Vec::new();
    for (_, _, hi) in &kept_heads {
        let h = &all_heads[*hi];
        partials.push((*hi, Vec::new(), false));
        let mut options = Vec::new();
        for (wi, (set, or)) in where_sets.iter().enumerate() {
            if let Some((lf, f)) = h.query(db, set, *or).and_then(|q| scored(ctx, db, q)) {
                options.push((scorer.order_free_score(&f), lf.to_string(), wi));
            }
        }
        for (_, _, wi) in rank(options, cfg.inner_beam) {
            let (set, or) = &where_sets[wi];
            partials.push((*hi, set.clone(), *or));
        }
    }

    let mut out: Vec<(LogicalForm, Features)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut orders: HashMap<usize, Vec<OrderBy>> = HashMap::new();
    let mut emit = |q: SqlQuery, out: &mut Vec<(LogicalForm, Features)>| {
        let key = q.to_string();
        if seen.contains(&key) {
            return;
        }
        if let Some(c) = scored(ctx, db, q) {
            seen.insert(key);
            out.push(c);
        }
    };
    for (hi, set, or) in &partials {
        let h = &all_heads[*hi];
        let Some(q) = h.query(db, set, *or) else {
            continue;
        };
        emit(q.clone(), &mut out);
        if !h.plain {
            continue;
        }
        for order in orders
            .entry(*hi)
            .or_insert_with(|| head_orders(ctx, db, h, &cols, scorer, cfg))
        {
            let mut o = q.clone();
            o.order_by = Some(order.clone());
            emit(o, &mut out);
        }
        if !cfg.set_ops || set.len() > 1 || *or || !q.from.joins.is_empty() {
            continue;
        }
        for other in conds
            .iter()
            .filter(|c| c.column().is_some_and(|c| c.table == h.table))
        {
            if set.first() == Some(other) {
                continue;
            }
            let Some(right) = h.query(db, std::slice::from_ref(other), false) else {
                continue;
            };
            for op in [SetOp::Union, SetOp::Intersect, SetOp::Except] {
                if set.is_empty() && op != SetOp::Except {
                    continue;
                }
                let mut s = q.clone();
                s.set_op = Some((op, Box::new(right.clone())));
                emit(s, &mut out);
            }
        }
    }
    out
}
