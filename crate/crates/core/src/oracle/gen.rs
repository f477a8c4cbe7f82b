//! Seeded random instances for differential and round-trip testing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::datamodel::{
    Column, ColumnType, CondOp, Database, Direction, KnowledgeBase, Literal, Table, Triple, Value,
};
use crate::sexpr::{CmpOp, SExpr};
use crate::sqlcore::{
    Agg, BoolExpr, ColumnRef, Condition, FromClause, Having, JoinClause, OrderBy, SelectItem,
    SetOp, SqlQuery, Target,
};

const ENTITY_RELATIONS: [&str; 4] = ["r0", "r1", "r2", "r3"];
const LITERAL_RELATIONS: [&str; 3] = ["age", "height", "label"];

/// A KB with at most `max_triples` triples over a small vocabulary so that
/// joins, intersections and literal comparisons are frequently non-empty.
pub fn random_kb<R: Rng>(rng: &mut R, max_triples: usize) -> KnowledgeBase {
    let n = rng.gen_range(0..=max_triples);
    let entities = rng.gen_range(2..=10);
    let mut triples = Vec::with_capacity(n);
    for _ in 0..n {
        let s = format!("e{}", rng.gen_range(0..entities));
        if rng.gen_bool(0.6) {
            let r = ENTITY_RELATIONS.choose(rng).unwrap();
            triples.push(Triple::entity(
                &s,
                r,
                &format!("e{}", rng.gen_range(0..entities)),
            ));
        } else {
            let r = *LITERAL_RELATIONS.choose(rng).unwrap();
            triples.push(Triple::literal(&s, r, random_literal(rng, r)));
        }
    }
    KnowledgeBase::from_triples(triples)
}

fn random_literal<R: Rng>(rng: &mut R, relation: &str) -> Literal {
    match relation {
        "age" => Literal::Int(rng.gen_range(-3..40)),
        "height" => {
            if rng.gen_bool(0.9) {
                Literal::Float(rng.gen_range(0..20) as f64 / 4.0)
            } else {
                Literal::Str("tall".into())
            }
        }
        _ => Literal::Str(
            ["a", "b", "ab", "c\"q", "12"]
                .choose(rng)
                .unwrap()
                .to_string(),
        ),
    }
}

fn random_relation<R: Rng>(rng: &mut R) -> &'static str {
    if rng.gen_bool(0.75) {
        ENTITY_RELATIONS.choose(rng).unwrap()
    } else {
        LITERAL_RELATIONS.choose(rng).unwrap()
    }
}

/// A random expression whose `depth()` is at most `max_depth + 1`
/// (operator nesting of at most `max_depth`), optionally wrapped in `COUNT`.
pub fn random_sexpr<R: Rng>(rng: &mut R, max_depth: usize) -> SExpr {
    let e = set_expr(rng, max_depth);
    if rng.gen_bool(0.15) {
        SExpr::count(e)
    } else {
        e
    }
}

fn set_expr<R: Rng>(rng: &mut R, depth: usize) -> SExpr {
    if depth == 0 {
        return SExpr::entity(&format!("e{}", rng.gen_range(0..10)));
    }
    match rng.gen_range(0..10) {
        0..=3 => {
            let inner = set_expr(rng, depth - 1);
            let r = random_relation(rng);
            if rng.gen_bool(0.5) {
                SExpr::join(r, inner)
            } else {
                SExpr::join_rev(r, inner)
            }
        }
        4 | 5 => SExpr::and(set_expr(rng, depth - 1), set_expr(rng, depth - 1)),
        6 => SExpr::ArgMax(
            Box::new(set_expr(rng, depth - 1)),
            random_relation(rng).into(),
        ),
        7 => SExpr::ArgMin(
            Box::new(set_expr(rng, depth - 1)),
            random_relation(rng).into(),
        ),
        8 => {
            let r = *LITERAL_RELATIONS.choose(rng).unwrap();
            let lit = if rng.gen_bool(0.1) {
                random_literal(rng, "label")
            } else {
                random_literal(rng, r)
            };
            SExpr::Compare(*CmpOp::ALL.choose(rng).unwrap(), r.into(), lit)
        }
        _ => SExpr::entity(&format!("e{}", rng.gen_range(0..10))),
    }
}

/// Arbitrary (not store-bound) expressions for grammar round trips, with
/// unusual identifiers and literal values.
pub fn random_sexpr_syntax<R: Rng>(rng: &mut R, max_depth: usize) -> SExpr {
    let e = syntax_expr(rng, max_depth);
    if rng.gen_bool(0.2) {
        SExpr::count(e)
    } else {
        e
    }
}

fn ident<R: Rng>(rng: &mut R) -> String {
    let names = [
        "e1",
        "m.0abc",
        "people.person.age",
        "x_y",
        "Q42",
        "a-b",
        "r#1",
        "ÉTÉ",
    ];
    names.choose(rng).unwrap().to_string()
}

fn syntax_literal<R: Rng>(rng: &mut R) -> Literal {
    match rng.gen_range(0..3) {
        0 => Literal::Int(rng.gen_range(-1_000_000..1_000_000)),
        1 => {
            let floats = [0.5, -2.25, 1e-7, 1e21, 3.0, 0.1 + 0.2, f64::MAX, -0.0];
            Literal::Float(*floats.choose(rng).unwrap())
        }
        _ => {
            let parts = [
                "",
                "a b",
                "quote\"d",
                "back\\slash",
                "2001-01-01",
                "(paren)",
                "ünï",
            ];
            Literal::Str(parts.choose(rng).unwrap().to_string())
        }
    }
}

fn syntax_expr<R: Rng>(rng: &mut R, depth: usize) -> SExpr {
    if depth == 0 || rng.gen_bool(0.2) {
        return SExpr::Entity(ident(rng));
    }
    match rng.gen_range(0..6) {
        0 => SExpr::join(&ident(rng), syntax_expr(rng, depth - 1)),
        1 => SExpr::join_rev(&ident(rng), syntax_expr(rng, depth - 1)),
        2 => SExpr::and(syntax_expr(rng, depth - 1), syntax_expr(rng, depth - 1)),
        3 => SExpr::ArgMax(Box::new(syntax_expr(rng, depth - 1)), ident(rng)),
        4 => SExpr::ArgMin(Box::new(syntax_expr(rng, depth - 1)), ident(rng)),
        _ => SExpr::Compare(
            *CmpOp::ALL.choose(rng).unwrap(),
            ident(rng),
            syntax_literal(rng),
        ),
    }
}

const TEXTS: [&str; 5] = ["a", "b", "ab", "Kyle", "o'k"];

/// A database of 1 to `max_tables` tables with up to `max_rows` rows; column
/// names repeat across tables so equi-joins are meaningful.
pub fn random_db<R: Rng>(rng: &mut R, max_tables: usize, max_rows: usize) -> Database {
    let n_tables = rng.gen_range(1..=max_tables);
    let mut tables = Vec::new();
    for ti in 0..n_tables {
        let mut columns = vec![Column::new("id", ColumnType::Number)];
        let pool = [
            ("k", ColumnType::Number),
            ("name", ColumnType::Text),
            ("v", ColumnType::Number),
            ("tag", ColumnType::Text),
        ];
        for (name, ty) in pool {
            if rng.gen_bool(0.6) {
                columns.push(Column::new(name, ty));
            }
        }
        let n_rows = rng.gen_range(0..=max_rows);
        let rows = (0..n_rows)
            .map(|_| {
                columns
                    .iter()
                    .map(|c| random_cell(rng, c.ty, 0.1))
                    .collect()
            })
            .collect();
        tables.push(Table {
            name: format!("t{ti}"),
            columns,
            rows,
        });
    }
    Database::new(tables).expect("generated tables are valid")
}

fn random_cell<R: Rng>(rng: &mut R, ty: ColumnType, null_p: f64) -> Value {
    if rng.gen_bool(null_p) {
        return Value::Null;
    }
    match ty {
        ColumnType::Number => {
            Value::Number(rng.gen_range(0..6) as f64 + if rng.gen_bool(0.2) { 0.5 } else { 0.0 })
        }
        ColumnType::Text => Value::Text(TEXTS.choose(rng).unwrap().to_string()),
    }
}

struct QueryGen<'a, R> {
    rng: &'a mut R,
    db: &'a Database,
    /// Probability of deliberately ill-typed or unresolvable parts.
    noise: f64,
}

impl<R: Rng> QueryGen<'_, R> {
    fn scope(&self, from: &FromClause) -> Vec<(ColumnRef, ColumnType)> {
        from.tables()
            .flat_map(|t| {
                self.db
                    .table(t)
                    .unwrap()
                    .columns
                    .iter()
                    .map(move |c| (ColumnRef::new(t, &c.name), c.ty))
            })
            .collect()
    }

    fn pick_col(
        &mut self,
        scope: &[(ColumnRef, ColumnType)],
        ty: Option<ColumnType>,
    ) -> (ColumnRef, ColumnType) {
        if self.rng.gen_bool(self.noise / 4.0) {
            return (
                ColumnRef::new(&scope[0].0.table, "missing"),
                ColumnType::Number,
            );
        }
        let fitting: Vec<_> = scope
            .iter()
            .filter(|(_, t)| ty.is_none_or(|want| *t == want))
            .collect();
        match fitting.choose(self.rng) {
            Some(c) => (*c).clone(),
            None => scope.choose(self.rng).unwrap().clone(),
        }
    }

    fn literal(&mut self, ty: ColumnType) -> Value {
        let ty = if self.rng.gen_bool(self.noise / 4.0) {
            match ty {
                ColumnType::Number => ColumnType::Text,
                ColumnType::Text => ColumnType::Number,
            }
        } else {
            ty
        };
        random_cell(self.rng, ty, 0.0)
    }

    fn from(&mut self) -> FromClause {
        let tables = self.db.tables();
        let base = tables.choose(self.rng).unwrap().name.clone();
        let mut from = FromClause::table(&base);
        let max_joins = tables.len() - 1;
        let joins = if max_joins > 0 {
            self.rng.gen_range(0..=max_joins.min(2))
        } else {
            0
        };
        for _ in 0..joins {
            let used: Vec<String> = from.tables().map(str::to_string).collect();
            let free: Vec<&Table> = tables.iter().filter(|t| !used.contains(&t.name)).collect();
            let Some(t) = free.choose(self.rng) else {
                break;
            };
            let scope = self.scope(&from);
            let (left, ty) = self.pick_col(&scope, None);
            let right_cols: Vec<&Column> = t.columns.iter().filter(|c| c.ty == ty).collect();
            let right = match right_cols.choose(self.rng) {
                Some(c) if !self.rng.gen_bool(self.noise / 4.0) => ColumnRef::new(&t.name, &c.name),
                _ => ColumnRef::new(&t.name, &t.columns.choose(self.rng).unwrap().name),
            };
            from.joins.push(JoinClause {
                table: t.name.clone(),
                left,
                right,
            });
        }
        from
    }

    fn condition(&mut self, scope: &[(ColumnRef, ColumnType)], depth: usize) -> Condition {
        let (column, ty) = self.pick_col(scope, None);
        let negated = self.rng.gen_bool(0.3);
        match self.rng.gen_range(0..10) {
            0..=3 => Condition::Compare {
                column,
                op: *CondOp::COMPARISONS.choose(self.rng).unwrap(),
                value: self.literal(ty),
            },
            4 => Condition::Between {
                column,
                negated,
                low: self.literal(ty),
                high: self.literal(ty),
            },
            5 => {
                let n = self.rng.gen_range(1..=3);
                Condition::InList {
                    column,
                    negated,
                    values: (0..n).map(|_| self.literal(ty)).collect(),
                }
            }
            6 if ty == ColumnType::Text || self.rng.gen_bool(self.noise) => Condition::Like {
                column,
                negated,
                pattern: ["%a%", "K%", "_", "%", "a_", "O'%"]
                    .choose(self.rng)
                    .unwrap()
                    .to_string(),
            },
            7 if depth > 0 => {
                let mut sub = self.query(depth - 1, false);
                let sub_scope = self.scope(&sub.from);
                let (c, _) = self.pick_col(&sub_scope, Some(ty));
                sub.select = vec![SelectItem {
                    agg: None,
                    target: Target::Column(c),
                }];
                if self.rng.gen_bool(0.3) {
                    let (c, _) = self.pick_col(&sub_scope, Some(ty));
                    sub.select = vec![SelectItem {
                        agg: Some(*[Agg::Max, Agg::Min].choose(self.rng).unwrap()),
                        target: Target::Column(c),
                    }];
                    sub.group_by.clear();
                    sub.having = None;
                }
                Condition::InQuery {
                    column,
                    negated,
                    query: Box::new(sub),
                }
            }
            8 if depth > 0 => Condition::Exists {
                query: Box::new(self.query(depth - 1, false)),
            },
            _ => Condition::IsNull { column, negated },
        }
    }

    fn bool_expr(
        &mut self,
        scope: &[(ColumnRef, ColumnType)],
        size: usize,
        depth: usize,
    ) -> BoolExpr {
        if size <= 1 {
            return BoolExpr::Cond(self.condition(scope, depth));
        }
        let left = self.rng.gen_range(1..size);
        let a = Box::new(self.bool_expr(scope, left, depth));
        let b = Box::new(self.bool_expr(scope, size - left, depth));
        if self.rng.gen_bool(0.6) {
            BoolExpr::And(a, b)
        } else {
            BoolExpr::Or(a, b)
        }
    }

    fn item(&mut self, scope: &[(ColumnRef, ColumnType)], agg: bool) -> SelectItem {
        if agg {
            if self.rng.gen_bool(0.25) {
                return SelectItem::count_star();
            }
            let a = *Agg::ALL.choose(self.rng).unwrap();
            let want = match a {
                Agg::Sum | Agg::Avg if !self.rng.gen_bool(self.noise) => Some(ColumnType::Number),
                _ => None,
            };
            let (c, _) = self.pick_col(scope, want);
            SelectItem {
                agg: Some(a),
                target: Target::Column(c),
            }
        } else {
            let (c, _) = self.pick_col(scope, None);
            SelectItem {
                agg: None,
                target: Target::Column(c),
            }
        }
    }

    fn query(&mut self, depth: usize, allow_set_op: bool) -> SqlQuery {
        let from = self.from();
        let scope = self.scope(&from);
        let grouped = self.rng.gen_bool(0.25);
        let aggregated = grouped || self.rng.gen_bool(0.25);
        let mut select = Vec::new();
        let mut group_by = Vec::new();
        if grouped {
            let (g, _) = self.pick_col(&scope, None);
            group_by.push(g.clone());
            select.push(SelectItem {
                agg: None,
                target: Target::Column(g),
            });
            select.push(self.item(&scope, true));
        } else if aggregated {
            let n = self.rng.gen_range(1..=2);
            select.extend((0..n).map(|_| self.item(&scope, true)));
        } else if self.rng.gen_bool(0.15) {
            select.push(SelectItem::star());
        } else {
            let n = self.rng.gen_range(1..=2);
            select.extend((0..n).map(|_| self.item(&scope, false)));
        }
        let where_clause = if self.rng.gen_bool(0.7) {
            let size = self.rng.gen_range(1..=3);
            Some(self.bool_expr(&scope, size, depth))
        } else {
            None
        };
        let having = if grouped && self.rng.gen_bool(0.4) {
            let item = self.item(&scope, true);
            let ty = match item.agg {
                Some(Agg::Count | Agg::Sum | Agg::Avg) => ColumnType::Number,
                _ => self.scope_type(&scope, &item.target),
            };
            Some(Having {
                agg: item.agg.unwrap(),
                target: item.target,
                op: *CondOp::COMPARISONS.choose(self.rng).unwrap(),
                value: self.literal(ty),
            })
        } else {
            None
        };
        let order_by = if self.rng.gen_bool(0.35) {
            let key = if aggregated && self.rng.gen_bool(0.6) {
                self.item(&scope, true)
            } else {
                self.item(&scope, false)
            };
            Some(OrderBy {
                key,
                descending: self.rng.gen(),
                limit: if self.rng.gen_bool(0.5) {
                    Some(self.rng.gen_range(0..4))
                } else {
                    None
                },
            })
        } else {
            None
        };
        let mut q = SqlQuery {
            select,
            from,
            where_clause,
            group_by,
            having,
            order_by,
            set_op: None,
        };
        if allow_set_op && self.rng.gen_bool(0.2) {
            let op = *[SetOp::Union, SetOp::Intersect, SetOp::Except]
                .choose(self.rng)
                .unwrap();
            let rhs = if self.rng.gen_bool(0.3) {
                let mut same = q.clone();
                same.where_clause = None;
                same
            } else {
                self.compatible(&q)
            };
            q.set_op = Some((op, Box::new(rhs)));
        }
        q
    }

    fn scope_type(&self, scope: &[(ColumnRef, ColumnType)], t: &Target) -> ColumnType {
        match t {
            Target::Column(c) => scope
                .iter()
                .find(|(r, _)| r == c)
                .map_or(ColumnType::Number, |(_, ty)| *ty),
            Target::Star => ColumnType::Number,
        }
    }

    /// A query over another table with the same output arity, usually type-compatible.
    fn compatible(&mut self, q: &SqlQuery) -> SqlQuery {
        let mut other = self.query(0, false);
        let scope = self.scope(&other.from);
        let left_scope = self.scope(&q.from);
        let mut select = Vec::new();
        for s in &q.select {
            match (s.agg, &s.target) {
                (None, Target::Star) => select.push(SelectItem::star()),
                (Some(Agg::Count), _) => select.push(SelectItem::count_star()),
                (agg, t) => {
                    let ty = match agg {
                        Some(Agg::Sum | Agg::Avg) => ColumnType::Number,
                        _ => self.scope_type(&left_scope, t),
                    };
                    let (c, _) = self.pick_col(&scope, Some(ty));
                    select.push(SelectItem {
                        agg,
                        target: Target::Column(c),
                    });
                }
            }
        }
        if select.iter().any(|s| s.agg.is_some()) && other.group_by.is_empty() {
            other.having = None;
        }
        other.select = select;
        other.group_by.clear();
        other.having = None;
        other
    }
}

/// A query bound to `db`; `noise` is the probability of injecting
/// references or literals that fail resolution or typing.
pub fn random_query<R: Rng>(rng: &mut R, db: &Database, noise: f64) -> SqlQuery {
    QueryGen { rng, db, noise }.query(1, true)
}

/// Arbitrary queries for grammar round trips, including unusual literals.
pub fn random_query_syntax<R: Rng>(rng: &mut R) -> SqlQuery {
    let db = random_db(rng, 3, 0);
    let mut q = random_query(rng, &db, 0.3);
    scramble_literals(rng, &mut q);
    q
}

fn scramble_literals<R: Rng>(rng: &mut R, q: &mut SqlQuery) {
    fn lit<R: Rng>(rng: &mut R, v: &mut Value) {
        if rng.gen_bool(0.5) {
            *v = match v {
                Value::Number(_) => {
                    let choices = [-0.25, 1e-7, 123456789.125, -42.0, 1e21, 0.1 + 0.2];
                    Value::Number(*choices.choose(rng).unwrap())
                }
                Value::Text(_) => {
                    let choices = ["", "it''s", "a'b'", "ünï", "%_%", "SELECT"];
                    Value::Text(choices.choose(rng).unwrap().to_string())
                }
                Value::Null => Value::Null,
            };
        }
    }
    fn walk_bool<R: Rng>(rng: &mut R, e: &mut BoolExpr) {
        match e {
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                walk_bool(rng, a);
                walk_bool(rng, b);
            }
            BoolExpr::Cond(c) => match c {
                Condition::Compare { value, .. } => lit(rng, value),
                Condition::Between { low, high, .. } => {
                    lit(rng, low);
                    lit(rng, high);
                }
                Condition::InList { values, .. } => values.iter_mut().for_each(|v| lit(rng, v)),
                Condition::InQuery { query, .. } | Condition::Exists { query } => {
                    scramble_literals(rng, query)
                }
                Condition::Like { .. } | Condition::IsNull { .. } => {}
            },
        }
    }
    if let Some(w) = &mut q.where_clause {
        walk_bool(rng, w);
    }
    if let Some(h) = &mut q.having {
        lit(rng, &mut h.value);
    }
    if let Some((_, rhs)) = &mut q.set_op {
        scramble_literals(rng, rhs);
    }
}

/// A star KB: `center` has `n` out-edges `r1..rn` to distinct leaves and every
/// leaf has `m` out-edges `q1..qm` to its own distinct targets.
pub fn star_kb(n: usize, m: usize) -> KnowledgeBase {
    let mut triples = Vec::new();
    for i in 1..=n {
        let leaf = format!("leaf{i}");
        triples.push(Triple::entity("center", &format!("r{i}"), &leaf));
        for j in 1..=m {
            triples.push(Triple::entity(
                &leaf,
                &format!("q{j}"),
                &format!("leaf{i}_{j}"),
            ));
        }
    }
    KnowledgeBase::from_triples(triples)
}

/// Direction helper for callers building first hops on generated stores.
pub fn random_direction<R: Rng>(rng: &mut R) -> Direction {
    if rng.gen() {
        Direction::In
    } else {
        Direction::Out
    }
}
