use super::{
    Agg, BoolExpr, ColumnRef, CondOp, Condition, FromClause, Having, JoinClause, OrderBy,
    SelectItem, SetOp, SqlQuery, Target,
};
use crate::datamodel::Value;
use crate::error::{Error, Result};

const KEYWORDS: &[&str] = &[
    "ALL",
    "AND",
    "AS",
    "ASC",
    "AVG",
    "BETWEEN",
    "BY",
    "CASE",
    "COUNT",
    "DESC",
    "DISTINCT",
    "EXCEPT",
    "EXISTS",
    "FROM",
    "GROUP",
    "HAVING",
    "IN",
    "INTERSECT",
    "IS",
    "JOIN",
    "LIKE",
    "LIMIT",
    "MAX",
    "MIN",
    "NOT",
    "NULL",
    "ON",
    "OR",
    "ORDER",
    "OVER",
    "PARTITION",
    "SELECT",
    "SUM",
    "UNION",
    "WHERE",
    "WINDOW",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Keyword(String),
    Ident(String),
    Number(f64),
    Text(String),
    Sym(&'static str),
}

fn is_value_end(t: Option<&(usize, Tok)>) -> bool {
    matches!(
        t,
        Some((
            _,
            Tok::Ident(_) | Tok::Number(_) | Tok::Text(_) | Tok::Sym(")")
        ))
    )
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out: Vec<(usize, Tok)> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let negative_number = c == b'-'
            && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())
            && !is_value_end(out.last());
        if c.is_ascii_digit() || negative_number {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let n: f64 = s
                .parse()
                .map_err(|_| Error::parse(start, format!("invalid number {s:?}")))?;
            if !n.is_finite() {
                return Err(Error::parse(start, format!("number out of range {s:?}")));
            }
            out.push((start, Tok::Number(n)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'#')
            {
                i += 1;
            }
            let word = &text[start..i];
            let upper = word.to_ascii_uppercase();
            if KEYWORDS.contains(&upper.as_str()) {
                out.push((start, Tok::Keyword(upper)));
            } else {
                out.push((start, Tok::Ident(word.to_string())));
            }
            continue;
        }
        if c == b'\'' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = text[i..].chars().next() else {
                    return Err(Error::parse(start, "unterminated string literal"));
                };
                i += ch.len_utf8();
                if ch == '\'' {
                    if bytes.get(i) == Some(&b'\'') {
                        s.push('\'');
                        i += 1;
                    } else {
                        break;
                    }
                } else {
                    s.push(ch);
                }
            }
            out.push((start, Tok::Text(s)));
            continue;
        }
        let two = text.get(i..i + 2).unwrap_or("");
        let sym: &'static str = match two {
            "!=" => "!=",
            "<>" => "!=",
            ">=" => ">=",
            "<=" => "<=",
            _ => match c {
                b'=' => "=",
                b'<' => "<",
                b'>' => ">",
                b'(' => "(",
                b')' => ")",
                b',' => ",",
                b'.' => ".",
                b'*' => "*",
                b';' => ";",
                _ => {
                    let ch = text[i..].chars().next().unwrap_or('?');
                    return Err(Error::parse(i, format!("unexpected character {ch:?}")));
                }
            },
        };
        i += if two == sym || two == "<>" { 2 } else { 1 };
        out.push((start, Tok::Sym(sym)));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::parse(self.offset(), msg))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Keyword(k)) if k == kw)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Keyword(k)) => k.clone(),
            Some(Tok::Ident(s)) => format!("identifier {s:?}"),
            Some(Tok::Number(n)) => format!("number {n}"),
            Some(Tok::Text(s)) => format!("string '{s}'"),
            Some(Tok::Sym(s)) => format!("'{s}'"),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected {kw}, found {}", self.describe()))
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", self.describe()))
        }
    }

    /// Rejects constructs outside the subset with a message naming them.
    fn unsupported(&self) -> Option<&'static str> {
        match self.peek() {
            Some(Tok::Keyword(k)) => match k.as_str() {
                "OVER" | "PARTITION" | "WINDOW" => Some("window functions are not supported"),
                "AS" => Some("aliases (AS) are not supported"),
                "DISTINCT" => Some("DISTINCT is not supported"),
                "CASE" => Some("CASE expressions are not supported"),
                "ALL" => Some("set operations with ALL are not supported"),
                _ => None,
            },
            _ => None,
        }
    }

    fn check_unsupported(&self) -> Result<()> {
        match self.unsupported() {
            Some(msg) => self.err(msg),
            None => Ok(()),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        self.check_unsupported()?;
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            Some(Tok::Keyword(k)) => self.err(format!("reserved keyword {k} used as {what}")),
            _ => self.err(format!("expected {what}, found {}", self.describe())),
        }
    }

    fn column_ref(&mut self) -> Result<ColumnRef> {
        if self.is_sym("(")
            && matches!(self.toks.get(self.pos + 1), Some((_, Tok::Keyword(k))) if k == "SELECT")
        {
            return self.err("subqueries are only supported inside IN or EXISTS");
        }
        let table = self.ident("table name")?;
        if self.is_sym("(") {
            return Err(Error::parse(
                self.toks[self.pos - 1].0,
                format!("function {table} is not supported; only AVG, COUNT, MAX, MIN, SUM"),
            ));
        }
        if !self.eat_sym(".") {
            return self.err(format!(
                "column references must be qualified as table.column (after {table:?})"
            ));
        }
        let column = self.ident("column name")?;
        Ok(ColumnRef { table, column })
    }

    fn agg_keyword(&self) -> Option<Agg> {
        match self.peek() {
            Some(Tok::Keyword(k)) => Agg::ALL.into_iter().find(|a| a.keyword() == k),
            _ => None,
        }
    }

    /// `t.c`, `*` (when allowed), `AGG(t.c)`, `COUNT(*)`.
    fn item(&mut self, allow_star: bool) -> Result<SelectItem> {
        self.check_unsupported()?;
        if let Some(agg) = self.agg_keyword() {
            self.pos += 1;
            self.expect_sym("(")?;
            self.check_unsupported()?;
            let target = if self.is_sym("*") {
                if agg != Agg::Count {
                    return self.err(format!("{}(*) is not supported", agg.keyword()));
                }
                self.pos += 1;
                Target::Star
            } else {
                Target::Column(self.column_ref()?)
            };
            self.expect_sym(")")?;
            if self.is_kw("OVER") {
                return self.err("window functions are not supported");
            }
            return Ok(SelectItem {
                agg: Some(agg),
                target,
            });
        }
        if self.is_sym("*") {
            if !allow_star {
                return self.err("'*' is only allowed in the select list or COUNT(*)");
            }
            self.pos += 1;
            return Ok(SelectItem::star());
        }
        Ok(SelectItem {
            agg: None,
            target: Target::Column(self.column_ref()?),
        })
    }

    fn literal(&mut self) -> Result<Value> {
        match self.peek().cloned() {
            Some(Tok::Number(n)) => {
                self.pos += 1;
                Ok(Value::Number(n))
            }
            Some(Tok::Text(s)) => {
                self.pos += 1;
                Ok(Value::Text(s))
            }
            Some(Tok::Keyword(k)) if k == "NULL" => {
                self.err("NULL is only allowed with IS [NOT] NULL")
            }
            Some(Tok::Sym("(")) if matches!(self.toks.get(self.pos + 1), Some((_, Tok::Keyword(k))) if k == "SELECT") => {
                self.err("subqueries are only supported inside IN or EXISTS")
            }
            _ => self.err(format!("expected literal, found {}", self.describe())),
        }
    }

    fn comparison_op(&mut self) -> Option<CondOp> {
        let op = match self.peek() {
            Some(Tok::Sym(s)) => match *s {
                "=" => CondOp::Eq,
                "!=" => CondOp::Ne,
                ">" => CondOp::Gt,
                "<" => CondOp::Lt,
                ">=" => CondOp::Ge,
                "<=" => CondOp::Le,
                _ => return None,
            },
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn subquery(&mut self) -> Result<SqlQuery> {
        self.expect_sym("(")?;
        let q = self.query()?;
        self.expect_sym(")")?;
        Ok(q)
    }

    fn condition(&mut self) -> Result<BoolExpr> {
        if self.is_sym("(")
            && !matches!(self.toks.get(self.pos + 1), Some((_, Tok::Keyword(k))) if k == "SELECT")
        {
            self.pos += 1;
            let e = self.or_expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if self.eat_kw("EXISTS") {
            let q = self.subquery()?;
            return Ok(BoolExpr::Cond(Condition::Exists { query: Box::new(q) }));
        }
        if self.is_kw("NOT") {
            return self.err("NOT is only supported as NOT IN, NOT LIKE, NOT BETWEEN or IS NOT");
        }
        if self.agg_keyword().is_some() {
            return self.err("aggregates in WHERE are not supported; use HAVING");
        }
        let column = self.column_ref()?;
        if let Some(op) = self.comparison_op() {
            if self.is_sym("(") {
                return self.err("subqueries are only supported inside IN or EXISTS");
            }
            if self.is_kw("NULL") {
                return self.err("comparison with NULL; use IS [NOT] NULL");
            }
            if matches!(self.peek(), Some(Tok::Ident(_))) {
                return self.err("column-to-column comparisons are only supported in JOIN ... ON");
            }
            let value = self.literal()?;
            return Ok(BoolExpr::Cond(Condition::Compare { column, op, value }));
        }
        if self.eat_kw("IS") {
            let negated = self.eat_kw("NOT");
            self.expect_kw("NULL")?;
            return Ok(BoolExpr::Cond(Condition::IsNull { column, negated }));
        }
        let negated = self.eat_kw("NOT");
        if self.eat_kw("BETWEEN") {
            let low = self.literal()?;
            self.expect_kw("AND")?;
            let high = self.literal()?;
            return Ok(BoolExpr::Cond(Condition::Between {
                column,
                negated,
                low,
                high,
            }));
        }
        if self.eat_kw("LIKE") {
            return match self.literal()? {
                Value::Text(pattern) => Ok(BoolExpr::Cond(Condition::Like {
                    column,
                    negated,
                    pattern,
                })),
                _ => {
                    self.pos -= 1;
                    self.err("LIKE pattern must be a string literal")
                }
            };
        }
        if self.eat_kw("IN") {
            self.expect_sym("(")?;
            if self.is_kw("SELECT") {
                let q = self.query()?;
                self.expect_sym(")")?;
                return Ok(BoolExpr::Cond(Condition::InQuery {
                    column,
                    negated,
                    query: Box::new(q),
                }));
            }
            let mut values = vec![self.literal()?];
            while self.eat_sym(",") {
                values.push(self.literal()?);
            }
            self.expect_sym(")")?;
            return Ok(BoolExpr::Cond(Condition::InList {
                column,
                negated,
                values,
            }));
        }
        self.err(format!(
            "expected condition operator, found {}",
            self.describe()
        ))
    }

    fn and_expr(&mut self) -> Result<BoolExpr> {
        let mut left = self.condition()?;
        while self.eat_kw("AND") {
            let right = self.condition()?;
            left = BoolExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn or_expr(&mut self) -> Result<BoolExpr> {
        let mut left = self.and_expr()?;
        while self.eat_kw("OR") {
            let right = self.and_expr()?;
            left = BoolExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn having(&mut self) -> Result<Having> {
        let Some(agg) = self.agg_keyword() else {
            return self.err("HAVING supports only AGG(column) <op> literal");
        };
        let item = self.item(false)?;
        let Some(op) = self.comparison_op() else {
            return self.err("HAVING supports only AGG(column) <op> literal");
        };
        let value = self.literal().map_err(|_| {
            Error::parse(
                self.offset(),
                "HAVING supports only AGG(column) <op> literal",
            )
        })?;
        if self.is_kw("AND") || self.is_kw("OR") {
            return self.err("HAVING supports only a single aggregate comparison");
        }
        Ok(Having {
            agg,
            target: item.target,
            op,
            value,
        })
    }

    fn query(&mut self) -> Result<SqlQuery> {
        self.check_unsupported()?;
        self.expect_kw("SELECT")?;
        self.check_unsupported()?;
        let mut select = vec![self.item(true)?];
        while self.eat_sym(",") {
            select.push(self.item(true)?);
        }
        self.check_unsupported()?;
        self.expect_kw("FROM")?;
        if self.is_sym("(") {
            return self.err("subqueries are only supported inside IN or EXISTS");
        }
        let table = self.ident("table name")?;
        let mut from = FromClause {
            table,
            joins: Vec::new(),
        };
        loop {
            self.check_unsupported()?;
            if self.is_sym(",") {
                return self.err("comma joins are not supported; use JOIN ... ON");
            }
            if !self.eat_kw("JOIN") {
                break;
            }
            let table = self.ident("table name")?;
            self.expect_kw("ON")?;
            let left = self.column_ref()?;
            self.expect_sym("=")?;
            let right = self.column_ref()?;
            from.joins.push(JoinClause { table, left, right });
        }
        let where_clause = if self.eat_kw("WHERE") {
            Some(self.or_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_kw("GROUP") {
            self.expect_kw("BY")?;
            group_by.push(self.column_ref()?);
            while self.eat_sym(",") {
                group_by.push(self.column_ref()?);
            }
        }
        let having = if self.eat_kw("HAVING") {
            Some(self.having()?)
        } else {
            None
        };
        let order_by = if self.eat_kw("ORDER") {
            self.expect_kw("BY")?;
            let key = self.item(false)?;
            if self.is_sym(",") {
                return self.err("ORDER BY supports a single key");
            }
            let descending = if self.eat_kw("DESC") {
                true
            } else {
                self.eat_kw("ASC");
                false
            };
            let limit = if self.eat_kw("LIMIT") {
                match self.peek().cloned() {
                    Some(Tok::Number(n)) if n >= 0.0 && n.fract() == 0.0 => {
                        self.pos += 1;
                        Some(n as u64)
                    }
                    _ => return self.err("LIMIT expects a non-negative integer"),
                }
            } else {
                None
            };
            Some(OrderBy {
                key,
                descending,
                limit,
            })
        } else {
            if self.is_kw("LIMIT") {
                return self.err("LIMIT is only supported after ORDER BY");
            }
            None
        };
        self.check_unsupported()?;
        let set_kw = [
            ("UNION", SetOp::Union),
            ("INTERSECT", SetOp::Intersect),
            ("EXCEPT", SetOp::Except),
        ]
        .into_iter()
        .find(|(kw, _)| self.is_kw(kw));
        let set_op = match set_kw {
            Some((_, op)) => {
                self.pos += 1;
                self.check_unsupported()?;
                Some((op, Box::new(self.query()?)))
            }
            None => None,
        };
        Ok(SqlQuery {
            select,
            from,
            where_clause,
            group_by,
            having,
            order_by,
            set_op,
        })
    }
}

/// Parses a query of the subset; errors carry a byte offset and name the construct.
pub fn parse_sql(text: &str) -> Result<SqlQuery> {
    if text.trim().is_empty() {
        return Err(Error::parse(0, "empty input"));
    }
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let q = p.query()?;
    p.eat_sym(";");
    if p.pos < p.toks.len() {
        p.check_unsupported()?;
        return p.err(format!("unexpected {} after query", p.describe()));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::super::print_sql;
    use super::*;

    fn msg(src: &str) -> String {
        match parse_sql(src) {
            Err(Error::Parse { message, .. }) => message,
            other => panic!("expected parse error for {src:?}, got {other:?}"),
        }
    }

    #[test]
    fn count_with_condition() {
        let q = parse_sql("SELECT COUNT(*) FROM head WHERE head.age > 56").unwrap();
        assert_eq!(q.select, vec![SelectItem::count_star()]);
        assert_eq!(
            q.where_clause,
            Some(BoolExpr::Cond(Condition::compare(
                "head",
                "age",
                CondOp::Gt,
                Value::Number(56.0)
            )))
        );
    }

    #[test]
    fn simple_select() {
        let q = parse_sql("SELECT t.c FROM t").unwrap();
        assert_eq!(q, SqlQuery::simple(vec![SelectItem::column("t", "c")], "t"));
    }

    #[test]
    fn canonicalizes_case_and_spacing() {
        let q =
            parse_sql("select  count(*) from head where head.age>56 order by head.age limit 2;")
                .unwrap();
        assert_eq!(
            print_sql(&q),
            "SELECT COUNT(*) FROM head WHERE head.age > 56 ORDER BY head.age ASC LIMIT 2"
        );
    }

    #[test]
    fn full_subset_round_trips() {
        let srcs = [
            "SELECT a.x, AVG(b.y) FROM a JOIN b ON a.id = b.aid WHERE a.x LIKE 'k%' OR a.z IS NOT NULL AND b.y NOT BETWEEN -1 AND 2.5 GROUP BY a.x HAVING COUNT(*) >= 2 ORDER BY AVG(b.y) DESC LIMIT 3",
            "SELECT t.a FROM t WHERE t.b IN (1, 2) UNION SELECT u.a FROM u WHERE u.a NOT IN (SELECT t.a FROM t)",
            "SELECT * FROM t WHERE EXISTS (SELECT u.a FROM u WHERE u.a != 'x') AND (t.a = 1 OR t.a = 2)",
            "SELECT t.pick# FROM t EXCEPT SELECT t.pick# FROM t WHERE t.pick# <= 3",
        ];
        for src in srcs {
            let q = parse_sql(src).unwrap();
            assert_eq!(print_sql(&q), src);
            assert_eq!(parse_sql(&print_sql(&q)).unwrap(), q);
        }
    }

    #[test]
    fn precedence_and_binds_tighter() {
        let q = parse_sql("SELECT t.a FROM t WHERE t.a = 1 OR t.a = 2 AND t.b = 3").unwrap();
        assert!(matches!(q.where_clause, Some(BoolExpr::Or(..))));
    }

    #[test]
    fn named_construct_errors() {
        assert!(msg("SELECT ROW_NUMBER() OVER (PARTITION BY t.a) FROM t").contains("not supported"));
        assert!(msg("SELECT COUNT(*) OVER (PARTITION BY t.a) FROM t").contains("window"));
        assert!(msg("SELECT t.a FROM t GROUP BY t.a HAVING t.a > 1").contains("HAVING"));
        assert!(msg("SELECT t.a FROM (SELECT t.a FROM t)").contains("subqueries"));
        assert!(
            msg("SELECT t.a FROM t WHERE t.a = (SELECT MAX(t.a) FROM t)").contains("subqueries")
        );
        assert!(msg("SELECT a FROM t").contains("qualified"));
        assert!(msg("SELECT t.a AS x FROM t").contains("AS"));
        assert!(msg("SELECT DISTINCT t.a FROM t").contains("DISTINCT"));
        assert!(msg("SELECT t.a FROM t WHERE t.a = NULL").contains("IS"));
        assert!(msg("SELECT t.a FROM t LIMIT 1").contains("ORDER BY"));
    }

    #[test]
    fn error_offsets() {
        match parse_sql("SELECT t.a FROM t WHERE t.a >") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 29),
            other => panic!("{other:?}"),
        }
        match parse_sql("SELECT t.a FROM t WHERE t.a = 'x") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 30),
            other => panic!("{other:?}"),
        }
        assert!(parse_sql("").is_err());
    }

    #[test]
    fn negative_numbers_and_minus() {
        let q = parse_sql("SELECT t.a FROM t WHERE t.a > -3").unwrap();
        assert_eq!(print_sql(&q), "SELECT t.a FROM t WHERE t.a > -3");
        assert!(parse_sql("SELECT t.a FROM t WHERE t.a > 3 -3").is_err());
    }
}
