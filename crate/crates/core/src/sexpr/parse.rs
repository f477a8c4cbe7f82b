use super::{CmpOp, JoinRel, SExpr};
use crate::datamodel::Literal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
    Str(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    let Some(ch) = text[i..].chars().next() else {
                        return Err(Error::parse(start, "unterminated string literal"));
                    };
                    match ch {
                        '"' => {
                            i += 1;
                            break;
                        }
                        '\\' => {
                            let next = text[i + 1..].chars().next().ok_or_else(|| {
                                Error::parse(start, "unterminated string literal")
                            })?;
                            if next != '"' && next != '\\' {
                                return Err(Error::parse(i, format!("unknown escape \\{next}")));
                            }
                            s.push(next);
                            i += 1 + next.len_utf8();
                        }
                        ch => {
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                out.push((start, Tok::Str(s)));
            }
            _ => {
                let start = i;
                while i < bytes.len() {
                    let b = bytes[i];
                    if b == b'(' || b == b')' || b == b'"' || b.is_ascii_whitespace() {
                        break;
                    }
                    i += 1;
                }
                out.push((start, Tok::Atom(text[start..i].to_string())));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_close(&mut self, op: &str) -> Result<()> {
        match self.next() {
            Some((_, Tok::Close)) => Ok(()),
            Some((o, _)) => Err(Error::parse(
                o,
                format!("wrong arity for {op}: expected ')'"),
            )),
            None => Err(Error::parse(
                self.end,
                "unbalanced parentheses: missing ')'",
            )),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.next() {
            Some((_, Tok::Atom(a))) => Ok(a),
            Some((o, Tok::Close)) => Err(Error::parse(o, format!("wrong arity: missing {what}"))),
            Some((o, _)) => Err(Error::parse(o, format!("expected {what}"))),
            None => Err(Error::parse(
                self.end,
                format!("unexpected end of input, expected {what}"),
            )),
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.next() {
            Some((_, Tok::Str(s))) => Ok(Literal::Str(s)),
            Some((o, Tok::Atom(a))) => {
                if let Ok(i) = a.parse::<i64>() {
                    Ok(Literal::Int(i))
                } else {
                    match a.parse::<f64>() {
                        Ok(f) if f.is_finite() && a.bytes().any(|b| b.is_ascii_digit()) => {
                            Ok(Literal::Float(f))
                        }
                        _ => Err(Error::parse(o, format!("invalid literal {a:?}"))),
                    }
                }
            }
            Some((o, _)) => Err(Error::parse(o, "expected literal")),
            None => Err(Error::parse(
                self.end,
                "unexpected end of input, expected literal",
            )),
        }
    }

    fn join_rel(&mut self) -> Result<JoinRel> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Open)) => {
                self.pos += 1;
                match self.next() {
                    Some((_, Tok::Atom(a))) if a == "R" => {}
                    Some((o, _)) => {
                        return Err(Error::parse(
                            o,
                            "only (R rel) may appear as a JOIN relation",
                        ))
                    }
                    None => return Err(Error::parse(self.end, "unexpected end of input")),
                }
                let r = self.ident("relation")?;
                self.expect_close("R")?;
                Ok(JoinRel::Reverse(r))
            }
            _ => Ok(JoinRel::Forward(self.ident("relation")?)),
        }
    }

    fn expr(&mut self, root: bool) -> Result<SExpr> {
        match self.next() {
            Some((_, Tok::Atom(a))) => Ok(SExpr::Entity(a)),
            Some((o, Tok::Str(_))) => Err(Error::parse(
                o,
                "string literal where an expression is expected",
            )),
            Some((o, Tok::Close)) => Err(Error::parse(o, "unbalanced parentheses: unexpected ')'")),
            None => Err(Error::parse(self.end, "unexpected end of input")),
            Some((open_at, Tok::Open)) => {
                let (op_at, op) = match self.next() {
                    Some((o, Tok::Atom(a))) => (o, a),
                    Some((o, _)) => return Err(Error::parse(o, "expected operator")),
                    None => {
                        return Err(Error::parse(
                            self.end,
                            "unbalanced parentheses: missing ')'",
                        ))
                    }
                };
                let node = match op.as_str() {
                    "JOIN" => {
                        let r = self.join_rel()?;
                        let e = self.expr(false)?;
                        SExpr::Join(r, Box::new(e))
                    }
                    "AND" => {
                        let a = self.expr(false)?;
                        let b = self.expr(false)?;
                        SExpr::And(Box::new(a), Box::new(b))
                    }
                    "COUNT" => {
                        if !root {
                            return Err(Error::parse(open_at, "COUNT may only appear at the root"));
                        }
                        SExpr::Count(Box::new(self.expr(false)?))
                    }
                    "ARGMAX" | "ARGMIN" => {
                        let e = self.expr(false)?;
                        let r = self.ident("relation")?;
                        if op == "ARGMAX" {
                            SExpr::ArgMax(Box::new(e), r)
                        } else {
                            SExpr::ArgMin(Box::new(e), r)
                        }
                    }
                    "LT" | "LE" | "GT" | "GE" => {
                        let cmp = match op.as_str() {
                            "LT" => CmpOp::Lt,
                            "LE" => CmpOp::Le,
                            "GT" => CmpOp::Gt,
                            _ => CmpOp::Ge,
                        };
                        let r = self.ident("relation")?;
                        let lit = self.literal()?;
                        SExpr::Compare(cmp, r, lit)
                    }
                    "R" => {
                        return Err(Error::parse(
                            op_at,
                            "(R rel) is only allowed as a JOIN relation",
                        ))
                    }
                    other => {
                        return Err(Error::parse(op_at, format!("unknown operator {other:?}")))
                    }
                };
                self.expect_close(&op)?;
                Ok(node)
            }
        }
    }
}

/// Parses an S-expression; errors carry the byte offset of the problem.
pub fn parse_sexpr(text: &str) -> Result<SExpr> {
    if text.trim().is_empty() {
        return Err(Error::parse(0, "empty input"));
    }
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr(true)?;
    if p.pos < p.toks.len() {
        let o = p.offset();
        let msg = if matches!(p.toks[p.pos].1, Tok::Close) {
            "unbalanced parentheses: unexpected ')'"
        } else {
            "trailing input after expression"
        };
        return Err(Error::parse(o, msg));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::super::print_sexpr;
    use super::*;

    #[test]
    fn single_join() {
        assert_eq!(
            parse_sexpr("(JOIN r1 e1)").unwrap(),
            SExpr::join("r1", SExpr::entity("e1"))
        );
    }

    #[test]
    fn and_with_reverse() {
        let ast = parse_sexpr("(AND (JOIN r1 e1) (JOIN (R r2) e2))").unwrap();
        assert_eq!(
            ast,
            SExpr::and(
                SExpr::join("r1", SExpr::entity("e1")),
                SExpr::join_rev("r2", SExpr::entity("e2"))
            )
        );
    }

    #[test]
    fn count_nested_round_trips_modulo_whitespace() {
        let src = "(COUNT   (JOIN r1\n (JOIN r2 e1)))";
        let ast = parse_sexpr(src).unwrap();
        assert!(matches!(ast, SExpr::Count(_)));
        assert_eq!(print_sexpr(&ast), "(COUNT (JOIN r1 (JOIN r2 e1)))");
    }

    #[test]
    fn literals() {
        assert_eq!(
            parse_sexpr("(GT age 30)").unwrap(),
            SExpr::Compare(CmpOp::Gt, "age".into(), Literal::Int(30))
        );
        assert_eq!(
            parse_sexpr("(LE h 1.5)").unwrap(),
            SExpr::Compare(CmpOp::Le, "h".into(), Literal::Float(1.5))
        );
        assert_eq!(
            parse_sexpr(r#"(LT d "2001-01-01")"#).unwrap(),
            SExpr::Compare(CmpOp::Lt, "d".into(), Literal::Str("2001-01-01".into()))
        );
        assert!(parse_sexpr("(LT d abc)").is_err());
        assert!(parse_sexpr("(LT d NaN)").is_err());
    }

    fn err_offset(src: &str) -> usize {
        match parse_sexpr(src) {
            Err(Error::Parse { offset, .. }) => offset,
            other => panic!("expected parse error for {src:?}, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(err_offset("(JOIN r1 e1"), 11);
        assert_eq!(err_offset("(JOIN r1 e1))"), 12);
        assert_eq!(err_offset("(FOO r1 e1)"), 1);
        assert_eq!(err_offset("(JOIN r1 e1 e2)"), 12);
        assert_eq!(err_offset("(AND (COUNT e1) e2)"), 5);
        assert_eq!(err_offset("(JOIN (X r) e)"), 7);
        assert!(parse_sexpr("").is_err());
        assert!(parse_sexpr("(JOIN r1)").is_err());
    }
}
