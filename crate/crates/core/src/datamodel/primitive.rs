use std::fmt;

use serde::{Deserialize, Serialize};

use super::db::Value;
use super::kb::Direction;
use crate::text::tokenize;

/// Primitive category; the string form is the category token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    FirstHop,
    SecondHop,
    TbCl,
    TbClVl,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::FirstHop,
        Category::SecondHop,
        Category::TbCl,
        Category::TbClVl,
    ];

    pub fn index(self) -> usize {
        match self {
            Category::FirstHop => 0,
            Category::SecondHop => 1,
            Category::TbCl => 2,
            Category::TbClVl => 3,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Category::FirstHop => "<|firsthop|>",
            Category::SecondHop => "<|secondhop|>",
            Category::TbCl => "<|tb_cl|>",
            Category::TbClVl => "<|tb_cl_vl|>",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// SQL conditional operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CondOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
    Between,
    NotBetween,
    In,
    NotIn,
    Like,
    NotLike,
    Is,
    IsNot,
    Exists,
}

impl CondOp {
    /// Operators that compare a column against a single literal.
    pub const COMPARISONS: [CondOp; 6] = [
        CondOp::Eq,
        CondOp::Ne,
        CondOp::Gt,
        CondOp::Lt,
        CondOp::Ge,
        CondOp::Le,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CondOp::Eq => "=",
            CondOp::Ne => "!=",
            CondOp::Gt => ">",
            CondOp::Lt => "<",
            CondOp::Ge => ">=",
            CondOp::Le => "<=",
            CondOp::Between => "BETWEEN",
            CondOp::NotBetween => "NOT BETWEEN",
            CondOp::In => "IN",
            CondOp::NotIn => "NOT IN",
            CondOp::Like => "LIKE",
            CondOp::NotLike => "NOT LIKE",
            CondOp::Is => "IS",
            CondOp::IsNot => "IS NOT",
            CondOp::Exists => "EXISTS",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CondOp> {
        let upper = s.to_ascii_uppercase();
        [
            CondOp::Eq,
            CondOp::Ne,
            CondOp::Gt,
            CondOp::Lt,
            CondOp::Ge,
            CondOp::Le,
            CondOp::Between,
            CondOp::NotBetween,
            CondOp::In,
            CondOp::NotIn,
            CondOp::Like,
            CondOp::NotLike,
            CondOp::Is,
            CondOp::IsNot,
            CondOp::Exists,
        ]
        .into_iter()
        .find(|op| op.symbol() == upper)
        .or(match s {
            "<>" => Some(CondOp::Ne),
            _ => None,
        })
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, CondOp::Gt | CondOp::Lt | CondOp::Ge | CondOp::Le)
    }
}

impl fmt::Display for CondOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Category-specific content of a primitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "category")]
pub enum Payload {
    FirstHop {
        entity: String,
        relation: String,
        direction: Direction,
    },
    SecondHop {
        relation: String,
        direction: Direction,
    },
    TbCl {
        table: String,
        column: String,
    },
    TbClVl {
        table: String,
        column: String,
        op: CondOp,
        value: Value,
    },
}

impl Payload {
    pub fn category(&self) -> Category {
        match self {
            Payload::FirstHop { .. } => Category::FirstHop,
            Payload::SecondHop { .. } => Category::SecondHop,
            Payload::TbCl { .. } => Category::TbCl,
            Payload::TbClVl { .. } => Category::TbClVl,
        }
    }

    /// Surface string; a pure function of the payload.
    pub fn render(&self) -> String {
        match self {
            Payload::FirstHop {
                entity,
                relation,
                direction: Direction::In,
            } => format!("{relation} {entity}"),
            Payload::FirstHop {
                entity,
                relation,
                direction: Direction::Out,
            } => format!("(R {relation}) {entity}"),
            Payload::SecondHop {
                relation,
                direction: Direction::In,
            } => relation.clone(),
            Payload::SecondHop {
                relation,
                direction: Direction::Out,
            } => format!("(R {relation})"),
            Payload::TbCl { table, column } => format!("{table}.{column}"),
            Payload::TbClVl {
                table,
                column,
                op,
                value,
            } => format!("{table}.{column} {} {value}", op.symbol().to_lowercase()),
        }
    }
}

/// A category-tagged atomic candidate with its rendered surface form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "PrimitiveRepr", into = "PrimitiveRepr")]
pub struct Primitive {
    payload: Payload,
    surface: String,
}

impl Primitive {
    pub fn new(payload: Payload) -> Self {
        let surface = payload.render();
        Primitive { payload, surface }
    }

    pub fn first_hop(entity: &str, relation: &str, direction: Direction) -> Self {
        Self::new(Payload::FirstHop {
            entity: entity.into(),
            relation: relation.into(),
            direction,
        })
    }

    pub fn second_hop(relation: &str, direction: Direction) -> Self {
        Self::new(Payload::SecondHop {
            relation: relation.into(),
            direction,
        })
    }

    pub fn tb_cl(table: &str, column: &str) -> Self {
        Self::new(Payload::TbCl {
            table: table.into(),
            column: column.into(),
        })
    }

    pub fn tb_cl_vl(table: &str, column: &str, op: CondOp, value: Value) -> Self {
        Self::new(Payload::TbClVl {
            table: table.into(),
            column: column.into(),
            op,
            value,
        })
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn category(&self) -> Category {
        self.payload.category()
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    /// Plain words of the primitive with structural markers dropped, used by
    /// lexical featurization.
    pub fn lexical_text(&self) -> String {
        let raw = match &self.payload {
            Payload::FirstHop {
                entity, relation, ..
            } => format!("{relation} {entity}"),
            Payload::SecondHop { relation, .. } => relation.clone(),
            Payload::TbCl { table, column } => format!("{table} {column}"),
            Payload::TbClVl {
                table,
                column,
                value,
                ..
            } => format!("{table} {column} {value}"),
        };
        tokenize(&raw).join(" ")
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

#[derive(Serialize, Deserialize)]
struct PrimitiveRepr {
    surface: String,
    #[serde(flatten)]
    payload: Payload,
}

impl TryFrom<PrimitiveRepr> for Primitive {
    type Error = String;

    fn try_from(r: PrimitiveRepr) -> Result<Self, Self::Error> {
        let p = Primitive::new(r.payload);
        if p.surface != r.surface {
            return Err(format!(
                "surface {:?} does not match payload rendering {:?}",
                r.surface, p.surface
            ));
        }
        Ok(p)
    }
}

impl From<Primitive> for PrimitiveRepr {
    fn from(p: Primitive) -> Self {
        PrimitiveRepr {
            surface: p.surface,
            payload: p.payload,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surfaces() {
        assert_eq!(
            Primitive::first_hop("e1", "r1", Direction::In).surface(),
            "r1 e1"
        );
        assert_eq!(
            Primitive::first_hop("e1", "r1", Direction::Out).surface(),
            "(R r1) e1"
        );
        assert_eq!(
            Primitive::second_hop("r2", Direction::Out).surface(),
            "(R r2)"
        );
        assert_eq!(Primitive::tb_cl("head", "age").surface(), "head.age");
        assert_eq!(
            Primitive::tb_cl_vl("head", "age", CondOp::Gt, Value::Number(56.0)).surface(),
            "head.age > 56"
        );
        assert_eq!(
            Primitive::tb_cl_vl("head", "name", CondOp::Eq, Value::Text("Kyle".into())).surface(),
            "head.name = Kyle"
        );
    }

    #[test]
    fn json_round_trip_checks_surface() {
        let p = Primitive::tb_cl_vl("head", "age", CondOp::Ge, Value::Number(3.5));
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"category\":\"TbClVl\""), "{json}");
        let back: Primitive = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);

        let tampered = json.replace("head.age >= 3.5", "head.age >= 4");
        assert!(serde_json::from_str::<Primitive>(&tampered).is_err());
    }

    #[test]
    fn category_matches_payload() {
        for p in [
            Primitive::first_hop("e", "r", Direction::In),
            Primitive::second_hop("r", Direction::In),
            Primitive::tb_cl("t", "c"),
            Primitive::tb_cl_vl("t", "c", CondOp::Eq, Value::Null),
        ] {
            assert_eq!(p.category(), p.payload().category());
        }
    }

    #[test]
    fn lexical_text_drops_markers() {
        let p = Primitive::first_hop("france", "location.country.capital", Direction::Out);
        assert_eq!(p.lexical_text(), "location country capital france");
    }

    #[test]
    fn cond_op_symbols_round_trip() {
        for op in [CondOp::Eq, CondOp::NotBetween, CondOp::IsNot, CondOp::Le] {
            assert_eq!(CondOp::from_symbol(op.symbol()), Some(op));
        }
        assert_eq!(CondOp::from_symbol("not like"), Some(CondOp::NotLike));
    }
}
