use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::format_number;

/// A typed literal object of a triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Literal {
    Int(i64),
    Float(f64),
    Str(String),
}

impl Literal {
    /// Numeric view: ints, floats, and strings that parse as numbers.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Literal::Int(i) => Some(*i as f64),
            Literal::Float(f) => Some(*f),
            Literal::Str(s) => s.trim().parse::<f64>().ok().filter(|f| f.is_finite()),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Literal::Int(_) => 0,
            Literal::Float(_) => 1,
            Literal::Str(_) => 2,
        }
    }
}

/// Value comparison used by `Compare`, `ARGMAX` and `ARGMIN`: numeric when both
/// sides are numeric, lexicographic when neither is, an error otherwise.
pub fn compare_literals(a: &Literal, b: &Literal) -> Result<Ordering> {
    match (a.as_number(), b.as_number()) {
        (Some(x), Some(y)) => Ok(x.partial_cmp(&y).unwrap_or_else(|| x.total_cmp(&y))),
        (None, None) => match (a, b) {
            (Literal::Str(x), Literal::Str(y)) => Ok(x.cmp(y)),
            _ => unreachable!("non-numeric literals are strings"),
        },
        _ => Err(Error::exec(format!(
            "cannot compare literal {a} with {b}: mixed numeric and text"
        ))),
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Literal {}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Literal::Int(a), Literal::Int(b)) => a.cmp(b),
            (Literal::Float(a), Literal::Float(b)) => {
                normalize_zero(*a).total_cmp(&normalize_zero(*b))
            }
            (Literal::Str(a), Literal::Str(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Literal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Literal::Int(i) => i.hash(state),
            Literal::Float(f) => normalize_zero(*f).to_bits().hash(state),
            Literal::Str(s) => s.hash(state),
        }
    }
}

fn normalize_zero(f: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        f
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{}", format_number(*x)),
            Literal::Str(s) => write!(f, "{s}"),
        }
    }
}

/// Object position of a triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Object {
    Entity(String),
    Literal(Literal),
}

impl Object {
    pub fn as_entity(&self) -> Option<&str> {
        match self {
            Object::Entity(e) => Some(e),
            Object::Literal(_) => None,
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Object::Entity(e) => write!(f, "{e}"),
            Object::Literal(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: Object,
}

impl Triple {
    pub fn entity(subject: &str, relation: &str, object: &str) -> Self {
        Triple {
            subject: subject.to_string(),
            relation: relation.to_string(),
            object: Object::Entity(object.to_string()),
        }
    }

    pub fn literal(subject: &str, relation: &str, object: Literal) -> Self {
        Triple {
            subject: subject.to_string(),
            relation: relation.to_string(),
            object: Object::Literal(object),
        }
    }
}

/// Direction of an edge relative to the entity being expanded.
///
/// `Out` follows `(e, r, o)` from subject to object; `In` follows it backwards
/// from object to subject. `(JOIN r e)` traverses `In` from `e`, while
/// `(JOIN (R r) e)` traverses `Out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn reverse(self) -> Direction {
        match self {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

/// Immutable triple store with subject, object and relation indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    triples: Vec<Triple>,
    out_index: BTreeMap<String, Vec<(String, Object)>>,
    in_index: BTreeMap<String, Vec<(String, Object)>>,
    rel_index: BTreeMap<String, Vec<usize>>,
    names: BTreeMap<String, String>,
}

impl KnowledgeBase {
    pub fn new(triples: Vec<Triple>, names: BTreeMap<String, String>) -> Self {
        let mut out_index: BTreeMap<String, Vec<(String, Object)>> = BTreeMap::new();
        let mut in_index: BTreeMap<String, Vec<(String, Object)>> = BTreeMap::new();
        let mut rel_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in triples.iter().enumerate() {
            out_index
                .entry(t.subject.clone())
                .or_default()
                .push((t.relation.clone(), t.object.clone()));
            if let Object::Entity(o) = &t.object {
                in_index
                    .entry(o.clone())
                    .or_default()
                    .push((t.relation.clone(), Object::Entity(t.subject.clone())));
            }
            rel_index.entry(t.relation.clone()).or_default().push(i);
        }
        KnowledgeBase {
            triples,
            out_index,
            in_index,
            rel_index,
            names,
        }
    }

    pub fn from_triples(triples: Vec<Triple>) -> Self {
        Self::new(triples, BTreeMap::new())
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// `(relation, object)` pairs with `entity` as subject.
    pub fn out_edges(&self, entity: &str) -> &[(String, Object)] {
        self.out_index.get(entity).map_or(&[], Vec::as_slice)
    }

    /// `(relation, subject)` pairs with `entity` as object.
    pub fn in_edges(&self, entity: &str) -> &[(String, Object)] {
        self.in_index.get(entity).map_or(&[], Vec::as_slice)
    }

    pub fn edges(&self, entity: &str, direction: Direction) -> &[(String, Object)] {
        match direction {
            Direction::Out => self.out_edges(entity),
            Direction::In => self.in_edges(entity),
        }
    }

    /// Triples carrying `relation`.
    pub fn relation_triples<'a>(&'a self, relation: &str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.rel_index
            .get(relation)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn name(&self, entity: &str) -> Option<&str> {
        self.names.get(entity).map(String::as_str)
    }

    pub fn names(&self) -> &BTreeMap<String, String> {
        &self.names
    }

    /// Every entity id appearing as subject or entity-object.
    pub fn entities(&self) -> BTreeSet<&str> {
        self.out_index
            .keys()
            .chain(self.in_index.keys())
            .map(String::as_str)
            .collect()
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.rel_index.keys().map(String::as_str)
    }

    /// Entity neighbours of `entity` one `(relation, direction)` step away,
    /// skipping literal objects.
    pub fn entity_neighbors<'a>(
        &'a self,
        entity: &str,
        relation: &'a str,
        direction: Direction,
    ) -> impl Iterator<Item = &'a str> + 'a {
        self.edges(entity, direction)
            .iter()
            .filter(move |(r, _)| r == relation)
            .filter_map(|(_, o)| o.as_entity())
    }
}

/// Loads a 4-column triples TSV and an optional 2-column names TSV.
pub fn load_kb(path: &Path, names_path: Option<&Path>) -> Result<KnowledgeBase> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut triples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ingest = |message: String| Error::Ingest {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(ingest(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let (subject, relation, raw, kind) = (fields[0], fields[1], fields[2], fields[3]);
        if subject.is_empty() || relation.is_empty() {
            return Err(ingest("empty subject or relation".into()));
        }
        let object = match kind {
            "entity" => Object::Entity(raw.to_string()),
            "int" => Object::Literal(Literal::Int(
                raw.parse()
                    .map_err(|_| ingest(format!("unparsable int literal {raw:?}")))?,
            )),
            "float" => {
                let f: f64 = raw
                    .parse()
                    .map_err(|_| ingest(format!("unparsable float literal {raw:?}")))?;
                if !f.is_finite() {
                    return Err(ingest(format!("non-finite float literal {raw:?}")));
                }
                Object::Literal(Literal::Float(f))
            }
            "str" => Object::Literal(Literal::Str(raw.to_string())),
            other => return Err(ingest(format!("unknown object kind {other:?}"))),
        };
        triples.push(Triple {
            subject: subject.to_string(),
            relation: relation.to_string(),
            object,
        });
    }

    let mut names = BTreeMap::new();
    if let Some(np) = names_path {
        let text = std::fs::read_to_string(np).map_err(|e| Error::io(np, e))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            match (parts.next(), parts.next()) {
                (Some(id), Some(name)) if !id.is_empty() => {
                    names.insert(id.to_string(), name.to_string());
                }
                _ => {
                    return Err(Error::Ingest {
                        path: np.to_path_buf(),
                        line: i + 1,
                        message: "expected entity-id<TAB>display-name".into(),
                    })
                }
            }
        }
    }
    Ok(KnowledgeBase::new(triples, names))
}

/// Writes the triples TSV format read by [`load_kb`].
pub fn write_triples_tsv(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for t in kb.triples() {
        let (raw, kind) = match &t.object {
            Object::Entity(e) => (e.clone(), "entity"),
            Object::Literal(Literal::Int(i)) => (i.to_string(), "int"),
            Object::Literal(Literal::Float(f)) => (format!("{f:?}"), "float"),
            Object::Literal(Literal::Str(s)) => (s.clone(), "str"),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            t.subject, t.relation, raw, kind
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_gives_empty_kb() {
        let f = write_tmp("");
        let kb = load_kb(f.path(), None).unwrap();
        assert!(kb.is_empty());
        assert!(kb.entities().is_empty());
    }

    #[test]
    fn single_triple_indices_are_symmetric() {
        let f = write_tmp("e1\tr1\te2\tentity\n");
        let kb = load_kb(f.path(), None).unwrap();
        assert_eq!(
            kb.out_edges("e1"),
            &[("r1".to_string(), Object::Entity("e2".into()))]
        );
        assert_eq!(
            kb.in_edges("e2"),
            &[("r1".to_string(), Object::Entity("e1".into()))]
        );
    }

    #[test]
    fn chain_index_counts() {
        let f = write_tmp("e1\tr1\te2\tentity\ne2\tr2\te3\tentity\ne2\tr3\te4\tentity\n");
        let kb = load_kb(f.path(), None).unwrap();
        assert_eq!(kb.out_edges("e2").len(), 2);
        assert_eq!(kb.in_edges("e2").len(), 1);
    }

    #[test]
    fn literal_kinds_parse() {
        let f = write_tmp("a\tage\t30\tint\na\theight\t1.8\tfloat\na\tnick\tAl\tstr\n");
        let kb = load_kb(f.path(), None).unwrap();
        let objs: Vec<_> = kb.out_edges("a").iter().map(|(_, o)| o.clone()).collect();
        assert_eq!(
            objs,
            vec![
                Object::Literal(Literal::Int(30)),
                Object::Literal(Literal::Float(1.8)),
                Object::Literal(Literal::Str("Al".into())),
            ]
        );
        assert!(kb.in_edges("30").is_empty());
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let f = write_tmp("e1\tr1\te2\tentity\ne1\tr1\n");
        match load_kb(f.path(), None) {
            Err(Error::Ingest { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("e1\tage\tthirty\tint\n");
        match load_kb(f.path(), None) {
            Err(Error::Ingest { line, message, .. }) => {
                assert_eq!(line, 1);
                assert!(message.contains("int"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn names_file_is_loaded() {
        let t = write_tmp("e1\tr1\te2\tentity\n");
        let n = write_tmp("e1\tAzeotrope\n");
        let kb = load_kb(t.path(), Some(n.path())).unwrap();
        assert_eq!(kb.name("e1"), Some("Azeotrope"));
    }

    #[test]
    fn tsv_writer_round_trips() {
        let kb = KnowledgeBase::from_triples(vec![
            Triple::entity("a", "r", "b"),
            Triple::literal("a", "x", Literal::Float(2.0)),
            Triple::literal("b", "y", Literal::Int(-3)),
        ]);
        let f = write_tmp(&write_triples_tsv(&kb));
        assert_eq!(load_kb(f.path(), None).unwrap(), kb);
    }

    #[test]
    fn mixed_literal_comparison_is_an_error() {
        assert!(compare_literals(&Literal::Int(3), &Literal::Str("abc".into())).is_err());
        assert_eq!(
            compare_literals(&Literal::Int(3), &Literal::Float(2.5)).unwrap(),
            Ordering::Greater
        );
        assert_eq!(
            compare_literals(&Literal::Str("1999".into()), &Literal::Int(2000)).unwrap(),
            Ordering::Less
        );
    }
}
