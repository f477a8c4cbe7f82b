use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Text,
    Number,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

impl Column {
    pub fn new(name: &str, ty: ColumnType) -> Self {
        Column {
            name: name.to_string(),
            ty,
        }
    }
}

/// A database cell or SQL literal.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Number(f64),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Number(_) => 1,
            Value::Text(_) => 2,
        }
    }

    fn zero_normalized(n: f64) -> f64 {
        if n == 0.0 {
            0.0
        } else {
            n
        }
    }
}

/// Total order used for grouping, set operations and stable sorting
/// (the NULL placement rules of ORDER BY live in the executors).
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Number(a), Value::Number(b)) => {
                Self::zero_normalized(*a).total_cmp(&Self::zero_normalized(*b))
            }
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            Value::Number(n) => Self::zero_normalized(*n).to_bits().hash(state),
            Value::Text(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Number(n) => f.write_str(&format_number(*n)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Immutable set of named tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Database {
    tables: Vec<Table>,
}

impl Database {
    /// Builds a database, checking name uniqueness, row width and cell types.
    pub fn new(tables: Vec<Table>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &tables {
            if !seen.insert(t.name.as_str()) {
                return Err(Error::Schema(format!("duplicate table name {:?}", t.name)));
            }
            let mut cols = HashSet::new();
            for c in &t.columns {
                if !cols.insert(c.name.as_str()) {
                    return Err(Error::Schema(format!(
                        "duplicate column name {:?} in table {:?}",
                        c.name, t.name
                    )));
                }
            }
            for (i, row) in t.rows.iter().enumerate() {
                if row.len() != t.columns.len() {
                    return Err(Error::Schema(format!(
                        "table {:?} row {}: expected {} cells, found {}",
                        t.name,
                        i + 1,
                        t.columns.len(),
                        row.len()
                    )));
                }
                for (cell, col) in row.iter().zip(&t.columns) {
                    let ok = match (cell, col.ty) {
                        (Value::Null, _) => true,
                        (Value::Number(n), ColumnType::Number) => n.is_finite(),
                        (Value::Text(_), ColumnType::Text) => true,
                        _ => false,
                    };
                    if !ok {
                        return Err(Error::Schema(format!(
                            "table {:?} row {}: cell {cell} does not fit {:?} column {:?}",
                            t.name,
                            i + 1,
                            col.ty,
                            col.name
                        )));
                    }
                }
            }
        }
        Ok(Database { tables })
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn column_count(&self) -> usize {
        self.tables.iter().map(|t| t.columns.len()).sum()
    }

    pub fn column_type(&self, table: &str, column: &str) -> Option<ColumnType> {
        self.table(table)
            .and_then(|t| t.column(column))
            .map(|c| c.ty)
    }
}

#[derive(Debug, Deserialize, Serialize)]
pub struct SchemaFile {
    pub tables: Vec<SchemaTable>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct SchemaTable {
    pub name: String,
    pub columns: Vec<Column>,
}

/// Loads a schema JSON and one `<table>.csv` per table from `rows_dir`.
pub fn load_db(schema_path: &Path, rows_dir: &Path) -> Result<Database> {
    let text = std::fs::read_to_string(schema_path).map_err(|e| Error::io(schema_path, e))?;
    let schema: SchemaFile = serde_json::from_str(&text)?;
    let mut tables = Vec::with_capacity(schema.tables.len());
    for st in schema.tables {
        let csv_path = rows_dir.join(format!("{}.csv", st.name));
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&csv_path)
            .map_err(|e| csv_error(&csv_path, 0, e))?;
        let headers = reader
            .headers()
            .map_err(|e| csv_error(&csv_path, 1, e))?
            .clone();
        let expected: Vec<&str> = st.columns.iter().map(|c| c.name.as_str()).collect();
        let found: Vec<&str> = headers.iter().collect();
        if expected != found {
            return Err(Error::Ingest {
                path: csv_path,
                line: 1,
                message: format!(
                    "table {:?}: header {found:?} does not match schema columns {expected:?}",
                    st.name
                ),
            });
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(&csv_path, i + 2, e))?;
            let mut row = Vec::with_capacity(st.columns.len());
            for (cell, col) in record.iter().zip(&st.columns) {
                let value = if cell.is_empty() {
                    Value::Null
                } else {
                    match col.ty {
                        ColumnType::Text => Value::Text(cell.to_string()),
                        ColumnType::Number => match cell.trim().parse::<f64>() {
                            Ok(n) if n.is_finite() => Value::Number(n),
                            _ => {
                                return Err(Error::Ingest {
                                    path: csv_path,
                                    line: i + 2,
                                    message: format!(
                                        "table {:?} row {}: non-numeric cell {cell:?} in number column {:?}",
                                        st.name,
                                        i + 1,
                                        col.name
                                    ),
                                })
                            }
                        },
                    }
                };
                row.push(value);
            }
            if row.len() != st.columns.len() {
                return Err(Error::Ingest {
                    path: csv_path,
                    line: i + 2,
                    message: format!("table {:?} row {}: wrong cell count", st.name, i + 1),
                });
            }
            rows.push(row);
        }
        tables.push(Table {
            name: st.name,
            columns: st.columns,
            rows,
        });
    }
    Database::new(tables)
}

fn csv_error(path: &Path, line: usize, e: csv::Error) -> Error {
    Error::Ingest {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Serializes a database into the schema JSON and per-table CSV files.
pub fn write_db(db: &Database, schema_path: &Path, rows_dir: &Path) -> Result<()> {
    let schema = SchemaFile {
        tables: db
            .tables()
            .iter()
            .map(|t| SchemaTable {
                name: t.name.clone(),
                columns: t.columns.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&schema)? + "\n";
    std::fs::write(schema_path, json).map_err(|e| Error::io(schema_path, e))?;
    std::fs::create_dir_all(rows_dir).map_err(|e| Error::io(rows_dir, e))?;
    for t in db.tables() {
        let path = rows_dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, 0, e))?;
        w.write_record(t.columns.iter().map(|c| c.name.as_str()))
            .map_err(|e| csv_error(&path, 1, e))?;
        for row in &t.rows {
            w.write_record(row.iter().map(|v| match v {
                Value::Null => String::new(),
                other => other.to_string(),
            }))
            .map_err(|e| csv_error(&path, 0, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(schema: &str, files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("schema.json"), schema).unwrap();
        std::fs::create_dir(dir.path().join("rows")).unwrap();
        for (name, body) in files {
            std::fs::write(dir.path().join("rows").join(name), body).unwrap();
        }
        dir
    }

    #[test]
    fn empty_table_loads() {
        let dir = setup(
            r#"{"tables":[{"name":"t","columns":[{"name":"a","type":"text"}]}]}"#,
            &[("t.csv", "a\n")],
        );
        let db = load_db(&dir.path().join("schema.json"), &dir.path().join("rows")).unwrap();
        assert!(db.table("t").unwrap().rows.is_empty());
    }

    #[test]
    fn numeric_cells_parse() {
        let dir = setup(
            r#"{"tables":[{"name":"heads","columns":[{"name":"name","type":"text"},{"name":"age","type":"number"}]}]}"#,
            &[("heads.csv", "name,age\nTiger Woods,67\nK. J. Choi,\n")],
        );
        let db = load_db(&dir.path().join("schema.json"), &dir.path().join("rows")).unwrap();
        let t = db.table("heads").unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(
            t.rows[0],
            vec![Value::Text("Tiger Woods".into()), Value::Number(67.0)]
        );
        assert_eq!(t.rows[1][1], Value::Null);
    }

    #[test]
    fn duplicate_column_rejected() {
        let dir = setup(
            r#"{"tables":[{"name":"t","columns":[{"name":"a","type":"text"},{"name":"a","type":"number"}]}]}"#,
            &[("t.csv", "a,a\n")],
        );
        let err = load_db(&dir.path().join("schema.json"), &dir.path().join("rows")).unwrap_err();
        assert!(err.to_string().contains("duplicate column"), "{err}");
    }

    #[test]
    fn header_mismatch_and_bad_number_rejected() {
        let schema = r#"{"tables":[{"name":"t","columns":[{"name":"a","type":"number"}]}]}"#;
        let dir = setup(schema, &[("t.csv", "b\n1\n")]);
        let err = load_db(&dir.path().join("schema.json"), &dir.path().join("rows")).unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");

        let dir = setup(schema, &[("t.csv", "a\n1\nseven\n")]);
        match load_db(&dir.path().join("schema.json"), &dir.path().join("rows")) {
            Err(Error::Ingest { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(
                    message.contains("\"t\"") && message.contains("row 2"),
                    "{message}"
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn writer_round_trips() {
        let db = Database::new(vec![Table {
            name: "t".into(),
            columns: vec![
                Column::new("a", ColumnType::Text),
                Column::new("b", ColumnType::Number),
            ],
            rows: vec![
                vec![Value::Text("x, y".into()), Value::Number(2.5)],
                vec![Value::Null, Value::Number(-1.0)],
            ],
        }])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_db(&db, &dir.path().join("s.json"), &dir.path().join("rows")).unwrap();
        let back = load_db(&dir.path().join("s.json"), &dir.path().join("rows")).unwrap();
        assert_eq!(back, db);
    }
}
