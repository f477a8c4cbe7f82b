//! Bundled corpora: small separable KB and DB corpora, an adversarial DB
//! corpus with same-table distractor columns, and a corpus whose questions
//! can only be answered by the fallback rule.
//!
//! Gold forms are stored in canonical print and answers come from executing
//! them, so every corpus is consistent with its store by construction.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{
    questions_to_jsonl, write_db, write_triples_tsv, Column, ColumnType, Database, KnowledgeBase,
    Literal, Modality, Question, Table, Triple, Value,
};
use crate::error::{Error, Result};
use crate::logical::{execute, LogicalForm, OwnedStore};

/// A store with its questions.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub store: OwnedStore,
    pub questions: Vec<Question>,
}

impl Corpus {
    fn build(name: &str, store: OwnedStore, raw: Vec<Question>) -> Result<Corpus> {
        let modality = store.view().modality();
        let mut questions = Vec::with_capacity(raw.len());
        for mut q in raw {
            if let Some(g) = &q.gold_logical_form {
                let lf = LogicalForm::parse(g, modality)?;
                let ex = execute(&lf, store.view())?;
                q.gold_logical_form = Some(lf.to_string());
                q.answers = Some(
                    ex.answers
                        .into_iter()
                        .map(serde_json::Value::String)
                        .collect(),
                );
            }
            questions.push(q);
        }
        Ok(Corpus {
            name: name.to_string(),
            store,
            questions,
        })
    }

    /// Writes the corpus in the on-disk formats read by the loaders:
    /// `triples.tsv`, `names.tsv` and `questions.jsonl` for a KB;
    /// `schema.json`, `rows/` and `questions.jsonl` for a DB.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        match &self.store {
            OwnedStore::Kb(kb) => {
                write_file(&dir.join("triples.tsv"), &write_triples_tsv(kb))?;
                let names: String = kb
                    .names()
                    .iter()
                    .map(|(id, n)| format!("{id}\t{n}\n"))
                    .collect();
                write_file(&dir.join("names.tsv"), &names)?;
            }
            OwnedStore::Db(db) => write_db(db, &dir.join("schema.json"), &dir.join("rows"))?,
        }
        write_file(
            &dir.join("questions.jsonl"),
            &questions_to_jsonl(&self.questions)?,
        )
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Names of the bundled corpora, as accepted by [`bundled`].
pub const BUNDLED: [&str; 5] = [
    "toy_kb",
    "toy_db",
    "adversarial_db",
    "fallback_kb",
    "fallback_db",
];

/// Builds a bundled corpus by name.
pub fn bundled(name: &str) -> Result<Corpus> {
    match name {
        "toy_kb" => toy_kb(),
        "toy_db" => toy_db(),
        "adversarial_db" => adversarial_db(),
        "fallback_kb" => fallback_kb(),
        "fallback_db" => fallback_db(),
        other => Err(Error::Config(format!("unknown bundled corpus {other:?}"))),
    }
}

/// Round-robin merge so that every question type lands in every split.
fn interleave(groups: Vec<Vec<Question>>) -> Vec<Question> {
    let longest = groups.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::new();
    for i in 0..longest {
        for g in &groups {
            if let Some(q) = g.get(i) {
                out.push(q.clone());
            }
        }
    }
    out
}

fn numbered(prefix: &str, qs: Vec<Question>) -> Vec<Question> {
    qs.into_iter()
        .enumerate()
        .map(|(i, mut q)| {
            q.id = format!("{prefix}{i:03}");
            q
        })
        .collect()
}

fn kb_q(text: &str, gold: &str, mentions: &[&str]) -> Question {
    Question::new("", text, Modality::Kb)
        .with_gold(gold)
        .with_mentions(mentions)
}

fn db_q(text: &str, gold: &str) -> Question {
    Question::new("", text, Modality::Db).with_gold(gold)
}

fn toy_kb_store() -> KnowledgeBase {
    let mut triples = Vec::new();
    let mut names = BTreeMap::new();
    let mut name = |id: &str, n: &str| {
        names.insert(format!("m.{id}"), n.to_string());
    };
    let countries = [
        ("france", "France", "paris", "french", "French"),
        ("spain", "Spain", "madrid", "spanish", "Spanish"),
        ("italy", "Italy", "rome", "italian", "Italian"),
        ("germany", "Germany", "berlin", "german", "German"),
    ];
    for (id, n, capital, lang, lang_name) in countries {
        name(id, n);
        name(lang, lang_name);
        triples.push(Triple::entity(
            &format!("m.{id}"),
            "country.capital",
            &format!("m.{capital}"),
        ));
        triples.push(Triple::entity(
            &format!("m.{id}"),
            "country.language",
            &format!("m.{lang}"),
        ));
    }
    let cities = [
        ("paris", "Paris", "france", 2_100_000),
        ("lyon", "Lyon", "france", 520_000),
        ("madrid", "Madrid", "spain", 3_300_000),
        ("barcelona", "Barcelona", "spain", 1_600_000),
        ("rome", "Rome", "italy", 2_800_000),
        ("milan", "Milan", "italy", 1_400_000),
        ("berlin", "Berlin", "germany", 3_600_000),
        ("munich", "Munich", "germany", 1_500_000),
    ];
    for (id, n, country, pop) in cities {
        name(id, n);
        let e = format!("m.{id}");
        triples.push(Triple::entity(&e, "city.country", &format!("m.{country}")));
        triples.push(Triple::literal(&e, "city.population", Literal::Int(pop)));
    }
    let people = [
        ("alice_martin", "Alice Martin", "france", "lyon", 170, 34),
        ("bruno_dupont", "Bruno Dupont", "france", "paris", 182, 51),
        ("claire_petit", "Claire Petit", "france", "lyon", 165, 45),
        ("diego_lopez", "Diego Lopez", "spain", "madrid", 178, 29),
        (
            "elena_garcia",
            "Elena Garcia",
            "spain",
            "barcelona",
            160,
            62,
        ),
        ("fabio_rossi", "Fabio Rossi", "italy", "rome", 185, 38),
        (
            "giulia_bianchi",
            "Giulia Bianchi",
            "italy",
            "milan",
            168,
            57,
        ),
        ("hans_muller", "Hans Muller", "germany", "berlin", 190, 44),
        ("ingrid_weber", "Ingrid Weber", "germany", "munich", 172, 31),
        ("jonas_becker", "Jonas Becker", "germany", "berlin", 176, 66),
        ("marie_laurent", "Marie Laurent", "france", "paris", 174, 39),
    ];
    for (id, n, nat, born, height, age) in people {
        name(id, n);
        let e = format!("m.{id}");
        triples.push(Triple::entity(
            &e,
            "person.nationality",
            &format!("m.{nat}"),
        ));
        triples.push(Triple::entity(
            &e,
            "person.birthplace",
            &format!("m.{born}"),
        ));
        triples.push(Triple::literal(&e, "person.height", Literal::Int(height)));
        triples.push(Triple::literal(&e, "person.age", Literal::Int(age)));
    }
    let rivers: [(&str, &str, &[&str], i64); 6] = [
        ("rhine", "Rhine", &["germany", "france"], 1233),
        ("seine", "Seine", &["france"], 777),
        ("ebro", "Ebro", &["spain"], 930),
        ("po", "Po", &["italy"], 652),
        ("danube", "Danube", &["germany"], 2850),
        ("rhone", "Rhone", &["france"], 813),
    ];
    for (id, n, through, len) in rivers {
        name(id, n);
        let e = format!("m.{id}");
        for c in through {
            triples.push(Triple::entity(&e, "river.flows_through", &format!("m.{c}")));
        }
        triples.push(Triple::literal(&e, "river.length", Literal::Int(len)));
    }
    KnowledgeBase::new(triples, names)
}

/// 40 KB questions over countries, cities, people and rivers covering
/// one-hop joins in both directions, two-hop joins, COUNT, ARGMAX/ARGMIN,
/// numeric comparison and conjunction of two entities.
pub fn toy_kb() -> Result<Corpus> {
    let in_hop = vec![
        kb_q(
            "Which people have nationality France?",
            "(JOIN person.nationality m.france)",
            &["m.france"],
        ),
        kb_q(
            "Which people have birthplace Lyon?",
            "(JOIN person.birthplace m.lyon)",
            &["m.lyon"],
        ),
        kb_q(
            "Which cities are in the country Spain?",
            "(JOIN city.country m.spain)",
            &["m.spain"],
        ),
        kb_q(
            "Which rivers flow through Italy?",
            "(JOIN river.flows_through m.italy)",
            &["m.italy"],
        ),
        kb_q(
            "Which country has the capital Berlin?",
            "(JOIN country.capital m.berlin)",
            &["m.berlin"],
        ),
        kb_q(
            "Which people have birthplace Munich?",
            "(JOIN person.birthplace m.munich)",
            &["m.munich"],
        ),
    ];
    let out_hop = vec![
        kb_q(
            "What is the capital of France?",
            "(JOIN (R country.capital) m.france)",
            &["m.france"],
        ),
        kb_q(
            "What is the language of Germany?",
            "(JOIN (R country.language) m.germany)",
            &["m.germany"],
        ),
        kb_q(
            "Which countries does the Rhine flow through?",
            "(JOIN (R river.flows_through) m.rhine)",
            &["m.rhine"],
        ),
        kb_q(
            "What is the nationality of Fabio Rossi?",
            "(JOIN (R person.nationality) m.fabio_rossi)",
            &["m.fabio_rossi"],
        ),
        kb_q(
            "What is the birthplace of Elena Garcia?",
            "(JOIN (R person.birthplace) m.elena_garcia)",
            &["m.elena_garcia"],
        ),
        kb_q(
            "In which country is the city Milan?",
            "(JOIN (R city.country) m.milan)",
            &["m.milan"],
        ),
    ];
    let two_hop = vec![
        kb_q(
            "Which rivers flow through the country whose capital is Paris?",
            "(JOIN river.flows_through (JOIN country.capital m.paris))",
            &["m.paris"],
        ),
        kb_q(
            "Which people have nationality of the country of the city Barcelona?",
            "(JOIN person.nationality (JOIN (R city.country) m.barcelona))",
            &["m.barcelona"],
        ),
        kb_q(
            "What is the language of the country of nationality of Hans Muller?",
            "(JOIN (R country.language) (JOIN (R person.nationality) m.hans_muller))",
            &["m.hans_muller"],
        ),
        kb_q(
            "Which cities are in the country the Po flows through?",
            "(JOIN city.country (JOIN (R river.flows_through) m.po))",
            &["m.po"],
        ),
        kb_q(
            "Which people have birthplace the capital of Spain?",
            "(JOIN person.birthplace (JOIN (R country.capital) m.spain))",
            &["m.spain"],
        ),
        kb_q(
            "What is the capital of the country of the city Munich?",
            "(JOIN (R country.capital) (JOIN (R city.country) m.munich))",
            &["m.munich"],
        ),
        kb_q(
            "Which rivers flow through the country of nationality of Diego Lopez?",
            "(JOIN river.flows_through (JOIN (R person.nationality) m.diego_lopez))",
            &["m.diego_lopez"],
        ),
    ];
    let count = vec![
        kb_q(
            "How many people have nationality Germany?",
            "(COUNT (JOIN person.nationality m.germany))",
            &["m.germany"],
        ),
        kb_q(
            "How many cities are in the country France?",
            "(COUNT (JOIN city.country m.france))",
            &["m.france"],
        ),
        kb_q(
            "How many rivers flow through France?",
            "(COUNT (JOIN river.flows_through m.france))",
            &["m.france"],
        ),
        kb_q(
            "How many people have birthplace Berlin?",
            "(COUNT (JOIN person.birthplace m.berlin))",
            &["m.berlin"],
        ),
        kb_q(
            "How many countries does the Rhine flow through?",
            "(COUNT (JOIN (R river.flows_through) m.rhine))",
            &["m.rhine"],
        ),
        kb_q(
            "How many people have nationality Italy?",
            "(COUNT (JOIN person.nationality m.italy))",
            &["m.italy"],
        ),
        kb_q(
            "How many rivers flow through the country whose capital is Madrid?",
            "(COUNT (JOIN river.flows_through (JOIN country.capital m.madrid)))",
            &["m.madrid"],
        ),
    ];
    let superlative = vec![
        kb_q(
            "Which person with nationality France has the largest height?",
            "(ARGMAX (JOIN person.nationality m.france) person.height)",
            &["m.france"],
        ),
        kb_q(
            "Who is the oldest person with nationality Germany?",
            "(ARGMAX (JOIN person.nationality m.germany) person.age)",
            &["m.germany"],
        ),
        kb_q(
            "Which city in the country Italy has the largest population?",
            "(ARGMAX (JOIN city.country m.italy) city.population)",
            &["m.italy"],
        ),
        kb_q(
            "Which river flowing through France has the smallest length?",
            "(ARGMIN (JOIN river.flows_through m.france) river.length)",
            &["m.france"],
        ),
        kb_q(
            "Who is the youngest person with nationality Spain?",
            "(ARGMIN (JOIN person.nationality m.spain) person.age)",
            &["m.spain"],
        ),
        kb_q(
            "Which city in the country Germany has the smallest population?",
            "(ARGMIN (JOIN city.country m.germany) city.population)",
            &["m.germany"],
        ),
        kb_q(
            "Which river flowing through Germany has the largest length?",
            "(ARGMAX (JOIN river.flows_through m.germany) river.length)",
            &["m.germany"],
        ),
    ];
    let compare = vec![
        kb_q(
            "Which people with nationality Germany have age above 40?",
            "(AND (JOIN person.nationality m.germany) (GT person.age 40))",
            &["m.germany"],
        ),
        kb_q(
            "Which people with nationality France have height below 175?",
            "(AND (JOIN person.nationality m.france) (LT person.height 175))",
            &["m.france"],
        ),
        kb_q(
            "Which cities in the country Spain have population above 2000000?",
            "(AND (JOIN city.country m.spain) (GT city.population 2000000))",
            &["m.spain"],
        ),
    ];
    let conj = vec![
        kb_q(
            "Which people have nationality France and birthplace Paris?",
            "(AND (JOIN person.nationality m.france) (JOIN person.birthplace m.paris))",
            &["m.france", "m.paris"],
        ),
        kb_q(
            "Which rivers flow through both Germany and France?",
            "(AND (JOIN river.flows_through m.germany) (JOIN river.flows_through m.france))",
            &["m.germany", "m.france"],
        ),
        kb_q(
            "Which people have nationality Germany and birthplace Berlin?",
            "(AND (JOIN person.nationality m.germany) (JOIN person.birthplace m.berlin))",
            &["m.germany", "m.berlin"],
        ),
        kb_q(
            "Which people have nationality Italy and birthplace Milan?",
            "(AND (JOIN person.nationality m.italy) (JOIN person.birthplace m.milan))",
            &["m.italy", "m.milan"],
        ),
    ];
    let qs = interleave(vec![
        in_hop,
        out_hop,
        two_hop,
        count,
        superlative,
        compare,
        conj,
    ]);
    Corpus::build("toy_kb", OwnedStore::Kb(toy_kb_store()), numbered("kb", qs))
}

fn num(n: f64) -> Value {
    Value::Number(n)
}

fn txt(s: &str) -> Value {
    Value::Text(s.to_string())
}

fn toy_db_store() -> Result<Database> {
    let departments = [
        (1.0, "Education", 1979.0, 1.0, 9.96, 30266.0),
        (2.0, "Treasury", 1789.0, 2.0, 11.1, 115897.0),
        (3.0, "Defense", 1947.0, 3.0, 439.3, 3000000.0),
        (4.0, "Justice", 1870.0, 4.0, 23.4, 112557.0),
        (5.0, "Interior", 1849.0, 5.0, 10.7, 71436.0),
        (6.0, "Agriculture", 1889.0, 6.0, 77.6, 109832.0),
        (7.0, "Commerce", 1903.0, 7.0, 6.2, 36000.0),
        (8.0, "Labor", 1913.0, 8.0, 59.7, 17347.0),
        (9.0, "Health", 1953.0, 9.0, 543.2, 67000.0),
        (10.0, "Energy", 1977.0, 10.0, 24.2, 116100.0),
    ];
    let heads = [
        (1.0, "Tiger Woods", "Alabama", 67.0),
        (2.0, "Sergio Garcia", "California", 68.0),
        (3.0, "K. J. Choi", "Alabama", 69.0),
        (4.0, "Dudley Hart", "California", 52.0),
        (5.0, "Jeff Maggert", "Delaware", 53.0),
        (6.0, "Stewart Cink", "Florida", 50.0),
        (7.0, "Nick Faldo", "California", 56.0),
        (8.0, "Padraig Harrington", "Connecticut", 43.0),
        (9.0, "Franklin Langham", "Connecticut", 66.0),
        (10.0, "Pedro Sanchez", "Texas", 60.0),
    ];
    let n = ColumnType::Number;
    let t = ColumnType::Text;
    Database::new(vec![
        Table {
            name: "department".into(),
            columns: vec![
                Column::new("department_id", n),
                Column::new("name", t),
                Column::new("creation", n),
                Column::new("ranking", n),
                Column::new("budget", n),
                Column::new("employees", n),
            ],
            rows: departments
                .iter()
                .map(|&(id, nm, c, r, b, e)| vec![num(id), txt(nm), num(c), num(r), num(b), num(e)])
                .collect(),
        },
        Table {
            name: "head".into(),
            columns: vec![
                Column::new("head_id", n),
                Column::new("name", t),
                Column::new("born_state", t),
                Column::new("age", n),
            ],
            rows: heads
                .iter()
                .map(|&(id, nm, s, a)| vec![num(id), txt(nm), txt(s), num(a)])
                .collect(),
        },
    ])
}

/// 40 DB questions over departments and their heads covering plain
/// selection, text and numeric WHERE, COUNT, ORDER BY ... LIMIT 1,
/// aggregates and two-condition conjunctions.
pub fn toy_db() -> Result<Corpus> {
    let plain = vec![
        db_q("List the names of all heads.", "SELECT head.name FROM head"),
        db_q(
            "What are the names of all departments?",
            "SELECT department.name FROM department",
        ),
        db_q(
            "Show the born state of every head.",
            "SELECT head.born_state FROM head",
        ),
        db_q(
            "List the name and age of all heads.",
            "SELECT head.name, head.age FROM head",
        ),
        db_q(
            "List the name and budget of all departments.",
            "SELECT department.name, department.budget FROM department",
        ),
    ];
    let where_text = vec![
        db_q(
            "What are the names of heads with born state Alabama?",
            "SELECT head.name FROM head WHERE head.born_state = 'Alabama'",
        ),
        db_q(
            "What is the age of Tiger Woods?",
            "SELECT head.age FROM head WHERE head.name = 'Tiger Woods'",
        ),
        db_q(
            "What is the budget of the Treasury department?",
            "SELECT department.budget FROM department WHERE department.name = 'Treasury'",
        ),
        db_q(
            "What are the names of heads with born state California?",
            "SELECT head.name FROM head WHERE head.born_state = 'California'",
        ),
        db_q(
            "What is the creation year of the Defense department?",
            "SELECT department.creation FROM department WHERE department.name = 'Defense'",
        ),
        db_q(
            "What is the ranking of the Justice department?",
            "SELECT department.ranking FROM department WHERE department.name = 'Justice'",
        ),
    ];
    let where_num = vec![
        db_q(
            "What are the names of heads older than 56?",
            "SELECT head.name FROM head WHERE head.age > 56",
        ),
        db_q(
            "What are the names of departments with budget above 50?",
            "SELECT department.name FROM department WHERE department.budget > 50",
        ),
        db_q(
            "List the names of heads younger than 55.",
            "SELECT head.name FROM head WHERE head.age < 55",
        ),
        db_q(
            "What are the names of departments with creation after 1900?",
            "SELECT department.name FROM department WHERE department.creation > 1900",
        ),
        db_q(
            "What are the names of departments with more than 100000 employees?",
            "SELECT department.name FROM department WHERE department.employees > 100000",
        ),
        db_q(
            "What are the names of departments with ranking below 4?",
            "SELECT department.name FROM department WHERE department.ranking < 4",
        ),
    ];
    let count = vec![
        db_q(
            "How many heads of departments are older than 56?",
            "SELECT COUNT(*) FROM head WHERE head.age > 56",
        ),
        db_q(
            "How many departments are there?",
            "SELECT COUNT(*) FROM department",
        ),
        db_q("How many heads are there?", "SELECT COUNT(*) FROM head"),
        db_q(
            "How many heads have born state California?",
            "SELECT COUNT(*) FROM head WHERE head.born_state = 'California'",
        ),
        db_q(
            "How many departments have budget above 20?",
            "SELECT COUNT(*) FROM department WHERE department.budget > 20",
        ),
        db_q(
            "How many departments have creation before 1900?",
            "SELECT COUNT(*) FROM department WHERE department.creation < 1900",
        ),
        db_q(
            "How many heads are younger than 60?",
            "SELECT COUNT(*) FROM head WHERE head.age < 60",
        ),
    ];
    let order = vec![
        db_q(
            "What is the name of the department with the largest budget?",
            "SELECT department.name FROM department ORDER BY department.budget DESC LIMIT 1",
        ),
        db_q(
            "What is the name of the oldest head?",
            "SELECT head.name FROM head ORDER BY head.age DESC LIMIT 1",
        ),
        db_q(
            "What is the name of the youngest head?",
            "SELECT head.name FROM head ORDER BY head.age ASC LIMIT 1",
        ),
        db_q(
            "What is the name of the department with the most employees?",
            "SELECT department.name FROM department ORDER BY department.employees DESC LIMIT 1",
        ),
        db_q(
            "What is the name of the department with the smallest budget?",
            "SELECT department.name FROM department ORDER BY department.budget ASC LIMIT 1",
        ),
        db_q(
            "What is the name of the department with the earliest creation?",
            "SELECT department.name FROM department ORDER BY department.creation ASC LIMIT 1",
        ),
    ];
    let aggregate = vec![
        db_q(
            "What is the maximum age of all heads?",
            "SELECT MAX(head.age) FROM head",
        ),
        db_q(
            "What is the minimum budget of all departments?",
            "SELECT MIN(department.budget) FROM department",
        ),
        db_q(
            "What is the average age of all heads?",
            "SELECT AVG(head.age) FROM head",
        ),
        db_q(
            "What is the total budget of all departments?",
            "SELECT SUM(department.budget) FROM department",
        ),
        db_q(
            "What is the average budget of all departments?",
            "SELECT AVG(department.budget) FROM department",
        ),
        db_q(
            "What is the minimum age of all heads?",
            "SELECT MIN(head.age) FROM head",
        ),
    ];
    let conj = vec![
        db_q(
            "What are the names of heads with born state California and older than 60?",
            "SELECT head.name FROM head WHERE head.born_state = 'California' AND head.age > 60",
        ),
        db_q(
            "What are the names of departments with creation after 1900 and budget above 50?",
            "SELECT department.name FROM department WHERE department.creation > 1900 AND department.budget > 50",
        ),
        db_q(
            "What are the names of heads with born state Alabama and younger than 68?",
            "SELECT head.name FROM head WHERE head.born_state = 'Alabama' AND head.age < 68",
        ),
        db_q(
            "What are the names of departments with ranking above 3 and budget below 30?",
            "SELECT department.name FROM department WHERE department.ranking > 3 AND department.budget < 30",
        ),
    ];
    let qs = interleave(vec![
        plain, where_text, where_num, count, order, aggregate, conj,
    ]);
    Corpus::build(
        "toy_db",
        OwnedStore::Db(toy_db_store()?),
        numbered("db", qs),
    )
}

/// Tables of the adversarial corpus with their attribute columns.
const ADVERSARIAL_TABLES: [(&str, [&str; 4]); 5] = [
    ("employee", ["salary", "age", "rating", "tenure"]),
    ("project", ["budget", "duration", "priority", "progress"]),
    ("client", ["revenue", "discount", "score", "visits"]),
    ("vendor", ["price", "delay", "quality", "volume"]),
    ("store", ["sales", "area", "staff", "rent"]),
];

/// Suffixes of the same-table distractor columns.
const DISTRACTOR_SUFFIXES: [&str; 2] = ["history", "target"];

fn adversarial_store(rng: &mut ChaCha8Rng) -> Result<Database> {
    let mut tables = Vec::new();
    for (name, attrs) in ADVERSARIAL_TABLES {
        let mut columns = vec![Column::new("label", ColumnType::Text)];
        for a in attrs {
            columns.push(Column::new(a, ColumnType::Number));
            for s in DISTRACTOR_SUFFIXES {
                columns.push(Column::new(&format!("{name}_{a}_{s}"), ColumnType::Number));
            }
        }
        let rows = (0..12)
            .map(|i| {
                let mut row = vec![txt(&format!("{name} {i}"))];
                for _ in 1..columns.len() {
                    row.push(num(rng.gen_range(1..100) as f64));
                }
                row
            })
            .collect();
        tables.push(Table {
            name: name.to_string(),
            columns,
            rows,
        });
    }
    Database::new(tables)
}

/// 200 DB questions whose gold columns compete with longer same-table
/// columns that share the table name and the attribute word. The first 150
/// are for training and the last 50 for evaluation.
pub fn adversarial_db() -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240229);
    let db = adversarial_store(&mut rng)?;
    let mut qs = Vec::new();
    for i in 0..200 {
        let (table, attrs) = ADVERSARIAL_TABLES[i % ADVERSARIAL_TABLES.len()];
        let mut picks = attrs.to_vec();
        picks.shuffle(&mut rng);
        let (a, b) = (picks[0], picks[1]);
        let n = rng.gen_range(10..90);
        let (word, op) = if rng.gen_bool(0.5) {
            ("above", ">")
        } else {
            ("below", "<")
        };
        let q = match i % 4 {
            0 => db_q(
                &format!("What is the {a} of each {table}?"),
                &format!("SELECT {table}.{a} FROM {table}"),
            ),
            1 => db_q(
                &format!("Show the {a} of every {table} with {b} {word} {n}."),
                &format!("SELECT {table}.{a} FROM {table} WHERE {table}.{b} {op} {n}"),
            ),
            2 => db_q(
                &format!("List the {a} and {b} of all {table}s."),
                &format!("SELECT {table}.{a}, {table}.{b} FROM {table}"),
            ),
            _ => db_q(
                &format!("Which {table} labels have {b} {word} {n}?"),
                &format!("SELECT {table}.label FROM {table} WHERE {table}.{b} {op} {n}"),
            ),
        };
        qs.push(q);
    }
    Corpus::build("adversarial_db", OwnedStore::Db(db), numbered("adv", qs))
}

/// Number of training questions in [`adversarial_db`].
pub const ADVERSARIAL_TRAIN: usize = 150;

/// KB questions whose mentions are missing from the toy KB or whose only
/// reading executes empty.
pub fn fallback_kb() -> Result<Corpus> {
    let qs = vec![
        kb_q(
            "What is the capital of Atlantis?",
            "(JOIN (R country.capital) m.atlantis)",
            &["m.atlantis"],
        ),
        kb_q(
            "Which people have nationality Narnia?",
            "(JOIN person.nationality m.narnia)",
            &["m.narnia"],
        ),
        Question::new("", "Which rivers flow through nowhere?", Modality::Kb).with_mentions(&[]),
        kb_q(
            "Which people with nationality Italy have age above 90?",
            "(AND (JOIN person.nationality m.italy) (GT person.age 90))",
            &["m.italy"],
        ),
    ];
    Corpus::build(
        "fallback_kb",
        OwnedStore::Kb(toy_kb_store()),
        numbered("fbk", qs),
    )
}

/// DB questions over a schema whose tables are empty, so every candidate
/// executes empty and inference falls back.
pub fn fallback_db() -> Result<Corpus> {
    let db = Database::new(vec![
        Table {
            name: "archive".into(),
            columns: vec![
                Column::new("title", ColumnType::Text),
                Column::new("year", ColumnType::Number),
            ],
            rows: vec![],
        },
        Table {
            name: "visitor".into(),
            columns: vec![
                Column::new("name", ColumnType::Text),
                Column::new("age", ColumnType::Number),
            ],
            rows: vec![],
        },
    ])?;
    let qs = vec![
        db_q(
            "List the titles in the archive.",
            "SELECT archive.title FROM archive",
        ),
        db_q(
            "Which archive titles have year after 1950?",
            "SELECT archive.title FROM archive WHERE archive.year > 1950",
        ),
        db_q(
            "How many visitors are older than 30?",
            "SELECT COUNT(*) FROM visitor WHERE visitor.age > 30",
        ),
        db_q(
            "What is the name of the oldest visitor?",
            "SELECT visitor.name FROM visitor ORDER BY visitor.age DESC LIMIT 1",
        ),
    ];
    Corpus::build("fallback_db", OwnedStore::Db(db), numbered("fbd", qs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_corpora_have_forty_nonempty_questions() {
        for c in [toy_kb().unwrap(), toy_db().unwrap()] {
            assert_eq!(c.questions.len(), 40, "{}", c.name);
            for q in &c.questions {
                let lf =
                    LogicalForm::parse(q.gold_logical_form.as_ref().unwrap(), q.modality).unwrap();
                assert!(
                    !execute(&lf, c.store.view()).unwrap().empty,
                    "{} {}",
                    q.id,
                    q.text
                );
            }
        }
    }

    #[test]
    fn ids_are_unique_and_ordered() {
        for name in BUNDLED {
            let c = bundled(name).unwrap();
            let ids: Vec<&str> = c.questions.iter().map(|q| q.id.as_str()).collect();
            let mut sorted = ids.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(ids, sorted, "{name}");
        }
    }

    #[test]
    fn adversarial_has_same_table_distractors() {
        let c = adversarial_db().unwrap();
        assert_eq!(c.questions.len(), 200);
        let OwnedStore::Db(db) = &c.store else {
            panic!()
        };
        let t = db.table("employee").unwrap();
        assert!(t.column("employee_salary_history").is_some());
    }

    #[test]
    fn fallback_golds_execute_empty() {
        for c in [fallback_kb().unwrap(), fallback_db().unwrap()] {
            for q in &c.questions {
                assert!(q
                    .answers
                    .as_ref()
                    .is_none_or(|a| a.is_empty() || a == &[serde_json::json!("0")]));
            }
        }
    }
}
