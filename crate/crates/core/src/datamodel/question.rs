use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Kb,
    Db,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Kb => "kb",
            Modality::Db => "db",
        })
    }
}

/// One natural-language question with optional supervision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub modality: Modality,
    /// Gold logical form, stored verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_logical_form: Option<String>,
    /// Linked entity ids (KB only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_mentions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answers: Option<Vec<serde_json::Value>>,
    /// Database id for DB questions when a corpus spans several databases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db_id: Option<String>,
}

impl Question {
    pub fn new(id: &str, text: &str, modality: Modality) -> Self {
        Question {
            id: id.to_string(),
            text: text.to_string(),
            modality,
            gold_logical_form: None,
            entity_mentions: None,
            answers: None,
            db_id: None,
        }
    }

    pub fn with_gold(mut self, gold: &str) -> Self {
        self.gold_logical_form = Some(gold.to_string());
        self
    }

    pub fn with_mentions(mut self, mentions: &[&str]) -> Self {
        self.entity_mentions = Some(mentions.iter().map(|s| s.to_string()).collect());
        self
    }

    /// Answers as canonical strings (numbers without trailing `.0`).
    pub fn answer_strings(&self) -> Option<Vec<String>> {
        self.answers
            .as_ref()
            .map(|a| a.iter().map(answer_value_string).collect())
    }
}

pub fn answer_value_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n
            .as_f64()
            .map(format_number)
            .unwrap_or_else(|| n.to_string()),
        other => other.to_string(),
    }
}

/// Reads questions from JSONL, one object per line.
pub fn load_questions(path: &Path) -> Result<Vec<Question>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_questions(&text).map_err(|(line, message)| Error::Ingest {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub fn parse_questions(text: &str) -> std::result::Result<Vec<Question>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: Question = serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
        out.push(q);
    }
    Ok(out)
}

pub fn questions_to_jsonl(questions: &[Question]) -> Result<String> {
    let mut out = String::new();
    for q in questions {
        out.push_str(&serde_json::to_string(q)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_empty_list() {
        assert!(parse_questions("").unwrap().is_empty());
    }

    #[test]
    fn mentions_pass_through() {
        let qs = parse_questions(
            r#"{"id":"q1","text":"capital of France?","modality":"kb","entity_mentions":["france"]}"#,
        )
        .unwrap();
        assert_eq!(qs[0].entity_mentions.as_ref().unwrap().len(), 1);
        assert_eq!(qs[0].modality, Modality::Kb);
    }

    #[test]
    fn unknown_modality_and_missing_field_report_line() {
        let err =
            parse_questions("\n{\"id\":\"q\",\"text\":\"t\",\"modality\":\"graph\"}").unwrap_err();
        assert_eq!(err.0, 2);
        let err = parse_questions("{\"id\":\"q\",\"modality\":\"kb\"}").unwrap_err();
        assert_eq!(err.0, 1);
        assert!(err.1.contains("text"), "{}", err.1);
    }

    #[test]
    fn gold_is_stored_verbatim() {
        let qs = parse_questions(
            r#"{"id":"q","text":"t","modality":"db","gold_logical_form":"select  t.a from t","answers":[56,"x",1.5]}"#,
        )
        .unwrap();
        assert_eq!(
            qs[0].gold_logical_form.as_deref(),
            Some("select  t.a from t")
        );
        assert_eq!(qs[0].answer_strings().unwrap(), vec!["56", "x", "1.5"]);
    }
}
