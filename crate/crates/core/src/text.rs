//! Lexical helpers shared by enumeration, ranking and composition scoring.
//!
//! Everything here is deterministic and allocation-light; no external
//! tokenizer is involved.

use std::collections::HashSet;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "by", "did", "do", "does", "for", "from",
    "give", "had", "has", "have", "how", "in", "is", "it", "its", "list", "many", "me", "much",
    "of", "on", "or", "r", "show", "than", "that", "the", "their", "there", "these", "this",
    "those", "to", "was", "were", "what", "which", "who", "whom", "whose", "with",
];

/// Lowercased word and number tokens. Dotted identifiers such as
/// `location.country.capital` split into their parts; decimal numbers stay whole.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let lower = text.to_lowercase();
    for chunk in lower.split(|c: char| !(c.is_alphanumeric() || c == '.')) {
        let chunk = chunk.trim_matches('.');
        if chunk.is_empty() {
            continue;
        }
        if chunk.parse::<f64>().is_ok() {
            out.push(chunk.to_string());
            continue;
        }
        out.extend(
            chunk
                .split('.')
                .filter(|piece| !piece.is_empty())
                .map(str::to_string),
        );
    }
    out
}

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Crude plural folding: `departments` → `department`, `cities` → `city`.
pub fn stem(token: &str) -> String {
    if token.parse::<f64>().is_ok() {
        return token.to_string();
    }
    if token.len() > 4 && token.ends_with("ies") {
        return format!("{}y", &token[..token.len() - 3]);
    }
    if token.len() > 3 && token.ends_with('s') && !token.ends_with("ss") {
        return token[..token.len() - 1].to_string();
    }
    token.to_string()
}

/// Stemmed tokens with stopwords removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .map(|t| stem(&t))
        .collect()
}

const ATTRIBUTE_HINTS: &[(&str, &str)] = &[
    ("aged", "age"),
    ("elder", "age"),
    ("heavier", "weight"),
    ("heaviest", "weight"),
    ("lighter", "weight"),
    ("lightest", "weight"),
    ("longer", "length"),
    ("longest", "length"),
    ("old", "age"),
    ("older", "age"),
    ("oldest", "age"),
    ("short", "height"),
    ("shorter", "height"),
    ("shortest", "height"),
    ("tall", "height"),
    ("taller", "height"),
    ("tallest", "height"),
    ("young", "age"),
    ("younger", "age"),
    ("youngest", "age"),
];

/// Attribute a comparative or superlative adjective refers to, e.g.
/// `older` → `age`.
pub fn attribute_hint(token: &str) -> Option<&'static str> {
    ATTRIBUTE_HINTS
        .binary_search_by(|(k, _)| k.cmp(&token))
        .ok()
        .map(|i| ATTRIBUTE_HINTS[i].1)
}

/// [`content_tokens`] plus the attributes hinted at by adjectives.
pub fn content_tokens_with_hints(text: &str) -> Vec<String> {
    let mut out = content_tokens(text);
    let hints: Vec<String> = tokenize(text)
        .iter()
        .filter_map(|t| attribute_hint(t))
        .map(str::to_string)
        .collect();
    out.extend(hints);
    out
}

/// Numeric tokens in order of appearance.
pub fn numbers(text: &str) -> Vec<f64> {
    tokenize(text)
        .iter()
        .filter_map(|t| t.parse::<f64>().ok())
        .filter(|n| n.is_finite())
        .collect()
}

/// Character n-grams over the lowercased text with runs of whitespace collapsed.
pub fn char_ngrams(text: &str, n: usize) -> HashSet<String> {
    let normalized: Vec<char> = text
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .chars()
        .collect();
    let mut grams = HashSet::new();
    if normalized.len() < n || n == 0 {
        if !normalized.is_empty() {
            grams.insert(normalized.iter().collect());
        }
        return grams;
    }
    for window in normalized.windows(n) {
        grams.insert(window.iter().collect());
    }
    grams
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Length in chars of the longest common substring.
pub fn longest_common_substring(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut best = 0;
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Fuzzy-match normalization: lowercase, punctuation stripped, plurals folded,
/// tokens sorted so word order does not matter.
pub fn normalize_phrase(text: &str) -> String {
    let mut toks: Vec<String> = tokenize(text).iter().map(|t| stem(t)).collect();
    toks.sort();
    toks.join(" ")
}

/// Minimum normalized length of a name before substring matching applies;
/// shorter names must match a question phrase exactly.
const MIN_FUZZY_LEN: usize = 3;

/// Question phrases (contiguous token n-grams up to `max_n`) normalized for
/// fuzzy matching.
pub fn question_phrases(question: &str, max_n: usize) -> Vec<String> {
    let toks = tokenize(question);
    let mut out = Vec::new();
    for n in 1..=max_n.min(toks.len()) {
        for window in toks.windows(n) {
            out.push(normalize_phrase(&window.join(" ")));
        }
    }
    out
}

/// Normalized longest-common-substring ratio of `name` against the best
/// question phrase: |LCS| / |name|, in `[0, 1]`.
pub fn fuzzy_similarity(phrases: &[String], name: &str) -> f64 {
    let target = normalize_phrase(name);
    let len = target.chars().count();
    if len == 0 {
        return 0.0;
    }
    if len < MIN_FUZZY_LEN {
        return if phrases.contains(&target) { 1.0 } else { 0.0 };
    }
    phrases
        .iter()
        .map(|p| longest_common_substring(p, &target) as f64 / len as f64)
        .fold(0.0, f64::max)
}

/// Renders a float without a trailing `.0` when it is integral.
pub fn format_number(n: f64) -> String {
    if n.is_finite() && n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopwords_sorted_for_binary_search() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn tokenize_splits_dotted_relations_but_keeps_decimals() {
        assert_eq!(
            tokenize("location.country.capital of France, 3.5?"),
            vec!["location", "country", "capital", "of", "france", "3.5"]
        );
        assert_eq!(tokenize("born_state pick#"), vec!["born", "state", "pick"]);
    }

    #[test]
    fn attribute_hints_are_sorted() {
        assert!(ATTRIBUTE_HINTS.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(attribute_hint("older"), Some("age"));
        assert!(content_tokens_with_hints("heads older than 56").contains(&"age".to_string()));
    }

    #[test]
    fn stem_folds_plurals() {
        assert_eq!(stem("departments"), "department");
        assert_eq!(stem("cities"), "city");
        assert_eq!(stem("class"), "class");
        assert_eq!(stem("56"), "56");
    }

    #[test]
    fn lcs_basic() {
        assert_eq!(
            longest_common_substring("department head", "head department"),
            10
        );
        assert_eq!(longest_common_substring("aaaa", "zzzz"), 0);
    }

    #[test]
    fn fuzzy_exact_name_scores_one() {
        let phrases = question_phrases("What is the boiling point of Azeotrope?", 5);
        assert_eq!(fuzzy_similarity(&phrases, "Azeotrope"), 1.0);
    }

    #[test]
    fn fuzzy_reordered_plural_name_matches_but_unrelated_does_not() {
        let phrases = question_phrases("How many heads of departments are older than 56?", 5);
        let head = fuzzy_similarity(&phrases, "department head");
        let company = fuzzy_similarity(&phrases, "company");
        assert!(head >= 0.85, "{head}");
        assert!(company < 0.85, "{company}");
        assert!(head > company);
    }

    #[test]
    fn format_number_drops_integral_fraction() {
        assert_eq!(format_number(56.0), "56");
        assert_eq!(format_number(3.5), "3.5");
        assert_eq!(format_number(-2.0), "-2");
    }
}
