use crate::ranker::op_cues;
use crate::text::{numbers, tokenize};

/// Lexical cues for operations. They feed composition features and never
/// constrain the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trigger {
    Count,
    MaxWord,
    MinWord,
    SupMax,
    SupMin,
    Avg,
    Sum,
    Order,
    Group,
    And,
    Or,
    Except,
    CmpCue,
    Number,
}

impl Trigger {
    pub const ALL: [Trigger; 14] = [
        Trigger::Count,
        Trigger::MaxWord,
        Trigger::MinWord,
        Trigger::SupMax,
        Trigger::SupMin,
        Trigger::Avg,
        Trigger::Sum,
        Trigger::Order,
        Trigger::Group,
        Trigger::And,
        Trigger::Or,
        Trigger::Except,
        Trigger::CmpCue,
        Trigger::Number,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Trigger::Count => "count",
            Trigger::MaxWord => "max_word",
            Trigger::MinWord => "min_word",
            Trigger::SupMax => "sup_max",
            Trigger::SupMin => "sup_min",
            Trigger::Avg => "avg",
            Trigger::Sum => "sum",
            Trigger::Order => "order",
            Trigger::Group => "group",
            Trigger::And => "and",
            Trigger::Or => "or",
            Trigger::Except => "except",
            Trigger::CmpCue => "cmp_cue",
            Trigger::Number => "number",
        }
    }

    /// Whether a single token is one of this trigger's words.
    pub fn matches(self, token: &str) -> bool {
        self.words().contains(&token)
    }

    fn words(self) -> &'static [&'static str] {
        match self {
            Trigger::Count => &["count", "number"],
            Trigger::MaxWord => &["maximum", "max", "highest"],
            Trigger::MinWord => &["minimum", "min", "lowest"],
            Trigger::SupMax => &[
                "most", "largest", "biggest", "oldest", "tallest", "longest", "latest", "greatest",
                "heaviest", "top", "best", "richest",
            ],
            Trigger::SupMin => &[
                "least", "smallest", "youngest", "shortest", "fewest", "earliest", "lightest",
                "worst", "poorest",
            ],
            Trigger::Avg => &["average", "mean"],
            Trigger::Sum => &["total", "sum", "combined"],
            Trigger::Order => &[
                "order",
                "sorted",
                "sort",
                "ascending",
                "descending",
                "alphabetical",
                "ordered",
            ],
            Trigger::Group => &["each", "per", "every"],
            Trigger::And => &["and", "both"],
            Trigger::Or => &["or", "either"],
            Trigger::Except => &["not", "except", "without", "excluding", "never", "no"],
            Trigger::CmpCue | Trigger::Number => &[],
        }
    }
}

/// Triggers present in a question.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triggers {
    present: Vec<Trigger>,
}

impl Triggers {
    pub fn detect(question: &str) -> Self {
        let toks = tokenize(question);
        let mut present: Vec<Trigger> = Trigger::ALL
            .into_iter()
            .filter(|t| toks.iter().any(|w| t.words().contains(&w.as_str())))
            .collect();
        let how_many = toks.windows(2).any(|w| w[0] == "how" && w[1] == "many");
        if how_many && !present.contains(&Trigger::Count) {
            present.push(Trigger::Count);
        }
        if op_cues(question).iter().any(|op| op.is_ordering()) {
            present.push(Trigger::CmpCue);
        }
        if !numbers(question).is_empty() {
            present.push(Trigger::Number);
        }
        present.sort();
        Triggers { present }
    }

    pub fn has(&self, t: Trigger) -> bool {
        self.present.contains(&t)
    }

    pub fn iter(&self) -> impl Iterator<Item = Trigger> + '_ {
        self.present.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_count_and_comparison() {
        let t = Triggers::detect("How many heads of departments are older than 56?");
        assert!(t.has(Trigger::Count));
        assert!(t.has(Trigger::CmpCue));
        assert!(t.has(Trigger::Number));
        assert!(!t.has(Trigger::SupMax));
    }

    #[test]
    fn superlatives() {
        let t = Triggers::detect("Which river is the longest?");
        assert!(t.has(Trigger::SupMax) && !t.has(Trigger::Count));
    }
}
