use std::collections::BTreeSet;

use super::{GroundingError, Retriever, TextualIndex};

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "can", "do", "for", "from", "get", "go", "i", "in", "into", "is",
    "it", "its", "me", "my", "next", "of", "on", "one", "onto", "or", "please", "some", "that", "the", "them", "then",
    "there", "these", "this", "those", "three", "to", "two", "up", "with", "you", "your", "put", "place", "take",
    "bring", "make", "move",
];

/// Synonym pairs folded onto the first spelling.
const SYNONYMS: &[(&str, &str)] = &[
    ("fridge", "refrigerator"),
    ("remote", "controller"),
    ("bin", "trash"),
    ("bin", "garbage"),
    ("coffee", "espresso"),
    ("cup", "mug"),
    ("sofa", "couch"),
];

fn singular(t: &str) -> String {
    if t.len() > 4 && t.ends_with("ies") {
        format!("{}y", &t[..t.len() - 3])
    } else if t.len() > 4 && ["ches", "shes", "sses", "xes", "oes"].iter().any(|s| t.ends_with(s)) {
        t[..t.len() - 2].to_string()
    } else if t.len() > 3 && t.ends_with('s') && !t.ends_with("ss") {
        t[..t.len() - 1].to_string()
    } else {
        t.to_string()
    }
}

fn canonical(t: &str) -> String {
    let s = singular(t);
    SYNONYMS.iter().find(|(_, alt)| *alt == s).map_or(s, |(main, _)| main.to_string())
}

/// Lower-cased content tokens with punctuation, underscores and stopwords removed.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !STOPWORDS.contains(t) && !t.chars().all(|c| c.is_ascii_digit()))
        .map(canonical)
        .collect()
}

/// Ranks nodes by how many instruction tokens their caption or name contains.
#[derive(Clone, Copy, Debug, Default)]
pub struct KeywordRetriever;

impl KeywordRetriever {
    /// (node, hits) for every node with at least one hit, best first.
    pub fn scores(&self, instruction: &str, index: &TextualIndex) -> Vec<(String, usize)> {
        let query = tokenize(instruction);
        let mut hits: Vec<(String, usize)> = index
            .iter()
            .map(|(node, caption)| {
                let mut toks = tokenize(caption);
                toks.extend(tokenize(node));
                (node.to_string(), query.intersection(&toks).count())
            })
            .filter(|(_, h)| *h > 0)
            .collect();
        hits.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        hits
    }
}

impl Retriever for KeywordRetriever {
    fn retrieve(&self, instruction: &str, index: &TextualIndex) -> Result<Vec<String>, GroundingError> {
        Ok(self.scores(instruction, index).into_iter().map(|(n, _)| n).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        let t = tokenize("Place the Mangoes into the refrigerator, please!");
        assert_eq!(t.into_iter().collect::<Vec<_>>(), ["fridge", "mango"]);
        assert!(tokenize("office_602_table").contains("office"));
        assert!(!tokenize("office_602_table").contains("602"));
    }

    #[test]
    fn ranks_by_hits_then_name() {
        let index = TextualIndex::from_entries([
            ("b".to_string(), "a cup and a mango".to_string()),
            ("a".to_string(), "a mango".to_string()),
            ("c".to_string(), "a lamp".to_string()),
        ]);
        let r = KeywordRetriever.retrieve("cup with mango", &index).unwrap();
        assert_eq!(r, ["b", "a"]);
    }
}
