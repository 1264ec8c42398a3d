use std::collections::HashMap;

use crate::corpus::Corpus;

use super::{tokenize, TokenKind};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;
pub const RESERVED: [&str; 4] = ["<PAD>", "<UNK>", "<BOS>", "<EOS>"];
pub const MIN_VOCAB_CAP: usize = 64;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("vocabulary size cap {0} is below the minimum of {MIN_VOCAB_CAP}")]
    CapTooSmall(usize),
    #[error("no corpora given")]
    NoCorpora,
    #[error("vocabulary entry {0:?} is duplicated")]
    Duplicate(String),
}

/// Frozen lexeme ↔ id mapping with reserved ids 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from entries in id order. The first four must be
    /// the reserved tokens.
    pub fn from_entries(entries: Vec<String>) -> Result<Self, VocabError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.clone(), i as u32).is_some() {
                return Err(VocabError::Duplicate(e.clone()));
            }
        }
        if entries.len() < RESERVED.len() || entries[..4].iter().zip(RESERVED).any(|(a, b)| a != b)
        {
            return Err(VocabError::Duplicate("<reserved>".into()));
        }
        Ok(Vocabulary { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, lexeme: &str) -> u32 {
        self.index.get(lexeme).copied().unwrap_or(UNK_ID)
    }

    pub fn lexeme(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }
}

/// Builds one shared vocabulary over every corpus given (all languages
/// together). Ids follow descending frequency, ties broken
/// lexicographically, and the result holds at most `size_cap` entries
/// including the reserved ones.
pub fn build_vocab(corpora: &[&Corpus], size_cap: usize) -> Result<Vocabulary, VocabError> {
    if size_cap < MIN_VOCAB_CAP {
        return Err(VocabError::CapTooSmall(size_cap));
    }
    if corpora.is_empty() {
        return Err(VocabError::NoCorpora);
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for corpus in corpora {
        for s in corpus.samples() {
            for t in tokenize(&s.source, &s.language) {
                if t.kind == TokenKind::Comment {
                    continue;
                }
                let key = t.vocab_key();
                if RESERVED.contains(&key) {
                    continue;
                }
                *counts.entry(key.to_string()).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut entries: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    entries.extend(
        ranked
            .into_iter()
            .take(size_cap - RESERVED.len())
            .map(|(k, _)| k),
    );
    Vocabulary::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CodeSample, Language};

    fn corpus(srcs: &[&str]) -> Corpus {
        Corpus::new(
            srcs.iter()
                .enumerate()
                .map(|(i, s)| CodeSample::new(i.to_string(), Language::Python, *s))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn most_frequent_gets_first_free_id() {
        let c = corpus(&["n = n + n", "y = n"]);
        let v = build_vocab(&[&c], 64).unwrap();
        assert_eq!(v.id("n"), 4);
        assert_eq!(v.id("never-seen"), UNK_ID);
    }

    #[test]
    fn ties_are_lexicographic() {
        let c = corpus(&["b a"]);
        let v = build_vocab(&[&c], 64).unwrap();
        assert!(v.id("a") < v.id("b"));
    }

    #[test]
    fn cap_is_exact() {
        let src: Vec<String> = (0..1000).map(|i| format!("v{i}")).collect();
        let joined = src.join(" ");
        let c = corpus(&[&joined]);
        let v = build_vocab(&[&c], 64).unwrap();
        assert_eq!(v.len(), 64);
        assert_eq!(build_vocab(&[&c], 10), Err(VocabError::CapTooSmall(10)));
    }

    #[test]
    fn spans_corpora_and_languages() {
        let a = corpus(&["x = 1"]);
        let b = Corpus::new(vec![CodeSample::new("c", Language::Cpp, "int y;")]).unwrap();
        let v = build_vocab(&[&a, &b], 64).unwrap();
        assert_ne!(v.id("x"), UNK_ID);
        assert_ne!(v.id("int"), UNK_ID);
    }
}
