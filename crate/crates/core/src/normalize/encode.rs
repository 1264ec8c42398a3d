use crate::corpus::Language;

use super::vocab::{BOS_ID, EOS_ID, PAD_ID};
use super::{tokenize, TokenKind, Vocabulary};

pub const MIN_MAX_LEN: usize = 8;

/// Fixed-length id sequence for the classifier.
///
/// `ids` always has `max_len` entries; the first `len` are real positions
/// (BOS, content, EOS) and the rest are PAD. `lexemes` runs parallel to the
/// real positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub lexemes: Vec<String>,
    pub len: usize,
    pub language: Language,
    pub truncated: bool,
}

impl TokenSequence {
    pub fn real_ids(&self) -> &[u32] {
        &self.ids[..self.len]
    }
}

/// BOS + ids of non-comment tokens + EOS, head-truncated to `max_len` with
/// EOS forced last, then PAD-filled.
pub fn encode(
    source: &str,
    language: &Language,
    vocab: &Vocabulary,
    max_len: usize,
) -> TokenSequence {
    let max_len = max_len.max(MIN_MAX_LEN);
    let mut ids = Vec::with_capacity(max_len);
    let mut lexemes = Vec::with_capacity(max_len);
    ids.push(BOS_ID);
    lexemes.push("<BOS>".to_string());
    let mut truncated = false;
    for t in tokenize(source, language) {
        if t.kind == TokenKind::Comment {
            continue;
        }
        if ids.len() == max_len - 1 {
            truncated = true;
            break;
        }
        ids.push(vocab.id(t.vocab_key()));
        lexemes.push(t.vocab_key().to_string());
    }
    ids.push(EOS_ID);
    lexemes.push("<EOS>".to_string());
    let len = ids.len();
    ids.resize(max_len, PAD_ID);
    TokenSequence {
        ids,
        lexemes,
        len,
        language: language.clone(),
        truncated,
    }
}
