//! Lexing, vocabulary, fixed-length encoding and dead-code elimination.

mod dce;
mod encode;
mod lexer;
pub(crate) mod structure;
mod vocab;

pub use dce::{count_definitions, eliminate_dead_code, DceReport, Removal, RemovalKind};
pub use encode::{encode, TokenSequence, MIN_MAX_LEN};
pub use lexer::{detokenize, is_keyword, tokenize, Token, TokenKind};
pub use vocab::{
    build_vocab, VocabError, Vocabulary, BOS_ID, EOS_ID, MIN_VOCAB_CAP, PAD_ID, RESERVED, UNK_ID,
};
