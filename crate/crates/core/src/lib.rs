//! Complexity classification of source-code snippets.
//!
//! The pipeline runs dead-code elimination, tokenization and a small
//! attention classifier (or an engineered-feature baseline) over labelled
//! corpora, reproduces the standard evaluation protocols (multi-seed
//! accuracy, sequence-length and dead-code ablations, cross-language
//! transfer), explains predictions through NMF of classification-head
//! activations, and estimates complexity empirically from timed runs.

pub mod corpus;
pub mod empirical;
pub mod eval;
pub mod features;
pub mod fingerprint;
pub mod interpret;
pub mod model;
pub mod normalize;
pub mod par;

pub use corpus::{CodeSample, ComplexityClass, Corpus, Language, Target};
pub use model::{ClassifierConfig, ClassifierModel, Prediction};
pub use normalize::{Token, TokenKind, TokenSequence, Vocabulary};
pub use par::Execution;
