//! Labelled code corpora: schema, loading, statistics, splitting and
//! synthetic generation.

mod io;
mod labels;
mod split;
mod stats;
mod synth;

use std::collections::{BTreeMap, HashSet};

pub use io::{
    load_corpus, read_corpus, save_corpus, write_corpus, LoadMode, LoadReport, Schema,
    SkippedRecord,
};
pub use labels::{parse_label, ComplexityClass, LabelParseError, Language, Target};
pub use split::{stratified_split, Split};
pub use stats::{compute_stats, CorpusStats, LengthStats};
pub use synth::{generate_synthetic, inject_dead_helpers, SynthSpec};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Label(#[from] LabelParseError),
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("sample {0:?} has empty source")]
    EmptySource(String),
    #[error("corpus is empty")]
    Empty,
    #[error("sample {id:?} lacks a {target} label")]
    MissingLabel { id: String, target: Target },
    #[error("test fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(String),
    #[error("per-class count must be at least 1")]
    BadCount,
}

impl CorpusError {
    /// Errors caused by bad inputs or arguments rather than the environment.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, CorpusError::Io { .. })
    }
}

/// One program with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSample {
    pub id: String,
    pub language: Language,
    pub source: String,
    pub time_label: Option<ComplexityClass>,
    pub space_label: Option<ComplexityClass>,
    pub origin_url: Option<String>,
}

impl CodeSample {
    pub fn new(id: impl Into<String>, language: Language, source: impl Into<String>) -> Self {
        CodeSample {
            id: id.into(),
            language,
            source: source.into(),
            time_label: None,
            space_label: None,
            origin_url: None,
        }
    }

    pub fn with_time(mut self, class: ComplexityClass) -> Self {
        self.time_label = Some(class);
        self
    }

    pub fn with_space(mut self, class: ComplexityClass) -> Self {
        self.space_label = Some(class);
        self
    }

    pub fn label(&self, target: Target) -> Option<ComplexityClass> {
        match target {
            Target::Time => self.time_label,
            Target::Space => self.space_label,
        }
    }
}

/// An ordered collection of samples with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    samples: Vec<CodeSample>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and empty sources.
    pub fn new(samples: Vec<CodeSample>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.source.is_empty() {
                return Err(CorpusError::EmptySource(s.id.clone()));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Corpus { samples })
    }

    pub fn empty() -> Self {
        Corpus::default()
    }

    pub fn samples(&self) -> &[CodeSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<CodeSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CodeSample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn language_breakdown(&self) -> BTreeMap<Language, usize> {
        let mut out = BTreeMap::new();
        for s in &self.samples {
            *out.entry(s.language.clone()).or_insert(0) += 1;
        }
        out
    }

    /// Samples carrying a label for `target`.
    pub fn labelled(&self, target: Target) -> impl Iterator<Item = (&CodeSample, ComplexityClass)> {
        self.samples
            .iter()
            .filter_map(move |s| s.label(target).map(|c| (s, c)))
    }

    /// Checks that every sample carries a `target` label inside the target's
    /// label set.
    pub fn require_labels(&self, target: Target) -> Result<(), CorpusError> {
        for s in &self.samples {
            match s.label(target) {
                Some(c) if target.index_of(c).is_some() => {}
                _ => {
                    return Err(CorpusError::MissingLabel {
                        id: s.id.clone(),
                        target,
                    })
                }
            }
        }
        Ok(())
    }

    /// Same samples with every source rewritten by `f`. Ids are unchanged.
    pub fn map_sources<F>(&self, f: F) -> Corpus
    where
        F: Fn(&CodeSample) -> String,
    {
        Corpus {
            samples: self
                .samples
                .iter()
                .map(|s| CodeSample {
                    source: f(s),
                    ..s.clone()
                })
                .collect(),
        }
    }

    pub fn filter<F>(&self, keep: F) -> Corpus
    where
        F: Fn(&CodeSample) -> bool,
    {
        Corpus {
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    /// Samples sorted by id; used wherever results must not depend on
    /// record order.
    pub fn sorted_by_id(&self) -> Corpus {
        let mut samples = self.samples.clone();
        samples.sort_by(|a, b| a.id.cmp(&b.id));
        Corpus { samples }
    }
}
