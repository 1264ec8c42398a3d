use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A complexity class from the closed label sets.
///
/// Declaration order is the canonical order; [`Target::index_of`] gives the
/// per-target integer index used for argmax tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComplexityClass {
    Constant,
    LogN,
    Linear,
    NLogN,
    Quadratic,
    Cubic,
    NpHard,
}

const TIME_CLASSES: [ComplexityClass; 7] = [
    ComplexityClass::Constant,
    ComplexityClass::LogN,
    ComplexityClass::Linear,
    ComplexityClass::NLogN,
    ComplexityClass::Quadratic,
    ComplexityClass::Cubic,
    ComplexityClass::NpHard,
];

// Cubic never occurs as a space label.
const SPACE_CLASSES: [ComplexityClass; 6] = [
    ComplexityClass::Constant,
    ComplexityClass::LogN,
    ComplexityClass::Linear,
    ComplexityClass::NLogN,
    ComplexityClass::Quadratic,
    ComplexityClass::NpHard,
];

impl ComplexityClass {
    /// Canonical surface form written to corpus files.
    pub fn canonical(self) -> &'static str {
        match self {
            ComplexityClass::Constant => "O(1)",
            ComplexityClass::LogN => "O(log n)",
            ComplexityClass::Linear => "O(n)",
            ComplexityClass::NLogN => "O(n log n)",
            ComplexityClass::Quadratic => "O(n^2)",
            ComplexityClass::Cubic => "O(n^3)",
            ComplexityClass::NpHard => "NP-hard",
        }
    }

    /// Short snake_case name used in tables and CSV files.
    pub fn name(self) -> &'static str {
        match self {
            ComplexityClass::Constant => "constant",
            ComplexityClass::LogN => "logn",
            ComplexityClass::Linear => "linear",
            ComplexityClass::NLogN => "nlogn",
            ComplexityClass::Quadratic => "quadratic",
            ComplexityClass::Cubic => "cubic",
            ComplexityClass::NpHard => "np_hard",
        }
    }

    pub fn all() -> &'static [ComplexityClass] {
        &TIME_CLASSES
    }
}

impl fmt::Display for ComplexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized complexity label {raw:?}")]
pub struct LabelParseError {
    pub raw: String,
}

/// Maps a textual complexity annotation onto the closed label set.
///
/// Matching ignores case and all whitespace; `²`/`³` are read as `^2`/`^3`
/// and `ln` as `log`. Each class's short [`name`](ComplexityClass::name)
/// also parses. Anything outside the table is an error.
pub fn parse_label(raw: &str) -> Result<ComplexityClass, LabelParseError> {
    let mut key: String = raw
        .chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    key = key
        .replace('²', "^2")
        .replace('³', "^3")
        .replace("ln", "log");
    let class = match key.as_str() {
        "o(1)" | "constant" => ComplexityClass::Constant,
        "o(logn)" | "o(log(n))" | "logn" | "logarithmic" => ComplexityClass::LogN,
        "o(n)" | "linear" => ComplexityClass::Linear,
        "o(nlogn)" | "o(n*logn)" | "o(nlog(n))" | "o(n*log(n))" | "nlogn" | "linearithmic" => {
            ComplexityClass::NLogN
        }
        "o(n^2)" | "o(n*n)" | "quadratic" => ComplexityClass::Quadratic,
        "o(n^3)" | "o(n*n*n)" | "cubic" => ComplexityClass::Cubic,
        "np-hard" | "nphard" | "np_hard" | "np" | "exponential" | "o(2^n)" => {
            ComplexityClass::NpHard
        }
        _ => {
            return Err(LabelParseError {
                raw: raw.to_string(),
            })
        }
    };
    Ok(class)
}

impl FromStr for ComplexityClass {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_label(s)
    }
}

/// Which label a pipeline predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Time,
    Space,
}

impl Target {
    pub fn classes(self) -> &'static [ComplexityClass] {
        match self {
            Target::Time => &TIME_CLASSES,
            Target::Space => &SPACE_CLASSES,
        }
    }

    pub fn num_classes(self) -> usize {
        self.classes().len()
    }

    pub fn index_of(self, class: ComplexityClass) -> Option<usize> {
        self.classes().iter().position(|&c| c == class)
    }

    pub fn class_at(self, index: usize) -> Option<ComplexityClass> {
        self.classes().get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Time => "time",
            Target::Space => "space",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "time" => Ok(Target::Time),
            "space" => Ok(Target::Space),
            other => Err(format!("unknown target {other:?} (expected time|space)")),
        }
    }
}

/// Source language tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Language {
    Cpp,
    Python,
    Java,
    Other(String),
}

impl Language {
    pub fn tag(&self) -> &str {
        match self {
            Language::Cpp => "cpp",
            Language::Python => "python",
            Language::Java => "java",
            Language::Other(t) => t,
        }
    }

    /// Languages the lexer and dead-code eliminator understand.
    pub fn is_supported(&self) -> bool {
        !matches!(self, Language::Other(_))
    }

    /// Brace-delimited blocks (as opposed to indentation blocks).
    pub fn uses_braces(&self) -> bool {
        !matches!(self, Language::Python)
    }
}

impl From<&str> for Language {
    fn from(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "cpp" | "c++" | "cc" => Language::Cpp,
            "python" | "py" | "python3" => Language::Python,
            "java" => Language::Java,
            _ => Language::Other(s.trim().to_string()),
        }
    }
}

impl FromStr for Language {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Language::from(s))
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}
