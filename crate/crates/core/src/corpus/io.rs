//! Line-oriented corpus files.
//!
//! Each non-blank line is one JSON object with the fields `id`, `language`,
//! `source`, `time`, `space` and `url`. Labels are stored in canonical form
//! (`"O(n log n)"`), absent labels and urls as `null`.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_label, CodeSample, Corpus, CorpusError, Language};

/// Which labels a record must carry to be accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Time,
    Space,
    Both,
    /// Accept records with any subset of labels.
    Any,
}

impl std::str::FromStr for Schema {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "time" => Ok(Schema::Time),
            "space" => Ok(Schema::Space),
            "both" => Ok(Schema::Both),
            "any" => Ok(Schema::Any),
            other => Err(format!(
                "unknown schema {other:?} (expected time|space|both|any)"
            )),
        }
    }
}

/// Strict mode rejects the whole file on the first bad record; lenient mode
/// skips bad records and reports them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub corpus: Corpus,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    language: String,
    source: String,
    #[serde(default)]
    time: Option<String>,
    #[serde(default)]
    space: Option<String>,
    #[serde(default)]
    url: Option<String>,
}

fn record_to_sample(rec: Record, schema: Schema) -> Result<CodeSample, String> {
    if rec.id.is_empty() {
        return Err("empty id".into());
    }
    if rec.source.is_empty() {
        return Err(format!("sample {:?} has empty source", rec.id));
    }
    let parse = |raw: &Option<String>| -> Result<_, String> {
        raw.as_deref()
            .map(parse_label)
            .transpose()
            .map_err(|e| e.to_string())
    };
    let time_label = parse(&rec.time)?;
    let space_label = parse(&rec.space)?;
    let need_time = matches!(schema, Schema::Time | Schema::Both);
    let need_space = matches!(schema, Schema::Space | Schema::Both);
    if need_time && time_label.is_none() {
        return Err(format!("sample {:?} lacks a time label", rec.id));
    }
    if need_space && space_label.is_none() {
        return Err(format!("sample {:?} lacks a space label", rec.id));
    }
    Ok(CodeSample {
        id: rec.id,
        language: Language::from(rec.language.as_str()),
        source: rec.source,
        time_label,
        space_label,
        origin_url: rec.url,
    })
}

/// Parses corpus records from any reader.
pub fn read_corpus<R: Read>(
    reader: R,
    schema: Schema,
    mode: LoadMode,
) -> Result<LoadReport, CorpusError> {
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: "<reader>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Record>(&line)
            .map_err(|e| format!("malformed record: {e}"))
            .and_then(|rec| record_to_sample(rec, schema))
            .and_then(|s| {
                if seen.contains(&s.id) {
                    Err(format!("duplicate sample id {:?}", s.id))
                } else {
                    Ok(s)
                }
            });
        match parsed {
            Ok(sample) => {
                seen.insert(sample.id.clone());
                samples.push(sample);
            }
            Err(reason) => match mode {
                LoadMode::Strict => {
                    return Err(CorpusError::Malformed {
                        line: line_no,
                        reason,
                    })
                }
                LoadMode::Lenient => {
                    log::warn!("skipping record on line {line_no}: {reason}");
                    skipped.push(SkippedRecord {
                        line: line_no,
                        reason,
                    });
                }
            },
        }
    }
    Ok(LoadReport {
        corpus: Corpus::new(samples)?,
        skipped,
    })
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    schema: Schema,
    mode: LoadMode,
) -> Result<LoadReport, CorpusError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(file, schema, mode)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for s in corpus.samples() {
        let rec = Record {
            id: s.id.clone(),
            language: s.language.tag().to_string(),
            source: s.source.clone(),
            time: s.time_label.map(|c| c.canonical().to_string()),
            space: s.space_label.map(|c| c.canonical().to_string()),
            url: s.origin_url.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut buf = Vec::new();
    write_corpus(corpus, &mut buf)?;
    fs::write(path, buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ComplexityClass;

    fn line(id: &str, time: &str) -> String {
        format!(
            r#"{{"id":"{id}","language":"cpp","source":"int main(){{}}\n","time":"{time}","space":null,"url":null}}"#
        )
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        let r = read_corpus(&b""[..], Schema::Time, LoadMode::Strict).unwrap();
        assert!(r.corpus.is_empty());
        assert!(r.skipped.is_empty());
    }

    #[test]
    fn unknown_label_lenient_skips_with_line_number() {
        let text = line("a", "O(n*m)");
        let r = read_corpus(text.as_bytes(), Schema::Time, LoadMode::Lenient).unwrap();
        assert_eq!(r.corpus.len(), 0);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].line, 1);
        assert!(r.skipped[0].reason.contains("O(n*m)"));
    }

    #[test]
    fn strict_mode_rejects_whole_load() {
        let text = format!("{}\n{}\n", line("a", "O(n)"), line("b", "O(n*m)"));
        match read_corpus(text.as_bytes(), Schema::Time, LoadMode::Strict) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_required_label_and_duplicates() {
        let text = format!(
            "{}\n{}\n{}\n",
            line("a", "O(n)"),
            line("a", "O(1)"),
            r#"{"id":"c","language":"python","source":"x=1","time":null}"#
        );
        let r = read_corpus(text.as_bytes(), Schema::Time, LoadMode::Lenient).unwrap();
        assert_eq!(r.corpus.len(), 1);
        assert_eq!(
            r.skipped.iter().map(|s| s.line).collect::<Vec<_>>(),
            vec![2, 3]
        );
        // Space-only schema tolerates a missing time label.
        let r = read_corpus(
            r#"{"id":"c","language":"python","source":"x=1","space":"O(1)"}"#.as_bytes(),
            Schema::Space,
            LoadMode::Strict,
        )
        .unwrap();
        assert_eq!(
            r.corpus.samples()[0].space_label,
            Some(ComplexityClass::Constant)
        );
    }

    #[test]
    fn malformed_json_reported() {
        let r = read_corpus(&b"{not json\n"[..], Schema::Any, LoadMode::Lenient).unwrap();
        assert_eq!(r.skipped[0].line, 1);
        assert!(r.skipped[0].reason.starts_with("malformed record"));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_corpus("/nonexistent/corpus.jsonl", Schema::Any, LoadMode::Strict),
            Err(CorpusError::Io { .. })
        ));
    }
}
