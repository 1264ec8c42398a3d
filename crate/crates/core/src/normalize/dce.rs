//! Dead-code elimination over tokens.
//!
//! A definition is removed when its name occurs nowhere else in the file.
//! Counting occurrences file-wide (instead of resolving scopes) errs on the
//! side of keeping code: shadowed or reflective uses always count as uses.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::corpus::Language;

use super::structure::{brace_statements, functions, python_statements, CodeView};
use super::{tokenize, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RemovalKind {
    Function,
    Variable,
}

impl fmt::Display for RemovalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RemovalKind::Function => "function",
            RemovalKind::Variable => "variable",
        })
    }
}

/// One removed definition. `span` is a byte range of the original input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub kind: RemovalKind,
    pub name: String,
    pub span: (usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DceReport {
    pub removed: Vec<Removal>,
    pub skipped: Vec<String>,
    /// Analysis passes run, including the final pass that found nothing.
    pub passes: usize,
}

impl DceReport {
    pub fn is_identity(&self) -> bool {
        self.removed.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    kind: RemovalKind,
    name: String,
    range: (usize, usize),
}

const IMPURE_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=", "++", "--", ":=",
    "**=", "//=", "@=",
];

const DECL_OPS: &[&str] = &["<", ">", ">>", "::", "*", "&", "&&"];

const NOT_DECL_KEYWORDS: &[&str] = &[
    "return",
    "delete",
    "throw",
    "goto",
    "case",
    "default",
    "else",
    "new",
    "using",
    "typedef",
    "break",
    "continue",
    "do",
    "namespace",
    "import",
    "package",
    "assert",
    "yield",
    "friend",
];

fn is_call_open(v: &CodeView, i: usize) -> bool {
    v.is(i, "(")
        && i > 0
        && (v.kind(i - 1) == Some(TokenKind::Identifier)
            || v.is(i - 1, ")")
            || v.is(i - 1, "]")
            || v.is(i - 1, ">"))
}

fn pure_expr(v: &CodeView, from: usize, to: usize) -> bool {
    if from > to {
        return false;
    }
    (from..=to).all(|i| {
        let t = v.toks[i];
        let bad_op = t.kind == TokenKind::Operator && IMPURE_OPS.contains(&t.text.as_str());
        let bad_kw =
            t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "new" | "yield" | "await");
        !(bad_op || bad_kw || is_call_open(v, i) || v.pp[i])
    })
}

/// `type... name [= pure];` with a single declarator.
fn brace_var(v: &CodeView, start: usize, semi: usize) -> Option<usize> {
    let eq = (start..semi).find(|&i| v.is(i, "=") && v.kind(i) == Some(TokenKind::Operator));
    let decl_end = eq.unwrap_or(semi);
    // Trailing array dimensions: `int a[10]`.
    let mut name = decl_end.checked_sub(1)?;
    while v.is(name, "]") {
        name = v.partner[name]?.checked_sub(1)?;
    }
    if name <= start || v.kind(name) != Some(TokenKind::Identifier) {
        return None;
    }
    let mut angle = 0i32;
    let mut has_type = false;
    let mut i = start;
    while i < name {
        let t = v.toks[i];
        match t.kind {
            TokenKind::Identifier => has_type = true,
            TokenKind::Keyword => {
                if NOT_DECL_KEYWORDS.contains(&t.text.as_str()) {
                    return None;
                }
                has_type = true;
            }
            TokenKind::Operator if DECL_OPS.contains(&t.text.as_str()) => match t.text.as_str() {
                "<" => angle += 1,
                ">" => angle -= 1,
                ">>" => angle -= 2,
                _ => {}
            },
            TokenKind::Punctuation if t.text == "," && angle > 0 => {}
            TokenKind::Punctuation if t.text == "." => {}
            TokenKind::Punctuation if t.text == "[" => {
                // Java array type `int[] a`: only empty brackets.
                if !v.is(i + 1, "]") {
                    return None;
                }
                i += 1;
            }
            _ => return None,
        }
        i += 1;
    }
    if !has_type || angle != 0 {
        return None;
    }
    if let Some(eq) = eq {
        if !pure_expr(v, eq + 1, semi - 1) {
            return None;
        }
    }
    Some(name)
}

fn python_var(v: &CodeView, start: usize, end: usize) -> Option<usize> {
    if v.kind(start) != Some(TokenKind::Identifier) || !v.is(start + 1, "=") {
        return None;
    }
    let name = &v.toks[start].text;
    if name.starts_with("__") {
        return None;
    }
    pure_expr(v, start + 2, end).then_some(start)
}

fn find_candidates(v: &CodeView) -> Vec<Candidate> {
    let mut occurrences: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, t) in v.toks.iter().enumerate() {
        if t.kind == TokenKind::Identifier {
            occurrences.entry(t.text.as_str()).or_default().push(i);
        }
    }
    let python = *v.lang == Language::Python;
    let blocks = if python {
        v.enclosing_blocks()
    } else {
        Vec::new()
    };
    // Python: removing the only statement of a block would leave it empty.
    let sole_in_block = |first: usize, last: usize| {
        python
            && first > 0
            && v.toks[first - 1].is_indent()
            && v.toks.get(last + 1).is_none_or(|t| t.is_dedent())
    };

    let mut out = Vec::new();
    for f in functions(v) {
        if f.protected {
            continue;
        }
        let (lo, hi) = (f.head_start, f.body.1);
        let used = occurrences[f.name.as_str()]
            .iter()
            .any(|&i| i < lo || i > hi);
        if used || sole_in_block(lo, hi) {
            continue;
        }
        out.push((
            lo,
            Candidate {
                kind: RemovalKind::Function,
                name: f.name,
                range: f.removal,
            },
        ));
    }
    let statements = if python {
        python_statements(v)
    } else {
        brace_statements(v)
    };
    for (s, e) in statements {
        let name_idx = if python {
            python_var(v, s, e)
        } else {
            brace_var(v, s, e)
        };
        let Some(n) = name_idx else { continue };
        let name = v.toks[n].text.as_str();
        if occurrences[name].len() != 1 || sole_in_block(s, e) {
            continue;
        }
        out.push((
            s,
            Candidate {
                kind: RemovalKind::Variable,
                name: name.to_string(),
                range: v.whole_lines(v.toks[s].span.0, v.toks[e].span.1),
            },
        ));
    }

    // Outermost first; drop anything nested in an accepted removal.
    out.sort_by_key(|(_, c)| (c.range.0, std::cmp::Reverse(c.range.1)));
    let mut accepted: Vec<Candidate> = Vec::new();
    let mut used_blocks: HashSet<Option<usize>> = HashSet::new();
    for (first_tok, c) in out {
        if accepted.last().is_some_and(|a| c.range.0 < a.range.1) {
            continue;
        }
        if python && !used_blocks.insert(blocks[first_tok]) {
            continue;
        }
        accepted.push(c);
    }
    accepted
}

/// Removes unused function and variable definitions until nothing changes.
///
/// Unsupported languages and inputs with unbalanced brackets come back
/// unchanged, with the reason listed in `skipped`.
pub fn eliminate_dead_code(source: &str, language: &Language) -> (String, DceReport) {
    let mut report = DceReport::default();
    if !language.is_supported() {
        report
            .skipped
            .push(format!("skipped: unsupported language {language}"));
        return (source.to_string(), report);
    }
    let mut text = source.to_string();
    // origin[i] = byte offset in `source` of byte i of `text`.
    let mut origin: Vec<usize> = (0..=source.len()).collect();
    loop {
        report.passes += 1;
        let tokens = tokenize(&text, language);
        let view = match CodeView::new(&text, &tokens, language) {
            Ok(v) => v,
            Err(_) => {
                report
                    .skipped
                    .push("skipped: unparseable (unbalanced brackets)".to_string());
                if report.passes == 1 {
                    return (text, report);
                }
                break;
            }
        };
        let candidates = find_candidates(&view);
        if candidates.is_empty() {
            break;
        }
        let mut next = String::with_capacity(text.len());
        let mut next_origin = Vec::with_capacity(origin.len());
        let mut cursor = 0;
        for c in &candidates {
            let (a, b) = c.range;
            next.push_str(&text[cursor..a]);
            next_origin.extend_from_slice(&origin[cursor..a]);
            report.removed.push(Removal {
                kind: c.kind,
                name: c.name.clone(),
                span: (origin[a], origin[b - 1] + 1),
            });
            cursor = b;
        }
        next.push_str(&text[cursor..]);
        next_origin.extend_from_slice(&origin[cursor..]);
        text = next;
        origin = next_origin;
    }
    (text, report)
}

/// Every function and single-declarator variable definition, used or not.
pub fn count_definitions(source: &str, language: &Language) -> usize {
    let tokens = tokenize(source, language);
    let Ok(v) = CodeView::new(source, &tokens, language) else {
        return 0;
    };
    let python = *language == Language::Python;
    let vars = if python {
        python_statements(&v)
            .into_iter()
            .filter(|&(s, e)| python_var(&v, s, e).is_some())
            .count()
    } else {
        brace_statements(&v)
            .into_iter()
            .filter(|&(s, e)| brace_var(&v, s, e).is_some())
            .count()
    };
    functions(&v).len() + vars
}
