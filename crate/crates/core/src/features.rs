//! Hand-engineered structural features for the interpretable baseline.

use std::fmt;

use crate::corpus::Language;
use crate::normalize::structure::{functions, CodeView};
use crate::normalize::{tokenize, Token, TokenKind};

pub const FEATURE_NAMES: [&str; 8] = [
    "loop_count",
    "if_count",
    "break_count",
    "max_nested_loop_depth",
    "recursion_flag",
    "function_count",
    "while_count",
    "token_count",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    /// `for` and `while` loops, do-while included.
    pub loop_count: usize,
    pub if_count: usize,
    pub break_count: usize,
    pub max_nested_loop_depth: usize,
    /// 1 when some function calls itself by name inside its own body.
    pub recursion_flag: u8,
    pub function_count: usize,
    pub while_count: usize,
    /// Non-comment, non-layout tokens.
    pub token_count: usize,
}

impl FeatureVector {
    pub fn values(&self) -> [f64; 8] {
        [
            self.loop_count as f64,
            self.if_count as f64,
            self.break_count as f64,
            self.max_nested_loop_depth as f64,
            f64::from(self.recursion_flag),
            self.function_count as f64,
            self.while_count as f64,
            self.token_count as f64,
        ]
    }

    pub fn csv_header() -> String {
        FEATURE_NAMES.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.to_string()
    }

    /// Field-wise `self <= other`.
    pub fn dominated_by(&self, other: &FeatureVector) -> bool {
        self.values()
            .iter()
            .zip(other.values())
            .all(|(a, b)| *a <= b)
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{}",
            self.loop_count,
            self.if_count,
            self.break_count,
            self.max_nested_loop_depth,
            self.recursion_flag,
            self.function_count,
            self.while_count,
            self.token_count
        )
    }
}

/// Rebuilds a source with the tokens at their original offsets, so that
/// structural helpers that slice the source keep working. Gap contents are
/// unknown: Python gets a newline in front of each INDENT, brace languages
/// a newline in every gap (only preprocessor directives are line-sensitive
/// there, and a directive never continues past whitespace this way).
fn skeleton(tokens: &[Token], language: &Language) -> String {
    let len = tokens.iter().map(|t| t.span.1).max().unwrap_or(0);
    let fill = if language.uses_braces() { b'\n' } else { b' ' };
    let mut bytes = vec![fill; len];
    for t in tokens {
        bytes[t.span.0..t.span.1].copy_from_slice(t.text.as_bytes());
        if t.is_indent() && t.span.0 > 0 {
            bytes[t.span.0 - 1] = b'\n';
        }
    }
    String::from_utf8(bytes).expect("token texts are valid UTF-8 at their spans")
}

fn is_kw(t: &Token, word: &str) -> bool {
    t.kind == TokenKind::Keyword && t.text == word
}

/// Last token index of the brace-language statement starting at `i`.
fn stmt_end(v: &CodeView, i: usize) -> usize {
    let last = v.len().saturating_sub(1);
    if i >= v.len() {
        return last;
    }
    let t = v.toks[i];
    let after_group = |j: usize| -> usize {
        if v.is(j, "(") {
            v.partner[j].map_or(last, |p| p + 1)
        } else {
            j
        }
    };
    if t.is("{") {
        return v.partner[i].unwrap_or(last);
    }
    if ["for", "while", "switch", "catch"]
        .iter()
        .any(|w| is_kw(t, w))
    {
        let body = after_group(i + 1);
        if t.is("while") && v.is(body, ";") {
            return body;
        }
        return stmt_end(v, body);
    }
    if is_kw(t, "if") {
        let end = stmt_end(v, after_group(i + 1));
        if v.toks.get(end + 1).is_some_and(|e| is_kw(e, "else")) {
            return stmt_end(v, end + 2);
        }
        return end;
    }
    if is_kw(t, "do") {
        let body_end = stmt_end(v, i + 1);
        // `while (...) ;`
        let cond = body_end + 2;
        return if v.is(cond, "(") {
            after_group(cond).min(last)
        } else {
            body_end
        };
    }
    if is_kw(t, "try") || is_kw(t, "else") {
        return stmt_end(v, i + 1);
    }
    let mut j = i;
    while j < v.len() {
        if v.is(j, ";") {
            return j;
        }
        if v.is(j, "}") {
            return j.saturating_sub(1).max(i);
        }
        j = v.partner[j].filter(|&p| p > j).map_or(j + 1, |p| p + 1);
    }
    last
}

fn is_loop_keyword(t: &Token) -> bool {
    is_kw(t, "for") || is_kw(t, "while")
}

/// Loop counts and maximal loop nesting for brace languages.
fn brace_loops(v: &CodeView) -> (usize, usize, usize) {
    let mut loops = 0;
    let mut whiles = 0;
    let mut max_depth = 0;
    let mut do_tails = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for i in 0..v.len() {
        open.retain(|&end| end >= i);
        let t = v.toks[i];
        let opens_loop = if is_kw(t, "do") {
            let body_end = stmt_end(v, i + 1);
            do_tails.push(body_end + 1);
            whiles += 1;
            Some(body_end)
        } else if is_loop_keyword(t) && !do_tails.contains(&i) {
            if t.is("while") {
                whiles += 1;
            }
            Some(stmt_end(v, i))
        } else {
            None
        };
        if let Some(end) = opens_loop {
            loops += 1;
            max_depth = max_depth.max(open.len() + 1);
            open.push(end);
        }
    }
    (loops, whiles, max_depth)
}

/// Python: a loop opens an indented block when its header colon is
/// directly followed by INDENT; comprehension loops open nothing.
fn python_loops(v: &CodeView) -> (usize, usize, usize) {
    let mut loops = 0;
    let mut whiles = 0;
    let mut max_depth = 0;
    let mut loop_indents = Vec::new();
    let mut stack: Vec<bool> = Vec::new();
    for i in 0..v.len() {
        let t = v.toks[i];
        if t.is_indent() {
            stack.push(loop_indents.contains(&i));
            continue;
        }
        if t.is_dedent() {
            stack.pop();
            continue;
        }
        if !is_loop_keyword(t) {
            continue;
        }
        loops += 1;
        if t.is("while") {
            whiles += 1;
        }
        let depth = stack.iter().filter(|l| **l).count() + 1;
        max_depth = max_depth.max(depth);
        let mut j = i + 1;
        while j < v.len() && !v.is(j, ":") && !v.is_layout(j) {
            match v.partner[j] {
                Some(p) if p > j => j = p + 1,
                Some(_) => break,
                None => j += 1,
            }
        }
        if v.is(j, ":") && v.toks.get(j + 1).is_some_and(|t| t.is_indent()) {
            loop_indents.push(j + 1);
        }
    }
    (loops, whiles, max_depth)
}

/// Extracts the feature vector from a token list produced by
/// [`tokenize`]. Inputs with unbalanced brackets still get keyword counts;
/// nesting and function structure then fall back to zero.
pub fn extract_features(tokens: &[Token], language: &Language) -> FeatureVector {
    extract(&skeleton(tokens, language), tokens, language)
}

fn extract(source: &str, tokens: &[Token], language: &Language) -> FeatureVector {
    let mut fv = FeatureVector::default();
    for t in tokens {
        match t.kind {
            TokenKind::Comment | TokenKind::WhitespaceSignificant => continue,
            TokenKind::Keyword => match t.text.as_str() {
                "if" | "elif" => fv.if_count += 1,
                "break" => fv.break_count += 1,
                _ => {}
            },
            _ => {}
        }
        fv.token_count += 1;
    }
    let Ok(view) = CodeView::new(source, tokens, language) else {
        let loops: Vec<&Token> = tokens.iter().filter(|t| is_loop_keyword(t)).collect();
        fv.loop_count = loops.len();
        fv.while_count = loops.iter().filter(|t| t.text == "while").count();
        fv.max_nested_loop_depth = usize::from(fv.loop_count > 0);
        return fv;
    };
    let (loops, whiles, depth) = if *language == Language::Python {
        python_loops(&view)
    } else {
        brace_loops(&view)
    };
    fv.loop_count = loops;
    fv.while_count = whiles;
    fv.max_nested_loop_depth = depth;
    let defs = functions(&view);
    fv.function_count = defs.len();
    let recursive = defs.iter().any(|f| {
        (f.body.0..=f.body.1).any(|i| {
            view.kind(i) == Some(TokenKind::Identifier)
                && view.toks[i].text == f.name
                && view.is(i + 1, "(")
        })
    });
    fv.recursion_flag = u8::from(recursive);
    fv
}

/// Tokenizes and extracts in one step.
pub fn features_of(source: &str, language: &Language) -> FeatureVector {
    extract(source, &tokenize(source, language), language)
}
