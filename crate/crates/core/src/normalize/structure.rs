//! Token-level structure shared by dead-code elimination and feature
//! extraction: bracket matching, function definitions, statements.

use crate::corpus::Language;

use super::{Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unbalanced;

/// Non-comment tokens of one source with structural side tables.
pub(crate) struct CodeView<'a> {
    pub source: &'a str,
    pub lang: &'a Language,
    pub toks: Vec<&'a Token>,
    /// For each opening bracket, the index of its partner.
    pub partner: Vec<Option<usize>>,
    /// Line number (0-based) of each token start.
    pub line: Vec<usize>,
    /// Token sits on a C/C++ preprocessor line.
    pub pp: Vec<bool>,
}

fn is_open(t: &Token) -> Option<&'static str> {
    if t.kind != TokenKind::Punctuation {
        return None;
    }
    match t.text.as_str() {
        "(" => Some(")"),
        "[" => Some("]"),
        "{" => Some("}"),
        _ => None,
    }
}

fn is_close(t: &Token) -> bool {
    t.kind == TokenKind::Punctuation && matches!(t.text.as_str(), ")" | "]" | "}")
}

impl<'a> CodeView<'a> {
    pub fn new(
        source: &'a str,
        tokens: &'a [Token],
        lang: &'a Language,
    ) -> Result<Self, Unbalanced> {
        let toks: Vec<&Token> = tokens
            .iter()
            .filter(|t| t.kind != TokenKind::Comment)
            .collect();
        let mut partner = vec![None; toks.len()];
        let mut stack: Vec<(usize, &str)> = Vec::new();
        for (i, t) in toks.iter().enumerate() {
            if let Some(close) = is_open(t) {
                stack.push((i, close));
            } else if is_close(t) {
                match stack.pop() {
                    Some((o, want)) if want == t.text => {
                        partner[o] = Some(i);
                        partner[i] = Some(o);
                    }
                    _ => return Err(Unbalanced),
                }
            }
        }
        if !stack.is_empty() {
            return Err(Unbalanced);
        }
        let mut line = Vec::with_capacity(toks.len());
        let mut cur_line = 0;
        let mut cursor = 0;
        for t in &toks {
            cur_line += source.as_bytes()[cursor..t.span.0]
                .iter()
                .filter(|&&b| b == b'\n')
                .count();
            cursor = t.span.0;
            line.push(cur_line);
        }
        let mut pp = vec![false; toks.len()];
        if *lang == Language::Cpp {
            let mut i = 0;
            while i < toks.len() {
                let starts_line = i == 0 || line[i - 1] != line[i];
                if starts_line && toks[i].is("#") {
                    let l = line[i];
                    // Backslash-continued directives are rare; one line is enough here.
                    while i < toks.len() && line[i] == l {
                        pp[i] = true;
                        i += 1;
                    }
                } else {
                    i += 1;
                }
            }
        }
        Ok(CodeView {
            source,
            lang,
            toks,
            partner,
            line,
            pp,
        })
    }

    pub fn len(&self) -> usize {
        self.toks.len()
    }

    pub fn is(&self, i: usize, text: &str) -> bool {
        self.toks.get(i).is_some_and(|t| t.is(text))
    }

    pub fn kind(&self, i: usize) -> Option<TokenKind> {
        self.toks.get(i).map(|t| t.kind)
    }

    pub fn is_layout(&self, i: usize) -> bool {
        self.kind(i) == Some(TokenKind::WhitespaceSignificant)
    }

    /// Widens a byte range to whole lines when only whitespace separates it
    /// from the line boundaries (the trailing newline is included).
    pub fn whole_lines(&self, start: usize, end: usize) -> (usize, usize) {
        let bytes = self.source.as_bytes();
        let line_start = self.source[..start].rfind('\n').map_or(0, |p| p + 1);
        let before_blank = bytes[line_start..start]
            .iter()
            .all(|b| *b == b' ' || *b == b'\t');
        let line_end = self.source[end..]
            .find('\n')
            .map_or(bytes.len(), |p| end + p);
        let after_blank = bytes[end..line_end].iter().all(|b| b.is_ascii_whitespace());
        if before_blank && after_blank {
            (line_start, (line_end + 1).min(bytes.len()))
        } else {
            (start, end)
        }
    }

    /// Python: index of the INDENT token opening the block that contains
    /// token `i`, if any.
    pub fn enclosing_blocks(&self) -> Vec<Option<usize>> {
        let mut out = Vec::with_capacity(self.toks.len());
        let mut stack: Vec<usize> = Vec::new();
        for (i, t) in self.toks.iter().enumerate() {
            if t.is_dedent() {
                stack.pop();
            }
            out.push(stack.last().copied());
            if t.is_indent() {
                stack.push(i);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FunctionDef {
    pub name: String,
    pub name_idx: usize,
    /// First token of the definition (decorators, modifiers, return type).
    pub head_start: usize,
    /// First and last token of the body, inclusive. For brace languages these
    /// are the braces themselves.
    pub body: (usize, usize),
    /// Byte range to delete when the definition is removed.
    pub removal: (usize, usize),
    /// Entry points and names reachable implicitly (overrides, dunders).
    pub protected: bool,
}

const NOT_A_RETURN_TYPE: &[&str] = &[
    "return",
    "new",
    "else",
    "throw",
    "case",
    "do",
    "delete",
    "goto",
    "sizeof",
    "if",
    "while",
    "for",
    "switch",
    "catch",
    "try",
    "using",
    "namespace",
    "typedef",
];

const JAVA_IMPLICIT: &[&str] = &[
    "toString",
    "equals",
    "hashCode",
    "compareTo",
    "compare",
    "run",
    "call",
    "apply",
    "accept",
    "get",
    "test",
    "iterator",
    "hasNext",
    "next",
    "close",
    "finalize",
    "clone",
];

fn type_like_before_name(t: &Token) -> bool {
    match t.kind {
        TokenKind::Identifier => true,
        TokenKind::Keyword => !NOT_A_RETURN_TYPE.contains(&t.text.as_str()),
        TokenKind::Operator => matches!(t.text.as_str(), ">" | ">>" | "*" | "&" | "&&" | "::"),
        TokenKind::Punctuation => t.text == "]",
        _ => false,
    }
}

fn brace_functions(v: &CodeView) -> Vec<FunctionDef> {
    let mut out = Vec::new();
    for i in 1..v.len() {
        if v.kind(i) != Some(TokenKind::Identifier) || !v.is(i + 1, "(") || v.pp[i] {
            continue;
        }
        if !type_like_before_name(v.toks[i - 1]) {
            continue;
        }
        let Some(close) = v.partner[i + 1] else {
            continue;
        };
        // Qualifiers between `)` and the body.
        let mut j = close + 1;
        let mut after_parens = Vec::new();
        while j < v.len() {
            let t = v.toks[j];
            let ok = match t.kind {
                TokenKind::Keyword => matches!(
                    t.text.as_str(),
                    "const" | "noexcept" | "throws" | "volatile" | "final" | "override"
                ),
                TokenKind::Identifier => true,
                TokenKind::Operator => {
                    matches!(t.text.as_str(), "&" | "&&" | "->" | "::" | "<" | ">" | "*")
                }
                TokenKind::Punctuation => t.text == ",",
                _ => false,
            };
            if !ok {
                break;
            }
            after_parens.push(t.text.as_str());
            j += 1;
        }
        if !v.is(j, "{") {
            continue;
        }
        let Some(body_end) = v.partner[j] else {
            continue;
        };
        let mut k = i;
        while k > 0 {
            let p = v.toks[k - 1];
            let stop = v.pp[k - 1]
                || (p.kind == TokenKind::Punctuation
                    && matches!(p.text.as_str(), ";" | "{" | "}" | ":"));
            if stop {
                break;
            }
            k -= 1;
        }
        let head: Vec<&str> = v.toks[k..i].iter().map(|t| t.text.as_str()).collect();
        if head
            .iter()
            .any(|h| NOT_A_RETURN_TYPE.contains(h) || *h == "=" || *h == "operator")
        {
            continue;
        }
        let name = v.toks[i].text.clone();
        let overrides = head.windows(2).any(|w| w == ["@", "Override"])
            || head.contains(&"virtual")
            || after_parens.contains(&"override");
        let protected = name == "main"
            || overrides
            || (*v.lang == Language::Java && JAVA_IMPLICIT.contains(&name.as_str()));
        let removal = v.whole_lines(v.toks[k].span.0, v.toks[body_end].span.1);
        out.push(FunctionDef {
            name,
            name_idx: i,
            head_start: k,
            body: (j, body_end),
            removal,
            protected,
        });
    }
    out
}

/// End index (exclusive) of the physical-line run that starts at `i`,
/// stepping over bracketed groups.
fn python_line_end(v: &CodeView, i: usize) -> usize {
    let line = v.line[i];
    let mut j = i;
    while j < v.len() && !v.is_layout(j) && v.line[j] == line {
        j = v.partner[j].filter(|&p| p > j).map_or(j + 1, |p| p + 1);
    }
    j
}

fn python_functions(v: &CodeView) -> Vec<FunctionDef> {
    let mut out = Vec::new();
    for i in 0..v.len() {
        if !(v.is(i, "def") && v.kind(i) == Some(TokenKind::Keyword)) {
            continue;
        }
        if v.kind(i + 1) != Some(TokenKind::Identifier) || !v.is(i + 2, "(") {
            continue;
        }
        let Some(close) = v.partner[i + 2] else {
            continue;
        };
        let mut colon = close + 1;
        while colon < v.len() && !v.is(colon, ":") && !v.is_layout(colon) {
            colon = v.partner[colon]
                .filter(|&p| p > colon)
                .map_or(colon + 1, |p| p + 1);
        }
        if !v.is(colon, ":") {
            continue;
        }
        let (body, last_real) = if v.toks.get(colon + 1).is_some_and(|t| t.is_indent()) {
            let mut depth = 0usize;
            let mut d = colon + 1;
            while d < v.len() {
                if v.toks[d].is_indent() {
                    depth += 1;
                } else if v.toks[d].is_dedent() {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                d += 1;
            }
            let d = d.min(v.len() - 1);
            let mut last = d;
            while last > colon && v.is_layout(last) {
                last -= 1;
            }
            ((colon + 1, d), last)
        } else {
            let end = python_line_end(v, colon + 1).max(colon + 2) - 1;
            ((colon + 1, end), end)
        };
        // Decorator lines directly above.
        let mut head_start = i;
        while head_start > 0 && !v.is_layout(head_start - 1) {
            let prev_line = v.line[head_start - 1];
            let mut ls = head_start - 1;
            while ls > 0 && !v.is_layout(ls - 1) && v.line[ls - 1] == prev_line {
                ls -= 1;
            }
            if v.is(ls, "@") {
                head_start = ls;
            } else {
                break;
            }
        }
        let name = v.toks[i + 1].text.clone();
        let protected = name == "main"
            || (name.starts_with("__") && name.ends_with("__"))
            || name.starts_with("test");
        let start = v.toks[head_start].span.0;
        let end = v.toks[last_real].span.1;
        let removal = v.whole_lines(start, end);
        out.push(FunctionDef {
            name,
            name_idx: i + 1,
            head_start,
            body,
            removal,
            protected,
        });
    }
    out
}

pub(crate) fn functions(v: &CodeView) -> Vec<FunctionDef> {
    match v.lang {
        Language::Python => python_functions(v),
        _ => brace_functions(v),
    }
}

/// Statement token ranges `[start, end]` for brace languages, `end` being
/// the terminating `;`. Braces that follow `=`, `,`, `(` or `return` are
/// initializer lists and stay inside the statement.
pub(crate) fn brace_statements(v: &CodeView) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < v.len() {
        if v.pp[i] {
            i += 1;
            start = i;
            continue;
        }
        let t = v.toks[i];
        if t.is("(") || t.is("[") {
            i = v.partner[i].map_or(i + 1, |p| p + 1);
            continue;
        }
        if t.is("{") {
            let expr_brace = i > start
                && (v.is(i - 1, "=")
                    || v.is(i - 1, ",")
                    || v.is(i - 1, "(")
                    || v.is(i - 1, "return"));
            if expr_brace {
                i = v.partner[i].map_or(i + 1, |p| p + 1);
                continue;
            }
            i += 1;
            start = i;
            continue;
        }
        if t.is("}") {
            i += 1;
            start = i;
            continue;
        }
        if t.is(";") {
            if i > start {
                out.push((start, i));
            }
            i += 1;
            start = i;
            continue;
        }
        i += 1;
    }
    out
}

/// Python logical lines `[start, end]` over non-layout tokens.
pub(crate) fn python_statements(v: &CodeView) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        if v.is_layout(i) || v.is(i, ";") {
            i += 1;
            continue;
        }
        let mut j = i;
        let mut last;
        loop {
            last = v.partner[j].filter(|&p| p > j).unwrap_or(j);
            j = last + 1;
            if j >= v.len() || v.is_layout(j) || v.is(j, ";") {
                break;
            }
            let gap = &v.source[v.toks[last].span.1..v.toks[j].span.0];
            if gap.contains('\n') && !gap.contains('\\') {
                break;
            }
        }
        out.push((i, last));
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::tokenize;

    fn names(src: &str, lang: Language) -> Vec<String> {
        let toks = tokenize(src, &lang);
        let v = CodeView::new(src, &toks, &lang).unwrap();
        functions(&v).into_iter().map(|f| f.name).collect()
    }

    #[test]
    fn finds_cpp_definitions_not_calls() {
        let src = "#include <x>\nint f(int a) { return g(a); }\nvoid A::h() const { if (x) { f(1); } }\nint main() { f(2); }\n";
        assert_eq!(names(src, Language::Cpp), vec!["f", "h", "main"]);
    }

    #[test]
    fn finds_java_methods() {
        let src = "class A {\n  @Override\n  public String toString() { return \"\"; }\n  static int[] g(int n) { return null; }\n}\n";
        let toks = tokenize(src, &Language::Java);
        let v = CodeView::new(src, &toks, &Language::Java).unwrap();
        let fs = functions(&v);
        assert_eq!(
            fs.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(),
            vec!["toString", "g"]
        );
        assert!(fs[0].protected);
        assert!(!fs[1].protected);
    }

    #[test]
    fn python_def_extent() {
        let src = "@dec\ndef f(a):\n    if a:\n        return 1\n    return 2\n\nx = f(1)\n";
        let toks = tokenize(src, &Language::Python);
        let v = CodeView::new(src, &toks, &Language::Python).unwrap();
        let fs = functions(&v);
        assert_eq!(fs.len(), 1);
        let (a, b) = fs[0].removal;
        assert_eq!(
            &src[a..b],
            "@dec\ndef f(a):\n    if a:\n        return 1\n    return 2\n"
        );
    }

    #[test]
    fn python_one_line_def() {
        let src = "def f(): return 1\ny = 2\n";
        let toks = tokenize(src, &Language::Python);
        let v = CodeView::new(src, &toks, &Language::Python).unwrap();
        let fs = functions(&v);
        let (a, b) = fs[0].removal;
        assert_eq!(&src[a..b], "def f(): return 1\n");
    }

    #[test]
    fn unbalanced_is_detected() {
        let toks = tokenize("int f() {", &Language::Cpp);
        assert!(CodeView::new("int f() {", &toks, &Language::Cpp).is_err());
    }

    #[test]
    fn statements_split() {
        let src = "int a[] = {1, 2};\nfor (int i = 0; i < n; i++) { x += i; }";
        let toks = tokenize(src, &Language::Cpp);
        let v = CodeView::new(src, &toks, &Language::Cpp).unwrap();
        let st: Vec<String> = brace_statements(&v)
            .into_iter()
            .map(|(a, b)| {
                v.toks[a..=b]
                    .iter()
                    .map(|t| t.text.as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        assert_eq!(st, vec!["int a [ ] = { 1 , 2 } ;", "x += i ;"]);
    }

    #[test]
    fn python_logical_lines() {
        let src = "a = (1,\n     2)\nb = 3; c = 4\n";
        let toks = tokenize(src, &Language::Python);
        let v = CodeView::new(src, &toks, &Language::Python).unwrap();
        let st = python_statements(&v);
        assert_eq!(st.len(), 3);
        assert_eq!(v.toks[st[0].1].text, ")");
    }
}
