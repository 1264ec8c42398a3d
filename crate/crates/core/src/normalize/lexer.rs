//! Multi-language lexer for C++, Java and Python.
//!
//! Lexing never fails: unknown characters become single-character
//! punctuation tokens and unterminated string literals end at the end of
//! their line. Comments are kept as tokens so spans cover every
//! non-whitespace byte, and `source[t.span.0..t.span.1] == t.text` for every
//! token.

use crate::corpus::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    StringLit,
    Operator,
    Punctuation,
    Comment,
    /// Python INDENT (text = the indentation) and DEDENT (zero width).
    WhitespaceSignificant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: (usize, usize),
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text && !matches!(self.kind, TokenKind::StringLit | TokenKind::Comment)
    }

    pub fn is_indent(&self) -> bool {
        self.kind == TokenKind::WhitespaceSignificant && !self.text.is_empty()
    }

    pub fn is_dedent(&self) -> bool {
        self.kind == TokenKind::WhitespaceSignificant && self.text.is_empty()
    }

    /// Key used for vocabulary lookups.
    pub fn vocab_key(&self) -> &str {
        match self.kind {
            TokenKind::WhitespaceSignificant if self.text.is_empty() => "<DEDENT>",
            TokenKind::WhitespaceSignificant => "<INDENT>",
            _ => &self.text,
        }
    }
}

const CPP_KEYWORDS: &[&str] = &[
    "alignas",
    "alignof",
    "and",
    "asm",
    "auto",
    "bool",
    "break",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "constexpr",
    "continue",
    "default",
    "delete",
    "do",
    "double",
    "else",
    "enum",
    "explicit",
    "extern",
    "false",
    "float",
    "for",
    "friend",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "mutable",
    "namespace",
    "new",
    "noexcept",
    "not",
    "nullptr",
    "operator",
    "or",
    "private",
    "protected",
    "public",
    "register",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "template",
    "this",
    "throw",
    "true",
    "try",
    "typedef",
    "typename",
    "union",
    "unsigned",
    "using",
    "virtual",
    "void",
    "volatile",
    "while",
];

const JAVA_KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "false",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "true",
    "try",
    "var",
    "void",
    "volatile",
    "while",
];

const PYTHON_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

// Longest first within each length class.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", "**=", "//=", "...", "->*", ">>>", "<=>", "++", "--", "<<", ">>", "<=",
    ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", "**", "//",
    "->", ":=", "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?", "@",
];

const PUNCTUATION: &[char] = &['(', ')', '[', ']', '{', '}', ';', ',', '.', ':'];

pub fn is_keyword(word: &str, language: &Language) -> bool {
    match language {
        Language::Cpp => CPP_KEYWORDS.contains(&word),
        Language::Java => JAVA_KEYWORDS.contains(&word),
        Language::Python => PYTHON_KEYWORDS.contains(&word),
        Language::Other(_) => false,
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    lang: &'a Language,
    out: Vec<Token>,
    // Python layout state.
    indents: Vec<usize>,
    depth: usize,
    at_line_start: bool,
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src
            .get(self.pos + offset..)
            .and_then(|s| s.chars().next())
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize) {
        self.out.push(Token {
            kind,
            text: self.src[start..end].to_string(),
            span: (start, end),
        });
    }

    fn line_end(&self, from: usize) -> usize {
        self.src[from..]
            .find('\n')
            .map_or(self.src.len(), |i| from + i)
    }

    fn python(&self) -> bool {
        *self.lang == Language::Python
    }

    fn layout(&mut self) {
        self.at_line_start = false;
        if self.depth > 0 {
            return;
        }
        let start = self.pos;
        let mut end = start;
        let mut width = 0;
        while end < self.bytes.len() {
            match self.bytes[end] {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\x0c' => width = 0,
                _ => break,
            }
            end += 1;
        }
        // Blank and comment-only lines do not affect indentation.
        match self.bytes.get(end) {
            None | Some(b'\n') | Some(b'\r') | Some(b'#') => return,
            _ => {}
        }
        let top = *self.indents.last().unwrap();
        if width > top {
            self.indents.push(width);
            self.push(TokenKind::WhitespaceSignificant, start, end);
        } else {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push(TokenKind::WhitespaceSignificant, end, end);
            }
        }
    }

    fn string(&mut self, start: usize, quote_at: usize) {
        let q = self.bytes[quote_at];
        let triple = self.python() && self.bytes[quote_at..].starts_with(&[q, q, q]);
        let delim_len = if triple { 3 } else { 1 };
        let mut i = quote_at + delim_len;
        let eol = self.line_end(quote_at);
        loop {
            if i >= self.bytes.len() {
                // Unterminated: recover at end of line.
                self.pos = eol;
                break;
            }
            let b = self.bytes[i];
            if b == b'\\' {
                i += 2;
                continue;
            }
            if b == b'\n' && !triple {
                self.pos = eol;
                break;
            }
            if b == q && (!triple || self.bytes[i..].starts_with(&[q, q, q])) {
                self.pos = i + delim_len;
                break;
            }
            i += 1;
        }
        // Never split a multi-byte char on recovery.
        while !self.src.is_char_boundary(self.pos) {
            self.pos += 1;
        }
        self.pos = self.pos.min(self.src.len());
        self.push(TokenKind::StringLit, start, self.pos);
    }

    fn run(mut self) -> Vec<Token> {
        while self.pos < self.bytes.len() {
            if self.python() && self.at_line_start {
                self.layout();
            }
            let start = self.pos;
            let c = self.peek().unwrap();
            let next = self.peek_at(c.len_utf8());
            if c == '\n' {
                self.pos += 1;
                self.at_line_start = true;
                continue;
            }
            if c.is_whitespace() {
                self.pos += c.len_utf8();
                continue;
            }
            if c == '\\' && self.python() && matches!(next, Some('\n') | Some('\r')) {
                // Explicit line joining.
                self.push(TokenKind::Punctuation, start, start + 1);
                self.pos = self.line_end(start) + 1;
                self.pos = self.pos.min(self.src.len());
                continue;
            }
            // Comments.
            if self.python() && c == '#' {
                self.pos = self.line_end(start);
                self.push(TokenKind::Comment, start, self.pos);
                continue;
            }
            if !self.python() && c == '/' && next == Some('/') {
                self.pos = self.line_end(start);
                self.push(TokenKind::Comment, start, self.pos);
                continue;
            }
            if !self.python() && c == '/' && next == Some('*') {
                self.pos = self.src[start + 2..]
                    .find("*/")
                    .map_or(self.src.len(), |i| start + 2 + i + 2);
                self.push(TokenKind::Comment, start, self.pos);
                continue;
            }
            if c == '"' || c == '\'' {
                self.string(start, start);
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) {
                let mut i = start;
                while i < self.bytes.len() {
                    let b = self.bytes[i];
                    let exp_sign = (b == b'+' || b == b'-')
                        && i > start
                        && matches!(self.bytes[i - 1], b'e' | b'E')
                        && !self.src[start..i].starts_with("0x")
                        && !self.src[start..i].starts_with("0X");
                    if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                self.pos = i;
                self.push(TokenKind::Number, start, i);
                continue;
            }
            if is_ident_start(c) {
                let mut i = start;
                for ch in self.src[start..].chars() {
                    if is_ident_continue(ch) {
                        i += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                let word = &self.src[start..i];
                let prefixed_string = self.python()
                    && word.len() <= 2
                    && word.chars().all(|ch| "rRbBfFuU".contains(ch))
                    && matches!(self.bytes.get(i), Some(b'"') | Some(b'\''));
                if prefixed_string {
                    self.string(start, i);
                    continue;
                }
                self.pos = i;
                let kind = if is_keyword(word, self.lang) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, start, i);
                continue;
            }
            if PUNCTUATION.contains(&c) {
                // `::` is an operator, not two colons.
                if c == ':' && (next == Some(':') || (self.python() && next == Some('='))) {
                    self.pos = start + 2;
                    self.push(TokenKind::Operator, start, self.pos);
                    continue;
                }
                match c {
                    '(' | '[' | '{' => self.depth += 1,
                    ')' | ']' | '}' => self.depth = self.depth.saturating_sub(1),
                    _ => {}
                }
                self.pos = start + 1;
                self.push(TokenKind::Punctuation, start, self.pos);
                continue;
            }
            let rest = &self.src[start..];
            let op = OPERATORS
                .iter()
                .filter(|op| rest.starts_with(**op))
                // `//` is floor division in Python only; elsewhere it began a comment above.
                .find(|op| self.python() || !op.starts_with("//"));
            if let Some(op) = op {
                self.pos = start + op.len();
                self.push(TokenKind::Operator, start, self.pos);
                continue;
            }
            self.pos = start + c.len_utf8();
            self.push(TokenKind::Punctuation, start, self.pos);
        }
        if self.python() {
            let end = self.src.len();
            while self.indents.len() > 1 {
                self.indents.pop();
                self.push(TokenKind::WhitespaceSignificant, end, end);
            }
        }
        self.out
    }
}

/// Lexes `source`, keeping comments as [`TokenKind::Comment`] tokens.
pub fn tokenize(source: &str, language: &Language) -> Vec<Token> {
    Lexer {
        src: source,
        bytes: source.as_bytes(),
        pos: 0,
        lang: language,
        out: Vec::new(),
        indents: vec![0],
        depth: 0,
        at_line_start: true,
    }
    .run()
}

/// Rebuilds a source text from tokens plus the gaps between their spans.
pub fn detokenize(source: &str, tokens: &[Token]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for t in tokens {
        out.push_str(&source[cursor..t.span.0]);
        out.push_str(&t.text);
        cursor = t.span.1;
    }
    out.push_str(&source[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str, lang: Language) -> Vec<(TokenKind, String)> {
        tokenize(src, &lang)
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn python_assignment() {
        assert_eq!(
            kinds("x = 1", Language::Python),
            vec![
                (Identifier, "x".into()),
                (Operator, "=".into()),
                (Number, "1".into())
            ]
        );
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("", &Language::Cpp).is_empty());
        assert!(tokenize("", &Language::Python).is_empty());
    }

    #[test]
    fn cpp_for_header_golden() {
        // Hand-lexed: for ( int i = 0 ; i < n ; i ++ ) { }
        let want: Vec<(TokenKind, &str)> = vec![
            (Keyword, "for"),
            (Punctuation, "("),
            (Keyword, "int"),
            (Identifier, "i"),
            (Operator, "="),
            (Number, "0"),
            (Punctuation, ";"),
            (Identifier, "i"),
            (Operator, "<"),
            (Identifier, "n"),
            (Punctuation, ";"),
            (Identifier, "i"),
            (Operator, "++"),
            (Punctuation, ")"),
            (Punctuation, "{"),
            (Punctuation, "}"),
        ];
        let got = kinds("for(int i=0;i<n;i++){}", Language::Cpp);
        let got: Vec<(TokenKind, &str)> = got.iter().map(|(k, t)| (*k, t.as_str())).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn comments_and_strings() {
        let toks = kinds("int a; // tail\n/* block */ s = \"x//y\";", Language::Cpp);
        assert!(toks.contains(&(Comment, "// tail".into())));
        assert!(toks.contains(&(Comment, "/* block */".into())));
        assert!(toks.contains(&(StringLit, "\"x//y\"".into())));
    }

    #[test]
    fn unterminated_string_recovers_at_eol() {
        let src = "s = \"abc\nx = 1";
        let toks = tokenize(src, &Language::Python);
        assert_eq!(toks[2].kind, StringLit);
        assert_eq!(toks[2].text, "\"abc");
        assert_eq!(toks[3].text, "x");
    }

    #[test]
    fn python_indent_dedent() {
        let src = "def f(a):\n    if a:\n        return 1\n    return 2\nx = f(3)\n";
        let toks = tokenize(src, &Language::Python);
        let indents = toks.iter().filter(|t| t.is_indent()).count();
        let dedents = toks.iter().filter(|t| t.is_dedent()).count();
        assert_eq!((indents, dedents), (2, 2));
        assert_eq!(detokenize(src, &toks), src);
        // Inside brackets, line breaks do not produce layout tokens.
        let toks = tokenize("x = (1,\n        2)\n", &Language::Python);
        assert!(toks.iter().all(|t| t.kind != WhitespaceSignificant));
    }

    #[test]
    fn python_prefixed_and_triple_strings() {
        let toks = kinds("a = f'{x}'\nb = \"\"\"doc\nmore\"\"\"\n", Language::Python);
        assert!(toks.contains(&(StringLit, "f'{x}'".into())));
        assert!(toks.contains(&(StringLit, "\"\"\"doc\nmore\"\"\"".into())));
    }

    #[test]
    fn spans_match_text() {
        let src = "#include <bits/stdc++.h>\nint main() { return x >>= 2; } // é ü\n";
        for t in tokenize(src, &Language::Cpp) {
            assert_eq!(&src[t.span.0..t.span.1], t.text);
        }
    }
}
