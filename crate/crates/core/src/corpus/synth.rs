//! Template programs with known complexity classes.
//!
//! Every sample is one of a handful of loop-structure templates rendered in
//! C++, Python or Java, with seeded identifier renaming, shuffled
//! constant-time statements inside bodies and optional comments, so samples
//! within a class are never byte-identical.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CodeSample, ComplexityClass, Corpus, CorpusError, Language};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Samples per class and per language.
    pub per_class_count: usize,
    pub languages: Vec<Language>,
    pub seed: u64,
}

const FN_NAMES: &[&str] = &[
    "solve",
    "compute",
    "process",
    "calc",
    "evaluate",
    "findValue",
    "getResult",
    "countPairs",
    "analyze",
    "transform",
    "scan",
    "aggregate",
    "reduceAll",
    "measure",
    "walk",
    "tally",
];
const ARR_NAMES: &[&str] = &[
    "arr", "a", "nums", "data", "v", "values", "xs", "items", "vec", "buf",
];
const N_NAMES: &[&str] = &["n", "len", "size", "m", "cnt", "total_n", "limit", "sz"];
const ACC_NAMES: &[&str] = &[
    "sum", "total", "acc", "res", "result", "ans", "best", "score", "val", "out",
];
const LOOP_VARS: &[&str] = &["i", "j", "k", "p", "q", "r", "x", "y", "z", "t", "u", "w"];
const CLASS_NAMES: &[&str] = &["Main", "Solution", "GFG", "Program", "Solver"];

/// Names bound for one rendered program.
struct Names {
    func: String,
    arr: String,
    n: String,
    acc: String,
    vars: Vec<String>,
    class: String,
}

impl Names {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut vars: Vec<String> = LOOP_VARS.iter().map(|s| s.to_string()).collect();
        vars.shuffle(rng);
        Names {
            func: FN_NAMES.choose(rng).unwrap().to_string(),
            arr: ARR_NAMES.choose(rng).unwrap().to_string(),
            n: N_NAMES.choose(rng).unwrap().to_string(),
            acc: ACC_NAMES.choose(rng).unwrap().to_string(),
            vars,
            class: CLASS_NAMES.choose(rng).unwrap().to_string(),
        }
    }
}

/// Language-neutral statement tree.
#[derive(Debug, Clone)]
enum Stmt {
    /// `acc <op>= expr` style update, rendered identically modulo `;`.
    Update(String),
    /// `if (cond) acc <op>= expr`
    IfUpdate { cond: String, update: String },
    /// for v in [start, n)
    Counted {
        var: String,
        start: String,
        body: Vec<Stmt>,
    },
    /// v = n; while v > 0: ...; v /= 2
    Halving { var: String, body: Vec<Stmt> },
    /// v = 1; while v < n: ...; v *= 2
    Doubling { var: String, body: Vec<Stmt> },
    /// lo/hi binary search over the array
    BinarySearch { lo: String, hi: String, mid: String },
    /// mask over all 2^n subsets with an inner bit loop
    Subsets { mask: String, bit: String },
}

fn simple_update(rng: &mut ChaCha8Rng, names: &Names, var: Option<&str>) -> Stmt {
    let acc = &names.acc;
    let n = &names.n;
    let arr = &names.arr;
    let v = var.unwrap_or(n.as_str());
    let c: u32 = rng.random_range(2..10);
    let m: u32 = [7u32, 13, 97, 101, 1000][rng.random_range(0..5)];
    match rng.random_range(0..7) {
        0 => Stmt::Update(format!("{acc} += {v} * {c}")),
        1 => Stmt::Update(format!("{acc} = ({acc} + {v}) % {m}")),
        2 => Stmt::Update(format!("{acc} ^= {v} + {c}")),
        3 => Stmt::Update(format!("{acc} += {arr}[{v} % {n}]")),
        4 => Stmt::Update(format!("{acc} -= {c}")),
        5 => Stmt::IfUpdate {
            cond: format!("{v} % {c} == 0"),
            update: format!("{acc} += 1"),
        },
        _ => Stmt::IfUpdate {
            cond: format!("{arr}[{v} % {n}] > {acc}"),
            update: format!("{acc} = {arr}[{v} % {n}]"),
        },
    }
}

fn updates(
    rng: &mut ChaCha8Rng,
    names: &Names,
    var: Option<&str>,
    lo: usize,
    hi: usize,
) -> Vec<Stmt> {
    let count = rng.random_range(lo..=hi);
    let mut out: Vec<Stmt> = (0..count).map(|_| simple_update(rng, names, var)).collect();
    out.shuffle(rng);
    out
}

enum Template {
    Loops(Vec<Stmt>),
    /// Include/exclude recursion over the array.
    RecursiveSubsets,
}

fn template_for(class: ComplexityClass, rng: &mut ChaCha8Rng, names: &Names) -> Template {
    let v = |i: usize| names.vars[i].clone();
    let core = match class {
        ComplexityClass::Constant => updates(rng, names, None, 2, 4),
        ComplexityClass::LogN => {
            if rng.random_bool(0.5) {
                vec![Stmt::Halving {
                    var: v(0),
                    body: updates(rng, names, Some(&names.vars[0]), 1, 2),
                }]
            } else {
                vec![Stmt::BinarySearch {
                    lo: v(0),
                    hi: v(1),
                    mid: v(2),
                }]
            }
        }
        ComplexityClass::Linear => vec![Stmt::Counted {
            var: v(0),
            start: "0".into(),
            body: updates(rng, names, Some(&names.vars[0]), 1, 3),
        }],
        ComplexityClass::NLogN => {
            let inner_body = updates(rng, names, Some(&names.vars[1]), 1, 2);
            let inner = if rng.random_bool(0.5) {
                Stmt::Doubling {
                    var: v(1),
                    body: inner_body,
                }
            } else {
                Stmt::Halving {
                    var: v(1),
                    body: inner_body,
                }
            };
            vec![Stmt::Counted {
                var: v(0),
                start: "0".into(),
                body: vec![inner],
            }]
        }
        ComplexityClass::Quadratic | ComplexityClass::Cubic => {
            let depth = if class == ComplexityClass::Quadratic {
                2
            } else {
                3
            };
            let mut body = updates(rng, names, Some(&names.vars[depth - 1]), 1, 2);
            for d in (0..depth).rev() {
                let start = if d > 0 && rng.random_bool(0.4) {
                    format!("{} + 1", names.vars[d - 1])
                } else {
                    "0".to_string()
                };
                body = vec![Stmt::Counted {
                    var: v(d),
                    start,
                    body,
                }];
            }
            body
        }
        ComplexityClass::NpHard => {
            if rng.random_bool(0.5) {
                return Template::RecursiveSubsets;
            }
            vec![Stmt::Subsets {
                mask: v(0),
                bit: v(1),
            }]
        }
    };
    // Straight-line noise around the main structure.
    let mut stmts = core;
    if class != ComplexityClass::Constant {
        let extra = updates(rng, names, None, 0, 2);
        for s in extra {
            let pos = if rng.random_bool(0.5) { 0 } else { stmts.len() };
            stmts.insert(pos, s);
        }
    }
    Template::Loops(stmts)
}

struct Writer {
    lines: Vec<String>,
    lang: Language,
}

impl Writer {
    fn line(&mut self, depth: usize, text: impl AsRef<str>) {
        self.lines
            .push(format!("{}{}", "    ".repeat(depth), text.as_ref()));
    }

    fn term(&self) -> &'static str {
        if self.lang == Language::Python {
            ""
        } else {
            ";"
        }
    }

    fn stmt(&mut self, depth: usize, stmt: &Stmt, names: &Names) {
        let py = self.lang == Language::Python;
        let n = &names.n;
        let t = self.term();
        match stmt {
            Stmt::Update(u) => self.line(depth, format!("{u}{t}")),
            Stmt::IfUpdate { cond, update } => {
                if py {
                    self.line(depth, format!("if {cond}:"));
                    self.line(depth + 1, update);
                } else {
                    self.line(depth, format!("if ({cond}) {{"));
                    self.line(depth + 1, format!("{update};"));
                    self.line(depth, "}");
                }
            }
            Stmt::Counted { var, start, body } => {
                if py {
                    if start == "0" {
                        self.line(depth, format!("for {var} in range({n}):"));
                    } else {
                        self.line(depth, format!("for {var} in range({start}, {n}):"));
                    }
                } else {
                    self.line(
                        depth,
                        format!("for (int {var} = {start}; {var} < {n}; {var}++) {{"),
                    );
                }
                self.block(depth, body, names);
            }
            Stmt::Halving { var, body } => {
                if py {
                    self.line(depth, format!("{var} = {n}"));
                    self.line(depth, format!("while {var} > 0:"));
                    self.body_only(depth + 1, body, names);
                    self.line(depth + 1, format!("{var} //= 2"));
                } else {
                    self.line(
                        depth,
                        format!("for (int {var} = {n}; {var} > 0; {var} /= 2) {{"),
                    );
                    self.block(depth, body, names);
                }
            }
            Stmt::Doubling { var, body } => {
                if py {
                    self.line(depth, format!("{var} = 1"));
                    self.line(depth, format!("while {var} < {n}:"));
                    self.body_only(depth + 1, body, names);
                    self.line(depth + 1, format!("{var} *= 2"));
                } else {
                    self.line(
                        depth,
                        format!("for (int {var} = 1; {var} < {n}; {var} *= 2) {{"),
                    );
                    self.block(depth, body, names);
                }
            }
            Stmt::BinarySearch { lo, hi, mid } => {
                let arr = &names.arr;
                let acc = &names.acc;
                if py {
                    self.line(depth, format!("{lo}, {hi} = 0, {n} - 1"));
                    self.line(depth, format!("while {lo} <= {hi}:"));
                    self.line(depth + 1, format!("{mid} = ({lo} + {hi}) // 2"));
                    self.line(depth + 1, format!("if {arr}[{mid}] < {acc}:"));
                    self.line(depth + 2, format!("{lo} = {mid} + 1"));
                    self.line(depth + 1, "else:");
                    self.line(depth + 2, format!("{hi} = {mid} - 1"));
                    self.line(depth, format!("{acc} = {lo}"));
                } else {
                    self.line(depth, format!("int {lo} = 0, {hi} = {n} - 1;"));
                    self.line(depth, format!("while ({lo} <= {hi}) {{"));
                    self.line(depth + 1, format!("int {mid} = {lo} + ({hi} - {lo}) / 2;"));
                    self.line(depth + 1, format!("if ({arr}[{mid}] < {acc}) {{"));
                    self.line(depth + 2, format!("{lo} = {mid} + 1;"));
                    self.line(depth + 1, "} else {");
                    self.line(depth + 2, format!("{hi} = {mid} - 1;"));
                    self.line(depth + 1, "}");
                    self.line(depth, "}");
                    self.line(depth, format!("{acc} = {lo};"));
                }
            }
            Stmt::Subsets { mask, bit } => {
                let arr = &names.arr;
                let acc = &names.acc;
                if py {
                    self.line(depth, format!("for {mask} in range(1 << {n}):"));
                    self.line(depth + 1, format!("for {bit} in range({n}):"));
                    self.line(depth + 2, format!("if {mask} & (1 << {bit}):"));
                    self.line(depth + 3, format!("{acc} += {arr}[{bit}]"));
                } else {
                    self.line(
                        depth,
                        format!("for (int {mask} = 0; {mask} < (1 << {n}); {mask}++) {{"),
                    );
                    self.line(
                        depth + 1,
                        format!("for (int {bit} = 0; {bit} < {n}; {bit}++) {{"),
                    );
                    self.line(depth + 2, format!("if ({mask} & (1 << {bit})) {{"));
                    self.line(depth + 3, format!("{acc} += {arr}[{bit}];"));
                    self.line(depth + 2, "}");
                    self.line(depth + 1, "}");
                    self.line(depth, "}");
                }
            }
        }
    }

    fn block(&mut self, depth: usize, body: &[Stmt], names: &Names) {
        self.body_only(depth + 1, body, names);
        if self.lang.uses_braces() {
            self.line(depth, "}");
        }
    }

    fn body_only(&mut self, depth: usize, body: &[Stmt], names: &Names) {
        for s in body {
            self.stmt(depth, s, names);
        }
    }
}

fn comment(lang: &Language, text: &str) -> String {
    match lang {
        Language::Python => format!("# {text}"),
        _ => format!("// {text}"),
    }
}

/// Renders the worker function (without driver code) at `depth`.
fn render_function(
    w: &mut Writer,
    depth: usize,
    template: &Template,
    names: &Names,
    java_static: bool,
) {
    let (f, arr, n, acc) = (&names.func, &names.arr, &names.n, &names.acc);
    let idx = &names.vars[0];
    match (&w.lang, template) {
        (Language::Python, Template::Loops(stmts)) => {
            w.line(depth, format!("def {f}({arr}, {n}):"));
            w.line(depth + 1, format!("{acc} = 0"));
            w.body_only(depth + 1, stmts, names);
            w.line(depth + 1, format!("return {acc}"));
        }
        (Language::Python, Template::RecursiveSubsets) => {
            w.line(depth, format!("def {f}({arr}, {n}, {idx}, {acc}):"));
            w.line(depth + 1, format!("if {idx} == {n}:"));
            w.line(depth + 2, format!("return {acc} % 1000"));
            w.line(
                depth + 1,
                format!("return {f}({arr}, {n}, {idx} + 1, {acc} + {arr}[{idx}]) + {f}({arr}, {n}, {idx} + 1, {acc})"),
            );
        }
        (lang, template) => {
            let arr_ty = if *lang == Language::Java {
                "int[]"
            } else {
                "vector<int>&"
            };
            let prefix = if java_static { "static " } else { "" };
            match template {
                Template::Loops(stmts) => {
                    w.line(
                        depth,
                        format!("{prefix}int {f}({arr_ty} {arr}, int {n}) {{"),
                    );
                    w.line(depth + 1, format!("int {acc} = 0;"));
                    w.body_only(depth + 1, stmts, names);
                    w.line(depth + 1, format!("return {acc};"));
                    w.line(depth, "}");
                }
                Template::RecursiveSubsets => {
                    w.line(
                        depth,
                        format!(
                            "{prefix}int {f}({arr_ty} {arr}, int {n}, int {idx}, int {acc}) {{"
                        ),
                    );
                    w.line(depth + 1, format!("if ({idx} == {n}) {{"));
                    w.line(depth + 2, format!("return {acc} % 1000;"));
                    w.line(depth + 1, "}");
                    w.line(
                        depth + 1,
                        format!("return {f}({arr}, {n}, {idx} + 1, {acc} + {arr}[{idx}]) + {f}({arr}, {n}, {idx} + 1, {acc});"),
                    );
                    w.line(depth, "}");
                }
            }
        }
    }
}

fn call_expr(template: &Template, names: &Names) -> String {
    match template {
        Template::Loops(_) => format!("{}({}, {})", names.func, names.arr, names.n),
        Template::RecursiveSubsets => format!("{}({}, {}, 0, 0)", names.func, names.arr, names.n),
    }
}

fn render(lang: &Language, class: ComplexityClass, rng: &mut ChaCha8Rng) -> String {
    let names = Names::draw(rng);
    let template = template_for(class, rng, &names);
    let size: u32 = rng.random_range(5..100);
    let fill: u32 = rng.random_range(1..10);
    let with_comments = rng.random_bool(0.5);
    let mut w = Writer {
        lines: Vec::new(),
        lang: lang.clone(),
    };
    let (n, arr) = (&names.n, &names.arr);
    let call = call_expr(&template, &names);
    match lang {
        Language::Cpp => {
            w.line(0, "#include <bits/stdc++.h>");
            w.line(0, "using namespace std;");
            w.line(0, "");
            if with_comments {
                w.line(0, comment(lang, "Function to compute the answer"));
            }
            render_function(&mut w, 0, &template, &names, false);
            w.line(0, "");
            if with_comments {
                w.line(0, comment(lang, "Driver code"));
            }
            w.line(0, "int main() {");
            w.line(1, format!("int {n} = {size};"));
            w.line(1, format!("vector<int> {arr}({n}, {fill});"));
            w.line(1, format!("cout << {call} << endl;"));
            w.line(1, "return 0;");
            w.line(0, "}");
        }
        Language::Java => {
            w.line(0, "import java.util.*;");
            w.line(0, "");
            w.line(0, format!("public class {} {{", names.class));
            if with_comments {
                w.line(1, comment(lang, "Function to compute the answer"));
            }
            render_function(&mut w, 1, &template, &names, true);
            w.line(0, "");
            if with_comments {
                w.line(1, comment(lang, "Driver code"));
            }
            w.line(1, "public static void main(String[] args) {");
            w.line(2, format!("int {n} = {size};"));
            w.line(2, format!("int[] {arr} = new int[{n}];"));
            w.line(2, format!("Arrays.fill({arr}, {fill});"));
            w.line(2, format!("System.out.println({call});"));
            w.line(1, "}");
            w.line(0, "}");
        }
        Language::Python => {
            if with_comments {
                w.line(0, comment(lang, "Function to compute the answer"));
            }
            render_function(&mut w, 0, &template, &names, false);
            w.line(0, "");
            w.line(0, "");
            if with_comments {
                w.line(0, comment(lang, "Driver code"));
            }
            w.line(0, "if __name__ == \"__main__\":");
            w.line(1, format!("{n} = {size}"));
            w.line(1, format!("{arr} = [{fill}] * {n}"));
            w.line(1, format!("print({call})"));
        }
        Language::Other(_) => unreachable!("checked by caller"),
    }
    let mut out = w.lines.join("\n");
    out.push('\n');
    out
}

/// Space label implied by each template: scalar accumulators only, except
/// the recursive subset enumeration whose call stack is linear.
fn space_label(source: &str, class: ComplexityClass, func: &str) -> ComplexityClass {
    let recursive = source.matches(&format!("{func}(")).count() > 2;
    if class == ComplexityClass::NpHard && recursive {
        ComplexityClass::Linear
    } else {
        ComplexityClass::Constant
    }
}

fn sample_seed(seed: u64, lang: usize, class: usize, i: usize) -> u64 {
    let mut h = seed ^ 0x5851_F42D_4C95_7F2D;
    for part in [lang as u64, class as u64, i as u64] {
        h = (h ^ part)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(29);
    }
    h
}

/// Generates `per_class_count` samples per time class for every language.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Corpus, CorpusError> {
    if spec.per_class_count == 0 {
        return Err(CorpusError::BadCount);
    }
    let mut samples = Vec::new();
    for (li, lang) in spec.languages.iter().enumerate() {
        if !lang.is_supported() {
            return Err(CorpusError::UnsupportedLanguage(lang.tag().to_string()));
        }
        for (ci, &class) in ComplexityClass::all().iter().enumerate() {
            for i in 0..spec.per_class_count {
                let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(spec.seed, li, ci, i));
                let mut probe = rng.clone();
                let func = Names::draw(&mut probe).func;
                let source = render(lang, class, &mut rng);
                let space = space_label(&source, class, &func);
                samples.push(
                    CodeSample::new(
                        format!("syn-{}-{}-{i:04}", lang.tag(), class.name()),
                        lang.clone(),
                        source,
                    )
                    .with_time(class)
                    .with_space(space),
                );
            }
        }
    }
    Corpus::new(samples)
}

/// Inserts one never-called helper function ahead of the worker in every
/// sample. Each helper holds loop nests copied from random templates and is
/// at least `min_lines` lines long, so that under a tight sequence budget it
/// pushes the informative code past truncation.
pub fn inject_dead_helpers(corpus: &Corpus, min_lines: usize, seed: u64) -> Corpus {
    corpus.map_sources(|s| {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, 99, 0, fxhash(&s.id)));
        let mut names = Names::draw(&mut rng);
        names.func = format!("unusedHelper{}", rng.random_range(100..1000));
        let mut body = Vec::new();
        let mut w = Writer {
            lines: Vec::new(),
            lang: s.language.clone(),
        };
        while w.lines.len() < min_lines {
            let class = *ComplexityClass::all().choose(&mut rng).unwrap();
            if let Template::Loops(stmts) = template_for(class, &mut rng, &names) {
                body.extend(stmts);
            }
            w.lines.clear();
            render_function(&mut w, 0, &Template::Loops(body.clone()), &names, false);
        }
        let depth = if s.language == Language::Java { 1 } else { 0 };
        let mut helper = Writer {
            lines: Vec::new(),
            lang: s.language.clone(),
        };
        render_function(
            &mut helper,
            depth,
            &Template::Loops(body),
            &names,
            s.language == Language::Java,
        );
        let helper_text = helper.lines.join("\n");
        insert_helper(&s.source, &s.language, &helper_text)
    })
}

fn fxhash(s: &str) -> usize {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x1000_0000_01b3)
    }) as usize
}

fn insert_helper(source: &str, lang: &Language, helper: &str) -> String {
    let lines: Vec<&str> = source.lines().collect();
    let at = match lang {
        // After the include and using lines.
        Language::Cpp => lines
            .iter()
            .position(|l| l.trim().is_empty())
            .map_or(0, |p| p + 1),
        // Right after the class header.
        Language::Java => lines
            .iter()
            .position(|l| l.contains(" class "))
            .map_or(0, |p| p + 1),
        _ => 0,
    };
    let mut out: Vec<String> = lines[..at].iter().map(|s| s.to_string()).collect();
    out.push(helper.to_string());
    out.push(String::new());
    if *lang == Language::Python {
        out.push(String::new());
    }
    out.extend(lines[at..].iter().map(|s| s.to_string()));
    let mut text = out.join("\n");
    text.push('\n');
    text
}
