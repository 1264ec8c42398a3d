//! Self-contained HTML token heatmaps.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::InterpretError;

/// Opacity of a token whose weights are spread evenly over components.
pub const MIN_OPACITY: f64 = 0.15;
pub const TOP_TOKENS: usize = 10;

/// Header fields; the seed is mandatory because NMF solutions are not unique.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub title: String,
    pub sample_id: String,
    pub seed: u64,
    pub fingerprint: String,
    pub layer_range: (usize, usize),
    pub relative_error: f64,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn hue(component: usize, k: usize) -> f64 {
    360.0 * component as f64 / k as f64
}

/// Dominant component (lowest index on ties) and its display opacity.
///
/// Opacity maps the row-normalized share of the dominant component from
/// `1/k` (no preference) to 1 (all weight) onto `[MIN_OPACITY, 1]`.
pub(crate) fn dominant(row: &[f64]) -> (usize, f64) {
    let k = row.len();
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    let total: f64 = row.iter().sum();
    if k > 1 && row.iter().all(|&v| v == row[best]) {
        return (best, MIN_OPACITY);
    }
    if total <= 0.0 || k == 1 {
        return (
            best,
            if k == 1 && total > 0.0 {
                1.0
            } else {
                MIN_OPACITY
            },
        );
    }
    let share = row[best] / total;
    let uniform = 1.0 / k as f64;
    let t = ((share - uniform) / (1.0 - uniform)).clamp(0.0, 1.0);
    (best, MIN_OPACITY + (1.0 - MIN_OPACITY) * t)
}

/// Renders tokens tinted by their dominant NMF component.
pub fn render_report(
    tokens: &[String],
    w: &Array2<f64>,
    meta: &ReportMeta,
) -> Result<String, InterpretError> {
    if w.nrows() != tokens.len() {
        return Err(InterpretError::ShapeMismatch {
            rows: w.nrows(),
            tokens: tokens.len(),
        });
    }
    let k = w.ncols();
    let mut html = String::new();
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>\n\
body{{font-family:sans-serif;margin:1.5em;display:flex;gap:2em}}\n\
main{{flex:3}} aside{{flex:1;font-size:0.9em}}\n\
.code{{font-family:monospace;line-height:2;word-wrap:break-word}}\n\
.tok{{padding:0.1em 0.25em;margin:0 0.1em;border-radius:3px}}\n\
.legend span{{display:inline-block;margin-right:0.8em}}\n\
.sw{{display:inline-block;width:0.9em;height:0.9em;margin-right:0.3em;vertical-align:middle}}\n\
table{{border-collapse:collapse}} td{{padding:0 0.4em}}\n\
</style>\n</head>\n<body>\n<main>\n<h1>{}</h1>\n",
        escape(&meta.title),
        escape(&meta.title)
    );
    let _ = writeln!(
        html,
        "<p class=\"meta\">sample: {} &middot; layers: {}:{} &middot; components: {k} &middot; nmf seed: {} &middot; relative error: {:.6} &middot; config fingerprint: {}</p>",
        escape(&meta.sample_id),
        meta.layer_range.0,
        meta.layer_range.1,
        meta.seed,
        meta.relative_error,
        escape(&meta.fingerprint)
    );
    html.push_str("<div class=\"legend\">");
    for c in 0..k {
        let _ = write!(
            html,
            "<span><i class=\"sw\" style=\"background:hsl({:.1},70%,50%)\"></i>component {}</span>",
            hue(c, k),
            c + 1
        );
    }
    html.push_str("</div>\n<div class=\"code\">\n");
    for (t, lexeme) in tokens.iter().enumerate() {
        let row: Vec<f64> = w.row(t).to_vec();
        let (c, alpha) = dominant(&row);
        let _ = writeln!(
            html,
            "<span class=\"tok\" data-c=\"{}\" title=\"component {}\" style=\"background:hsla({:.1},70%,50%,{:.3})\">{}</span>",
            c + 1,
            c + 1,
            hue(c, k),
            alpha,
            escape(lexeme)
        );
    }
    html.push_str("</div>\n</main>\n<aside>\n<h2>Top tokens</h2>\n");
    for c in 0..k {
        let mut order: Vec<usize> = (0..tokens.len()).collect();
        order.sort_by(|&a, &b| w[[b, c]].total_cmp(&w[[a, c]]).then(a.cmp(&b)));
        let _ = writeln!(
            html,
            "<h3><i class=\"sw\" style=\"background:hsl({:.1},70%,50%)\"></i>component {}</h3>\n<table>",
            hue(c, k),
            c + 1
        );
        for &t in order.iter().take(TOP_TOKENS) {
            let _ = writeln!(
                html,
                "<tr><td>{}</td><td>#{}</td><td>{:.4}</td></tr>",
                escape(&tokens[t]),
                t,
                w[[t, c]]
            );
        }
        html.push_str("</table>\n");
    }
    html.push_str("</aside>\n</body>\n</html>\n");
    Ok(html)
}

pub fn write_report(
    path: impl AsRef<Path>,
    tokens: &[String],
    w: &Array2<f64>,
    meta: &ReportMeta,
) -> Result<(), InterpretError> {
    let html = render_report(tokens, w, meta)?;
    let path = path.as_ref();
    std::fs::write(path, html).map_err(|source| InterpretError::Io {
        path: path.display().to_string(),
        source,
    })
}
