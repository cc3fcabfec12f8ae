//! Static SVG output for eigenfunctions and multiplicity histograms.

use std::fmt::Write as _;

use laakso::compare::Histogram;
use laakso::{Error, LaaksoGraph};

use crate::config::Coloring;

#[derive(Debug, Clone, Copy)]
pub struct PlotOptions {
    pub width: u32,
    pub height: u32,
    pub coloring: Coloring,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self { width: 960, height: 540, coloring: Coloring::Value }
    }
}

const MARGIN: f64 = 40.0;
const TITLE_HEIGHT: f64 = 30.0;
const LEVEL_COLORS: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Blue for negative, white at zero, red for positive; `t` in `[-1, 1]`.
fn diverging(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Eigenfunction on the sheets of `F_n`. Each sheet word is a horizontal
/// track; a glued vertex sits between the tracks of its two words. Markers
/// are shifted vertically by the eigenvector value (in the raw basis, after
/// removing the degree-weighted mean, which is zero for every mode except
/// the constant one) and colored by it.
pub fn eigenfunction_svg(g: &LaaksoGraph, values: &[f64], lambda: f64, opts: &PlotOptions) -> Result<String, Error> {
    let dim = g.vertex_count();
    if values.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: values.len() });
    }
    let (w, h) = (opts.width as f64, opts.height as f64);
    let tracks = 1usize << g.n();
    let plot_h = h - 2.0 * MARGIN - TITLE_HEIGHT;
    let track_h = plot_h / tracks as f64;
    let track_y = |word: u64| MARGIN + TITLE_HEIGHT + (word as f64 + 0.5) * track_h;

    let weight: f64 = (0..dim).map(|u| g.degree(u) as f64).sum();
    let mean = (0..dim).map(|u| g.degree(u) as f64 * values[u]).sum::<f64>() / weight;
    let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let peak = centred.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // below this relative size the mode is treated as flat
    let scale = if peak > 1e-12 * values.iter().fold(0.0f64, |m, v| m.max(v.abs())) { 1.0 / peak } else { 0.0 };
    let amplitude = 0.4 * track_h;

    let pos: Vec<(f64, f64)> = (0..dim)
        .map(|u| {
            let words = g.sheet_words(u);
            let base = words.iter().map(|&s| track_y(s)).sum::<f64>() / words.len() as f64;
            let x = MARGIN + g.x(u) * (w - 2.0 * MARGIN);
            (x, base - amplitude * centred[u] * scale)
        })
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let title = format!("λ = {lambda:.2} (j = {:?}, n = {})", g.j(), g.n());
    let _ = writeln!(out, "<title>{}</title>", escape(&title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        w / 2.0,
        MARGIN / 2.0 + 10.0,
        escape(&title)
    );
    let _ = writeln!(out, r##"<g class="tracks" stroke="#dddddd" stroke-width="1">"##);
    for word in 0..tracks as u64 {
        let y = track_y(word);
        let _ = writeln!(out, r#"<line x1="{MARGIN:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#, w - MARGIN);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g class="edges" stroke="#555555" stroke-width="1">"##);
    for e in g.edges() {
        let (a, b) = (pos[e.u], pos[e.v]);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, a.0, a.1, b.0, b.1);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g class="vertices" stroke="black" stroke-width="0.5">"#);
    let radius = (track_h / 6.0).clamp(1.0, 5.0);
    for (u, &(x, y)) in pos.iter().enumerate() {
        let fill = match opts.coloring {
            Coloring::Value => diverging(centred[u] * scale),
            Coloring::Level => LEVEL_COLORS[g.vertices()[u].level.min(LEVEL_COLORS.len() - 1)].to_string(),
        };
        let _ = writeln!(
            out,
            r#"<circle class="vertex" data-id="{u}" data-value="{}" cx="{x:.2}" cy="{y:.2}" r="{radius:.2}" fill="{fill}"/>"#,
            laakso::fmt::sig17(values[u])
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}

/// Bar chart with one bar per multiplicity; bar height is the number of
/// clusters of that multiplicity.
pub fn histogram_svg(hist: &Histogram, title: &str, opts: &PlotOptions) -> Result<String, Error> {
    if hist.is_empty() {
        return Err(Error::EmptyInput("histogram has no bins".into()));
    }
    let (w, h) = (opts.width as f64, opts.height as f64);
    let bins: Vec<(usize, usize)> = hist.bins.iter().map(|(&m, &c)| (m, c)).collect();
    let tallest = bins.iter().map(|b| b.1).max().unwrap_or(1) as f64;
    let plot_top = MARGIN + TITLE_HEIGHT;
    let plot_bottom = h - MARGIN;
    let slot = (w - 2.0 * MARGIN) / bins.len() as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        w / 2.0,
        MARGIN / 2.0 + 10.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN:.2}" y1="{plot_bottom:.2}" x2="{:.2}" y2="{plot_bottom:.2}" stroke="black"/>"#,
        w - MARGIN
    );
    for (i, (mult, count)) in bins.iter().enumerate() {
        let bar_h = (plot_bottom - plot_top) * *count as f64 / tallest;
        let x = MARGIN + i as f64 * slot + 0.1 * slot;
        let y = plot_bottom - bar_h;
        let _ = writeln!(
            out,
            r##"<rect class="bar" data-multiplicity="{mult}" data-count="{count}" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{bar_h:.2}" fill="#4c72b0"/>"##,
            0.8 * slot
        );
        let _ = writeln!(
            out,
            r#"<text class="label" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{mult}</text>"#,
            x + 0.4 * slot,
            plot_bottom + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text class="count" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{count}</text>"#,
            x + 0.4 * slot,
            y - 4.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use laakso::{build_graph, JSequence};
    use std::collections::BTreeMap;

    #[test]
    fn diverging_endpoints() {
        assert_eq!(diverging(0.0), "#ffffff");
        assert_eq!(diverging(1.0), "#ff0000");
        assert_eq!(diverging(-1.0), "#0000ff");
    }

    #[test]
    fn wrong_length_is_rejected() {
        let g = build_graph(&JSequence::constant(2).unwrap(), 1).unwrap();
        let err = eigenfunction_svg(&g, &[1.0; 3], 0.0, &PlotOptions::default()).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 5, got: 3 });
    }

    #[test]
    fn empty_histogram_is_rejected() {
        let h = Histogram { bins: BTreeMap::new() };
        assert!(histogram_svg(&h, "t", &PlotOptions::default()).is_err());
    }

    #[test]
    fn title_is_escaped() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
