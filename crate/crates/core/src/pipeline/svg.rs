//! Static scatter plots as hand-written SVG.

use std::fmt::Write as _;

use crate::numfmt;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 40.0;
const LEGEND_WIDTH: f64 = 150.0;

/// Indexed by topic modulo 8.
pub const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

pub struct Point<'a> {
    pub x: f64,
    pub y: f64,
    pub group: usize,
    pub label: Option<&'a str>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt(x: f64) -> String {
    numfmt::g12((x * 100.0).round() / 100.0)
}

/// Affine map of the data range onto the plot area; a zero range maps to
/// the centre.
fn scale(values: impl Iterator<Item = f64> + Clone, lo: f64, hi: f64, flip: bool) -> impl Fn(f64) -> f64 {
    let min = values.clone().fold(f64::INFINITY, f64::min);
    let max = values.fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    move |v| {
        let t = if span > 0.0 && span.is_finite() { (v - min) / span } else { 0.5 };
        let t = if flip { 1.0 - t } else { t };
        lo + t * (hi - lo)
    }
}

/// One circle per point, coloured by group, with a legend naming each group.
/// `comment` lands in an XML comment at the top.
pub fn scatter(points: &[Point<'_>], legend: &[String], title: &str, comment: &str) -> String {
    let plot_right = WIDTH - MARGIN - LEGEND_WIDTH;
    let sx = scale(points.iter().map(|p| p.x), MARGIN, plot_right, false);
    let sy = scale(points.iter().map(|p| p.y), MARGIN + 20.0, HEIGHT - MARGIN, true);
    let mut out = String::new();
    writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>").unwrap();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = WIDTH,
        h = HEIGHT
    )
    .unwrap();
    if !comment.is_empty() {
        writeln!(out, "<!-- {} -->", comment.replace("--", "- -")).unwrap();
    }
    writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "<text x=\"{MARGIN}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
        escape(title)
    )
    .unwrap();
    writeln!(out, "<g id=\"points\">").unwrap();
    for p in points {
        let (x, y) = (sx(p.x), sy(p.y));
        writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\" fill-opacity=\"0.8\"/>",
            fmt(x),
            fmt(y),
            PALETTE[p.group % PALETTE.len()]
        )
        .unwrap();
        if let Some(label) = p.label {
            writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                fmt(x + 6.0),
                fmt(y - 4.0),
                escape(label)
            )
            .unwrap();
        }
    }
    writeln!(out, "</g>").unwrap();
    writeln!(out, "<g id=\"legend\">").unwrap();
    for (i, name) in legend.iter().enumerate() {
        let y = MARGIN + 20.0 + 20.0 * i as f64;
        writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>",
            fmt(plot_right + 20.0),
            fmt(y),
            PALETTE[i % PALETTE.len()]
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            fmt(plot_right + 38.0),
            fmt(y + 10.0),
            escape(name)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_circle_per_point() {
        let pts: Vec<Point> = (0..7)
            .map(|i| Point {
                x: i as f64,
                y: (i * i) as f64,
                group: i % 3,
                label: None,
            })
            .collect();
        let svg = scatter(&pts, &["topic 0".into(), "topic 1".into(), "topic 2".into()], "t", "a -- b");
        assert_eq!(svg.matches("<circle").count(), 7);
        assert!(svg.contains("width=\"800\" height=\"600\""));
        assert!(!svg[svg.find("<!--").unwrap() + 4..svg.find("-->").unwrap()].contains("--"));
    }

    #[test]
    fn degenerate_range_is_centred() {
        let pts = [Point { x: 1.0, y: 1.0, group: 9, label: Some("a<b") }];
        let svg = scatter(&pts, &[], "", "");
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains(PALETTE[1]));
    }
}
