//! Minimal SVG writers. No timestamps or random ids, so output is a pure
//! function of the input data.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, xlabel: &str, ylabel: &str) {
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 20.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    /// Fill color index.
    pub fill: usize,
    /// Outline color index (true label), if known.
    pub stroke: Option<usize>,
}

pub fn scatter(title: &str, xlabel: &str, ylabel: &str, points: &[ScatterPoint], legend: &[(usize, String)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, xlabel, ylabel);
    let (xl, xh) = span(points.iter().map(|p| p.x));
    let (yl, yh) = span(points.iter().map(|p| p.y));
    let px = |x: f64| MARGIN + (x - xl) / (xh - xl) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - yl) / (yh - yl) * (H - 2.0 * MARGIN);
    for (v, x, anchor) in [(xl, px(xl), "start"), (xh, px(xh), "end")] {
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, H - MARGIN + 15.0);
    }
    for (v, y) in [(yl, py(yl)), (yh, py(yh))] {
        let _ = writeln!(out, r#"<text x="{}" y="{y:.1}" text-anchor="end">{v:.3}</text>"#, MARGIN - 4.0);
    }
    for p in points {
        let stroke = match p.stroke {
            Some(s) => format!(r#" stroke="{}" stroke-width="1.5""#, color(s)),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.8"{stroke}/>"#,
            px(p.x),
            py(p.y),
            color(p.fill)
        );
    }
    for (row, (c, text)) in legend.iter().enumerate() {
        let y = MARGIN + 14.0 * row as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            W - MARGIN - 150.0,
            y - 9.0,
            color(*c),
            W - MARGIN - 135.0,
            y,
            escape(text)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub struct Bar {
    pub group: String,
    pub series: usize,
    pub series_name: String,
    pub value: f64,
}

/// Grouped bars on a [0, 1] axis with a dashed horizontal reference line.
pub fn bars(title: &str, xlabel: &str, ylabel: &str, groups: &[String], data: &[Bar], reference: Option<f64>) -> String {
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, xlabel, ylabel);
    let series = data.iter().map(|b| b.series + 1).max().unwrap_or(1);
    let plot_w = W - 2.0 * MARGIN;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series as f64;
    let py = |v: f64| H - MARGIN - v.clamp(0.0, 1.0) * (H - 2.0 * MARGIN);
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{tick:.2}</text>"#, MARGIN - 4.0, py(tick) + 4.0);
    }
    for (g, name) in groups.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN + group_w * (g as f64 + 0.5),
            H - MARGIN + 15.0,
            escape(name)
        );
    }
    for b in data {
        let Some(g) = groups.iter().position(|n| *n == b.group) else {
            continue;
        };
        let x = MARGIN + group_w * g as f64 + group_w * 0.1 + bar_w * b.series as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}"/>"#,
            py(b.value),
            H - MARGIN - py(b.value),
            color(b.series)
        );
    }
    if let Some(r) = reference {
        let _ = writeln!(
            out,
            r#"<line x1="{MARGIN}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
            W - MARGIN,
            py(r),
            py(r)
        );
    }
    let mut names: Vec<(usize, &str)> = data.iter().map(|b| (b.series, b.series_name.as_str())).collect();
    names.sort();
    names.dedup();
    for (row, (s, name)) in names.iter().enumerate() {
        let y = MARGIN + 14.0 * row as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            MARGIN + 10.0,
            y - 9.0,
            color(*s),
            MARGIN + 25.0,
            y,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
