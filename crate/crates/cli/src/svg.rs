//! Minimal self-contained SVG line plots.

use std::fmt::Write;

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 42.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub series: Vec<Series>,
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() * 1e-6 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64, span: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if span < 1e-3 || v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

fn panel(out: &mut String, p: &Panel, ox: f64, oy: f64) {
    let (w, h) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"##,
        x0 + w / 2.0,
        oy + 20.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##
    );
    let xr = range(p.series.iter().flat_map(|s| s.x.iter().copied()));
    let yr = range(p.series.iter().flat_map(|s| s.y.iter().copied()));
    let (Some((xlo, xhi)), Some((ylo, yhi))) = (xr, yr) else {
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">no finite data</text>"##,
            x0 + w / 2.0,
            y0 + h / 2.0
        );
        return;
    };
    let px = |x: f64| x0 + (x - xlo) / (xhi - xlo) * w;
    let py = |y: f64| y0 + h - (y - ylo) / (yhi - ylo) * h;
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (xlo + f * (xhi - xlo), ylo + f * (yhi - ylo));
        let _ = writeln!(
            out,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="#444"/><text x="{0:.1}" y="{3:.1}" font-size="10" text-anchor="middle">{4}</text>"##,
            px(xv),
            y0 + h,
            y0 + h + 4.0,
            y0 + h + 16.0,
            tick_label(xv, xhi - xlo)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="#444"/><text x="{3:.1}" y="{4:.1}" font-size="10" text-anchor="end">{5}</text>"##,
            x0 - 4.0,
            py(yv),
            x0,
            x0 - 6.0,
            py(yv) + 3.0,
            tick_label(yv, yhi - ylo)
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"##,
        x0 + w / 2.0,
        y0 + h + 34.0,
        escape(&p.x_label)
    );
    for (k, s) in p.series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        // Non-finite points break the line into segments.
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (&x, &y) in s.x.iter().zip(&s.y) {
            if x.is_finite() && y.is_finite() {
                segments.last_mut().expect("never empty").push((px(x), py(y)));
            } else if !segments.last().expect("never empty").is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|seg| !seg.is_empty()) {
            let points: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                out,
                r##"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"##,
                points.join(" ")
            );
        }
        let ly = y0 + 14.0 + 14.0 * k as f64;
        let _ = writeln!(
            out,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="{colour}" stroke-width="2"/><text x="{3:.1}" y="{4:.1}" font-size="11">{5}</text>"##,
            x0 + w - 150.0,
            ly,
            x0 + w - 130.0,
            x0 + w - 125.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
}

/// Lays the panels out on a grid with `columns` columns.
pub fn render(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let (width, height) = (PANEL_W * columns.min(panels.len().max(1)) as f64, PANEL_H * rows as f64);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (i, p) in panels.iter().enumerate() {
        let (col, row) = (i % columns, i / columns);
        panel(&mut out, p, col as f64 * PANEL_W, row as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Panel {
        Panel {
            title: "r <s>".into(),
            x_label: "s".into(),
            series: vec![Series { label: "a&b".into(), x: vec![0.0, 1.0, 2.0], y: vec![1.0, f64::INFINITY, 3.0] }],
        }
    }

    #[test]
    fn output_is_self_contained_and_escaped() {
        let svg = render(&[sample()], 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("href"));
        assert!(svg.contains("r &lt;s&gt;") && svg.contains("a&amp;b"));
        // The infinite point splits the line.
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn constant_and_empty_data_render() {
        let flat = Panel {
            title: "flat".into(),
            x_label: "t".into(),
            series: vec![Series { label: "c".into(), x: vec![0.0, 1.0], y: vec![2.0, 2.0] }],
        };
        assert!(!render(&[flat], 1).contains("NaN"));
        let empty = Panel { title: "none".into(), x_label: "t".into(), series: vec![] };
        assert!(render(&[empty], 1).contains("no finite data"));
    }
}
