//! Minimal SVG output: point scatter in the disk and histogram overlays.

use std::fmt::Write as _;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// A coloured group of points.
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, SIZE / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter of points in the disk of radius `radius`, drawn on a square.
pub fn scatter(title: &str, radius: f64, series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let span = SIZE - 2.0 * MARGIN;
    let map = |x: f64, y: f64| {
        (
            MARGIN + (x + radius) / (2.0 * radius) * span,
            MARGIN + (radius - y) / (2.0 * radius) * span,
        )
    };
    let (cx, cy) = map(0.0, 0.0);
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#888"/>"##,
        span / 2.0
    );
    for (k, s) in series.iter().enumerate() {
        for &(x, y) in &s.points {
            let (px, py) = map(x, y);
            let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{}"/>"#, s.color);
        }
        let ly = SIZE - 12.0 - 14.0 * k as f64;
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="4" fill="{}"/>"#, MARGIN, ly - 4.0, s.color);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}">{} ({})</text>"#,
            MARGIN + 8.0,
            escape(s.label),
            s.points.len()
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bars of `empirical` over `edges` with the `theory` curve on top.
pub fn histogram(title: &str, edges: &[f64], empirical: &[f64], theory: &[(f64, f64)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let x0 = edges.first().copied().unwrap_or(0.0);
    let x1 = edges.last().copied().unwrap_or(1.0);
    let ymax = empirical
        .iter()
        .chain(theory.iter().map(|(_, y)| y))
        .fold(0.0f64, |a, &b| a.max(b))
        .max(1e-12)
        * 1.1;
    let span = SIZE - 2.0 * MARGIN;
    let map = |x: f64, y: f64| (MARGIN + (x - x0) / (x1 - x0) * span, SIZE - MARGIN - y / ymax * span);
    for (w, &h) in edges.windows(2).zip(empirical) {
        let (a, top) = map(w[0], h);
        let (b, base) = map(w[1], 0.0);
        let _ = writeln!(
            out,
            r##"<rect x="{a:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>"##,
            (b - a).max(0.0),
            (base - top).max(0.0)
        );
    }
    let path: Vec<String> = theory
        .iter()
        .map(|&(x, y)| {
            let (px, py) = map(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
        path.join(" ")
    );
    let (ax, ay) = map(x0, 0.0);
    let (bx, _) = map(x1, 0.0);
    let _ = writeln!(out, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{ay:.2}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{ax:.2}" y="{:.2}">{x0}</text>"#, ay + 14.0);
    let _ = writeln!(out, r#"<text x="{bx:.2}" y="{:.2}" text-anchor="end">{x1}</text>"#, ay + 14.0);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_enough() {
        let s = scatter(
            "pts <1>",
            2.0,
            &[Series {
                label: "max",
                color: "red",
                points: vec![(0.0, 0.0), (1.0, -1.0)],
            }],
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("pts &lt;1&gt;"));
        let h = histogram("h", &[0.0, 1.0, 2.0], &[0.5, 0.25], &[(0.0, 0.4), (2.0, 0.1)]);
        assert_eq!(h.matches("<rect").count(), 3);
    }
}
