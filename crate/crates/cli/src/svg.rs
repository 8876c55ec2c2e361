//! Minimal static SVG charts for experiment reports. Values are F1-like
//! quantities, so the y axis is fixed to [0, 1].

use std::fmt::Write as _;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

fn plot_w() -> f64 {
    WIDTH - LEFT - RIGHT
}

fn plot_h() -> f64 {
    HEIGHT - TOP - BOTTOM
}

fn y_of(v: f64) -> f64 {
    TOP + plot_h() * (1.0 - v.clamp(0.0, 1.0))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        TOP + plot_h()
    );
    s
}

/// One bar per `(label, value)`.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let mut s = frame(title);
    let slot = plot_w() / bars.len().max(1) as f64;
    for (i, (label, v)) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64 + slot * 0.2;
        let y = y_of(*v);
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="#4a78a8"/>"##,
            slot * 0.6,
            TOP + plot_h() - y
        );
        let cx = x + slot * 0.3;
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{v:.3}</text>"#, y - 4.0);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + plot_h() + 18.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// A polyline through `(x, y)` points, x scaled to the data range.
pub fn line_chart(title: &str, x_label: &str, points: &[(f64, f64)]) -> String {
    let mut s = frame(title);
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x_of = |x: f64| LEFT + 20.0 + (plot_w() - 40.0) * (x - lo) / span;
    let path: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.1},{:.1}", x_of(x), y_of(y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#4a78a8" stroke-width="2"/>"##,
        path.join(" ")
    );
    for &(x, y) in points {
        let (px, py) = (x_of(x), y_of(y));
        let _ = writeln!(s, r##"<circle cx="{px:.1}" cy="{py:.1}" r="3" fill="#4a78a8"/>"##);
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{y:.3}</text>"#, py - 8.0);
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#,
            TOP + plot_h() + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w() / 2.0,
        HEIGHT - 8.0,
        escape(x_label)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_closed_documents_with_one_mark_per_value() {
        let bars = bar_chart("t", &[("gan".into(), 0.5), ("vae".into(), 0.7)]);
        assert!(bars.starts_with("<svg") && bars.ends_with("</svg>\n"));
        assert_eq!(bars.matches(r##"fill="#4a78a8""##).count(), 2);
        let line = line_chart("t", "x", &[(0.1, 0.9), (0.2, 0.8), (0.3, 0.6)]);
        assert_eq!(line.matches("<circle").count(), 3);
    }

    #[test]
    fn labels_are_escaped() {
        assert!(bar_chart("a<b", &[("x&y".into(), 0.1)]).contains("a&lt;b"));
    }
}
