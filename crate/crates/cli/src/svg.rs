//! Minimal dependency-free SVG renderers: line charts, scatter plots, and
//! heatmaps. CSV remains the canonical output; these are quick-look views.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_bounds(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Frame {
        let mut f = Frame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for x in xs {
            f.x_min = f.x_min.min(x);
            f.x_max = f.x_max.max(x);
        }
        for y in ys {
            f.y_min = f.y_min.min(y);
            f.y_max = f.y_max.max(y);
        }
        if !f.x_min.is_finite() || f.x_min == f.x_max {
            f.x_min -= 0.5;
            f.x_max += 0.5;
        }
        if !f.y_min.is_finite() || f.y_min == f.y_max {
            f.y_min -= 0.5;
            f.y_max += 0.5;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open_svg(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = write!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN;
    let x1 = WIDTH - MARGIN;
    let y0 = HEIGHT - MARGIN;
    let y1 = MARGIN;
    let _ = write!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x_min + t * (f.x_max - f.x_min);
        let yv = f.y_min + t * (f.y_max - f.y_min);
        let px = f.px(xv);
        let py = f.py(yv);
        let _ = write!(
            s,
            r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{xv:.3}</text>"#,
            y0 + 4.0,
            y0 + 18.0
        );
        let _ = write!(
            s,
            r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{yv:.3}</text>"#,
            x0 - 4.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = write!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Multi-series line chart; each series is `(label, points)`.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let f = Frame::from_bounds(
        series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)),
        series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)),
    );
    let mut s = open_svg(title);
    axes(&mut s, &f, x_label, y_label);
    for (k, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = write!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            path.join(" ")
        );
        let _ = write!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 6.0,
            MARGIN + 16.0 * k as f64,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter plot of one point set.
pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let f = Frame::from_bounds(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let mut s = open_svg(title);
    axes(&mut s, &f, x_label, y_label);
    for &(x, y) in points {
        let _ = write!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.2" fill="{}" fill-opacity="0.75"/>"#,
            f.px(x),
            f.py(y),
            PALETTE[0]
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Labeled square heatmap with a blue-white-red ramp centered on the data
/// midpoint.
pub fn heatmap(title: &str, labels: &[String], matrix: &[Vec<f64>]) -> String {
    let n = labels.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in matrix {
        for &v in row {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if !lo.is_finite() || lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let cell = (WIDTH.min(HEIGHT) - 2.0 * MARGIN) / n as f64;
    let mut s = open_svg(title);
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let color = if v.is_finite() {
                let t = (v - lo) / (hi - lo);
                let r = (255.0 * t) as u8;
                let b = (255.0 * (1.0 - t)) as u8;
                let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8;
                format!("rgb({r},{g},{b})")
            } else {
                "rgb(180,180,180)".to_string()
            };
            let _ = write!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{color}"/>"#,
                MARGIN + j as f64 * cell,
                MARGIN + i as f64 * cell
            );
        }
    }
    for (i, label) in labels.iter().enumerate() {
        let c = MARGIN + (i as f64 + 0.5) * cell;
        let _ = write!(
            s,
            r#"<text x="{:.2}" y="{c:.2}" text-anchor="end" font-family="sans-serif" font-size="9">{}</text>"#,
            MARGIN - 4.0,
            escape(label)
        );
        let _ = write!(
            s,
            r#"<text x="{c:.2}" y="{:.2}" text-anchor="start" font-family="sans-serif" font-size="9" transform="rotate(-60 {c:.2} {:.2})">{}</text>"#,
            MARGIN - 4.0,
            MARGIN - 4.0,
            escape(label)
        );
    }
    let _ = write!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">[{lo:.3}, {hi:.3}]</text>"#,
        MARGIN,
        HEIGHT - 16.0
    );
    s.push_str("</svg>\n");
    s
}
