//! Top-down SVG view of trajectories in the X-Z plane.
//!
//! Output depends only on the input points, so identical inputs give
//! byte-identical files. The first series is drawn as ground truth.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 800.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub label: String,
    /// `(x, z)` in meters.
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Largest 1, 2 or 5 times a power of ten not above `x`.
fn nice_length(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return 1.0;
    }
    let p = 10f64.powf(x.log10().floor());
    [5.0, 2.0, 1.0].into_iter().map(|m| m * p).find(|v| *v <= x).unwrap_or(p)
}

fn color(k: usize) -> &'static str {
    if k == 0 {
        "#000000"
    } else {
        PALETTE[(k - 1) % PALETTE.len()]
    }
}

pub fn render_svg(series: &[Series]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|(x, z)| x.is_finite() && z.is_finite());
    let (mut x0, mut x1, mut z0, mut z1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, z) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        z0 = z0.min(z);
        z1 = z1.max(z);
    }
    if x0 > x1 {
        (x0, x1, z0, z1) = (0.0, 0.0, 0.0, 0.0);
    }
    let span = (x1 - x0).max(z1 - z0).max(1e-9);
    let scale = (WIDTH.min(HEIGHT) - 2.0 * MARGIN) / span;
    let cx = 0.5 * (x0 + x1);
    let cz = 0.5 * (z0 + z1);
    let map = |x: f64, z: f64| (WIDTH / 2.0 + (x - cx) * scale, HEIGHT / 2.0 - (z - cz) * scale);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    for (k, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, z)| x.is_finite() && z.is_finite())
            .map(|&(x, z)| {
                let (u, v) = map(x, z);
                format!("{u:.2},{v:.2}")
            })
            .collect();
        let stroke = if k == 0 { 2.5 } else { 1.5 };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="{stroke:.1}" stroke-linejoin="round" points="{}"/>"#,
            color(k),
            pts.join(" ")
        );
    }
    if let Some(&(x, z)) = series.first().and_then(|s| s.points.first()) {
        let (u, v) = map(x, z);
        let _ = writeln!(svg, r##"<circle cx="{u:.2}" cy="{v:.2}" r="4" fill="#000000"/>"##);
    }
    for (k, s) in series.iter().enumerate() {
        let y = 20.0 + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="12" y1="{:.1}" x2="36" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="42" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            y - 4.0,
            y - 4.0,
            color(k),
            y,
            escape(&s.label)
        );
    }
    let bar = nice_length(span / 4.0);
    let (bx, by) = (MARGIN, HEIGHT - 20.0);
    let _ = writeln!(
        svg,
        r##"<line x1="{bx:.2}" y1="{by:.2}" x2="{:.2}" y2="{by:.2}" stroke="#000000" stroke-width="2"/><text x="{bx:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{} m</text>"##,
        bx + bar * scale,
        by - 6.0,
        vokit_core::io::format_number(bar)
    );
    let _ = writeln!(svg, r#"<text x="{:.0}" y="{by:.2}" font-family="sans-serif" font-size="12" text-anchor="end">x right, z up</text>"#, WIDTH - 12.0);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_lengths() {
        assert_eq!(nice_length(7.3), 5.0);
        assert_eq!(nice_length(0.31), 0.2);
        assert_eq!(nice_length(100.0), 100.0);
        assert_eq!(nice_length(0.0), 1.0);
    }

    #[test]
    fn escapes_labels_and_handles_degenerate_input() {
        let s = [Series { label: "a<b&\"c\"".into(), points: vec![(1.0, 1.0)] }, Series { label: "p".into(), points: vec![] }];
        let svg = render_svg(&s);
        assert!(svg.contains("a&lt;b&amp;&quot;c&quot;"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn equal_aspect() {
        let s = [Series { label: "g".into(), points: vec![(0.0, 0.0), (10.0, 0.0), (10.0, 1.0)] }];
        let svg = render_svg(&s);
        // 10 m spans the drawable width; 1 m in z is a tenth of it.
        assert!(svg.contains("points=\"60.00,434.00 740.00,434.00 740.00,366.00\""), "{svg}");
    }
}
