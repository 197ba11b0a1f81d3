//! Minimal deterministic SVG plots: scatter, line and heatmap.
//!
//! Coordinates are printed with fixed decimals so identical data gives
//! byte-identical files.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f4e9c", "#c0392b", "#27885a", "#7d3c98", "#d68910", "#000000"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points }
    }
}

#[derive(Clone, Copy, Debug)]
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Frame {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = (f64::INFINITY, f64::NEG_INFINITY);
        for &(a, b) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        Frame { x: pad(x), y: pad(y) }
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn pad(r: (f64, f64)) -> (f64, f64) {
    if !r.0.is_finite() {
        return (-1.0, 1.0);
    }
    let span = r.1 - r.0;
    if span <= 1e-300 {
        let w = if r.0 == 0.0 { 1.0 } else { r.0.abs() * 0.1 };
        return (r.0 - w, r.1 + w);
    }
    (r.0 - 0.05 * span, r.1 + 0.05 * span)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.0}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<rect x="{x0:.0}" y="{y1:.0}" width="{:.0}" height="{:.0}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0:.0}" x2="{px:.2}" y2="{:.0}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.0}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick(xv));
        let _ = writeln!(out, r#"<line x1="{:.0}" y1="{py:.2}" x2="{x0:.0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(out, r#"<text x="{:.0}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(yv));
    }
    let _ = writeln!(out, r#"<text x="{:.0}" y="{:.0}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.0}" text-anchor="middle" transform="rotate(-90 16 {:.0})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let t = format!("{v:.3}");
        let t = t.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".to_string()
        } else {
            t.to_string()
        }
    } else {
        format!("{v:.2e}")
    }
}

fn legend(out: &mut String, series: &[Series]) {
    for (k, s) in series.iter().enumerate().filter(|(_, s)| !s.label.is_empty()) {
        let y = MARGIN + 14.0 + 16.0 * k as f64;
        let x = WIDTH - MARGIN - 120.0;
        let _ = writeln!(out, r#"<rect x="{x:.0}" y="{:.0}" width="10" height="10" fill="{}"/>"#, y - 9.0, PALETTE[k % PALETTE.len()]);
        let _ = writeln!(out, r#"<text x="{:.0}" y="{y:.0}">{}</text>"#, x + 14.0, escape(&s.label));
    }
}

pub fn scatter(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, f.px(x), f.py(y));
        }
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

/// Polylines; a log axis plots `log10` of positive values and drops the rest.
pub fn lines(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let series: Vec<Series> = if log_y {
        series
            .iter()
            .map(|s| Series::new(s.label.clone(), s.points.iter().filter(|p| p.1 > 0.0).map(|&(x, y)| (x, y.log10())).collect()))
            .collect()
    } else {
        series.to_vec()
    };
    let f = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut out = String::new();
    header(&mut out, title);
    let ylabel = if log_y { format!("log10 {ylabel}") } else { ylabel.to_string() };
    axes(&mut out, &f, xlabel, &ylabel);
    for (k, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            PALETTE[k % PALETTE.len()]
        );
    }
    legend(&mut out, &series);
    out.push_str("</svg>\n");
    out
}

fn ramp(t: f64) -> String {
    // purple - white - green
    let t = t.clamp(0.0, 1.0);
    let (lo, mid, hi) = ((84.0, 39.0, 143.0), (247.0, 247.0, 247.0), (27.0, 120.0, 55.0));
    let mix = |a: (f64, f64, f64), b: (f64, f64, f64), s: f64| {
        ((a.0 + (b.0 - a.0) * s).round(), (a.1 + (b.1 - a.1) * s).round(), (a.2 + (b.2 - a.2) * s).round())
    };
    let c = if t < 0.5 { mix(lo, mid, t * 2.0) } else { mix(mid, hi, (t - 0.5) * 2.0) };
    format!("#{:02x}{:02x}{:02x}", c.0 as u8, c.1 as u8, c.2 as u8)
}

/// `values[i][k]` at `(x_axis[i], y_axis[k])`. Flagged cells are drawn in
/// grey and left out of the color scale.
pub fn heatmap(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    x_axis: &[f64],
    y_axis: &[f64],
    values: &[Vec<f64>],
    flags: &[Vec<bool>],
) -> String {
    let f = Frame { x: pad_cells(x_axis), y: pad_cells(y_axis) };
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, row) in values.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if !flags.get(i).and_then(|r| r.get(k)).copied().unwrap_or(false) && v.is_finite() {
                range = (range.0.min(v), range.1.max(v));
            }
        }
    }
    let mut out = String::new();
    header(&mut out, title);
    let cw = cell(x_axis) / (f.x.1 - f.x.0) * (WIDTH - 2.0 * MARGIN);
    let ch = cell(y_axis) / (f.y.1 - f.y.0) * (HEIGHT - 2.0 * MARGIN);
    for (i, row) in values.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let flagged = flags.get(i).and_then(|r| r.get(k)).copied().unwrap_or(false);
            let color = if flagged || !v.is_finite() {
                "#9e9e9e".to_string()
            } else if range.1 > range.0 {
                ramp((v - range.0) / (range.1 - range.0))
            } else {
                ramp(0.5)
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                f.px(x_axis[i]) - cw / 2.0,
                f.py(y_axis[k]) - ch / 2.0,
                cw,
                ch
            );
        }
    }
    axes(&mut out, &f, xlabel, ylabel);
    if range.0.is_finite() {
        let _ = writeln!(
            out,
            r#"<text x="{:.0}" y="44" text-anchor="middle">scale {} (purple) to {} (green)</text>"#,
            WIDTH / 2.0,
            tick(range.0),
            tick(range.1)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn cell(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        1.0
    } else {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    }
}

fn pad_cells(axis: &[f64]) -> (f64, f64) {
    match (axis.first(), axis.last()) {
        (Some(&a), Some(&b)) if b > a => {
            let h = cell(axis) / 2.0;
            (a - h, b + h)
        }
        (Some(&a), _) => (a - 0.5, a + 0.5),
        _ => (-1.0, 1.0),
    }
}
