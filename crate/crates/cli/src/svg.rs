//! Minimal static SVG charts. Convenience output only; CSV is the contract.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const PAD_L: f64 = 72.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 52.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Copy)]
pub struct Axes<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    Some(if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) })
}

fn tx(v: f64, log: bool) -> f64 {
    if log {
        if v > 0.0 {
            v.log10()
        } else {
            f64::NAN
        }
    } else {
        v
    }
}

pub fn line_chart(axes: Axes<'_>, series: &[Series<'_>]) -> String {
    let mut out = String::new();
    header(&mut out, W, H, axes.title);
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xr = range(all().map(|p| tx(p.0, axes.log_x)));
    let yr = range(all().map(|p| tx(p.1, axes.log_y)));
    let (Some((x0, x1)), Some((y0, y1))) = (xr, yr) else {
        out.push_str("</svg>\n");
        return out;
    };
    let (pw, ph) = (W - PAD_L - PAD_R, H - PAD_T - PAD_B);
    let sx = |v: f64| PAD_L + (v - x0) / (x1 - x0) * pw;
    let sy = |v: f64| PAD_T + ph - (v - y0) / (y1 - y0) * ph;
    let _ = writeln!(
        out,
        r##"<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let xl = if axes.log_x { format!("1e{xv:.1}") } else { format!("{xv:.3e}") };
        let yl = if axes.log_y { format!("1e{yv:.1}") } else { format!("{yv:.3e}") };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xl}</text>"#,
            sx(xv),
            H - PAD_B + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yl}</text>"#,
            PAD_L - 4.0,
            sy(yv) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        PAD_L + pw / 2.0,
        H - 10.0,
        escape(axes.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        PAD_T + ph / 2.0,
        PAD_T + ph / 2.0,
        escape(axes.y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|p| (tx(p.0, axes.log_x), tx(p.1, axes.log_y)))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            PAD_L + 8.0,
            PAD_T + 16.0 + 14.0 * i as f64,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub struct Heatmap<'a> {
    pub label: &'a str,
    /// Row-major, `rows x cols`, non-negative.
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

/// Side-by-side grayscale heatmaps, each scaled to its own maximum.
pub fn heatmaps(title: &str, panels: &[Heatmap<'_>]) -> String {
    let size = 220.0;
    let gap = 24.0;
    let w = gap + panels.len() as f64 * (size + gap);
    let h = size + 80.0;
    let mut out = String::new();
    header(&mut out, w, h, title);
    for (p, panel) in panels.iter().enumerate() {
        let x0 = gap + p as f64 * (size + gap);
        let y0 = 44.0;
        let top = panel.values.iter().copied().fold(0.0, f64::max);
        let (cw, ch) = (size / panel.cols as f64, size / panel.rows as f64);
        for r in 0..panel.rows {
            for c in 0..panel.cols {
                let v = if top > 0.0 { panel.values[r * panel.cols + c] / top } else { 0.0 };
                let g = (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8;
                // signal axis upwards
                let y = y0 + size - (r + 1) as f64 * ch;
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({g},{g},{g})"/>"#,
                    x0 + c as f64 * cw,
                    y,
                    cw + 0.05,
                    ch + 0.05
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + size / 2.0,
            y0 + size + 18.0,
            escape(panel.label)
        );
    }
    out.push_str("</svg>\n");
    out
}
