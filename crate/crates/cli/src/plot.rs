//! Minimal standalone SVG line plots with stable text output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlotError {
    #[error("empty series")]
    Empty,
    #[error("x has {x} values but y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("log scale requires positive values; y[{index}] = {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("cannot write {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

#[derive(Clone, Debug)]
pub struct Series<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub log_y: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    }
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn render_svg(series: &Series<'_>) -> Result<String, PlotError> {
    if series.x.is_empty() {
        return Err(PlotError::Empty);
    }
    if series.x.len() != series.y.len() {
        return Err(PlotError::LengthMismatch { x: series.x.len(), y: series.y.len() });
    }
    for (i, (&x, &y)) in series.x.iter().zip(series.y).enumerate() {
        if !x.is_finite() {
            return Err(PlotError::NonFinite { index: i, value: x });
        }
        if !y.is_finite() {
            return Err(PlotError::NonFinite { index: i, value: y });
        }
        if series.log_y && y <= 0.0 {
            return Err(PlotError::NonPositive { index: i, value: y });
        }
    }
    let ty: Vec<f64> = if series.log_y { series.y.iter().map(|v| v.log10()).collect() } else { series.y.to_vec() };
    let (x0, x1) = span(series.x.iter().copied());
    let (y0, y1) = span(ty.iter().copied());
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let w = &mut out;
    // Writing to a String cannot fail.
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(series.title)
    );
    let _ = writeln!(
        w,
        r#"<path d="M{LEFT:.1},{TOP:.1} L{LEFT:.1},{:.1} L{:.1},{:.1}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (tx, ty_) = (px(xv), py(yv));
        let _ = writeln!(
            w,
            r#"<line x1="{tx:.2}" y1="{:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            TOP + ph + 18.0,
            label(xv)
        );
        let ylabel = if series.log_y { format!("1e{yv:.2}") } else { label(yv) };
        let _ = writeln!(w, r#"<line x1="{:.2}" y1="{ty_:.2}" x2="{LEFT:.2}" y2="{ty_:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{ylabel}</text>"#,
            LEFT - 8.0,
            ty_ + 4.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(series.x_label)
    );
    let ylab = if series.log_y { format!("{} (log scale)", series.y_label) } else { series.y_label.to_string() };
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&ylab)
    );
    let points: Vec<String> = series.x.iter().zip(&ty).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(w, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, points.join(" "));
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

pub fn emit_plot(series: &Series<'_>, path: &Path) -> Result<(), PlotError> {
    let svg = render_svg(series)?;
    std::fs::write(path, svg).map_err(|e| PlotError::Io { path: path.to_path_buf(), reason: e.to_string() })
}
