//! Dependency-free SVG scatter plots of Pareto fronts: `G` on a linear
//! horizontal axis, `F` on a logarithmic vertical axis, one series per front.
//!
//! Output is a pure function of the input, so the same fronts always give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::records::{read_front_file, FrontRecord};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
/// Smallest `F` drawn; zero or negative estimates are pinned here.
const F_FLOOR: f64 = 1e-16;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(G, F)` pairs.
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Labels by noise level when the front records one, else by `fallback`.
    pub fn from_front(records: &[FrontRecord], fallback: &str) -> Self {
        let level = records.first().map(|r| r.noise_level).filter(|l| l.is_finite());
        let label = match level {
            Some(l) => format!("noise {}%", trim_number(l * 100.0)),
            None => fallback.to_string(),
        };
        Self {
            label,
            points: records.iter().map(|r| (r.rydberg_time, r.infidelity)).collect(),
        }
    }
}

fn trim_number(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Linear range padded by 5% per side (or ±0.5 around a single value).
fn linear_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        let pad = if lo.abs() > 0.0 { 0.1 * lo.abs() } else { 0.5 };
        (lo - pad, hi + pad)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Decade-aligned log range with at least one decade.
fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .map(|v| v.max(F_FLOOR).log10())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (mut lo, mut hi) = (lo.floor(), hi.ceil());
    if hi - lo < 1.0 {
        lo -= 0.5;
        hi += 0.5;
    }
    (lo, hi)
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let unit = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    unit * mag
}

pub fn render_svg(series: &[Series]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::EmptyFront("nothing to plot".into()));
    }
    if let Some(s) = series.iter().find(|s| s.points.is_empty()) {
        return Err(Error::EmptyFront(format!("series `{}` has no points", s.label)));
    }
    let all = || series.iter().flat_map(|s| s.points.iter().copied());
    if all().any(|(g, f)| !g.is_finite() || !f.is_finite()) {
        return Err(Error::InvalidInput("non-finite objective in plot input".into()));
    }
    let (g_lo, g_hi) = linear_range(all().map(|p| p.0));
    let (f_lo, f_hi) = log_range(all().map(|p| p.1));

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |g: f64| LEFT + (g - g_lo) / (g_hi - g_lo) * plot_w;
    let sy = |f: f64| TOP + (f_hi - f.max(F_FLOOR).log10()) / (f_hi - f_lo) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let step = nice_step(g_hi - g_lo);
    let mut k = (g_lo / step).ceil() as i64;
    while (k as f64) * step <= g_hi {
        let g = k as f64 * step;
        let x = sx(g);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            trim_number(g)
        );
        k += 1;
    }
    for e in (f_lo.ceil() as i64)..=(f_hi.floor() as i64) {
        let y = sy(10f64.powi(e as i32));
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            LEFT - 5.0,
            LEFT + plot_w,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">G (time in Rydberg state)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">F (infidelity, log scale)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(w, r#"<g fill="{color}">"#);
        for &(g, f) in &s.points {
            let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(g), sy(f));
        }
        let _ = writeln!(w, "</g>");
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            w,
            r#"<circle cx="{lx:.2}" cy="{ly:.2}" r="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 10.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Plots one series per front file.
pub fn plot_fronts(inputs: &[&Path], output: &Path) -> Result<()> {
    let mut series = Vec::with_capacity(inputs.len());
    for path in inputs {
        let records = read_front_file(path)?;
        if records.is_empty() {
            return Err(Error::EmptyFront(format!("{} has no rows", path.display())));
        }
        let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        series.push(Series::from_front(&records, &stem));
    }
    let svg = render_svg(&series)?;
    std::fs::write(output, svg).map_err(|e| Error::io(output, e))
}
