//! Minimal self-contained SVG line/scatter plots.
//!
//! Supports linear and log axes, point markers, error bars, shaded bands,
//! and a legend. Output is plain SVG text with deterministic formatting,
//! so identical inputs give identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::report::write_atomic;

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 460.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 62.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Symmetric error bar half-heights, one per point, when present.
    pub errors: Option<Vec<f64>>,
    /// Lower/upper band edges, one pair per point, when present.
    pub band: Option<Vec<(f64, f64)>>,
    pub draw_line: bool,
    pub draw_markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            errors: None,
            band: None,
            draw_line: true,
            draw_markers: false,
        }
    }

    pub fn scatter(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            errors: None,
            band: None,
            draw_line: false,
            draw_markers: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub series: Vec<Series>,
}

struct Scale {
    axis: Axis,
    min: f64,
    max: f64,
    pixel_min: f64,
    pixel_max: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let (lo, hi, x) = match self.axis {
            Axis::Linear => (self.min, self.max, v),
            Axis::Log => (self.min.ln(), self.max.ln(), v.ln()),
        };
        let f = if hi > lo { (x - lo) / (hi - lo) } else { 0.5 };
        self.pixel_min + f * (self.pixel_max - self.pixel_min)
    }
}

fn usable(axis: Axis, v: f64) -> bool {
    v.is_finite() && (axis == Axis::Linear || v > 0.0)
}

/// Tick label: plain decimal for moderate magnitudes, scientific otherwise.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn linear_ticks(min: f64, max: f64) -> Vec<f64> {
    let span = (max - min).abs().max(f64::MIN_POSITIVE);
    let raw_step = span / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut ticks = Vec::new();
    let mut t = (min / step).ceil() * step;
    while t <= max + step * 1e-9 {
        ticks.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn log_ticks(min: f64, max: f64) -> Vec<f64> {
    let lo = min.log10().floor() as i32;
    let hi = max.log10().ceil() as i32;
    let mut ticks = Vec::new();
    for e in lo..=hi {
        let v = 10f64.powi(e);
        if v >= min * (1.0 - 1e-12) && v <= max * (1.0 + 1e-12) {
            ticks.push(v);
        }
    }
    if ticks.len() < 2 {
        ticks = vec![min, max];
    }
    ticks
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders the spec to SVG text. Points that cannot live on the requested
/// axes (non-finite, or nonpositive on a log axis) are skipped; series that
/// lose every point this way are dropped. Having no drawable series at all
/// is an error.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    let mut x_range: Option<(f64, f64)> = None;
    let mut y_range: Option<(f64, f64)> = None;
    let expand = |range: &mut Option<(f64, f64)>, v: f64| {
        *range = Some(match *range {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
    };
    for series in &spec.series {
        for (i, &(x, y)) in series.points.iter().enumerate() {
            if !usable(spec.x_axis, x) || !usable(spec.y_axis, y) {
                continue;
            }
            expand(&mut x_range, x);
            expand(&mut y_range, y);
            if let Some(errors) = &series.errors {
                let lo = y - errors[i];
                let hi = y + errors[i];
                if usable(spec.y_axis, hi) {
                    expand(&mut y_range, hi);
                }
                if usable(spec.y_axis, lo) {
                    expand(&mut y_range, lo);
                }
            }
            if let Some(band) = &series.band {
                let (lo, hi) = band[i];
                if usable(spec.y_axis, lo) {
                    expand(&mut y_range, lo);
                }
                if usable(spec.y_axis, hi) {
                    expand(&mut y_range, hi);
                }
            }
        }
    }
    let (x_min, x_max) =
        x_range.ok_or_else(|| Error::Usage("plot has no drawable points".into()))?;
    let (y_min, y_max) =
        y_range.ok_or_else(|| Error::Usage("plot has no drawable points".into()))?;

    let pad = |axis: Axis, lo: f64, hi: f64| -> (f64, f64) {
        match axis {
            Axis::Linear => {
                let span = (hi - lo).max(1e-12);
                (lo - 0.05 * span, hi + 0.05 * span)
            }
            Axis::Log => (lo / 1.3, hi * 1.3),
        }
    };
    let (x_min, x_max) = pad(spec.x_axis, x_min, x_max);
    let (y_min, y_max) = pad(spec.y_axis, y_min, y_max);

    let xs = Scale {
        axis: spec.x_axis,
        min: x_min,
        max: x_max,
        pixel_min: MARGIN_LEFT,
        pixel_max: WIDTH - MARGIN_RIGHT,
    };
    let ys = Scale {
        axis: spec.y_axis,
        min: y_min,
        max: y_max,
        pixel_min: HEIGHT - MARGIN_BOTTOM,
        pixel_max: MARGIN_TOP,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="26" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        px(WIDTH / 2.0),
        escape(&spec.title)
    );

    let x_ticks = match spec.x_axis {
        Axis::Linear => linear_ticks(x_min, x_max),
        Axis::Log => log_ticks(y_range_guard(x_min), x_max),
    };
    let y_ticks = match spec.y_axis {
        Axis::Linear => linear_ticks(y_min, y_max),
        Axis::Log => log_ticks(y_range_guard(y_min), y_max),
    };
    for &t in &x_ticks {
        let x = xs.map(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#dddddd"/>"##,
            px(x),
            px(MARGIN_TOP),
            px(HEIGHT - MARGIN_BOTTOM)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            px(x),
            px(HEIGHT - MARGIN_BOTTOM + 16.0),
            tick_label(t)
        );
    }
    for &t in &y_ticks {
        let y = ys.map(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#dddddd"/>"##,
            px(MARGIN_LEFT),
            px(y),
            px(WIDTH - MARGIN_RIGHT)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            px(MARGIN_LEFT - 6.0),
            px(y + 4.0),
            tick_label(t)
        );
    }
    // Axes frame.
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333"/>"##,
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
        px(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        px((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        px(HEIGHT - 14.0),
        escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        px((MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0),
        px((MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0),
        escape(&spec.y_label)
    );

    let mut drew_any = false;
    let mut legend_entries = Vec::new();
    for (index, series) in spec.series.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let keep: Vec<usize> = (0..series.points.len())
            .filter(|&i| {
                usable(spec.x_axis, series.points[i].0) && usable(spec.y_axis, series.points[i].1)
            })
            .collect();
        if keep.is_empty() {
            continue;
        }
        drew_any = true;
        legend_entries.push((series.label.clone(), color));
        if let Some(band) = &series.band {
            let mut poly = String::new();
            for &i in &keep {
                let (lo, _) = band[i];
                let lo = if usable(spec.y_axis, lo) { lo } else { series.points[i].1 };
                let _ = write!(
                    poly,
                    "{},{} ",
                    px(xs.map(series.points[i].0)),
                    px(ys.map(lo))
                );
            }
            for &i in keep.iter().rev() {
                let (_, hi) = band[i];
                let hi = if usable(spec.y_axis, hi) { hi } else { series.points[i].1 };
                let _ = write!(
                    poly,
                    "{},{} ",
                    px(xs.map(series.points[i].0)),
                    px(ys.map(hi))
                );
            }
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
                poly.trim_end()
            );
        }
        if let Some(errors) = &series.errors {
            for &i in &keep {
                let (x, y) = series.points[i];
                let lo = y - errors[i];
                let hi = y + errors[i];
                if !usable(spec.y_axis, lo) || !usable(spec.y_axis, hi) {
                    continue;
                }
                let _ = writeln!(
                    svg,
                    r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{color}" stroke-width="1"/>"#,
                    px(xs.map(x)),
                    px(ys.map(lo)),
                    px(ys.map(hi))
                );
            }
        }
        if series.draw_line && keep.len() > 1 {
            let mut poly = String::new();
            for &i in &keep {
                let _ = write!(
                    poly,
                    "{},{} ",
                    px(xs.map(series.points[i].0)),
                    px(ys.map(series.points[i].1))
                );
            }
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
                poly.trim_end()
            );
        }
        if series.draw_markers {
            for &i in &keep {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                    px(xs.map(series.points[i].0)),
                    px(ys.map(series.points[i].1))
                );
            }
        }
    }
    if !drew_any {
        return Err(Error::Usage("plot has no drawable points".into()));
    }

    for (row, (label, color)) in legend_entries.iter().enumerate() {
        let y = MARGIN_TOP + 14.0 + 16.0 * row as f64;
        let x = WIDTH - MARGIN_RIGHT - 150.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
            px(x),
            px(y - 4.0),
            px(x + 18.0),
            px(y - 4.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            px(x + 24.0),
            px(y),
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn y_range_guard(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        f64::MIN_POSITIVE
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_svg(path: &Path, spec: &PlotSpec) -> Result<()> {
    let svg = render_svg(spec)?;
    write_atomic(path, svg.as_bytes())
}
