//! Hand-emitted SVG line plots built from polylines and text.

use std::fmt::Write as _;

use crate::error::CliError;
use crate::table::ResultTable;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 84.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 64.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Which columns to draw and how.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub ys: Vec<String>,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    /// Draw markers instead of connecting points.
    pub scatter: bool,
    /// Horizontal reference line `(value, label)`.
    pub reference: Option<(f64, String)>,
}

impl PlotSpec {
    pub fn lines(title: &str, x: &str, ys: &[&str], y_label: &str) -> Self {
        Self {
            title: title.into(),
            x: x.into(),
            ys: ys.iter().map(|s| s.to_string()).collect(),
            x_label: x.into(),
            y_label: y_label.into(),
            log_y: false,
            scatter: false,
            reference: None,
        }
    }

    pub fn log_y(mut self, on: bool) -> Self {
        self.log_y = on;
        self
    }

    pub fn scatter(mut self) -> Self {
        self.scatter = true;
        self
    }

    pub fn reference(mut self, value: f64, label: &str) -> Self {
        self.reference = Some((value, label.into()));
        self
    }
}

/// Axis range in plot coordinates (log10 of the data on a log axis).
#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn covering(values: impl Iterator<Item = f64>, fallback: (f64, f64)) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        if !lo.is_finite() {
            return Self {
                lo: fallback.0,
                hi: fallback.1,
            };
        }
        if hi - lo <= 1e-12 * lo.abs().max(1.0) {
            let pad = 0.5 * lo.abs().max(1.0);
            return Self {
                lo: lo - pad,
                hi: hi + pad,
            };
        }
        Self { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

/// Renders the plot. Every named column must exist; an empty table yields
/// axes without data.
pub fn plot(table: &ResultTable, spec: &PlotSpec) -> Result<String, CliError> {
    let xs = table.column(&spec.x)?;
    let series: Vec<(String, Vec<f64>)> = spec
        .ys
        .iter()
        .map(|y| Ok((y.clone(), table.column(y)?)))
        .collect::<Result<_, CliError>>()?;
    let map_y = |v: f64| {
        if spec.log_y {
            (v > 0.0).then(|| v.log10())
        } else {
            Some(v)
        }
    };

    let x_range = Range::covering(xs.iter().copied(), (0.0, 1.0));
    let reference_y = spec.reference.as_ref().and_then(|(v, _)| map_y(*v));
    let mut y_range = Range::covering(
        series
            .iter()
            .flat_map(|(_, ys)| ys.iter().filter_map(|&v| map_y(v)))
            .chain(reference_y),
        (0.0, 1.0),
    );
    if spec.log_y {
        y_range = Range {
            lo: y_range.lo.floor(),
            hi: y_range.hi.ceil().max(y_range.lo.floor() + 1.0),
        };
    }

    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + pw * x_range.frac(x);
    let py = |y: f64| TOP + ph * (1.0 - y_range.frac(y));

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&spec.title)
    );

    // axes
    let (x0, x1, y0, y1) = (LEFT, LEFT + pw, TOP + ph, TOP);
    let _ = writeln!(
        w,
        r#"<polyline points="{x0:.2},{y1:.2} {x0:.2},{y0:.2} {x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for t in linear_ticks(x_range) {
        let x = px(t.value);
        let _ = writeln!(
            w,
            r#"<polyline points="{x:.2},{y0:.2} {x:.2},{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 19.0,
            t.label
        );
    }
    let y_ticks = if spec.log_y {
        log_ticks(y_range)
    } else {
        linear_ticks(y_range)
    };
    for t in y_ticks {
        let y = py(t.value);
        let _ = writeln!(
            w,
            r#"<polyline points="{:.2},{y:.2} {x0:.2},{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            t.label
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(&spec.x_label)
    );
    let y_label = if spec.log_y {
        format!("{} (log scale)", spec.y_label)
    } else {
        spec.y_label.clone()
    };
    let (lx, ly) = (20.0, TOP + ph / 2.0);
    let _ = writeln!(
        w,
        r#"<text x="{lx}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx} {ly:.2})">{}</text>"#,
        escape(&y_label)
    );

    if let (Some((_, label)), Some(v)) = (&spec.reference, reference_y) {
        let y = py(v);
        let _ = writeln!(
            w,
            r##"<polyline points="{x0:.2},{y:.2} {x1:.2},{y:.2}" fill="none" stroke="#555" stroke-dasharray="6 4"/>"##
        );
        let _ = writeln!(
            w,
            r##"<text x="{:.2}" y="{:.2}" fill="#555">{}</text>"##,
            x1 + 6.0,
            y + 4.0,
            escape(label)
        );
    }

    for (i, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter_map(|(&x, &y)| map_y(y).map(|y| (px(x), py(y))))
            .collect();
        if spec.scatter {
            for (x, y) in &pts {
                let _ = writeln!(
                    w,
                    r#"<polyline points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{color}"/>"#,
                    x - 3.0,
                    y,
                    x,
                    y - 3.0,
                    x + 3.0,
                    y,
                    x,
                    y + 3.0,
                    x - 3.0,
                    y
                );
            }
        } else if !pts.is_empty() {
            let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            w,
            r#"<polyline points="{:.2},{ly:.2} {:.2},{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            x1 + 12.0,
            x1 + 32.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x1 + 38.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

struct Tick {
    value: f64,
    label: String,
}

fn linear_ticks(r: Range) -> Vec<Tick> {
    let raw = (r.hi - r.lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (r.lo / step).ceil() as i64;
    let last = (r.hi / step).floor() as i64;
    (first..=last)
        .map(|i| {
            let v = i as f64 * step;
            let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
            Tick {
                value: v,
                label: format!("{v:.decimals$}"),
            }
        })
        .collect()
}

/// Decade ticks on a log axis whose range is in log10 units.
fn log_ticks(r: Range) -> Vec<Tick> {
    let (lo, hi) = (r.lo.ceil() as i64, r.hi.floor() as i64);
    let stride = ((hi - lo) / 8 + 1).max(1);
    (lo..=hi)
        .step_by(stride as usize)
        .map(|e| Tick {
            value: e as f64,
            label: format!("1e{e}"),
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
