//! Static SVG line charts drawn from result tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::table::ResultTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    RateVsDistance,
    JammingVsDistance,
    AlphaBetaVsDistance,
    UnreliableVsTime,
}

struct Spec {
    name: &'static str,
    title: &'static str,
    x_col: &'static str,
    y_col: &'static str,
    x_label: &'static str,
    y_label: &'static str,
    series_col: Option<&'static str>,
    y_unit_range: bool,
}

impl ChartKind {
    pub const ALL: [ChartKind; 4] = [
        ChartKind::RateVsDistance,
        ChartKind::JammingVsDistance,
        ChartKind::AlphaBetaVsDistance,
        ChartKind::UnreliableVsTime,
    ];

    fn spec(&self) -> Spec {
        match self {
            ChartKind::RateVsDistance => Spec {
                name: "rate_vs_distance",
                title: "PU secrecy rate vs eavesdropper distance",
                x_col: "distance_m",
                y_col: "mean_secrecy_rate",
                x_label: "ED-ST distance (m)",
                y_label: "mean secrecy rate",
                series_col: None,
                y_unit_range: false,
            },
            ChartKind::JammingVsDistance => Spec {
                name: "jamming_vs_distance",
                title: "SU jamming power vs eavesdropper distance",
                x_col: "distance_m",
                y_col: "mean_p_j_mw",
                x_label: "ED-ST distance (m)",
                y_label: "mean jamming power (mW)",
                series_col: None,
                y_unit_range: false,
            },
            ChartKind::AlphaBetaVsDistance => Spec {
                name: "alphabeta_vs_distance",
                title: "Cooperation share vs eavesdropper distance",
                x_col: "distance_m",
                y_col: "mean_alpha_beta",
                x_label: "ED-ST distance (m)",
                y_label: "mean alpha*beta",
                series_col: None,
                y_unit_range: true,
            },
            ChartKind::UnreliableVsTime => Spec {
                name: "unreliable_vs_time",
                title: "Probability of selecting an unreliable SU",
                x_col: "window_end_slot",
                y_col: "p_unreliable",
                x_label: "slot",
                y_label: "P(unreliable selected)",
                series_col: Some("policy"),
                y_unit_range: true,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        self.spec().name
    }
}

impl FromStr for ChartKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChartKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown chart kind '{s}'")))
    }
}

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 45.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn collect_series(table: &ResultTable, spec: &Spec) -> Result<Vec<Series>> {
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| Error::Schema(format!("{} chart needs column '{name}'", spec.name)))
    };
    let xi = col(spec.x_col)?;
    let yi = col(spec.y_col)?;
    let si = spec.series_col.map(col).transpose()?;
    let mut series: Vec<Series> = Vec::new();
    for row in &table.rows {
        let num = |i: usize, name: &str| {
            row[i]
                .as_f64()
                .ok_or_else(|| Error::Schema(format!("column '{name}' is not numeric")))
        };
        let point = (num(xi, spec.x_col)?, num(yi, spec.y_col)?);
        let label = match si {
            Some(i) => row[i]
                .as_text()
                .ok_or_else(|| Error::Schema("series column is not text".into()))?
                .to_string(),
            None => spec.y_col.to_string(),
        };
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                label,
                points: vec![point],
            }),
        }
    }
    if series.is_empty() {
        return Err(Error::Schema("no rows to chart".into()));
    }
    Ok(series)
}

/// Round tick step covering `span` with roughly five intervals.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let s = format!("{v:.decimals$}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders the chart as a standalone SVG document.
pub fn render_chart(table: &ResultTable, kind: ChartKind) -> Result<String> {
    let spec = kind.spec();
    let series = collect_series(table, &spec)?;
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if spec.y_unit_range {
        y1 = y1.max(1.0);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let y_step = tick_step(y1 - y0);
    let y1 = (y1 / y_step).ceil() * y_step;
    let x_step = tick_step(x1 - x0);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="25" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(spec.title)
    );

    // grid and ticks
    let mut t = (y0 / y_step).ceil() * y_step;
    while t <= y1 + y_step * 1e-9 {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t, y_step)
        );
        t += y_step;
    }
    let mut t = (x0 / x_step).ceil() * x_step;
    while t <= x1 + x_step * 1e-9 {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/>"##,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 19.0,
            tick_label(t, x_step)
        );
        t += x_step;
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#333"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(spec.y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-series="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(&s.label),
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 12.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_chart(table: &ResultTable, kind: ChartKind, path: &Path) -> Result<()> {
    let svg = render_chart(table, kind)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
