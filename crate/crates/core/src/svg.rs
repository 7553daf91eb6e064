//! Line charts rendered straight to SVG text.

use std::fmt::Write as _;

use crate::csvlog::CsvLog;
use crate::error::Result;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 10;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x: String,
    /// Plotted columns; each becomes one series per group.
    pub y: Vec<String>,
    /// Rows are split into groups by the value of this column.
    pub group_by: Option<String>,
    /// Columns drawn once (from the first group) as dashed reference lines.
    pub reference: Vec<String>,
    pub x_unit: String,
    pub y_unit: String,
}

impl ChartSpec {
    pub fn new(title: &str, x: &str, y: &[&str]) -> Self {
        ChartSpec {
            title: title.to_string(),
            x: x.to_string(),
            y: y.iter().map(|s| s.to_string()).collect(),
            group_by: None,
            reference: Vec::new(),
            x_unit: String::new(),
            y_unit: String::new(),
        }
    }

    pub fn group_by(mut self, col: &str) -> Self {
        self.group_by = Some(col.to_string());
        self
    }

    pub fn reference(mut self, cols: &[&str]) -> Self {
        self.reference = cols.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn units(mut self, x_unit: &str, y_unit: &str) -> Self {
        self.x_unit = x_unit.to_string();
        self.y_unit = y_unit.to_string();
        self
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn axis_label(name: &str, unit: &str) -> String {
    if unit.is_empty() {
        name.to_string()
    } else {
        format!("{name} ({unit})")
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

fn collect_series(log: &CsvLog, spec: &ChartSpec) -> Result<Vec<Series>> {
    let xs = log.numeric_column(&spec.x)?;
    let groups: Vec<String> = match &spec.group_by {
        Some(g) => log.column(g)?.into_iter().map(str::to_string).collect(),
        None => vec![String::new(); log.rows().len()],
    };
    let mut order: Vec<String> = Vec::new();
    for g in &groups {
        if !order.contains(g) {
            order.push(g.clone());
        }
    }
    let mut out = Vec::new();
    let mut push_series = |col: &str, group: &str, dashed: bool, ys: &[Option<f64>]| {
        let points: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .zip(&groups)
            .filter(|(_, g)| g.as_str() == group)
            .filter_map(|((x, y), _)| Some(((*x)?, (*y)?)))
            .collect();
        let label = match (&spec.group_by, dashed) {
            (Some(g), false) => format!("{col} {g}={group}"),
            _ => col.to_string(),
        };
        out.push(Series {
            label,
            points,
            dashed,
        });
    };
    let y_cols: Vec<Vec<Option<f64>>> = spec
        .y
        .iter()
        .map(|c| log.numeric_column(c))
        .collect::<Result<_>>()?;
    let ref_cols: Vec<Vec<Option<f64>>> = spec
        .reference
        .iter()
        .map(|c| log.numeric_column(c))
        .collect::<Result<_>>()?;
    for group in &order {
        for (col, ys) in spec.y.iter().zip(&y_cols) {
            push_series(col, group, false, ys);
        }
    }
    if let Some(first) = order.first() {
        for (col, ys) in spec.reference.iter().zip(&ref_cols) {
            push_series(col, first, true, ys);
        }
    }
    out.retain(|s| !s.points.is_empty());
    Ok(out)
}

/// Renders a line chart of `log`. Non-numeric cells are skipped; a column
/// named in `spec` but absent from the log is a usage error.
pub fn render_svg(log: &CsvLog, spec: &ChartSpec) -> Result<String> {
    let series = collect_series(log, spec)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(&axis_label(&spec.x, &spec.x_unit))
    );
    let y_title = axis_label(&spec.y.join(", "), &spec.y_unit);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(&y_title)
    );

    let all = || series.iter().flat_map(|se| se.points.iter());
    let (xmin, xmax) = if series.is_empty() {
        (0.0, 1.0)
    } else {
        range(all().map(|p| p.0))
    };
    let (ymin, ymax) = if series.is_empty() {
        (0.0, 1.0)
    } else {
        range(all().map(|p| p.1))
    };
    let px = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
    let py = |y: f64| y0 - (y - ymin) / (ymax - ymin) * (y0 - y1);

    for i in 0..TICKS {
        let t = i as f64 / (TICKS - 1) as f64;
        let xv = xmin + t * (xmax - xmin);
        let yv = ymin + t * (ymax - ymin);
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.2}" y1="{y0}" x2="{tx:.2}" y2="{}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ty:.2}" x2="{x0}" y2="{ty:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            x0 - 8.0,
            ty + 3.0,
            tick_label(yv)
        );
    }

    if series.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="gray">no data</text>"#,
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0
        );
    }
    for (i, se) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = se
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let dash = if se.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10">{}</text>"#,
            lx + 25.0,
            ly + 4.0,
            escape(&se.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
