//! Deterministic SVG line charts of metric CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};
use crate::metrics_csv::read_metrics;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(epoch, value)` with values in `[0, 1]`.
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Test accuracy (solid) and, when present, label precision (dashed) per file.
pub fn series_from_csv(path: &Path) -> Result<Vec<Series>> {
    let rows = read_metrics(path)?;
    let stem = path.file_stem().map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned());
    let accuracy: Vec<_> = rows.iter().filter_map(|r| r.test_accuracy.map(|v| (r.epoch as f64, v))).collect();
    let precision: Vec<_> = rows.iter().filter_map(|r| r.label_precision.map(|v| (r.epoch as f64, v))).collect();
    let mut out = Vec::new();
    if !accuracy.is_empty() {
        out.push(Series { label: format!("{stem} test_accuracy"), points: accuracy, dashed: false });
    }
    if !precision.is_empty() {
        out.push(Series { label: format!("{stem} label_precision"), points: precision, dashed: true });
    }
    if out.is_empty() {
        return Err(LabError::format(path, "no test_accuracy or label_precision values to plot"));
    }
    Ok(out)
}

pub fn render_svg(series: &[Series], title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let max_epoch = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(1.0_f64, f64::max);
    let x = |epoch: f64| LEFT + plot_w * (epoch / max_epoch);
    let y = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.1}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y(v) + 4.0,
            yy = y(v),
        );
    }
    let ticks = 5.min(max_epoch as usize).max(1);
    for i in 0..=ticks {
        let epoch = (max_epoch * i as f64 / ticks as f64).round();
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{epoch}</text>"#,
            x(epoch),
            TOP + plot_h + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">epoch</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s.points.iter().map(|&(e, v)| format!("{:.2},{:.2}", x(e), y(v))).collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reads every CSV and writes one chart to `output`.
pub fn emit_chart(csv_paths: &[PathBuf], output: &Path) -> Result<()> {
    if csv_paths.is_empty() {
        return Err(LabError::config("plot", "no CSV files given"));
    }
    let mut series = Vec::new();
    for path in csv_paths {
        series.extend(series_from_csv(path)?);
    }
    let title = output.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    std::fs::write(output, render_svg(&series, &title)).map_err(|e| LabError::io(output, e))
}
