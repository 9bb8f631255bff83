//! Static SVG charts: per-class accuracy bars (real blue, model red), NAS
//! curve and sweep curve.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use genmetric_core::metrics::{EvaluationReport, GapRow};

use crate::error::HarnessError;
use crate::output::{OutputSet, PER_CLASS_HEADER, SWEEP_HEADER};
use crate::run::SweepReport;

pub const PER_CLASS_SVG: &str = "per_class.svg";
pub const NAS_SVG: &str = "nas.svg";
pub const SWEEP_SVG: &str = "sweep.svg";

pub const REAL_COLOR: &str = "#1f4e9c";
pub const MODEL_COLOR: &str = "#c62828";
const TOPK_COLOR: &str = "#6a6a6a";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;

/// One bar pair per class, drawn in the given order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBar {
    pub class: String,
    pub model_acc: Option<f64>,
    pub real_acc: Option<f64>,
}

impl From<&GapRow> for ClassBar {
    fn from(r: &GapRow) -> Self {
        Self {
            class: r.class.to_string(),
            model_acc: r.model_acc,
            real_acc: r.real_acc,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub parameter: String,
    pub grid: Vec<f64>,
    pub cas_top1: Vec<f64>,
    pub cas_topk: Vec<f64>,
}

impl SweepSeries {
    pub fn from_report(r: &SweepReport) -> Self {
        Self {
            parameter: r.parameter.clone(),
            grid: r.rows.iter().map(|row| row.grid_value).collect(),
            cas_top1: r.rows.iter().map(|row| row.cas_top1).collect(),
            cas_topk: r.rows.iter().map(|row| row.cas_topk).collect(),
        }
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn plot_y(v: f64, lo: f64, hi: f64) -> f64 {
    let h = HEIGHT - TOP - BOTTOM;
    HEIGHT - BOTTOM - (v - lo) / (hi - lo) * h
}

fn plot_x(v: f64, lo: f64, hi: f64) -> f64 {
    let w = WIDTH - LEFT - RIGHT;
    if hi > lo {
        LEFT + (v - lo) / (hi - lo) * w
    } else {
        LEFT + w / 2.0
    }
}

fn y_axis(svg: &mut String, lo: f64, hi: f64, label: &str) {
    for i in 0..=4 {
        let v = lo + (hi - lo) * f64::from(i) / 4.0;
        let y = plot_y(v, lo, hi);
        let _ = writeln!(
            svg,
            r##"<line class="grid" x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(label)
    );
}

fn x_label(svg: &mut String, label: &str) {
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0,
        escape(label)
    );
}

fn legend(svg: &mut String, entries: &[(&str, &str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        let x = WIDTH - RIGHT - 120.0;
        let y = TOP + 4.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line class="legend" x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="6"/>"#,
            x + 16.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 22.0, y + 4.0, escape(name));
    }
}

/// Grouped bars: each class gets a real (blue) and model (red) bar. Missing
/// accuracies draw as zero-height bars so the bar count is always `2 K`.
pub fn per_class_svg(bars: &[ClassBar]) -> Vec<u8> {
    let mut svg = String::new();
    header(&mut svg, "Per-class accuracy: real data vs model");
    y_axis(&mut svg, 0.0, 1.0, "top-1 accuracy");
    x_label(&mut svg, "class (sorted by model - real gap)");
    let slot = (WIDTH - LEFT - RIGHT) / bars.len().max(1) as f64;
    let bar_w = (slot * 0.4).max(0.5);
    let base = plot_y(0.0, 0.0, 1.0);
    for (i, bar) in bars.iter().enumerate() {
        let x0 = LEFT + slot * i as f64 + slot * 0.1;
        for (j, (series, color, value)) in [("real", REAL_COLOR, bar.real_acc), ("model", MODEL_COLOR, bar.model_acc)]
            .into_iter()
            .enumerate()
        {
            let v = value.unwrap_or(0.0).clamp(0.0, 1.0);
            let top = plot_y(v, 0.0, 1.0);
            let _ = writeln!(
                svg,
                r#"<rect class="bar {series}" data-class="{}" x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}" fill="{color}"/>"#,
                escape(&bar.class),
                x0 + bar_w * j as f64,
                base - top
            );
        }
        if bars.len() <= 40 {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x0 + bar_w,
                base + 14.0,
                escape(&bar.class)
            );
        }
    }
    legend(&mut svg, &[("real", REAL_COLOR), ("model", MODEL_COLOR)]);
    svg.push_str("</svg>\n");
    svg.into_bytes()
}

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
}

fn line_chart(title: &str, x_name: &str, y_name: &str, series: &[Series], reference: Option<(&str, f64)>) -> Vec<u8> {
    let mut svg = String::new();
    header(&mut svg, title);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    y_axis(&mut svg, 0.0, 1.0, y_name);
    x_label(&mut svg, x_name);
    if let Some((name, y)) = reference {
        let yy = plot_y(y.clamp(0.0, 1.0), 0.0, 1.0);
        let _ = writeln!(
            svg,
            r#"<line class="reference" x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="{REAL_COLOR}" stroke-dasharray="6 4"/>"#,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            LEFT + 4.0,
            yy - 4.0,
            escape(name)
        );
    }
    for s in series {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", plot_x(x, x_lo, x_hi), plot_y(y.clamp(0.0, 1.0), 0.0, 1.0)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            pts.join(" "),
            s.color
        );
        for (&(x, y), p) in s.points.iter().zip(&pts) {
            let (px, py) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(
                svg,
                r#"<circle class="point" cx="{px}" cy="{py}" r="3" fill="{}"><title>{x} {y:.4}</title></circle>"#,
                s.color
            );
        }
    }
    if let Some(first) = series.first() {
        for &(x, _) in &first.points {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
                plot_x(x, x_lo, x_hi),
                HEIGHT - BOTTOM + 14.0
            );
        }
    }
    let entries: Vec<(&str, &str)> = series.iter().map(|s| (s.name, s.color)).collect();
    legend(&mut svg, &entries);
    svg.push_str("</svg>\n");
    svg.into_bytes()
}

/// Top-1 accuracy against the fraction of added synthetic data, with the
/// real baseline as a dashed reference.
pub fn nas_svg(report: &EvaluationReport) -> Vec<u8> {
    let points = report.nas.iter().map(|p| (p.fraction, p.top1)).collect();
    line_chart(
        "Naive augmentation: top-1 vs synthetic fraction",
        "synthetic fraction of real training size",
        "top-1 accuracy",
        &[Series {
            name: "real + synthetic",
            color: MODEL_COLOR,
            points,
        }],
        Some(("real baseline", report.baseline_top1)),
    )
}

pub fn sweep_svg(s: &SweepSeries) -> Vec<u8> {
    let top1 = s.grid.iter().copied().zip(s.cas_top1.iter().copied()).collect();
    let topk = s.grid.iter().copied().zip(s.cas_topk.iter().copied()).collect();
    line_chart(
        "Classification accuracy score across the sweep",
        &s.parameter,
        "accuracy on real test data",
        &[
            Series {
                name: "CAS top-1",
                color: MODEL_COLOR,
                points: top1,
            },
            Series {
                name: "CAS top-k",
                color: TOPK_COLOR,
                points: topk,
            },
        ],
        None,
    )
}

fn malformed(path: &Path, why: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{}: {why}", path.display()))
}

fn parse_opt(path: &Path, s: &str) -> Result<Option<f64>, HarnessError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|e| malformed(path, format!("bad number `{s}`: {e}")))
}

fn parse_num(path: &Path, s: &str) -> Result<f64, HarnessError> {
    parse_opt(path, s)?.ok_or_else(|| malformed(path, "missing value"))
}

/// Renders the charts for a `report.json`, `sweep.json`, `per_class.csv` or
/// `sweep.csv` file.
pub fn charts_for(path: &Path) -> Result<OutputSet, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| malformed(path, e))?;
    let mut out = OutputSet::default();
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    if is_json {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| malformed(path, e))?;
        if value.get("rows").is_some() {
            let report: SweepReport = serde_json::from_value(value).map_err(|e| malformed(path, e))?;
            out.add(SWEEP_SVG, sweep_svg(&SweepSeries::from_report(&report)));
        } else {
            let report: EvaluationReport = serde_json::from_value(value).map_err(|e| malformed(path, e))?;
            let bars: Vec<ClassBar> = report.per_class.iter().map(ClassBar::from).collect();
            out.add(PER_CLASS_SVG, per_class_svg(&bars));
            if !report.nas.is_empty() {
                out.add(NAS_SVG, nas_svg(&report));
            }
        }
        return Ok(out);
    }

    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let records = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| malformed(path, e))?;
    if header == PER_CLASS_HEADER {
        let bars = records
            .iter()
            .map(|r| {
                Ok(ClassBar {
                    class: r[0].to_string(),
                    model_acc: parse_opt(path, &r[1])?,
                    real_acc: parse_opt(path, &r[2])?,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        out.add(PER_CLASS_SVG, per_class_svg(&bars));
    } else if header == SWEEP_HEADER {
        let mut s = SweepSeries {
            parameter: "grid value".into(),
            grid: Vec::new(),
            cas_top1: Vec::new(),
            cas_topk: Vec::new(),
        };
        for r in &records {
            s.grid.push(parse_num(path, &r[0])?);
            s.cas_top1.push(parse_num(path, &r[1])?);
            s.cas_topk.push(parse_num(path, &r[2])?);
        }
        out.add(SWEEP_SVG, sweep_svg(&s));
    } else {
        return Err(malformed(path, format!("unrecognized CSV header {}", header.join(","))));
    }
    Ok(out)
}

/// Writes the charts for `path` into `out_dir`.
pub fn plot(path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    charts_for(path)?.write(out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bars(k: usize) -> Vec<ClassBar> {
        (0..k)
            .map(|c| ClassBar {
                class: c.to_string(),
                model_acc: Some(0.1 * c as f64),
                real_acc: if c == 0 { None } else { Some(0.9) },
            })
            .collect()
    }

    #[test]
    fn per_class_chart_has_two_bars_per_class() {
        for k in [1, 3, 7] {
            let svg = String::from_utf8(per_class_svg(&bars(k))).unwrap();
            assert_eq!(svg.matches(r#"class="bar real""#).count(), k);
            assert_eq!(svg.matches(r#"class="bar model""#).count(), k);
            assert!(svg.contains(REAL_COLOR) && svg.contains(MODEL_COLOR));
        }
    }

    #[test]
    fn charts_are_deterministic() {
        assert_eq!(per_class_svg(&bars(4)), per_class_svg(&bars(4)));
        let s = SweepSeries {
            parameter: "truncation".into(),
            grid: vec![0.2, 0.5, 1.0],
            cas_top1: vec![0.3, 0.5, 0.6],
            cas_topk: vec![0.8, 0.9, 0.95],
        };
        assert_eq!(sweep_svg(&s), sweep_svg(&s));
    }

    #[test]
    fn single_point_sweep_renders() {
        let s = SweepSeries {
            parameter: "truncation".into(),
            grid: vec![1.0],
            cas_top1: vec![0.5],
            cas_topk: vec![0.9],
        };
        let svg = String::from_utf8(sweep_svg(&s)).unwrap();
        assert!(!svg.contains("NaN"));
    }
}
