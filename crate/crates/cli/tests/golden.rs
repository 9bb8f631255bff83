//! Renders checked-in report fixtures and compares with the golden outputs.

use std::fs;
use std::path::PathBuf;

use genmetric::output::{per_class_csv, summary_csv, sweep_csv};
use genmetric::plot::{charts_for, sweep_svg, SweepSeries, PER_CLASS_SVG, SWEEP_SVG};
use genmetric::run::SweepReport;
use genmetric_core::metrics::EvaluationReport;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn text(name: &str) -> String {
    fs::read_to_string(golden(name)).unwrap()
}

fn report() -> EvaluationReport {
    serde_json::from_str(&text("report_fixture.json")).unwrap()
}

fn sweep() -> SweepReport {
    serde_json::from_str(&text("sweep_fixture.json")).unwrap()
}

#[test]
fn summary_csv_matches_golden() {
    assert_eq!(String::from_utf8(summary_csv(&report()).unwrap()).unwrap(), text("summary.csv"));
}

#[test]
fn per_class_csv_matches_golden() {
    assert_eq!(
        String::from_utf8(per_class_csv(&report().per_class).unwrap()).unwrap(),
        text("per_class.csv")
    );
}

#[test]
fn sweep_csv_matches_golden() {
    assert_eq!(String::from_utf8(sweep_csv(&sweep()).unwrap()).unwrap(), text("sweep.csv"));
}

#[test]
fn svgs_match_golden() {
    let charts = charts_for(&golden("per_class.csv")).unwrap();
    assert_eq!(charts.get(PER_CLASS_SVG).unwrap(), text("per_class.svg").as_bytes());
    assert_eq!(sweep_svg(&SweepSeries::from_report(&sweep())), text("sweep.svg").into_bytes());
    let from_json = charts_for(&golden("sweep_fixture.json")).unwrap();
    assert_eq!(from_json.get(SWEEP_SVG).unwrap(), text("sweep.svg").as_bytes());
}

#[test]
fn per_class_svg_has_two_bars_per_class_in_fixed_colors() {
    let svg = text("per_class.svg");
    let k = report().per_class.len();
    assert_eq!(svg.matches("<rect class=\"bar real\"").count(), k);
    assert_eq!(svg.matches("<rect class=\"bar model\"").count(), k);
    for line in svg.lines().filter(|l| l.contains("bar real")) {
        assert!(line.contains(genmetric::plot::REAL_COLOR));
    }
    for line in svg.lines().filter(|l| l.contains("bar model")) {
        assert!(line.contains(genmetric::plot::MODEL_COLOR));
    }
}

#[test]
fn sweep_rows_keep_grid_order() {
    let s = sweep();
    let grid: Vec<f64> = s.rows.iter().map(|r| r.grid_value).collect();
    assert_eq!(grid, vec![1.0, 0.25, 0.5]);
    let csv = text("sweep.csv");
    let first_column: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(first_column, ["1", "0.25", "0.5"]);
}
