//! Report emission: CSV rows, JSON summary and a log-log SVG plot.
//!
//! Outputs are byte-stable for identical reports: floats print through
//! the shortest-round-trip formatter everywhere.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::experiment::{summarize, MethodSummary, RateReport, ResultRow};
use crate::BenchError;

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("n,replication,method,error\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.n, r.replication, r.method, r.error));
    }
    out
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>, BenchError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(BenchError::Config(format!("bad csv line {}", i + 1)));
        }
        rows.push(ResultRow {
            n: parts[0].parse().map_err(|_| BenchError::Config("bad n".into()))?,
            replication: parts[1]
                .parse()
                .map_err(|_| BenchError::Config("bad replication".into()))?,
            method: parts[2].to_string(),
            error: parts[3].parse().map_err(|_| BenchError::Config("bad error".into()))?,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct Summary<'a> {
    fixture: &'a str,
    method: &'a str,
    theoretical_exponent: f64,
    slope_tolerance: f64,
    theoretical_architecture: bool,
    summaries: &'a [MethodSummary],
    failures: &'a [String],
    init_block_confined: Option<bool>,
}

pub fn summary_json(report: &RateReport) -> String {
    let s = Summary {
        fixture: &report.fixture,
        method: &report.method,
        theoretical_exponent: report.theoretical_exponent,
        slope_tolerance: report.slope_tolerance,
        theoretical_architecture: report.theoretical_architecture,
        summaries: &report.summaries,
        failures: &report.failures,
        init_block_confined: report.init_block_confined,
    };
    serde_json::to_string_pretty(&s).expect("summary serializes")
}

/// Log-log error plot with one reference line of the theoretical slope
/// per method summary.
pub fn rate_plot_svg(report: &RateReport) -> String {
    let (w, h) = (640.0, 420.0);
    let margin = 60.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    let pts: Vec<(f64, f64)> = report
        .summaries
        .iter()
        .flat_map(|s| {
            s.n.iter()
                .zip(&s.mean_error)
                .map(|(&n, &e)| ((n as f64).ln(), e.max(1e-300).ln()))
        })
        .collect();
    if pts.is_empty() {
        svg.push_str("<text x=\"20\" y=\"30\">no data</text>\n</svg>\n");
        return svg;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if (x1 - x0).abs() < 1e-12 {
        x1 = x0 + 1.0;
    }
    if (y1 - y0).abs() < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        margin,
        h - margin,
        w - margin,
        h - margin
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        margin,
        margin,
        margin,
        h - margin
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">log n</text>\n",
        w / 2.0,
        h - margin / 3.0
    ));
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    for (i, s) in report.summaries.iter().enumerate() {
        let color = colors[i % colors.len()];
        let mut path = String::new();
        for (k, (&n, &e)) in s.n.iter().zip(&s.mean_error).enumerate() {
            let (px, py) = (sx((n as f64).ln()), sy(e.max(1e-300).ln()));
            path.push_str(if k == 0 { "M" } else { "L" });
            path.push_str(&format!("{px:.2} {py:.2} "));
            svg.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
        }
        svg.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
        // reference line with the theoretical slope through the first point
        if let (Some(&n_first), Some(&e_first)) = (s.n.first(), s.mean_error.first()) {
            let xa = (n_first as f64).ln();
            let ya = e_first.max(1e-300).ln();
            let xb = x1;
            let yb = ya - s.theoretical_exponent * (xb - xa);
            svg.push_str(&format!(
                "<line class=\"reference\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"{color}\" stroke-dasharray=\"6 4\"/>\n",
                sx(xa),
                sy(ya),
                sx(xb),
                sy(yb)
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"{color}\">{} \
                 (slope {:.3}, target {:.3})</text>\n",
                margin + 8.0,
                margin + 16.0 * (i as f64 + 1.0),
                s.method,
                s.slope,
                -s.theoretical_exponent
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write `results.csv`, `summary.json` and `rate_plot.svg` into `dir`.
pub fn emit_report(report: &RateReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(&report.rows))?;
    fs::write(dir.join("summary.json"), summary_json(report))?;
    fs::write(dir.join("rate_plot.svg"), rate_plot_svg(report))?;
    Ok(())
}

/// Rebuild the summary and plot from a previously written results.csv.
pub fn reemit_from_dir(
    dir: &Path,
    exponent: f64,
    tolerance: f64,
) -> Result<RateReport, BenchError> {
    let rows = parse_results_csv(&fs::read_to_string(dir.join("results.csv"))?)?;
    let mut n_grid: Vec<usize> = rows.iter().map(|r| r.n).collect();
    n_grid.sort_unstable();
    n_grid.dedup();
    let summaries = summarize(&rows, &n_grid, exponent, tolerance);
    let report = RateReport {
        fixture: "(rebuilt)".into(),
        method: "(rebuilt)".into(),
        theoretical_exponent: exponent,
        slope_tolerance: tolerance,
        theoretical_architecture: false,
        rows,
        summaries,
        failures: vec![],
        init_block_confined: None,
    };
    emit_report(&report, dir)?;
    Ok(report)
}
