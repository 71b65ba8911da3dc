//! Rendering of comparison and sensitivity reports.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;

use super::compare::{CompareReport, CurvePoint};
use super::sensitivity::NormalizedCurvePoint;
use crate::stats::SensitivityReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// Aligned plain-text tables.
    #[default]
    Text,
    /// Comma-separated values with a header row.
    Delimited,
    /// Pretty-printed JSON.
    Structured,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn fmt_p(p: f64) -> String {
    if p >= 1e-3 {
        format!("{p:.3}")
    } else {
        format!("{p:.3e}")
    }
}

pub fn render_compare(r: &CompareReport, format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Structured => return json(r),
        Format::Delimited => {
            s.push_str("comparison,s_or_d,r,ties,p_value,decision\n");
            for row in &r.rows {
                let t = &row.test;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    row.label(),
                    t.wins,
                    t.losses,
                    t.ties,
                    t.p_value,
                    row.decision_text()
                );
            }
        }
        Format::Text => {
            let _ = writeln!(
                s,
                "thresholds: tau_conv = {}, tau_metric = {}",
                r.tau_conv, r.tau_metric
            );
            let _ = writeln!(
                s,
                "{:<22} {:>4} {:>4} {:>5} {:>10}  {}",
                "Comparison", "S/D", "R", "Ties", "p-value", "Decision"
            );
            for row in &r.rows {
                let t = &row.test;
                let _ = writeln!(
                    s,
                    "{:<22} {:>4} {:>4} {:>5} {:>10}  {}",
                    row.label(),
                    t.wins,
                    t.losses,
                    t.ties,
                    fmt_p(t.p_value),
                    row.decision_text()
                );
            }
            if !r.spread.is_empty() {
                s.push_str("\nObjective spread\n");
                for (k, v) in &r.spread {
                    match v {
                        Some(v) => {
                            let _ = writeln!(s, "  {k:<20} {v:.4}");
                        }
                        None => {
                            let _ = writeln!(s, "  {k:<20} n/a");
                        }
                    }
                }
            }
        }
    }
    for w in &r.warnings {
        if format == Format::Text {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    s
}

pub fn render_sensitivity(r: &SensitivityReport, format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Structured => return json(r),
        Format::Delimited => {
            s.push_str("metric,pearson_r,p_value\n");
            for row in &r.rows {
                match &row.correlation {
                    Some(c) => {
                        let _ = writeln!(s, "{},{},{}", row.metric.label(), c.r, c.p);
                    }
                    None => {
                        let _ = writeln!(s, "{},undefined,undefined", row.metric.label());
                    }
                }
            }
        }
        Format::Text => {
            let lambdas: Vec<String> = r.lambdas.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(
                s,
                "{} runs, lambda in {{{}}}, split {}",
                r.runs,
                lambdas.join(", "),
                r.split
            );
            let _ = writeln!(s, "{:<20} {:>10} {:>10}", "Metric", "Pearson r", "p-value");
            for row in &r.rows {
                match &row.correlation {
                    Some(c) => {
                        let _ = writeln!(s, "{:<20} {:>10.3} {:>10}", row.metric.label(), c.r, fmt_p(c.p));
                    }
                    None => {
                        let _ = writeln!(s, "{:<20} {:>10} {:>10}", row.metric.label(), "undefined", "undefined");
                    }
                }
            }
        }
    }
    s
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("objective,arm,iteration,runs,mean,std,min,max\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.objective, p.arm, p.iteration, p.runs, p.mean, p.std, p.min, p.max
        );
    }
    s
}

pub fn normalized_curves_csv(points: &[NormalizedCurvePoint]) -> String {
    let mut s = String::from("lambda,iteration,runs,mean_normalized_running_best\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.lambda, p.iteration, p.runs, p.mean);
    }
    s
}

/// Per-run λ and normalized metric values, one column per metric.
pub fn normalized_metrics_csv(r: &SensitivityReport) -> String {
    let metrics: Vec<_> = r.normalized.keys().copied().collect();
    let mut s = String::from("lambda");
    for m in &metrics {
        let _ = write!(s, ",{}", m.label());
    }
    s.push('\n');
    for (i, l) in r.run_lambdas.iter().enumerate() {
        let _ = write!(s, "{l}");
        for m in &metrics {
            let _ = write!(s, ",{}", r.normalized[m][i]);
        }
        s.push('\n');
    }
    s
}
