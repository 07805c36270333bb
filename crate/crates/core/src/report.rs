//! Rendering of evaluation summaries.
//!
//! The table layout is for people: scores at 2 decimals, percentages at 1.
//! CSV and JSON carry every number at full precision.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::{CaseReport, EvaluationSummary};
use crate::rounding::{fmt_pct, fmt_score, fmt_signed_pct};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::usage(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn render_report(summary: &EvaluationSummary, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_table(summary),
        ReportFormat::Csv => render_csv(summary),
        ReportFormat::Json => render_json(summary),
    }
}

fn pattern_text(summary: &EvaluationSummary, case: &CaseReport) -> String {
    summary
        .modes
        .iter()
        .zip(&case.pattern)
        .map(|(m, l)| format!("{m}={}", u8::from(*l)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn aggregate_text(summary: &EvaluationSummary) -> String {
    match summary.weighted_improvement_pct {
        Some(v) => format!("{}%", fmt_pct(v)),
        None => "n/a".to_string(),
    }
}

fn render_table(summary: &EvaluationSummary) -> String {
    let headers = [
        "case",
        "pattern",
        "truth",
        "occurrences",
        "share",
        "f_w",
        "f_r",
        "rel_diff",
        "improvement",
    ];
    let rows: Vec<Vec<String>> = summary
        .cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                (i + 1).to_string(),
                pattern_text(summary, c),
                c.truth.to_string(),
                c.occurrences.to_string(),
                format!("{}%", fmt_pct(c.case_share_pct)),
                fmt_score(c.f_w),
                fmt_score(c.f_r),
                c.rel_diff_pct
                    .map(|v| format!("{}%", fmt_signed_pct(v)))
                    .unwrap_or_else(|| "undefined".into()),
                c.signed_improvement_pct
                    .map(|v| format!("{}%", fmt_signed_pct(v)))
                    .unwrap_or_else(|| "excluded".into()),
            ]
        })
        .collect();

    let widths: Vec<usize> = (0..headers.len())
        .map(|col| {
            rows.iter()
                .map(|r| r[col].len())
                .chain(std::iter::once(headers[col].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let text = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&headers, &mut out);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&cells, &mut out);
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "total_samples={} case_samples={} rounding={}",
        summary.total_samples,
        summary.case_samples(),
        summary.rounding_mode.label()
    );
    let _ = writeln!(out, "weights: {}", summary.weights_used.summary_line());
    let _ = writeln!(out, "weighted_improvement={}", aggregate_text(summary));
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn render_csv(summary: &EvaluationSummary) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["case".to_string(), "truth".to_string()];
    header.extend(summary.modes.iter().map(|m| m.to_string()));
    header.extend(
        [
            "occurrences",
            "case_share_pct",
            "f_w",
            "f_r",
            "rel_diff_pct",
            "signed_improvement_pct",
        ]
        .map(String::from),
    );
    writer.write_record(&header).expect("write to memory");
    for (i, c) in summary.cases.iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), c.truth.to_string()];
        row.extend(c.pattern.iter().map(|l| u8::from(*l).to_string()));
        row.push(c.occurrences.to_string());
        row.push(c.case_share_pct.to_string());
        row.push(c.f_w.to_string());
        row.push(c.f_r.to_string());
        row.push(opt(c.rel_diff_pct));
        row.push(opt(c.signed_improvement_pct));
        writer.write_record(&row).expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

#[derive(Serialize)]
struct JsonCase<'a> {
    case: usize,
    pattern: IndexMap<&'a str, u8>,
    truth: &'a str,
    occurrences: usize,
    case_share_pct: f64,
    f_w: f64,
    f_r: f64,
    rel_diff_pct: Option<f64>,
    signed_improvement_pct: Option<f64>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    modes: Vec<&'a str>,
    rounding: &'a str,
    weights: IndexMap<&'a str, f64>,
    total_samples: usize,
    case_samples: usize,
    weighted_improvement_pct: Option<f64>,
    excluded_cases: Vec<usize>,
    cases: Vec<JsonCase<'a>>,
}

fn render_json(summary: &EvaluationSummary) -> String {
    let report = JsonReport {
        modes: summary.modes.iter().map(|m| m.as_str()).collect(),
        rounding: summary.rounding_mode.label(),
        weights: summary
            .weights_used
            .iter()
            .map(|(m, w)| (m.as_str(), w))
            .collect(),
        total_samples: summary.total_samples,
        case_samples: summary.case_samples(),
        weighted_improvement_pct: summary.weighted_improvement_pct,
        excluded_cases: summary.excluded_cases.iter().map(|i| i + 1).collect(),
        cases: summary
            .cases
            .iter()
            .enumerate()
            .map(|(i, c)| JsonCase {
                case: i + 1,
                pattern: summary
                    .modes
                    .iter()
                    .zip(&c.pattern)
                    .map(|(m, l)| (m.as_str(), u8::from(*l)))
                    .collect(),
                truth: c.truth.as_str(),
                occurrences: c.occurrences,
                case_share_pct: c.case_share_pct,
                f_w: c.f_w,
                f_r: c.f_r,
                rel_diff_pct: c.rel_diff_pct,
                signed_improvement_pct: c.signed_improvement_pct,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}
