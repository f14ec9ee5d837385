use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MetricReport;

pub const METRIC_NAMES: [&str; 5] = [
    "goal_achievement",
    "constraint_adherence",
    "preference_alignment",
    "stakeholder_management",
    "completion_time_hours",
];

/// Mean and population standard deviation over the present values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

pub fn summarize(values: impl IntoIterator<Item = Option<f64>>) -> Option<Summary> {
    let xs: Vec<f64> = values.into_iter().flatten().collect();
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some(Summary {
        mean,
        std: var.sqrt(),
        n: xs.len(),
    })
}

pub fn metric_value(report: &MetricReport, name: &str) -> Option<f64> {
    match name {
        "goal_achievement" => report.goal_achievement,
        "constraint_adherence" => Some(report.constraint_adherence),
        "preference_alignment" => Some(report.preference_alignment),
        "stakeholder_management" => Some(report.stakeholder_management),
        "completion_time_hours" => Some(report.completion_time_hours),
        _ => None,
    }
}

/// One row per (scenario, policy) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub policy: String,
    pub episodes: usize,
    pub metrics: BTreeMap<String, Option<Summary>>,
}

/// Group `(scenario, policy, report)` triples and summarise each metric.
pub fn summary_rows<'a>(runs: impl IntoIterator<Item = (&'a str, &'a str, &'a MetricReport)>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String), Vec<&MetricReport>> = BTreeMap::new();
    for (scenario, policy, report) in runs {
        groups.entry((scenario.to_string(), policy.to_string())).or_default().push(report);
    }
    groups
        .into_iter()
        .map(|((scenario, policy), reports)| SummaryRow {
            episodes: reports.len(),
            metrics: METRIC_NAMES
                .iter()
                .map(|m| (m.to_string(), summarize(reports.iter().map(|r| metric_value(r, m)))))
                .collect(),
            scenario,
            policy,
        })
        .collect()
}

fn cell(s: Option<&Summary>, precision: usize) -> String {
    match s {
        Some(s) => format!("{:.p$} ± {:.p$}", s.mean, s.std, p = precision),
        None => "n/a".to_string(),
    }
}

pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut header = vec!["scenario".to_string(), "policy".to_string(), "n".to_string()];
    header.extend(METRIC_NAMES.iter().map(|m| m.to_string()));
    let mut body: Vec<Vec<String>> = vec![header];
    for r in rows {
        let mut line = vec![r.scenario.clone(), r.policy.clone(), r.episodes.to_string()];
        for m in METRIC_NAMES {
            let precision = if m == "completion_time_hours" { 1 } else { 3 };
            line.push(cell(r.metrics.get(m).and_then(Option::as_ref), precision));
        }
        body.push(line);
    }
    let cols = body[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| body.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in body.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
        }
    }
    out
}

pub fn render_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("scenario,policy,n");
    for m in METRIC_NAMES {
        let _ = write!(out, ",{m}_mean,{m}_std");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{}", r.scenario, r.policy, r.episodes);
        for m in METRIC_NAMES {
            match r.metrics.get(m).and_then(Option::as_ref) {
                Some(s) => {
                    let _ = write!(out, ",{},{}", s.mean, s.std);
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}
