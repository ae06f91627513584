//! Cross-run analysis: correlation between closed-set accuracy and open-set
//! AUROC, and per-group summary statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runio::ParseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("correlation needs equal-length series of at least 2 points (got {x} and {y})")]
    Length { x: usize, y: usize },
    #[error("correlation undefined for constant series")]
    ConstantSeries,
    #[error("no summaries to aggregate")]
    Empty,
    #[error("unknown group_by field {0:?} (expected run_id, method or dataset)")]
    UnknownField(String),
    #[error("fewer than 2 valid points overall")]
    TooFewPoints,
}

/// Headline metrics of one evaluated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub method: String,
    pub dataset: String,
    pub accuracy: f64,
    pub auroc: f64,
    pub oscr: f64,
    pub ap: f64,
}

const SUMMARY_HEADER: [&str; 7] = ["run_id", "method", "dataset", "accuracy", "auroc", "oscr", "ap"];

/// Reads `run_id,method,dataset,accuracy,auroc,oscr,ap`.
pub fn parse_summaries<R: Read>(reader: R) -> Result<Vec<RunSummary>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or(ParseError::Empty("summary file has no header"))?
        .map_err(|e| ParseError::Csv {
            row: 1,
            message: e.to_string(),
        })?;
    if header.iter().ne(SUMMARY_HEADER.iter().copied()) {
        return Err(ParseError::Header(format!("expected `{}`", SUMMARY_HEADER.join(","))));
    }
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for record in records {
        let record = record.map_err(|e| ParseError::Csv {
            row: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != SUMMARY_HEADER.len() {
            return Err(ParseError::RowWidth {
                row,
                expected: SUMMARY_HEADER.len(),
                found: record.len(),
            });
        }
        let metric = |col: usize| -> Result<f64, ParseError> {
            let cell = &record[col];
            let v: f64 = cell.trim().parse().map_err(|_| ParseError::InvalidNumber {
                row,
                column: col + 1,
                value: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(ParseError::NonFinite { row, column: col + 1 });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(ParseError::OutOfUnitRange {
                    row,
                    column: col + 1,
                    value: v,
                });
            }
            Ok(v)
        };
        let summary = RunSummary {
            run_id: record[0].to_owned(),
            method: record[1].to_owned(),
            dataset: record[2].to_owned(),
            accuracy: metric(3)?,
            auroc: metric(4)?,
            oscr: metric(5)?,
            ap: metric(6)?,
        };
        if !ids.insert(summary.run_id.clone()) {
            return Err(ParseError::Invalid(format!(
                "duplicate run_id {:?} at row {row}",
                summary.run_id
            )));
        }
        out.push(summary);
    }
    Ok(out)
}

pub fn write_summaries<W: Write>(summaries: &[RunSummary], mut writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(&mut writer);
    wtr.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        wtr.write_record([
            s.run_id.clone(),
            s.method.clone(),
            s.dataset.clone(),
            s.accuracy.to_string(),
            s.auroc.to_string(),
            s.oscr.to_string(),
            s.ap.to_string(),
        ])?;
    }
    wtr.flush()
}

/// Pearson product-moment correlation, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(AnalysisError::Length { x: x.len(), y: y.len() });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::ConstantSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Field of [`RunSummary`] to group by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupField {
    RunId,
    Method,
    Dataset,
}

impl GroupField {
    fn key(self, s: &RunSummary) -> &str {
        match self {
            GroupField::RunId => &s.run_id,
            GroupField::Method => &s.method,
            GroupField::Dataset => &s.dataset,
        }
    }
}

impl FromStr for GroupField {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "run_id" => Ok(GroupField::RunId),
            "method" => Ok(GroupField::Method),
            "dataset" | "split" => Ok(GroupField::Dataset),
            other => Err(AnalysisError::UnknownField(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub auroc: f64,
    pub oscr: f64,
    pub ap: f64,
}

/// Mean and population standard deviation of each metric within one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: String,
    pub count: usize,
    pub mean: MetricSet,
    pub std: MetricSet,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-group means and population standard deviations, groups in
/// lexicographic order.
pub fn aggregate(summaries: &[RunSummary], group_by: GroupField) -> Result<Vec<GroupStats>, AnalysisError> {
    if summaries.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut groups: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(group_by.key(s)).or_default().push(s);
    }
    Ok(groups
        .into_iter()
        .map(|(group, members)| {
            let stat = |f: fn(&RunSummary) -> f64| {
                mean_std(&members.iter().map(|s| f(s)).collect::<Vec<_>>())
            };
            let (acc, auroc, oscr, ap) = (
                stat(|s| s.accuracy),
                stat(|s| s.auroc),
                stat(|s| s.oscr),
                stat(|s| s.ap),
            );
            GroupStats {
                group: group.to_owned(),
                count: members.len(),
                mean: MetricSet {
                    accuracy: acc.0,
                    auroc: auroc.0,
                    oscr: oscr.0,
                    ap: ap.0,
                },
                std: MetricSet {
                    accuracy: acc.1,
                    auroc: auroc.1,
                    oscr: oscr.1,
                    ap: ap.1,
                },
            }
        })
        .collect())
}

/// Accuracy/AUROC correlation within one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCorrelation {
    pub method: String,
    pub n: usize,
    /// `None` when the group has fewer than 2 runs or a constant series.
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub rho: f64,
    pub per_method: Vec<MethodCorrelation>,
}

/// Pearson correlation between accuracy and AUROC over all runs and within
/// each method (methods in lexicographic order).
pub fn correlation_report(summaries: &[RunSummary]) -> Result<CorrelationReport, AnalysisError> {
    if summaries.len() < 2 {
        return Err(AnalysisError::TooFewPoints);
    }
    let acc: Vec<f64> = summaries.iter().map(|s| s.accuracy).collect();
    let auroc: Vec<f64> = summaries.iter().map(|s| s.auroc).collect();
    let rho = pearson(&acc, &auroc)?;

    let mut by_method: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for s in summaries {
        let entry = by_method.entry(s.method.as_str()).or_default();
        entry.0.push(s.accuracy);
        entry.1.push(s.auroc);
    }
    let per_method = by_method
        .into_iter()
        .map(|(method, (x, y))| {
            let (rho, note) = match pearson(&x, &y) {
                Ok(r) => (Some(r), None),
                Err(AnalysisError::Length { .. }) => (None, Some("n/a: fewer than 2 runs".to_owned())),
                Err(e) => (None, Some(e.to_string())),
            };
            MethodCorrelation {
                method: method.to_owned(),
                n: x.len(),
                rho,
                note,
            }
        })
        .collect();
    Ok(CorrelationReport {
        n: summaries.len(),
        rho,
        per_method,
    })
}

/// Correlation report plus grouped statistics, as emitted by `correlate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub correlation: CorrelationReport,
    pub groups: Vec<GroupStats>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "accuracy/AUROC correlation: rho = {:.4} (n = {})", self.correlation.rho, self.correlation.n);
        let width = self
            .correlation
            .per_method
            .iter()
            .map(|m| m.method.len())
            .chain(self.groups.iter().map(|g| g.group.len()))
            .chain(std::iter::once(6))
            .max()
            .unwrap_or(6);
        let _ = writeln!(out, "\n{:<width$}  {:>4}  {:>8}", "method", "n", "rho");
        for m in &self.correlation.per_method {
            let rho = m.rho.map_or_else(|| "n/a".to_owned(), |r| format!("{r:.4}"));
            let _ = writeln!(out, "{:<width$}  {:>4}  {:>8}", m.method, m.n, rho);
        }
        let _ = writeln!(
            out,
            "\n{:<width$}  {:>4}  {:>17}  {:>17}  {:>17}  {:>17}",
            "group", "n", "accuracy", "auroc", "oscr", "ap"
        );
        for g in &self.groups {
            let cell = |m: f64, s: f64| format!("{m:.4} ± {s:.4}");
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>17}  {:>17}  {:>17}  {:>17}",
                g.group,
                g.count,
                cell(g.mean.accuracy, g.std.accuracy),
                cell(g.mean.auroc, g.std.auroc),
                cell(g.mean.oscr, g.std.oscr),
                cell(g.mean.ap, g.std.ap),
            );
        }
        out
    }
}

pub fn analyze(summaries: &[RunSummary], group_by: GroupField) -> Result<AnalysisReport, AnalysisError> {
    Ok(AnalysisReport {
        correlation: correlation_report(summaries)?,
        groups: aggregate(summaries, group_by)?,
    })
}
