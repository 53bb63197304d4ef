//! Accuracy summaries and report files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Method id used as the gap reference when present.
pub const REFERENCE_METHOD: &str = "best-single";

/// Share of the distance to perfect accuracy that `acc_b` closes relative
/// to `acc_a`: `(acc_b - acc_a) / (1 - acc_a)`. Negative when B is worse.
pub fn gap_eliminated(acc_b: f64, acc_a: f64) -> Result<f64> {
    if acc_a >= 1.0 {
        return Err(Error::PerfectReference);
    }
    Ok((acc_b - acc_a) / (1.0 - acc_a))
}

/// Arithmetic mean and sample (`n - 1`) standard deviation.
pub fn mean_and_sample_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let rough = values.iter().sum::<f64>() / n;
    // second pass removes the rounding error of the first
    let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub dataset: String,
    pub method: String,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub ensemble_size: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: String,
    pub datasets: usize,
    pub mean_test_accuracy: f64,
    pub std_test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub dataset: String,
    pub method: String,
    pub reference: String,
    /// `None` when the reference is already perfect.
    pub gap_eliminated: Option<f64>,
}

/// Test-accuracy mean and spread per method, over datasets.
pub fn cross_dataset_stats(results: &[MethodResult]) -> Result<Vec<MethodStats>> {
    let mut by_method: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in results {
        by_method.entry(&r.method).or_default().push(r.test_accuracy);
    }
    by_method
        .into_iter()
        .map(|(method, accs)| {
            let (mean, std) = mean_and_sample_std(&accs).ok_or_else(|| Error::TooFewDatasets {
                method: method.to_string(),
                datasets: accs.len(),
            })?;
            Ok(MethodStats {
                method: method.to_string(),
                datasets: accs.len(),
                mean_test_accuracy: mean,
                std_test_accuracy: std,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub results: Vec<MethodResult>,
    /// Methods seen on at least two datasets.
    pub stats: Vec<MethodStats>,
    /// Each method against [`REFERENCE_METHOD`] on the same dataset.
    pub gaps: Vec<GapEntry>,
}

impl ComparisonReport {
    pub fn new(results: Vec<MethodResult>) -> Result<Self> {
        for r in &results {
            if !(0.0..=1.0).contains(&r.val_accuracy) || !(0.0..=1.0).contains(&r.test_accuracy) {
                return Err(Error::InvalidParameter(format!(
                    "{}/{}: accuracy outside [0,1]",
                    r.dataset, r.method
                )));
            }
            if r.ensemble_size != r.members.len() {
                return Err(Error::InvalidParameter(format!(
                    "{}/{}: ensemble_size {} but {} members",
                    r.dataset,
                    r.method,
                    r.ensemble_size,
                    r.members.len()
                )));
            }
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &results {
            *counts.entry(&r.method).or_default() += 1;
        }
        let multi: Vec<MethodResult> = results
            .iter()
            .filter(|r| counts[r.method.as_str()] >= 2)
            .cloned()
            .collect();
        let stats = cross_dataset_stats(&multi)?;

        let mut gaps = Vec::new();
        for r in &results {
            if r.method == REFERENCE_METHOD {
                continue;
            }
            if let Some(reference) = results
                .iter()
                .find(|x| x.dataset == r.dataset && x.method == REFERENCE_METHOD)
            {
                gaps.push(GapEntry {
                    dataset: r.dataset.clone(),
                    method: r.method.clone(),
                    reference: REFERENCE_METHOD.to_string(),
                    gap_eliminated: gap_eliminated(r.test_accuracy, reference.test_accuracy).ok(),
                });
            }
        }
        Ok(ComparisonReport { results, stats, gaps })
    }

    /// Concatenates several reports' results and recomputes the summaries.
    pub fn merge(reports: impl IntoIterator<Item = ComparisonReport>) -> Result<Self> {
        ComparisonReport::new(reports.into_iter().flat_map(|r| r.results).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("dataset,method,val_accuracy,test_accuracy,ensemble_size,members\n");
        for r in &self.results {
            let _ = writeln!(
                s,
                "{},{},{:.4},{:.4},{},{}",
                r.dataset,
                r.method,
                r.val_accuracy,
                r.test_accuracy,
                r.ensemble_size,
                r.members.join("|")
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("report json: {e}")))
    }

    /// Datasets as rows, methods as columns, test accuracy in percent. Mean
    /// and standard-deviation rows follow when available.
    pub fn to_markdown(&self) -> String {
        let mut methods: Vec<&str> = Vec::new();
        for r in &self.results {
            if !methods.contains(&r.method.as_str()) {
                methods.push(&r.method);
            }
        }
        let datasets: Vec<&str> = {
            let mut seen = BTreeSet::new();
            self.results
                .iter()
                .map(|r| r.dataset.as_str())
                .filter(|d| seen.insert(*d))
                .collect()
        };
        let mut s = String::from("| Dataset |");
        for m in &methods {
            let _ = write!(s, " {m} |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---:|".repeat(methods.len()));
        s.push('\n');
        for d in &datasets {
            let _ = write!(s, "| {d} |");
            for m in &methods {
                match self.results.iter().find(|r| r.dataset == *d && r.method == *m) {
                    Some(r) => {
                        let _ = write!(s, " {:.2}% |", 100.0 * r.test_accuracy);
                    }
                    None => s.push_str(" - |"),
                }
            }
            s.push('\n');
        }
        if !self.stats.is_empty() {
            for (label, pick) in [
                ("Average", (|x: &MethodStats| x.mean_test_accuracy) as fn(&MethodStats) -> f64),
                ("Std. dev.", |x: &MethodStats| x.std_test_accuracy),
            ] {
                let _ = write!(s, "| {label} |");
                for m in &methods {
                    match self.stats.iter().find(|x| x.method == *m) {
                        Some(x) => {
                            let _ = write!(s, " {:.2}% |", 100.0 * pick(x));
                        }
                        None => s.push_str(" - |"),
                    }
                }
                s.push('\n');
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

pub fn emit_report(report: &ComparisonReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
        ReportFormat::Markdown => report.to_markdown(),
    };
    std::fs::write(path, text).map_err(|source| Error::Io {
        context: format!("writing report {}", path.display()),
        source,
    })
}
