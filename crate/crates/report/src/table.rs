//! The summary comparison table: one row per model, train and test
//! accuracy / precision / F1 / recall (support-weighted averages, which on
//! balanced data make recall equal accuracy).

use std::fmt::Write as _;
use std::path::Path;

use venation_core::metrics::EvaluationReport;

use crate::artifacts::RunArtifacts;
use crate::error::{ReportError, Result};

pub const COLUMNS: [&str; 9] = [
    "model",
    "train_accuracy",
    "train_precision",
    "train_f1",
    "train_recall",
    "test_accuracy",
    "test_precision",
    "test_f1",
    "test_recall",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub values: [f64; 8],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

fn side(report: &EvaluationReport<f64>) -> [f64; 4] {
    [
        report.aggregates.accuracy,
        report.aggregates.weighted_precision,
        report.aggregates.weighted_f1,
        report.aggregates.weighted_recall,
    ]
}

impl SummaryTable {
    /// Row order follows the given run order.
    pub fn build(runs: &[RunArtifacts]) -> Result<Self> {
        if runs.is_empty() {
            return Err(ReportError::Inconsistent {
                run_id: "<none>".into(),
                what: "summary table needs at least one run".into(),
            });
        }
        let rows = runs
            .iter()
            .map(|run| {
                let train = side(&run.metrics_train);
                let test = side(&run.metrics_test);
                SummaryRow {
                    model: run.run_id.clone(),
                    values: [
                        train[0], train[1], train[2], train[3], test[0], test[1], test[2], test[3],
                    ],
                }
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.model);
            for v in row.values {
                let _ = write!(out, ",{v:.4}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.model.len())
            .chain(["model".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = write!(out, "{:width$}", "model");
        for c in &COLUMNS[1..] {
            let _ = write!(out, "  {c:>15}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:width$}", row.model);
            for v in row.values {
                let _ = write!(out, "  {v:>15.4}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, csv_path: &Path, text_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv_string())
            .map_err(|e| ReportError::io(format!("writing {}", csv_path.display()), e))?;
        std::fs::write(text_path, self.to_text())
            .map_err(|e| ReportError::io(format!("writing {}", text_path.display()), e))?;
        Ok(())
    }
}
