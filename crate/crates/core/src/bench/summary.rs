//! Aggregation and CSV output.

use std::io::Write;

use serde::Serialize;

use super::{Method, SnrDb, TrialRecord};
use crate::design::Criterion;
use crate::error::{invalid, Result};

pub const TRIAL_CSV_HEADER: [&str; 11] =
    ["scenario", "method", "criterion", "K", "M", "snr_db", "trial", "error_l2", "solver_gap", "wall_ms", "status"];

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one row per record. Wall time is left empty unless
/// `include_timing`, so that identical seeds give identical bytes.
pub fn write_trials_csv<W: Write>(records: &[TrialRecord], out: W, include_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.scenario.clone(),
            r.method.to_string(),
            r.criterion.to_string(),
            r.bandwidth.to_string(),
            r.budget.to_string(),
            r.snr_db.to_string(),
            r.trial.to_string(),
            fmt_opt(r.error_l2),
            fmt_opt(r.solver_gap),
            if include_timing { format!("{:.3}", r.wall_ms) } else { String::new() },
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and spread of `error_l2` for one (method, grid point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: Method,
    pub criterion: Criterion,
    pub bandwidth: usize,
    pub budget: usize,
    pub snr_db: SnrDb,
    pub trials: usize,
    pub failures: usize,
    /// Mean over successful trials; NaN when all failed.
    pub mean_error_l2: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_error_l2: f64,
}

impl SummaryRow {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }
}

/// Groups records by (method, K, M, SNR) in order of first appearance.
/// Failed trials count towards `failures` but not the statistics.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(invalid("no records to summarize"));
    }
    let mut groups: Vec<(SummaryRow, Vec<f64>)> = Vec::new();
    for r in records {
        let pos = groups.iter().position(|(g, _)| {
            g.scenario == r.scenario
                && g.method == r.method
                && g.bandwidth == r.bandwidth
                && g.budget == r.budget
                && g.snr_db == r.snr_db
        });
        let idx = pos.unwrap_or_else(|| {
            groups.push((
                SummaryRow {
                    scenario: r.scenario.clone(),
                    method: r.method,
                    criterion: r.criterion,
                    bandwidth: r.bandwidth,
                    budget: r.budget,
                    snr_db: r.snr_db,
                    trials: 0,
                    failures: 0,
                    mean_error_l2: f64::NAN,
                    std_error_l2: f64::NAN,
                },
                Vec::new(),
            ));
            groups.len() - 1
        });
        let (row, errs) = &mut groups[idx];
        row.trials += 1;
        match r.error_l2 {
            Some(e) => errs.push(e),
            None => row.failures += 1,
        }
    }
    Ok(groups
        .into_iter()
        .map(|(mut row, errs)| {
            if !errs.is_empty() {
                let n = errs.len() as f64;
                let mean = errs.iter().sum::<f64>() / n;
                let var =
                    if errs.len() > 1 { errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                row.mean_error_l2 = mean;
                row.std_error_l2 = var.sqrt();
            }
            row
        })
        .collect())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "method",
        "criterion",
        "K",
        "M",
        "snr_db",
        "trials",
        "failures",
        "mean_error_l2",
        "std_error_l2",
    ])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.method.to_string(),
            r.criterion.to_string(),
            r.bandwidth.to_string(),
            r.budget.to_string(),
            r.snr_db.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            r.mean_error_l2.to_string(),
            r.std_error_l2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
