use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use chrono::NaiveDate;

use super::{aggregate_stats, r2_oos_daily, rmse_daily, trim_percentiles};
use crate::error::{Error, Result};
use crate::rolling::{PredictionRecord, RecordStatus};

/// Accuracy of one model on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyMetrics {
    pub day: NaiveDate,
    pub model: String,
    pub predictor_set: String,
    pub rmse: f64,
    /// `None` when every target equals its window mean.
    pub r2_oos: Option<f64>,
    /// Scored predictions (ok plus fallback).
    pub n: usize,
    pub n_ok: usize,
    pub n_fallback: usize,
    pub n_skipped: usize,
}

/// Groups records by (day, model, predictor set). Groups without a scored
/// record are left out.
pub fn daily_metrics(records: &[PredictionRecord]) -> Vec<DailyMetrics> {
    let mut groups: BTreeMap<(NaiveDate, &str, &str), Vec<PredictionRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.day, r.model.as_str(), r.predictor_set.as_str()))
            .or_default()
            .push(r.clone());
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((day, model, set), recs) in groups {
        let count = |s| recs.iter().filter(|r| r.status == s).count();
        let Some(rmse) = rmse_daily(&recs) else {
            log::warn!("{day} {model} {set}: no scored predictions, day excluded");
            continue;
        };
        let (n_ok, n_fallback) = (count(RecordStatus::Ok), count(RecordStatus::Fallback));
        out.push(DailyMetrics {
            day,
            model: model.to_string(),
            predictor_set: set.to_string(),
            rmse,
            r2_oos: r2_oos_daily(&recs),
            n: n_ok + n_fallback,
            n_ok,
            n_fallback,
            n_skipped: count(RecordStatus::Skipped),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Rmse,
    R2Oos,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rmse => "rmse",
            Metric::R2Oos => "r2_oos",
        })
    }
}

/// Trimmed mean, median and standard deviation of one daily metric.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub model: String,
    pub predictor_set: String,
    pub metric: Metric,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// Days with a defined value, before trimming.
    pub n_days_raw: usize,
    pub n_days_trimmed: usize,
    /// Days where the metric was undefined.
    pub n_days_undefined: usize,
    pub trim_lower: f64,
    pub trim_upper: f64,
}

/// Trims each (model, predictor set, metric) series at the 1st and 99th
/// percentiles independently, then summarizes it.
pub fn aggregate_report(daily: &[DailyMetrics]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<&DailyMetrics>> = BTreeMap::new();
    for d in daily {
        groups.entry((d.model.as_str(), d.predictor_set.as_str())).or_default().push(d);
    }
    let mut out = Vec::new();
    for ((model, set), days) in groups {
        for metric in [Metric::Rmse, Metric::R2Oos] {
            let values: Vec<f64> = days
                .iter()
                .filter_map(|d| match metric {
                    Metric::Rmse => Some(d.rmse),
                    Metric::R2Oos => d.r2_oos,
                })
                .collect();
            let undefined = days.len() - values.len();
            if undefined > 0 {
                log::warn!("{model} {set}: {metric} undefined on {undefined} day(s)");
            }
            let trimmed = trim_percentiles(&values, 1.0, 99.0);
            let (mean, median, std) = match aggregate_stats(&trimmed.values) {
                Ok(s) => (s.mean, s.median, s.std),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            };
            out.push(AggregateRow {
                model: model.to_string(),
                predictor_set: set.to_string(),
                metric,
                mean,
                median,
                std,
                n_days_raw: values.len(),
                n_days_trimmed: trimmed.values.len(),
                n_days_undefined: undefined,
                trim_lower: trimmed.lower,
                trim_upper: trimmed.upper,
            });
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn write_daily_metrics(path: impl AsRef<Path>, rows: &[DailyMetrics]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "date",
        "model",
        "predictor_set",
        "rmse",
        "r2_oos",
        "n",
        "n_ok",
        "n_fallback",
        "n_skipped",
    ])?;
    for d in rows {
        w.write_record([
            d.day.format("%Y-%m-%d").to_string(),
            d.model.clone(),
            d.predictor_set.clone(),
            d.rmse.to_string(),
            opt(d.r2_oos),
            d.n.to_string(),
            d.n_ok.to_string(),
            d.n_fallback.to_string(),
            d.n_skipped.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_aggregate_report(path: impl AsRef<Path>, rows: &[AggregateRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "model",
        "predictor_set",
        "metric",
        "mean",
        "median",
        "std",
        "n_days_raw",
        "n_days_trimmed",
        "n_days_undefined",
        "trim_lower",
        "trim_upper",
    ])?;
    for a in rows {
        w.write_record([
            a.model.clone(),
            a.predictor_set.clone(),
            a.metric.to_string(),
            a.mean.to_string(),
            a.median.to_string(),
            a.std.to_string(),
            a.n_days_raw.to_string(),
            a.n_days_trimmed.to_string(),
            a.n_days_undefined.to_string(),
            a.trim_lower.to_string(),
            a.trim_upper.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Plain-text table of the aggregate report, one line per model and metric.
pub fn format_aggregate_table(rows: &[AggregateRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<5} {:<7} {:>13} {:>13} {:>13} {:>6}",
        "model", "set", "metric", "mean", "median", "std", "days"
    );
    for a in rows {
        let _ = writeln!(
            s,
            "{:<10} {:<5} {:<7} {:>13.6e} {:>13.6e} {:>13.6e} {:>6}",
            a.model,
            a.predictor_set,
            a.metric.to_string(),
            a.mean,
            a.median,
            a.std,
            a.n_days_trimmed
        );
    }
    s
}
