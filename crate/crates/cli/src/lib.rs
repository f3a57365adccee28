//! Commands behind the `intraday` binary.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
//! error, 3 data error (including a failed `validate`), 4 numeric failure
//! (including a failed `gradcheck`), 5 I/O error.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use thiserror::Error;

use intraday_core::lstm::{gradcheck, GradcheckConfig, GradcheckReport};
use intraday_core::marketdata::{
    build_feature_rows, generate_synthetic_days, inspect_minute_bars, load_minute_bars, write_minute_bars,
    BarDiagnostics, DaySeries, FeatureSet, SynthParams,
};
use intraday_core::metrics::{
    aggregate_report, daily_metrics, format_aggregate_table, write_aggregate_report, write_daily_metrics, AggregateRow,
    DailyMetrics,
};
use intraday_core::rolling::{read_predictions, run_sample, write_predictions, PredictionRecord};

pub use config::RunConfig;

pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const DAILY_FILE: &str = "daily_metrics.csv";
pub const AGGREGATE_FILE: &str = "aggregate_report.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric check failed: {0}")]
    Numeric(String),
}

/// Maps an error chain to the documented process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use intraday_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Config(_) => 2,
                CliError::Data(_) => 3,
                CliError::Numeric(_) => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) | E::Usage(_) => 2,
                E::Parse { .. } | E::Data { .. } => 3,
                E::Shape(_) | E::Domain(_) | E::Numeric(_) | E::Fit(_) | E::Singular => 4,
                E::Io { .. } => 5,
                E::Csv(c) if c.is_io_error() => 5,
                E::Csv(_) => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 5;
        }
    }
    1
}

/// Writes synthetic minute bars; returns the number of data rows.
pub fn cmd_synth(params: &SynthParams, start: chrono::NaiveDate, out: &Path) -> Result<usize> {
    params.validate()?;
    let days = generate_synthetic_days(params, start)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_minute_bars(out, &days)?;
    Ok(days.iter().map(|d| d.all_bars().count()).sum())
}

pub fn cmd_validate(path: &Path) -> Result<BarDiagnostics> {
    Ok(inspect_minute_bars(path)?)
}

pub fn format_diagnostics(d: &BarDiagnostics) -> String {
    let mut s = format!("{} rows, {} day(s)\n", d.rows, d.days.len());
    for day in &d.days {
        s += &format!(
            "  {}: {} session bars, {} pre-session, {} gap(s)\n",
            day.day,
            day.session_bars,
            day.warmup_bars,
            day.gaps.len()
        );
    }
    let mut section = |title: &str, items: &[String]| {
        if !items.is_empty() {
            s += &format!("{title} ({}):\n", items.len());
            for i in items.iter().take(20) {
                s += &format!("  {i}\n");
            }
            if items.len() > 20 {
                s += &format!("  ... {} more\n", items.len() - 20);
            }
        }
    };
    section("parse errors", &d.parse_errors);
    section("duplicate minutes", &d.duplicates);
    section("out-of-order rows", &d.non_monotone);
    section("invalid values", &d.invalid_values);
    section("warning: rows outside 09:30-15:50, ignored", &d.out_of_session);
    if d.pre_session_rows > 0 {
        s += &format!("note: {} rows in 09:30-09:39 (pre-session, lag history only)\n", d.pre_session_rows);
    }
    for (day, n) in &d.short_days {
        s += &format!("warning: {day} has only {n} bars and will be dropped\n");
    }
    s += &format!("{} issue(s)\n", d.issue_count());
    s
}

/// Everything a run produced, as written to the output directory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub records: Vec<PredictionRecord>,
    pub daily: Vec<DailyMetrics>,
    pub aggregate: Vec<AggregateRow>,
    /// `(day, tasks formed, tasks lost to gaps)`.
    pub schedules: Vec<(chrono::NaiveDate, usize, usize)>,
}

fn load_days(cfg: &RunConfig) -> Result<Vec<DaySeries>> {
    let mut days = match &cfg.input {
        Some(path) => {
            let loaded = load_minute_bars(path).with_context(|| format!("loading {}", path.display()))?;
            for (day, n) in &loaded.dropped_days {
                log::warn!("{day}: only {n} session bars, day dropped");
            }
            if loaded.out_of_session > 0 {
                log::warn!("{} rows outside 09:30-15:50 ignored", loaded.out_of_session);
            }
            loaded.days
        }
        None => generate_synthetic_days(&cfg.synth_params(), cfg.synth_start())?,
    };
    days.retain(|d| cfg.date_from.is_none_or(|f| d.day >= f) && cfg.date_to.is_none_or(|t| d.day <= t));
    if days.is_empty() {
        return Err(CliError::Data("no trading days left after loading and date filtering".into()).into());
    }
    Ok(days)
}

/// Runs the full pipeline and writes the prediction store and reports.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput> {
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Config("a master seed is required (set `seed` or pass --seed)".into()))?;
    let roster = cfg.roster()?;
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));

    let days = load_days(cfg)?;
    let features: Vec<FeatureSet> = days.iter().map(build_feature_rows).collect();
    log::info!(
        "{} day(s), {} model(s), {} worker(s)",
        features.len(),
        roster.len(),
        workers.max(1)
    );
    let run = run_sample(&features, &roster, seed, workers)?;
    for (day, formed, lost) in &run.schedules {
        if *lost > 0 {
            log::warn!("{day}: {formed} windows ({lost} lost to gaps)");
        }
    }
    let (daily, aggregate) = write_outputs(&out_dir, &run.records)?;
    Ok(RunOutput {
        out_dir,
        records: run.records,
        daily,
        aggregate,
        schedules: run.schedules,
    })
}

fn write_outputs(out_dir: &Path, records: &[PredictionRecord]) -> Result<(Vec<DailyMetrics>, Vec<AggregateRow>)> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_predictions(out_dir.join(PREDICTIONS_FILE), records)?;
    let daily = daily_metrics(records);
    let aggregate = aggregate_report(&daily);
    write_daily_metrics(out_dir.join(DAILY_FILE), &daily)?;
    write_aggregate_report(out_dir.join(AGGREGATE_FILE), &aggregate)?;
    Ok((daily, aggregate))
}

/// Recomputes the reports from an existing prediction store.
pub fn cmd_report(predictions: &Path, out_dir: &Path) -> Result<Vec<AggregateRow>> {
    let records = read_predictions(predictions).with_context(|| format!("reading {}", predictions.display()))?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let daily = daily_metrics(&records);
    let aggregate = aggregate_report(&daily);
    write_daily_metrics(out_dir.join(DAILY_FILE), &daily)?;
    write_aggregate_report(out_dir.join(AGGREGATE_FILE), &aggregate)?;
    Ok(aggregate)
}

pub fn cmd_gradcheck(config: &GradcheckConfig) -> Result<GradcheckReport> {
    if config.input_dim > 4 || config.hidden_dim > 6 || config.seq_len > 8 {
        log::warn!("gradient check dimensions beyond n <= 4, d <= 6, L <= 8 may be slow");
    }
    Ok(gradcheck(config)?)
}

pub fn format_gradcheck(r: &GradcheckReport) -> String {
    let mut s = format!(
        "{} instances, {} entries, max relative error {:.3e} at {}\n",
        r.instances, r.entries_checked, r.max_rel_error, r.worst_entry
    );
    for (name, err) in &r.per_tensor {
        s += &format!("  {name:<4} {err:.3e}\n");
    }
    s += if r.passed { "PASS\n" } else { "FAIL\n" };
    s
}

pub fn print_table(rows: &[AggregateRow]) {
    print!("{}", format_aggregate_table(rows));
}
