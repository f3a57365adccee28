//! Rolling 30-minute windows: task scheduling, per-window estimation and the
//! prediction store.

mod store;

pub use store::{read_predictions, write_predictions};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forest::{rf_fit, rf_predict, ForestConfig};
use crate::linear::{ols_fit, Benchmark};
use crate::lstm::{lstm_predict, lstm_train, TrainConfig};
use crate::marketdata::{FeatureColumn, FeatureRow, FeatureSet, Minute, SESSION_END, SESSION_START};
use crate::scaling::fit_minmax;
use crate::seed::task_seed;

/// Training rows per window.
pub const WINDOW_LEN: usize = 30;
/// First prediction minute (10:11): one warm-up minute after the first full window.
pub const FIRST_PREDICTION_MINUTE: Minute = SESSION_START + WINDOW_LEN as Minute + 1;
/// Window tasks on a gapless day.
pub const TASKS_PER_DAY: usize = (SESSION_END - FIRST_PREDICTION_MINUTE + 1) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredictorSet {
    Vix,
    Ar1,
    Agg,
}

impl PredictorSet {
    pub const ALL: [PredictorSet; 3] = [PredictorSet::Vix, PredictorSet::Ar1, PredictorSet::Agg];

    pub fn columns(self) -> &'static [FeatureColumn] {
        match self {
            PredictorSet::Vix => &[FeatureColumn::VixLag],
            PredictorSet::Ar1 => &[FeatureColumn::LagR5],
            PredictorSet::Agg => &[
                FeatureColumn::LagR5,
                FeatureColumn::LagR5Sq,
                FeatureColumn::VixLag,
                FeatureColumn::DvixLag,
                FeatureColumn::VrpLag,
            ],
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            PredictorSet::Vix => "VIX",
            PredictorSet::Ar1 => "AR1",
            PredictorSet::Agg => "AGG",
        }
    }
}

impl fmt::Display for PredictorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PredictorSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PredictorSet::ALL
            .into_iter()
            .find(|p| p.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown predictor set {s:?} (expected VIX, AR1 or AGG)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    /// Training-window mean of the target.
    Naive,
    OlsBench(Benchmark),
    Lstm(TrainConfig),
    Rf(ForestConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: ModelFamily,
    /// Ignored by `Naive` and `OlsBench`.
    pub predictor_set: PredictorSet,
}

impl ModelSpec {
    pub fn naive() -> Self {
        Self {
            family: ModelFamily::Naive,
            predictor_set: PredictorSet::Vix,
        }
    }

    pub fn ols(which: Benchmark) -> Self {
        Self {
            family: ModelFamily::OlsBench(which),
            predictor_set: PredictorSet::Vix,
        }
    }

    pub fn lstm(config: TrainConfig, predictor_set: PredictorSet) -> Self {
        Self {
            family: ModelFamily::Lstm(config),
            predictor_set,
        }
    }

    pub fn rf(config: ForestConfig, predictor_set: PredictorSet) -> Self {
        Self {
            family: ModelFamily::Rf(config),
            predictor_set,
        }
    }

    pub fn model_id(&self) -> String {
        match &self.family {
            ModelFamily::Naive => "NAIVE".into(),
            ModelFamily::OlsBench(b) => format!("OLS-{b}"),
            ModelFamily::Lstm(_) => "LSTM".into(),
            ModelFamily::Rf(_) => "RF".into(),
        }
    }

    /// `"-"` for models whose inputs are fixed by definition.
    pub fn predictor_set_id(&self) -> &'static str {
        match self.family {
            ModelFamily::Naive | ModelFamily::OlsBench(_) => "-",
            ModelFamily::Lstm(_) | ModelFamily::Rf(_) => self.predictor_set.id(),
        }
    }

    /// Predictor columns fed to the model (empty for `Naive`).
    pub fn columns(&self) -> Vec<FeatureColumn> {
        match self.family {
            ModelFamily::Naive => Vec::new(),
            ModelFamily::OlsBench(b) => vec![b.regressor()],
            ModelFamily::Lstm(_) | ModelFamily::Rf(_) => self.predictor_set.columns().to_vec(),
        }
    }

    fn seed_key(&self) -> String {
        format!("{}/{}", self.model_id(), self.predictor_set_id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowTask {
    pub day: NaiveDate,
    pub prediction_minute: Minute,
    /// Target minutes `m*-30 ..= m*-1`, ascending.
    pub train_rows: Vec<FeatureRow>,
    pub test_row: FeatureRow,
}

impl WindowTask {
    /// Checks the window anatomy and that nothing at or after the prediction
    /// minute, apart from the test row's own target, is visible to the fit.
    pub fn audit(&self) -> Result<()> {
        let m = self.prediction_minute;
        let fail = |msg: String| Err(Error::Data { day: self.day, message: msg });
        if self.train_rows.len() != WINDOW_LEN {
            return fail(format!("window at {m} has {} training rows", self.train_rows.len()));
        }
        if self.test_row.minute != m || self.test_row.day != self.day {
            return fail(format!("test row at {} for prediction minute {m}", self.test_row.minute));
        }
        for (k, row) in self.train_rows.iter().enumerate() {
            let want = m - WINDOW_LEN as Minute + k as Minute;
            if row.minute != want || row.day != self.day {
                return fail(format!("training row {k} at {} (expected {want})", row.minute));
            }
            if row.minute >= m {
                return fail(format!("training row uses minute {} >= {m}", row.minute));
            }
        }
        if self.test_row.max_predictor_minute() >= self.test_row.min_target_minute() {
            return fail("test predictors overlap the target span".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaySchedule {
    pub day: NaiveDate,
    pub tasks: Vec<WindowTask>,
    /// Tasks lost to gaps, relative to a full session.
    pub shortfall: usize,
}

/// One task per prediction minute from 10:11 to 15:50 whose 30 training rows
/// and test row all exist.
pub fn schedule_day(day: NaiveDate, rows: &[FeatureRow]) -> DaySchedule {
    let by_minute: HashMap<Minute, &FeatureRow> = rows.iter().map(|r| (r.minute, r)).collect();
    let mut tasks = Vec::new();
    for m in FIRST_PREDICTION_MINUTE..=SESSION_END {
        let Some(test) = by_minute.get(&m) else { continue };
        let train: Option<Vec<FeatureRow>> = (m - WINDOW_LEN as Minute..m)
            .map(|t| by_minute.get(&t).map(|r| **r))
            .collect();
        if let Some(train_rows) = train {
            tasks.push(WindowTask {
                day,
                prediction_minute: m,
                train_rows,
                test_row: **test,
            });
        }
    }
    let shortfall = TASKS_PER_DAY - tasks.len();
    if shortfall > 0 {
        log::info!("{day}: {} of {TASKS_PER_DAY} windows formed", tasks.len());
    }
    DaySchedule { day, tasks, shortfall }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordStatus {
    Ok,
    /// The model failed to fit; `y_hat` is the naive forecast.
    Fallback,
    /// The window's data was unusable; forecasts are NaN.
    Skipped,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::Fallback => "fallback",
            RecordStatus::Skipped => "skipped",
        }
    }
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(RecordStatus::Ok),
            "fallback" => Ok(RecordStatus::Fallback),
            "skipped" => Ok(RecordStatus::Skipped),
            other => Err(Error::Config(format!("unknown record status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub day: NaiveDate,
    pub minute: Minute,
    pub model: String,
    pub predictor_set: String,
    pub y_true: f64,
    pub y_hat: f64,
    pub y_naive: f64,
    pub status: RecordStatus,
}

impl PredictionRecord {
    /// Sort key of the prediction store.
    pub fn key(&self) -> (NaiveDate, Minute, &str, &str) {
        (self.day, self.minute, &self.model, &self.predictor_set)
    }
}

/// Fits one model on one window and forecasts the test row's target.
pub fn run_window(task: &WindowTask, spec: &ModelSpec, master_seed: u64) -> PredictionRecord {
    let mut record = PredictionRecord {
        day: task.day,
        minute: task.prediction_minute,
        model: spec.model_id(),
        predictor_set: spec.predictor_set_id().to_string(),
        y_true: task.test_row.target,
        y_hat: f64::NAN,
        y_naive: f64::NAN,
        status: RecordStatus::Skipped,
    };
    if let Err(e) = task.audit() {
        log::warn!("skipping window: {e}");
        return record;
    }
    let columns = spec.columns();
    let usable = |r: &FeatureRow| r.target.is_finite() && columns.iter().all(|&c| r.get(c).is_finite());
    if !task.train_rows.iter().all(usable) || !usable(&task.test_row) {
        log::warn!("{} {}: non-finite window data", task.day, task.prediction_minute);
        return record;
    }

    let y_naive = task.train_rows.iter().map(|r| r.target).sum::<f64>() / task.train_rows.len() as f64;
    record.y_naive = y_naive;
    if matches!(spec.family, ModelFamily::Naive) {
        record.y_hat = y_naive;
        record.status = RecordStatus::Ok;
        return record;
    }

    let seed = task_seed(master_seed, task.day, task.prediction_minute, &spec.seed_key());
    match fit_and_predict(task, spec, &columns, seed) {
        Ok(y) if y.is_finite() => {
            record.y_hat = y;
            record.status = RecordStatus::Ok;
        }
        outcome => {
            log::debug!(
                "{} {} {}: falling back to the window mean ({:?})",
                task.day,
                task.prediction_minute,
                spec.seed_key(),
                outcome
            );
            record.y_hat = y_naive;
            record.status = RecordStatus::Fallback;
        }
    }
    record
}

fn fit_and_predict(task: &WindowTask, spec: &ModelSpec, columns: &[FeatureColumn], seed: u64) -> Result<f64> {
    let k = columns.len();
    let n = task.train_rows.len();
    // Predictors first, target last.
    let raw = DMatrix::from_fn(n, k + 1, |r, c| {
        let row = &task.train_rows[r];
        if c < k {
            row.get(columns[c])
        } else {
            row.target
        }
    });
    let scaler = fit_minmax(&raw)?;
    let scaled = scaler.transform(&raw)?;
    let x = scaled.columns(0, k).into_owned();
    let y: Vec<f64> = scaled.column(k).iter().copied().collect();
    let test_raw: Vec<f64> = columns.iter().map(|&c| task.test_row.get(c)).collect();
    let test = scaler.transform_leading(&test_raw)?;

    let y_scaled = match &spec.family {
        ModelFamily::Naive => unreachable!("handled by the caller"),
        ModelFamily::OlsBench(_) => ols_fit(&x, &y)?.predict(&test)?,
        ModelFamily::Lstm(config) => {
            let config = TrainConfig {
                seed,
                ..config.clone()
            };
            let inputs: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
            let trained = lstm_train(&inputs, &y, &config)?;
            let l = config.sequence_length;
            let mut seq: Vec<Vec<f64>> = inputs[n + 1 - l..].to_vec();
            seq.push(test);
            lstm_predict(&trained.params, &seq)?
        }
        ModelFamily::Rf(config) => {
            let config = ForestConfig {
                seed,
                ..config.clone()
            };
            let forest = rf_fit(&x, &y, &config)?;
            rf_predict(&forest, &test)?
        }
    };
    scaler.inverse_transform_target(y_scaled, k)
}

/// Every roster model on every window of the day, grouped by model.
pub fn run_day(schedule: &DaySchedule, roster: &[ModelSpec], master_seed: u64) -> Vec<PredictionRecord> {
    roster
        .iter()
        .flat_map(|spec| schedule.tasks.iter().map(move |t| run_window(t, spec, master_seed)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    /// Sorted by (date, minute, model, predictor set).
    pub records: Vec<PredictionRecord>,
    pub schedules: Vec<(NaiveDate, usize, usize)>,
}

/// Runs the roster over all days on a pool of `workers` threads. The output
/// does not depend on the worker count.
pub fn run_sample(days: &[FeatureSet], roster: &[ModelSpec], master_seed: u64, workers: usize) -> Result<SampleRun> {
    let schedules: Vec<DaySchedule> = days.iter().map(|d| schedule_day(d.day, &d.rows)).collect();
    let jobs: Vec<(&WindowTask, &ModelSpec)> = schedules
        .iter()
        .flat_map(|s| s.tasks.iter())
        .flat_map(|t| roster.iter().map(move |spec| (t, spec)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut records: Vec<PredictionRecord> =
        pool.install(|| jobs.par_iter().map(|(t, spec)| run_window(t, spec, master_seed)).collect());
    records.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(SampleRun {
        records,
        schedules: schedules.iter().map(|s| (s.day, s.tasks.len(), s.shortfall)).collect(),
    })
}
