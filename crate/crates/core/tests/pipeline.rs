use chrono::NaiveDate;

use intraday_core::forest::ForestConfig;
use intraday_core::linear::Benchmark;
use intraday_core::marketdata::{
    build_feature_rows, generate_synthetic_days, load_minute_bars, write_minute_bars, SynthParams,
};
use intraday_core::metrics::{aggregate_report, daily_metrics, Metric};
use intraday_core::rolling::{
    read_predictions, run_sample, run_window, schedule_day, write_predictions, ModelSpec, PredictorSet, RecordStatus,
    TASKS_PER_DAY,
};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 1, 4).unwrap()
}

fn small_forest() -> ForestConfig {
    ForestConfig {
        n_trees: 10,
        ..ForestConfig::default()
    }
}

#[test]
fn csv_to_reports() {
    let dir = tempfile::tempdir().unwrap();
    let params = SynthParams {
        n_days: 2,
        ..SynthParams::default()
    };
    let days = generate_synthetic_days(&params, start()).unwrap();
    let bars = dir.path().join("bars.csv");
    write_minute_bars(&bars, &days).unwrap();
    let loaded = load_minute_bars(&bars).unwrap();
    assert_eq!(loaded.days, days);

    let features: Vec<_> = loaded.days.iter().map(build_feature_rows).collect();
    let roster = [
        ModelSpec::naive(),
        ModelSpec::ols(Benchmark::Vix),
        ModelSpec::rf(small_forest(), PredictorSet::Agg),
    ];
    let run = run_sample(&features, &roster, 3, 1).unwrap();
    assert_eq!(run.records.len(), 2 * TASKS_PER_DAY * roster.len());
    assert!(run.records.iter().all(|r| r.status == RecordStatus::Ok));

    let store = dir.path().join("predictions.csv");
    write_predictions(&store, &run.records).unwrap();
    assert_eq!(read_predictions(&store).unwrap(), run.records);

    let daily = daily_metrics(&run.records);
    assert_eq!(daily.len(), 2 * roster.len());
    assert!(daily.iter().all(|d| d.n == TASKS_PER_DAY && d.rmse.is_finite()));
    let agg = aggregate_report(&daily);
    assert_eq!(agg.len(), 2 * roster.len());
    let naive_r2 = agg
        .iter()
        .find(|a| a.model == "NAIVE" && a.metric == Metric::R2Oos)
        .unwrap();
    assert_eq!(naive_r2.mean, 0.0);
}

#[test]
fn forecasts_ignore_test_target() {
    let params = SynthParams {
        n_days: 1,
        ..SynthParams::default()
    };
    let day = &generate_synthetic_days(&params, start()).unwrap()[0];
    let rows = build_feature_rows(day);
    let schedule = schedule_day(day.day, &rows.rows);
    let roster = [
        ModelSpec::naive(),
        ModelSpec::ols(Benchmark::Ar1),
        ModelSpec::rf(small_forest(), PredictorSet::Vix),
    ];
    for task in schedule.tasks.iter().step_by(37) {
        let mut poisoned = task.clone();
        poisoned.test_row.target = 1e6;
        for spec in &roster {
            let a = run_window(task, spec, 9);
            let b = run_window(&poisoned, spec, 9);
            assert_eq!(a.y_hat.to_bits(), b.y_hat.to_bits(), "{} at {}", spec.model_id(), task.prediction_minute);
            assert_eq!(b.y_true, 1e6);
        }
    }
}
