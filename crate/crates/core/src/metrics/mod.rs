//! Daily forecast accuracy, percentile trimming and aggregate tables.

mod report;

pub use report::{
    aggregate_report, daily_metrics, format_aggregate_table, write_aggregate_report, write_daily_metrics, AggregateRow,
    DailyMetrics, Metric,
};

use crate::error::{Error, Result};
use crate::rolling::{PredictionRecord, RecordStatus};

fn scored(records: &[PredictionRecord]) -> impl Iterator<Item = &PredictionRecord> {
    records.iter().filter(|r| r.status != RecordStatus::Skipped)
}

/// Root mean squared error over the non-skipped records, `None` if there are none.
pub fn rmse_daily(records: &[PredictionRecord]) -> Option<f64> {
    let (sse, n) = scored(records).fold((0.0, 0usize), |(s, n), r| (s + (r.y_true - r.y_hat).powi(2), n + 1));
    (n > 0).then(|| (sse / n as f64).sqrt())
}

/// `1 - Σ(y - ŷ)² / Σ(y - ȳ)²` where `ȳ` is each record's own window mean.
/// `None` when there are no records or the denominator is zero.
pub fn r2_oos_daily(records: &[PredictionRecord]) -> Option<f64> {
    let (num, den, n) = scored(records).fold((0.0, 0.0, 0usize), |(a, b, n), r| {
        (a + (r.y_true - r.y_hat).powi(2), b + (r.y_true - r.y_naive).powi(2), n + 1)
    });
    (n > 0 && den > 0.0).then(|| 1.0 - num / den)
}

/// Percentile of sorted data by linear interpolation between order
/// statistics (position `(n - 1) * p / 100`).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trimmed {
    /// Kept values, in input order.
    pub values: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

/// Drops values strictly below the `lower_pct` or strictly above the
/// `upper_pct` percentile. Fewer than three values pass through unchanged.
pub fn trim_percentiles(values: &[f64], lower_pct: f64, upper_pct: f64) -> Trimmed {
    if values.len() < 3 {
        log::warn!("{} values are too few to trim; keeping all", values.len());
        return Trimmed {
            values: values.to_vec(),
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lower = percentile(&sorted, lower_pct);
    let upper = percentile(&sorted, upper_pct);
    Trimmed {
        values: trim_with_bounds(values, lower, upper),
        lower,
        upper,
    }
}

pub fn trim_with_bounds(values: &[f64], lower: f64, upper: f64) -> Vec<f64> {
    values.iter().copied().filter(|v| *v >= lower && *v <= upper).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for a single value.
    pub std: f64,
}

pub fn aggregate_stats(values: &[f64]) -> Result<AggregateStats> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Fit("no values to aggregate".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = (values.iter().sum::<f64>() / n as f64).clamp(sorted[0], sorted[n - 1]);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let std = if n == 1 {
        log::warn!("standard deviation of a single value reported as 0");
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(AggregateStats { mean, median, std })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    /// `m3 / m2^1.5`; `None` when the variance is zero.
    pub skewness: Option<f64>,
    /// `m4 / m2²` (3 for a normal distribution); `None` when the variance is zero.
    pub kurtosis: Option<f64>,
}

pub fn moments(x: &[f64]) -> Result<Moments> {
    let n = x.len();
    if n < 4 {
        return Err(Error::Fit(format!("{n} observations, need at least 4")));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let defined = m2 > 0.0;
    Ok(Moments {
        n,
        mean,
        std,
        skewness: defined.then(|| m3 / m2.powf(1.5)),
        kurtosis: defined.then(|| m4 / (m2 * m2)),
    })
}

/// Pearson correlation; `None` if either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} vs {} observations", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Fit("correlation needs at least 2 observations".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    Ok((sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Descriptive statistics of minute returns and VIX levels.
///
/// For orientation, SPY one-minute returns (percent) over the 2005-2016
/// minute sample had mean 0.0001, std 0.099, skewness 0.168 and kurtosis
/// 42.886; VIX averaged 19.519, and the SPY/VIX correlation was -0.432. Those
/// figures need the original data and are not reproduced here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryReport {
    pub returns: Moments,
    pub vix: Moments,
    pub correlation: Option<f64>,
}

pub fn summary_stats(returns: &[f64], vix: &[f64]) -> Result<SummaryReport> {
    Ok(SummaryReport {
        returns: moments(returns)?,
        vix: moments(vix)?,
        correlation: pearson(returns, vix)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn rec(y: f64, y_hat: f64, y_naive: f64) -> PredictionRecord {
        PredictionRecord {
            day: NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(),
            minute: 41,
            model: "M".into(),
            predictor_set: "-".into(),
            y_true: y,
            y_hat,
            y_naive,
            status: RecordStatus::Ok,
        }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse_daily(&[rec(1.0, 1.0, 0.0), rec(2.0, 2.0, 0.0)]), Some(0.0));
        let r = rmse_daily(&[rec(0.0, 3.0, 0.0), rec(0.0, 4.0, 0.0)]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((r - 3.53553).abs() < 1e-5);
        assert_eq!(rmse_daily(&[]), None);
        let mut skipped = rec(0.0, f64::NAN, f64::NAN);
        skipped.status = RecordStatus::Skipped;
        assert_eq!(rmse_daily(&[skipped.clone()]), None);
        assert_eq!(rmse_daily(&[skipped, rec(0.0, 2.0, 0.0)]), Some(2.0));
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r2_oos_daily(&[rec(2.0, 3.0, 1.0), rec(4.0, 3.0, 5.0)]), Some(0.0));
        assert_eq!(r2_oos_daily(&[rec(2.0, 2.0, 1.0), rec(4.0, 4.0, 5.0)]), Some(1.0));
        assert_eq!(r2_oos_daily(&[rec(2.0, 1.0, 1.0), rec(4.0, 5.0, 5.0)]), Some(0.0));
        assert_eq!(r2_oos_daily(&[rec(2.0, 1.0, 2.0)]), None);
        assert_eq!(r2_oos_daily(&[]), None);
    }

    /// Brute-force reading of the linear-interpolation convention: the
    /// percentile at p sits a fraction of the way between the two order
    /// statistics bracketing rank `(n - 1) p / 100`.
    fn oracle_percentile(values: &[f64], p: f64) -> f64 {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = (s.len() - 1) as f64 * p / 100.0;
        for k in 0..s.len() {
            let (a, b) = (k as f64, (k + 1) as f64);
            if rank >= a && rank < b {
                return if k + 1 < s.len() { s[k] * (b - rank) + s[k + 1] * (rank - a) } else { s[k] };
            }
        }
        s[s.len() - 1]
    }

    #[test]
    fn trimming_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let t = trim_percentiles(&v, 1.0, 99.0);
        assert!((t.lower - oracle_percentile(&v, 1.0)).abs() < 1e-12);
        assert!((t.upper - oracle_percentile(&v, 99.0)).abs() < 1e-12);
        assert!((t.lower - 1.99).abs() < 1e-12 && (t.upper - 99.01).abs() < 1e-12);
        assert_eq!(t.values, (2..=99).map(f64::from).collect::<Vec<_>>());
        assert_eq!(t.values.len(), 98);
    }

    #[test]
    fn trimming_edge_cases() {
        assert_eq!(trim_percentiles(&[5.0; 10], 1.0, 99.0).values, vec![5.0; 10]);
        assert_eq!(trim_percentiles(&[9.0, -1.0], 1.0, 99.0).values, vec![9.0, -1.0]);
    }

    #[test]
    fn aggregate_examples() {
        let s = aggregate_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.median, s.std), (2.0, 2.0, 1.0));
        let s = aggregate_stats(&[7.5]).unwrap();
        assert_eq!((s.mean, s.median, s.std), (7.5, 7.5, 0.0));
        assert_eq!(aggregate_stats(&[4.0; 6]).unwrap().std, 0.0);
        assert_eq!(aggregate_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        assert!(aggregate_stats(&[]).is_err());
    }

    #[test]
    fn normal_sample_moments() {
        let mut rng = rng_from(2024);
        let x: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let m = moments(&x).unwrap();
        assert!(m.skewness.unwrap().abs() < 0.05);
        assert!((m.kurtosis.unwrap() - 3.0).abs() < 0.1);
        assert!((m.std - 1.0).abs() < 0.01);
    }

    #[test]
    fn correlation_and_degenerate_moments() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!((pearson(&x, &y).unwrap().unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 50]).unwrap(), None);
        let c = moments(&[3.0; 10]).unwrap();
        assert_eq!((c.skewness, c.kurtosis), (None, None));
        assert!(moments(&[1.0, 2.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn trim_is_idempotent_subset(v in prop::collection::vec(-1e3f64..1e3, 3..200)) {
            let t = trim_percentiles(&v, 1.0, 99.0);
            prop_assert!(t.values.len() <= v.len());
            prop_assert_eq!(trim_with_bounds(&t.values, t.lower, t.upper), t.values.clone());
            // Order-preserving subsequence of the input.
            let mut it = v.iter();
            for kept in &t.values {
                prop_assert!(it.any(|x| x == kept));
            }
            prop_assert!(t.lower >= oracle_percentile(&v, 1.0) - 1e-9 && t.lower <= oracle_percentile(&v, 1.0) + 1e-9);
        }

        #[test]
        fn mean_within_range(v in prop::collection::vec(-1e6f64..1e6, 1..100)) {
            let s = aggregate_stats(&v).unwrap();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(s.mean >= lo && s.mean <= hi);
            prop_assert!(s.std >= 0.0);
        }

        #[test]
        fn rmse_scale_equivariant(pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..50), a in 0.01f64..100.0) {
            let recs: Vec<_> = pairs.iter().map(|&(y, h)| rec(y, h, 0.0)).collect();
            let scaled: Vec<_> = pairs.iter().map(|&(y, h)| rec(a * y, a * h, 0.0)).collect();
            let (r, rs) = (rmse_daily(&recs).unwrap(), rmse_daily(&scaled).unwrap());
            prop_assert!((rs - a * r).abs() <= 1e-9 * (1.0 + a * r));
        }

        /// With a shared naive forecast, ranking by RMSE and by R² agree.
        #[test]
        fn rmse_and_r2_order_agree(
            data in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..40)
        ) {
            let a: Vec<_> = data.iter().map(|&(y, h1, _, n)| rec(y, h1, n)).collect();
            let b: Vec<_> = data.iter().map(|&(y, _, h2, n)| rec(y, h2, n)).collect();
            if let (Some(ra), Some(rb)) = (r2_oos_daily(&a), r2_oos_daily(&b)) {
                let (ea, eb) = (rmse_daily(&a).unwrap(), rmse_daily(&b).unwrap());
                if (ea - eb).abs() > 1e-12 {
                    prop_assert_eq!(ea < eb, ra > rb);
                }
                prop_assert!(ra <= 1.0 && rb <= 1.0);
            }
        }
    }
}
