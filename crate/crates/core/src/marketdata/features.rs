use chrono::NaiveDate;

use super::{DaySeries, Minute, SESSION_END, SESSION_MINUTES, SESSION_START};
use crate::error::{Error, Result};

/// √1440 · √252: minutes per day times business days per year.
pub const VIX_INTRADAY_DENOMINATOR: f64 = 602.395_219_104_534_5;

/// Converts an annualized volatility-index level to per-minute units.
pub fn vix_to_intraday(vix_annual: f64) -> Result<f64> {
    if !(vix_annual >= 0.0) || !vix_annual.is_finite() {
        return Err(Error::Domain(format!(
            "volatility index level must be finite and non-negative, got {vix_annual}"
        )));
    }
    Ok(vix_annual / (1440f64.sqrt() * 252f64.sqrt()))
}

/// Squared one-minute return minus squared intraday volatility index.
pub fn compute_vrp(r_1min: f64, vix_intraday: f64) -> f64 {
    debug_assert!(vix_intraday >= 0.0);
    r_1min * r_1min - vix_intraday * vix_intraday
}

/// `ln P[m] - ln P[m-4]`, or `None` when either bar is missing.
pub fn log_return_5min(series: &DaySeries, m: Minute) -> Option<f64> {
    let start = m.checked_sub(4)?;
    Some(series.price(m)?.ln() - series.price(start)?.ln())
}

/// `ln P[m] - ln P[m-1]`.
pub fn log_return_1min(series: &DaySeries, m: Minute) -> Option<f64> {
    let prev = m.checked_sub(1)?;
    Some(series.price(m)?.ln() - series.price(prev)?.ln())
}

/// Intraday-scaled `VIX[m-5] - VIX[m-6]`.
pub fn compute_delta_vix(series: &DaySeries, m: Minute) -> Option<f64> {
    let (a, b) = (m.checked_sub(5)?, m.checked_sub(6)?);
    let now = series.vix_annual(a)?;
    let before = series.vix_annual(b)?;
    Some(vix_to_intraday(now).ok()? - vix_to_intraday(before).ok()?)
}

/// One aligned observation. Every predictor is built from bars at or before
/// `minute - 5`; the target spans `minute - 4 ..= minute`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRow {
    pub day: NaiveDate,
    /// Target minute `m`.
    pub minute: Minute,
    /// `r[m-4:m]`
    pub target: f64,
    /// `r[m-9:m-5]`
    pub lag_r5: f64,
    pub lag_r5_sq: f64,
    /// Intraday `VIX[m-5]`.
    pub vix_lag: f64,
    pub vix_sq_lag: f64,
    /// `VIX[m-5] - VIX[m-6]`, intraday units.
    pub dvix_lag: f64,
    /// `r[m-6:m-5]² - VIX[m-5]²`.
    pub vrp_lag: f64,
}

impl FeatureRow {
    pub fn get(&self, column: FeatureColumn) -> f64 {
        match column {
            FeatureColumn::Target => self.target,
            FeatureColumn::LagR5 => self.lag_r5,
            FeatureColumn::LagR5Sq => self.lag_r5_sq,
            FeatureColumn::VixLag => self.vix_lag,
            FeatureColumn::VixSqLag => self.vix_sq_lag,
            FeatureColumn::DvixLag => self.dvix_lag,
            FeatureColumn::VrpLag => self.vrp_lag,
        }
    }

    /// Latest bar minute referenced by any predictor.
    pub fn max_predictor_minute(&self) -> Minute {
        self.minute - 5
    }

    /// Earliest bar minute in the target span.
    pub fn min_target_minute(&self) -> Minute {
        self.minute - 4
    }

    pub fn is_finite(&self) -> bool {
        FeatureColumn::ALL.iter().all(|&c| self.get(c).is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureColumn {
    Target,
    LagR5,
    LagR5Sq,
    VixLag,
    VixSqLag,
    DvixLag,
    VrpLag,
}

impl FeatureColumn {
    pub const ALL: [FeatureColumn; 7] = [
        FeatureColumn::Target,
        FeatureColumn::LagR5,
        FeatureColumn::LagR5Sq,
        FeatureColumn::VixLag,
        FeatureColumn::VixSqLag,
        FeatureColumn::DvixLag,
        FeatureColumn::VrpLag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureColumn::Target => "target",
            FeatureColumn::LagR5 => "lag_r5",
            FeatureColumn::LagR5Sq => "lag_r5_sq",
            FeatureColumn::VixLag => "vix_lag",
            FeatureColumn::VixSqLag => "vix_sq_lag",
            FeatureColumn::DvixLag => "dvix_lag",
            FeatureColumn::VrpLag => "vrp_lag",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub day: NaiveDate,
    /// Sorted by target minute.
    pub rows: Vec<FeatureRow>,
    /// Session minutes for which no row could be formed.
    pub suppressed: usize,
}

fn row_at(series: &DaySeries, m: Minute) -> Option<FeatureRow> {
    let ln_p = |k: Minute| series.price(k).map(f64::ln);
    let vix = |k: Minute| series.vix_annual(k).and_then(|v| vix_to_intraday(v).ok());

    let target = ln_p(m)? - ln_p(m - 4)?;
    let p5 = ln_p(m - 5)?;
    let lag_r5 = p5 - ln_p(m - 9)?;
    let r1 = p5 - ln_p(m - 6)?;
    let vix_lag = vix(m - 5)?;
    let vix_prev = vix(m - 6)?;
    Some(FeatureRow {
        day: series.day,
        minute: m,
        target,
        lag_r5,
        lag_r5_sq: lag_r5 * lag_r5,
        vix_lag,
        vix_sq_lag: vix_lag * vix_lag,
        dvix_lag: vix_lag - vix_prev,
        vrp_lag: compute_vrp(r1, vix_lag),
    })
}

/// One row per session minute whose constituent bars (`m`, `m-4`, `m-5`,
/// `m-6`, `m-9`) all exist. Missing bars suppress rows; nothing is filled.
pub fn build_feature_rows(series: &DaySeries) -> FeatureSet {
    let rows: Vec<FeatureRow> = (SESSION_START..=SESSION_END)
        .filter_map(|m| row_at(series, m))
        .collect();
    FeatureSet {
        day: series.day,
        suppressed: SESSION_MINUTES - rows.len(),
        rows,
    }
}
