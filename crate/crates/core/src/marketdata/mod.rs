//! Minute bars, the trading-session filter, derived features and synthetic data.
//!
//! Minutes are integer offsets from 09:30 exchange-local time. The estimation
//! session is 09:40 through 15:50 inclusive (offsets 10..=380, 371 minutes).
//! Bars from 09:30 to 09:39 are kept as warm-up history: they may feed lagged
//! predictors but never appear as a target minute.

mod features;
mod load;
mod synth;

pub use features::{
    build_feature_rows, compute_delta_vix, compute_vrp, log_return_1min, log_return_5min,
    vix_to_intraday, FeatureColumn, FeatureRow, FeatureSet, VIX_INTRADAY_DENOMINATOR,
};
pub use load::{
    inspect_minute_bars, load_minute_bars, parse_time, write_minute_bars, BarDiagnostics,
    DayDiagnostics, LoadedBars, MIN_USABLE_MINUTES,
};
pub use synth::{generate_synthetic_day, generate_synthetic_days, simulate_minutes, SynthParams};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Minute offset from 09:30.
pub type Minute = u16;

/// First minute of the day that is kept at all (09:30).
pub const WARMUP_START: Minute = 0;
/// 09:40.
pub const SESSION_START: Minute = 10;
/// 15:50.
pub const SESSION_END: Minute = 380;
pub const SESSION_MINUTES: usize = (SESSION_END - SESSION_START + 1) as usize;

/// Minutes since midnight of the 09:30 open.
pub(crate) const OPEN_CLOCK: u32 = 9 * 60 + 30;

/// Inverse of [`minute_label`]: `HH:MM` between 09:30 and 15:50.
pub fn parse_minute_label(s: &str) -> Option<Minute> {
    let off = parse_time(s)?.checked_sub(OPEN_CLOCK)?;
    (off <= u32::from(SESSION_END)).then_some(off as Minute)
}

pub fn is_session_minute(m: Minute) -> bool {
    (SESSION_START..=SESSION_END).contains(&m)
}

/// `HH:MM` label of a minute offset.
pub fn minute_label(m: Minute) -> String {
    let clock = OPEN_CLOCK + u32::from(m);
    format!("{:02}:{:02}", clock / 60, clock % 60)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinuteBar {
    pub day: NaiveDate,
    pub minute: Minute,
    pub spy_price: f64,
    /// Annualized volatility index level, in percent as quoted.
    pub vix_annual: f64,
}

/// One trading day of bars.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySeries {
    pub day: NaiveDate,
    /// Session bars, 09:40..=15:50, strictly increasing minute.
    pub bars: Vec<MinuteBar>,
    /// Pre-session history, 09:30..=09:39, strictly increasing minute.
    pub warmup: Vec<MinuteBar>,
    /// True when the session has missing minutes, so dependent rows are suppressed.
    pub gap_policy_applied: bool,
}

impl DaySeries {
    /// Builds a day from bars given in time order. Bars after the session end
    /// are discarded; the count of discarded bars is returned alongside.
    pub fn from_bars(day: NaiveDate, bars: Vec<MinuteBar>) -> Result<(Self, usize)> {
        let mut session = Vec::with_capacity(bars.len());
        let mut warmup = Vec::new();
        let mut dropped = 0;
        let mut last: Option<Minute> = None;
        for bar in bars {
            if bar.day != day {
                return Err(Error::Data {
                    day,
                    message: format!("bar dated {} in series for {day}", bar.day),
                });
            }
            validate_bar(&bar)?;
            if let Some(prev) = last {
                if bar.minute == prev {
                    return Err(Error::Data {
                        day,
                        message: format!("duplicate bar at {}", minute_label(bar.minute)),
                    });
                }
                if bar.minute < prev {
                    return Err(Error::Data {
                        day,
                        message: format!(
                            "timestamps not increasing: {} after {}",
                            minute_label(bar.minute),
                            minute_label(prev)
                        ),
                    });
                }
            }
            last = Some(bar.minute);
            if bar.minute < SESSION_START {
                warmup.push(bar);
            } else if bar.minute <= SESSION_END {
                session.push(bar);
            } else {
                dropped += 1;
            }
        }
        let gap_policy_applied = session.len() < SESSION_MINUTES;
        Ok((
            DaySeries {
                day,
                bars: session,
                warmup,
                gap_policy_applied,
            },
            dropped,
        ))
    }

    /// Bar at minute `m`, from the session or the warm-up history.
    pub fn bar(&self, m: Minute) -> Option<&MinuteBar> {
        let pool = if m < SESSION_START {
            &self.warmup
        } else {
            &self.bars
        };
        pool.binary_search_by_key(&m, |b| b.minute)
            .ok()
            .map(|i| &pool[i])
    }

    pub fn price(&self, m: Minute) -> Option<f64> {
        self.bar(m).map(|b| b.spy_price)
    }

    pub fn vix_annual(&self, m: Minute) -> Option<f64> {
        self.bar(m).map(|b| b.vix_annual)
    }

    /// Warm-up and session bars in time order.
    pub fn all_bars(&self) -> impl Iterator<Item = &MinuteBar> {
        self.warmup.iter().chain(self.bars.iter())
    }

    /// Session minutes with no bar.
    pub fn session_gaps(&self) -> Vec<Minute> {
        let mut gaps = Vec::new();
        let mut it = self.bars.iter().map(|b| b.minute).peekable();
        for m in SESSION_START..=SESSION_END {
            if it.peek() == Some(&m) {
                it.next();
            } else {
                gaps.push(m);
            }
        }
        gaps
    }
}

pub(crate) fn validate_bar(bar: &MinuteBar) -> Result<()> {
    if !(bar.spy_price.is_finite() && bar.spy_price > 0.0) {
        return Err(Error::Data {
            day: bar.day,
            message: format!(
                "price must be positive at {}, got {}",
                minute_label(bar.minute),
                bar.spy_price
            ),
        });
    }
    if !(bar.vix_annual.is_finite() && bar.vix_annual >= 0.0) {
        return Err(Error::Data {
            day: bar.day,
            message: format!(
                "volatility index must be non-negative at {}, got {}",
                minute_label(bar.minute),
                bar.vix_annual
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar(day: NaiveDate, minute: Minute) -> MinuteBar {
        MinuteBar {
            day,
            minute,
            spy_price: 100.0,
            vix_annual: 20.0,
        }
    }

    #[test]
    fn labels() {
        assert_eq!(minute_label(0), "09:30");
        assert_eq!(minute_label(SESSION_START), "09:40");
        assert_eq!(minute_label(41), "10:11");
        assert_eq!(minute_label(SESSION_END), "15:50");
        assert_eq!(SESSION_MINUTES, 371);
    }

    #[test]
    fn split_warmup_and_session() {
        let d = NaiveDate::from_ymd_opt(2010, 3, 1).unwrap();
        let bars: Vec<_> = [5, 9, 10, 11, 380, 385].iter().map(|&m| bar(d, m)).collect();
        let (s, dropped) = DaySeries::from_bars(d, bars).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(s.warmup.len(), 2);
        assert_eq!(s.bars.len(), 3);
        assert!(s.gap_policy_applied);
        assert!(s.bar(9).is_some());
        assert!(s.bar(12).is_none());
        assert_eq!(s.session_gaps().len(), 371 - 3);
    }

    #[test]
    fn duplicate_minute_rejected() {
        let d = NaiveDate::from_ymd_opt(2010, 3, 1).unwrap();
        let err = DaySeries::from_bars(d, vec![bar(d, 20), bar(d, 20)]).unwrap_err();
        assert!(err.to_string().contains("duplicate bar at 09:50"), "{err}");
    }

    #[test]
    fn decreasing_minute_rejected() {
        let d = NaiveDate::from_ymd_opt(2010, 3, 1).unwrap();
        let err = DaySeries::from_bars(d, vec![bar(d, 21), bar(d, 20)]).unwrap_err();
        assert!(err.to_string().contains("not increasing"), "{err}");
    }

    #[test]
    fn nonpositive_price_rejected() {
        let d = NaiveDate::from_ymd_opt(2010, 3, 1).unwrap();
        let mut b = bar(d, 20);
        b.spy_price = 0.0;
        assert!(DaySeries::from_bars(d, vec![b]).is_err());
    }
}
