use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DaySeries, Minute, MinuteBar, SESSION_END, WARMUP_START};
use crate::error::{Error, Result};
use crate::seed::{combine, day_key, rng_from, TaskRng};

/// Parameters of the synthetic minute-bar generator: a log-price random walk
/// plus a log-AR(1) volatility index whose innovations correlate with returns.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_days: usize,
    pub seed: u64,
    /// Per-minute log-return volatility.
    pub return_vol: f64,
    /// Long-run annualized index level.
    pub vix_mean: f64,
    /// Per-minute volatility of log index innovations.
    pub vix_vol: f64,
    pub vix_persistence: f64,
    /// Correlation of return and index innovations.
    pub leverage_corr: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_days: 5,
            seed: 20_050_103,
            return_vol: 0.0004,
            vix_mean: 20.0,
            vix_vol: 0.004,
            vix_persistence: 0.99,
            leverage_corr: -0.4,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.vix_mean > 0.0 && self.vix_mean.is_finite()) {
            return bad("vix_mean must be positive");
        }
        if !(0.0..1.0).contains(&self.vix_persistence) {
            return bad("vix_persistence must lie in [0, 1)");
        }
        if !(-1.0..=1.0).contains(&self.leverage_corr) {
            return bad("leverage_corr must lie in [-1, 1]");
        }
        if !(self.return_vol >= 0.0 && self.return_vol.is_finite()) {
            return bad("return_vol must be non-negative");
        }
        if !(self.vix_vol >= 0.0 && self.vix_vol.is_finite()) {
            return bad("vix_vol must be non-negative");
        }
        Ok(())
    }
}

/// Simulates `n` consecutive minutes as `(price, annual index)` pairs,
/// starting from price 100 and the long-run index level.
pub fn simulate_minutes(params: &SynthParams, rng: &mut TaskRng, n: usize) -> Vec<(f64, f64)> {
    let rho = params.leverage_corr;
    let ortho = (1.0 - rho * rho).max(0.0).sqrt();
    let mut price = 100.0_f64;
    let mut log_dev = 0.0_f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let zv: f64 = rng.sample(StandardNormal);
            let zr: f64 = rng.sample(StandardNormal);
            log_dev = params.vix_persistence * log_dev + params.vix_vol * zv;
            price *= (params.return_vol * (rho * zv + ortho * zr)).exp();
        }
        out.push((price, params.vix_mean * log_dev.exp()));
    }
    out
}

/// A full gapless day, 09:30..=15:50, deterministic in `(params.seed, day)`.
pub fn generate_synthetic_day(params: &SynthParams, day: NaiveDate) -> Result<DaySeries> {
    params.validate()?;
    let mut rng = rng_from(combine(params.seed, day_key(day)));
    let n = usize::from(SESSION_END - WARMUP_START) + 1;
    let bars = simulate_minutes(params, &mut rng, n)
        .into_iter()
        .enumerate()
        .map(|(i, (spy_price, vix_annual))| MinuteBar {
            day,
            minute: WARMUP_START + i as Minute,
            spy_price,
            vix_annual,
        })
        .collect();
    Ok(DaySeries::from_bars(day, bars)?.0)
}

/// `params.n_days` consecutive weekdays starting at `start` (or the next weekday).
pub fn generate_synthetic_days(params: &SynthParams, start: NaiveDate) -> Result<Vec<DaySeries>> {
    params.validate()?;
    let mut day = start;
    let mut out = Vec::with_capacity(params.n_days);
    while out.len() < params.n_days {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(generate_synthetic_day(params, day)?);
        }
        day = day
            .succ_opt()
            .ok_or_else(|| Error::Config("date range overflow".into()))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{SESSION_MINUTES, SESSION_START};
    use super::*;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2016, 6, 1).unwrap()
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let p = SynthParams::default();
        let a = generate_synthetic_day(&p, day()).unwrap();
        let b = generate_synthetic_day(&p, day()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_day(&SynthParams { seed: 1, ..p.clone() }, day()).unwrap();
        assert_ne!(a, c);
        let d = generate_synthetic_day(&p, day().succ_opt().unwrap()).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn full_gapless_session() {
        let s = generate_synthetic_day(&SynthParams::default(), day()).unwrap();
        assert_eq!(s.bars.len(), SESSION_MINUTES);
        assert_eq!(s.warmup.len(), usize::from(SESSION_START));
        assert!(!s.gap_policy_applied);
        assert!(s.session_gaps().is_empty());
    }

    #[test]
    fn zero_volatility_gives_constant_price() {
        let p = SynthParams {
            return_vol: 0.0,
            ..SynthParams::default()
        };
        let s = generate_synthetic_day(&p, day()).unwrap();
        assert!(s.all_bars().all(|b| b.spy_price == 100.0));
    }

    #[test]
    fn leverage_correlation_recovered() {
        let p = SynthParams {
            leverage_corr: -0.4,
            ..SynthParams::default()
        };
        let mut rng = rng_from(99);
        let path = simulate_minutes(&p, &mut rng, 10_001);
        let phi = p.vix_persistence;
        let mut r = Vec::new();
        let mut e = Vec::new();
        for w in path.windows(2) {
            r.push((w[1].0 / w[0].0).ln());
            let prev = (w[0].1 / p.vix_mean).ln();
            let now = (w[1].1 / p.vix_mean).ln();
            e.push(now - phi * prev);
        }
        let n = r.len() as f64;
        let (mr, me) = (r.iter().sum::<f64>() / n, e.iter().sum::<f64>() / n);
        let cov: f64 = r.iter().zip(&e).map(|(a, b)| (a - mr) * (b - me)).sum();
        let vr: f64 = r.iter().map(|a| (a - mr).powi(2)).sum();
        let ve: f64 = e.iter().map(|b| (b - me).powi(2)).sum();
        let corr = cov / (vr * ve).sqrt();
        assert!((corr + 0.4).abs() < 0.05, "corr = {corr}");
    }

    #[test]
    fn invalid_params_rejected() {
        let base = SynthParams::default();
        for p in [
            SynthParams { vix_persistence: 1.0, ..base.clone() },
            SynthParams { vix_mean: 0.0, ..base.clone() },
            SynthParams { leverage_corr: 1.5, ..base.clone() },
            SynthParams { return_vol: -1.0, ..base.clone() },
        ] {
            assert!(generate_synthetic_day(&p, day()).is_err());
        }
    }

    #[test]
    fn weekdays_only() {
        let p = SynthParams { n_days: 6, ..SynthParams::default() };
        // 2016-06-03 is a Friday.
        let days = generate_synthetic_days(&p, NaiveDate::from_ymd_opt(2016, 6, 3).unwrap()).unwrap();
        assert_eq!(days.len(), 6);
        assert!(days.iter().all(|d| !matches!(d.day.weekday(), Weekday::Sat | Weekday::Sun)));
    }
}
