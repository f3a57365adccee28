//! Ordinary least squares with intercept, solved by Householder QR.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::marketdata::{FeatureColumn, FeatureRow};

/// Relative threshold on `|R_ii| / max_j |R_jj|` below which the design is
/// treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Residual sum of squares over `n - k - 1`.
    pub residual_variance: f64,
    pub n_obs: usize,
}

/// Fits `y = a + X b + e` by least squares.
///
/// Returns [`Error::Singular`] when `[1 | X]` is numerically rank deficient,
/// which includes any constant regressor.
pub fn ols_fit(x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::Shape(format!("design has {n} rows, response has {}", y.len())));
    }
    if n < k + 2 {
        return Err(Error::Fit(format!("{n} observations cannot identify {k} regressors")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("regression data".into()));
    }

    let design = DMatrix::from_fn(n, k + 1, |r, c| if c == 0 { 1.0 } else { x[(r, c - 1)] });
    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if diag_max == 0.0 || r.diagonal().iter().any(|v| v.abs() <= RANK_TOL * diag_max) {
        return Err(Error::Singular);
    }

    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::Singular)?;

    let fitted = &design * &coef;
    let ssr: f64 = (yv - fitted).iter().map(|e| e * e).sum();
    Ok(OlsFit {
        intercept: coef[0],
        coefficients: coef.iter().skip(1).copied().collect(),
        residual_variance: ssr / (n - k - 1) as f64,
        n_obs: n,
    })
}

impl OlsFit {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        ols_predict(self, x)
    }
}

pub fn ols_predict(fit: &OlsFit, x: &[f64]) -> Result<f64> {
    if x.len() != fit.coefficients.len() {
        return Err(Error::Shape(format!(
            "fit has {} coefficients, input has {}",
            fit.coefficients.len(),
            x.len()
        )));
    }
    Ok(fit.intercept + fit.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
}

/// The five single-regressor benchmark regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Benchmark {
    Ar1,
    Rv,
    Vix,
    Dvix,
    Vrp,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [
        Benchmark::Ar1,
        Benchmark::Rv,
        Benchmark::Vix,
        Benchmark::Dvix,
        Benchmark::Vrp,
    ];

    pub fn regressor(self) -> FeatureColumn {
        match self {
            Benchmark::Ar1 => FeatureColumn::LagR5,
            Benchmark::Rv => FeatureColumn::LagR5Sq,
            Benchmark::Vix => FeatureColumn::VixLag,
            Benchmark::Dvix => FeatureColumn::DvixLag,
            Benchmark::Vrp => FeatureColumn::VrpLag,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Benchmark::Ar1 => "AR1",
            Benchmark::Rv => "RV",
            Benchmark::Vix => "VIX",
            Benchmark::Dvix => "DVIX",
            Benchmark::Vrp => "VRP",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown benchmark {s:?} (expected AR1, RV, VIX, DVIX or VRP)")))
    }
}

/// Single-column design and target vector for a benchmark.
pub fn benchmark_design(rows: &[FeatureRow], which: Benchmark) -> (DMatrix<f64>, Vec<f64>) {
    let col = which.regressor();
    let x = DMatrix::from_iterator(rows.len(), 1, rows.iter().map(|r| r.get(col)));
    let y = rows.iter().map(|r| r.target).collect();
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: closed-form simple regression from the normal
    /// equations.
    fn normal_equations_1d(x: &[f64], y: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        ((sy - beta * sx) / n, beta)
    }

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn exact_linear_data() {
        let fit = ols_fit(&col(&[1.0, 2.0, 3.0]), &[2.0, 4.0, 6.0]).unwrap();
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.residual_variance, 0.0, epsilon = 1e-20);
        assert_abs_diff_eq!(ols_predict(&fit, &[5.0]).unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_response() {
        let fit = ols_fit(&col(&[0.3, -1.0, 2.5, 7.0]), &[4.0; 4]).unwrap();
        assert_abs_diff_eq!(fit.intercept, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_regressor_is_singular() {
        assert!(matches!(ols_fit(&col(&[1.0; 5]), &[1.0, 2.0, 3.0, 4.0, 5.0]), Err(Error::Singular)));
        assert!(matches!(ols_fit(&col(&[0.0; 5]), &[1.0, 2.0, 3.0, 4.0, 5.0]), Err(Error::Singular)));
    }

    #[test]
    fn collinear_columns_are_singular() {
        let x = DMatrix::from_fn(6, 2, |r, c| (r as f64) * if c == 0 { 1.0 } else { 3.0 });
        assert!(matches!(ols_fit(&x, &[1.0, 0.0, 2.0, 1.0, 3.0, 2.0]), Err(Error::Singular)));
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(ols_fit(&col(&[1.0, 2.0]), &[1.0, 2.0]), Err(Error::Fit(_))));
    }

    #[test]
    fn prediction_shape_error() {
        let fit = OlsFit {
            intercept: 1.0,
            coefficients: vec![0.0],
            residual_variance: 0.0,
            n_obs: 3,
        };
        assert_eq!(fit.predict(&[123.0]).unwrap(), 1.0);
        assert!(matches!(fit.predict(&[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn matches_normal_equations_on_random_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x: Vec<f64> = (0..30).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| 0.3 - 1.7 * v + rng.random_range(-1.0..1.0)).collect();
            let fit = ols_fit(&col(&x), &y).unwrap();
            let (a, b) = normal_equations_1d(&x, &y);
            assert_abs_diff_eq!(fit.intercept, a, epsilon = 1e-8);
            assert_abs_diff_eq!(fit.coefficients[0], b, epsilon = 1e-8);
        }
    }

    #[test]
    fn passes_through_means() {
        let x = [0.5, 1.5, -0.2, 3.3, 2.2, 0.0];
        let y = [1.0, -2.0, 0.4, 5.0, 1.1, 0.3];
        let fit = ols_fit(&col(&x), &y).unwrap();
        let mx = x.iter().sum::<f64>() / 6.0;
        let my = y.iter().sum::<f64>() / 6.0;
        assert_abs_diff_eq!(fit.predict(&[mx]).unwrap(), my, epsilon = 1e-12);
    }

    #[test]
    fn benchmark_columns() {
        let d = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
        let rows: Vec<FeatureRow> = (0..4)
            .map(|i| {
                let f = f64::from(i);
                FeatureRow {
                    day: d,
                    minute: 40 + i as u16,
                    target: f,
                    lag_r5: 0.1 * f - 0.15,
                    lag_r5_sq: (0.1 * f - 0.15).powi(2),
                    vix_lag: 0.03 + 0.001 * f,
                    vix_sq_lag: (0.03 + 0.001 * f).powi(2),
                    dvix_lag: 0.0001 * f,
                    vrp_lag: -0.0009 + f * 1e-6,
                }
            })
            .collect();
        let (xv, yv) = benchmark_design(&rows, Benchmark::Vix);
        assert_eq!(xv.as_slice(), rows.iter().map(|r| r.vix_lag).collect::<Vec<_>>().as_slice());
        let (xr, _) = benchmark_design(&rows, Benchmark::Rv);
        for (v, r) in xr.iter().zip(&rows) {
            assert_eq!(*v, r.lag_r5 * r.lag_r5);
        }
        for b in Benchmark::ALL {
            assert_eq!(benchmark_design(&rows, b).1, yv);
        }
        assert_eq!("dvix".parse::<Benchmark>().unwrap(), Benchmark::Dvix);
        assert!(matches!("AR2".parse::<Benchmark>(), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_and_scale_equivariant(
            x in prop::collection::vec(-5.0f64..5.0, 8..40),
            noise in prop::collection::vec(-1.0f64..1.0, 40),
            a in prop::sample::select(vec![-3.0, 0.01, 0.5, 7.0, 1000.0]),
        ) {
            let n = x.len();
            let spread = x.iter().cloned().fold(f64::MIN, f64::max) - x.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let y: Vec<f64> = x.iter().zip(&noise).map(|(v, e)| 1.0 + 0.5 * v + e).collect();
            let fit = ols_fit(&col(&x), &y).unwrap();
            let resid: Vec<f64> = x.iter().zip(&y).map(|(v, t)| t - fit.predict(&[*v]).unwrap()).collect();
            prop_assert!(resid.iter().sum::<f64>().abs() / (n as f64) < 1e-8);
            let xe: f64 = x.iter().zip(&resid).map(|(v, e)| v * e).sum();
            prop_assert!(xe.abs() / (n as f64) < 1e-8);

            let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
            let fit_s = ols_fit(&col(&xs), &y).unwrap();
            prop_assert!((fit_s.coefficients[0] - fit.coefficients[0] / a).abs() < 1e-8 * (1.0 + (fit.coefficients[0] / a).abs()));
            for (v, vs) in x.iter().zip(&xs) {
                prop_assert!((fit.predict(&[*v]).unwrap() - fit_s.predict(&[*vs]).unwrap()).abs() < 1e-8);
            }
        }
    }
}
