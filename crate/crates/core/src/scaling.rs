//! Per-window min/max scaling.
//!
//! The scaler is fitted on the training rows of a window and then applied to
//! both training and test rows with the training parameters, so test values may
//! fall outside `[0, 1]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
    degenerate: Vec<bool>,
}

/// Fits columnwise minimum and maximum. Columns with zero range are flagged
/// degenerate.
pub fn fit_minmax(train: &DMatrix<f64>) -> Result<MinMaxScaler> {
    if train.nrows() < 2 || train.ncols() == 0 {
        return Err(Error::Fit(format!(
            "min/max scaler needs at least 2 rows and 1 column, got {}x{}",
            train.nrows(),
            train.ncols()
        )));
    }
    let mut min = Vec::with_capacity(train.ncols());
    let mut max = Vec::with_capacity(train.ncols());
    for col in train.column_iter() {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("scaler training data".into()));
        }
        min.push(col.min());
        max.push(col.max());
    }
    let degenerate = min.iter().zip(&max).map(|(a, b)| a == b).collect();
    Ok(MinMaxScaler { min, max, degenerate })
}

impl MinMaxScaler {
    pub fn ncols(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn is_degenerate(&self, column: usize) -> bool {
        self.degenerate[column]
    }

    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..self.ncols()).filter(|&c| self.degenerate[c]).collect()
    }

    #[inline]
    fn scale(&self, column: usize, x: f64) -> f64 {
        if self.degenerate[column] {
            0.0
        } else {
            (x - self.min[column]) / (self.max[column] - self.min[column])
        }
    }

    pub fn transform(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.ncols() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} columns, got {}",
                self.ncols(),
                m.ncols()
            )));
        }
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| self.scale(c, m[(r, c)])))
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.ncols() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} columns, got {}",
                self.ncols(),
                row.len()
            )));
        }
        Ok(row.iter().enumerate().map(|(c, &x)| self.scale(c, x)).collect())
    }

    /// Scales the leading `row.len()` columns, e.g. the predictors of a test
    /// row whose target must stay unseen.
    pub fn transform_leading(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() > self.ncols() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} columns, got {}",
                self.ncols(),
                row.len()
            )));
        }
        Ok(row.iter().enumerate().map(|(c, &x)| self.scale(c, x)).collect())
    }

    /// Maps a scaled value of `column` back to original units. A degenerate
    /// column returns its constant.
    pub fn inverse_transform_target(&self, scaled: f64, column: usize) -> Result<f64> {
        if column >= self.ncols() {
            return Err(Error::Shape(format!(
                "column {column} not fitted ({} columns)",
                self.ncols()
            )));
        }
        if self.degenerate[column] {
            return Ok(self.min[column]);
        }
        Ok(scaled * (self.max[column] - self.min[column]) + self.min[column])
    }
}
