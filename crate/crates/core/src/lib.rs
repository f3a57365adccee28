//! Rolling-window forecasting of one-minute-ahead five-minute index returns.
//!
//! The pipeline reads minute bars of an index ETF and its implied-volatility
//! index, builds non-overlapping lagged predictors, and re-estimates a model on
//! every 30-minute window of the trading session:
//!
//! - [`marketdata`]: bar ingestion, session filtering, feature rows, synthetic days
//! - [`scaling`]: per-window min/max scaling fitted on training rows only
//! - [`linear`]: OLS benchmarks with a QR solver
//! - [`lstm`]: a single LSTM layer with exact BPTT gradients and a gradient checker
//! - [`forest`]: CART regression trees and block-bootstrap random forests
//! - [`rolling`]: window scheduling, per-window estimation and the prediction store
//! - [`metrics`]: daily RMSE / out-of-sample R², trimming and aggregate tables

pub mod error;
pub mod forest;
pub mod linear;
pub mod lstm;
pub mod marketdata;
pub mod metrics;
pub mod rolling;
pub mod scaling;
pub mod seed;

pub use error::{Error, Result};
