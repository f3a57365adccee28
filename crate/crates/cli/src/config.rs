use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use intraday_core::forest::{FeatureSubsetting, ForestConfig};
use intraday_core::linear::Benchmark;
use intraday_core::lstm::TrainConfig;
use intraday_core::marketdata::SynthParams;
use intraday_core::rolling::{ModelSpec, PredictorSet};

use crate::CliError;

/// Flat run configuration. Every key is optional in the file; command-line
/// flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Minute-bar CSV. Without it, synthetic days are generated in memory.
    pub input: Option<PathBuf>,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,

    pub synth_days: Option<usize>,
    pub synth_seed: Option<u64>,
    pub synth_start: Option<NaiveDate>,
    pub synth_return_vol: Option<f64>,
    pub synth_vix_mean: Option<f64>,
    pub synth_vix_vol: Option<f64>,
    pub synth_vix_persistence: Option<f64>,
    pub synth_leverage_corr: Option<f64>,

    pub models: Option<Vec<String>>,
    pub predictors: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,

    pub lstm_hidden: Option<usize>,
    pub lstm_learning_rate: Option<f64>,
    pub lstm_epochs: Option<usize>,
    pub lstm_sequence_length: Option<usize>,
    pub lstm_clip_norm: Option<f64>,
    pub lstm_init_scale: Option<f64>,

    pub rf_trees: Option<usize>,
    pub rf_min_leaf: Option<usize>,
    pub rf_max_features: Option<usize>,
    pub rf_block_length: Option<usize>,
    /// `per-split` (default) or `per-tree`.
    pub rf_feature_subsetting: Option<String>,
}

pub const DEFAULT_MODELS: [&str; 4] = ["NAIVE", "OLS", "LSTM", "RF"];
pub const DEFAULT_SYNTH_START: (i32, u32, u32) = (2016, 1, 4);

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn synth_params(&self) -> SynthParams {
        let d = SynthParams::default();
        SynthParams {
            n_days: self.synth_days.unwrap_or(d.n_days),
            seed: self.synth_seed.unwrap_or(d.seed),
            return_vol: self.synth_return_vol.unwrap_or(d.return_vol),
            vix_mean: self.synth_vix_mean.unwrap_or(d.vix_mean),
            vix_vol: self.synth_vix_vol.unwrap_or(d.vix_vol),
            vix_persistence: self.synth_vix_persistence.unwrap_or(d.vix_persistence),
            leverage_corr: self.synth_leverage_corr.unwrap_or(d.leverage_corr),
        }
    }

    pub fn synth_start(&self) -> NaiveDate {
        let (y, m, d) = DEFAULT_SYNTH_START;
        self.synth_start
            .unwrap_or_else(|| NaiveDate::from_ymd_opt(y, m, d).expect("valid default date"))
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            hidden_dim: self.lstm_hidden.unwrap_or(d.hidden_dim),
            learning_rate: self.lstm_learning_rate.unwrap_or(d.learning_rate),
            epochs: self.lstm_epochs.unwrap_or(d.epochs),
            sequence_length: self.lstm_sequence_length.unwrap_or(d.sequence_length),
            clip_norm: self.lstm_clip_norm.unwrap_or(d.clip_norm),
            seed: d.seed,
            init_scale: self.lstm_init_scale.unwrap_or(d.init_scale),
        }
    }

    pub fn forest_config(&self) -> Result<ForestConfig, CliError> {
        let d = ForestConfig::default();
        let subsetting = match self.rf_feature_subsetting.as_deref() {
            None | Some("per-split") => FeatureSubsetting::PerSplit,
            Some("per-tree") => FeatureSubsetting::PerTree,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "rf_feature_subsetting must be \"per-split\" or \"per-tree\", got {other:?}"
                )))
            }
        };
        Ok(ForestConfig {
            n_trees: self.rf_trees.unwrap_or(d.n_trees),
            min_leaf: self.rf_min_leaf.unwrap_or(d.min_leaf),
            max_features: self.rf_max_features.or(d.max_features),
            block_length: self.rf_block_length.unwrap_or(d.block_length),
            subsetting,
            seed: d.seed,
        })
    }

    pub fn predictor_sets(&self) -> Result<Vec<PredictorSet>, CliError> {
        let sets = match &self.predictors {
            None => PredictorSet::ALL.to_vec(),
            Some(list) => list
                .iter()
                .map(|s| s.parse::<PredictorSet>().map_err(|e| CliError::Config(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
        };
        if sets.is_empty() {
            return Err(CliError::Config("at least one predictor set is required".into()));
        }
        Ok(sets)
    }

    /// Expands the model tokens into the run roster.
    pub fn roster(&self) -> Result<Vec<ModelSpec>, CliError> {
        let tokens: Vec<String> = match &self.models {
            None => DEFAULT_MODELS.iter().map(|s| s.to_string()).collect(),
            Some(m) => m.clone(),
        };
        let sets = self.predictor_sets()?;
        let lstm = self.train_config();
        lstm.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let rf = self.forest_config()?;
        rf.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let mut roster: Vec<ModelSpec> = Vec::new();
        let mut push = |spec: ModelSpec| {
            if !roster
                .iter()
                .any(|s| s.model_id() == spec.model_id() && s.predictor_set_id() == spec.predictor_set_id())
            {
                roster.push(spec);
            }
        };
        for token in &tokens {
            let token = token.trim().to_ascii_uppercase();
            let (family, pinned) = match token.split_once('-') {
                Some((f, rest)) => (f, Some(rest)),
                None => (token.as_str(), None),
            };
            let parse_set = |s: &str| s.parse::<PredictorSet>().map_err(|e| CliError::Config(e.to_string()));
            match (family, pinned) {
                ("NAIVE", None) => push(ModelSpec::naive()),
                ("OLS", None) => Benchmark::ALL.into_iter().for_each(|b| push(ModelSpec::ols(b))),
                ("OLS", Some(b)) => push(ModelSpec::ols(
                    b.parse::<Benchmark>().map_err(|e| CliError::Config(e.to_string()))?,
                )),
                ("LSTM", None) => sets.iter().for_each(|&s| push(ModelSpec::lstm(lstm.clone(), s))),
                ("LSTM", Some(s)) => push(ModelSpec::lstm(lstm.clone(), parse_set(s)?)),
                ("RF", None) => sets.iter().for_each(|&s| push(ModelSpec::rf(rf.clone(), s))),
                ("RF", Some(s)) => push(ModelSpec::rf(rf.clone(), parse_set(s)?)),
                _ => {
                    return Err(CliError::Config(format!(
                        "unknown model {token:?} (expected NAIVE, OLS[-AR1|-RV|-VIX|-DVIX|-VRP], LSTM[-set], RF[-set])"
                    )))
                }
            }
        }
        if roster.is_empty() {
            return Err(CliError::Config("at least one model is required".into()));
        }
        Ok(roster)
    }
}

/// Splits a comma-separated flag value.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}
