use super::cell::{accumulate_backward, forward_steps};
use super::params::{LstmGradient, LstmParams};
use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Full-batch gradient descent settings for one window fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Length of the training subsequences and of the prediction sequence.
    pub sequence_length: usize,
    /// Global gradient-norm clipping threshold.
    pub clip_norm: f64,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 8,
            learning_rate: 0.5,
            epochs: 200,
            sequence_length: 5,
            clip_norm: 1.0,
            seed: 0,
            init_scale: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.sequence_length == 0 {
            return bad("sequence_length must be at least 1");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedLstm {
    pub params: LstmParams,
    /// Batch loss at the start of every epoch.
    pub loss_history: Vec<f64>,
    /// Batch loss after the last update.
    pub final_loss: f64,
}

/// Mean loss and mean gradient over all contiguous length-`seq_len`
/// subsequences of the window. Each subsequence starts from the zero state and
/// is scored at every position.
pub fn batch_gradient(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    targets: &[f64],
    seq_len: usize,
) -> Result<(f64, LstmGradient)> {
    if inputs.len() != targets.len() {
        return Err(Error::Shape(format!("{} inputs vs {} targets", inputs.len(), targets.len())));
    }
    if seq_len == 0 || inputs.len() < seq_len {
        return Err(Error::Fit(format!(
            "{} rows cannot form a length-{seq_len} subsequence",
            inputs.len()
        )));
    }
    let count = inputs.len() - seq_len + 1;
    let mut grad = LstmParams::zeros(params.input_dim(), params.hidden_dim());
    let inv = 1.0 / count as f64;
    let mut loss = 0.0;
    for start in 0..count {
        let y = &targets[start..start + seq_len];
        let steps = forward_steps(params, &inputs[start..start + seq_len])?;
        loss += steps.iter().zip(y).map(|(s, t)| (s.y_hat - t).powi(2)).sum::<f64>() / seq_len as f64;
        accumulate_backward(params, &steps, y, inv, &mut grad);
    }
    Ok((loss * inv, grad))
}

/// Trains a fresh LSTM on one (already scaled) window.
///
/// `inputs[k]` are the predictors of row `k`, `targets[k]` its scaled target.
pub fn lstm_train(inputs: &[Vec<f64>], targets: &[f64], config: &TrainConfig) -> Result<TrainedLstm> {
    config.validate()?;
    let n = inputs.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::Fit("no predictor columns".into()));
    }
    if inputs.len() < config.sequence_length + 1 {
        return Err(Error::Fit(format!(
            "window of {} rows is shorter than sequence length {} + 1",
            inputs.len(),
            config.sequence_length
        )));
    }
    let mut rng = rng_from(config.seed);
    let mut params = LstmParams::random_uniform(n, config.hidden_dim, config.init_scale, &mut rng);
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (loss, mut grad) = batch_gradient(&params, inputs, targets, config.sequence_length)?;
        loss_history.push(loss);
        let norm = grad.norm();
        if !norm.is_finite() {
            return Err(Error::Numeric("LSTM gradient".into()));
        }
        if norm > config.clip_norm {
            grad.scale(config.clip_norm / norm);
        }
        params.axpy(-config.learning_rate, &grad);
    }
    let (final_loss, _) = batch_gradient(&params, inputs, targets, config.sequence_length)?;
    Ok(TrainedLstm {
        params,
        loss_history,
        final_loss,
    })
}
