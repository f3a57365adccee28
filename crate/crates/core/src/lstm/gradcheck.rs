//! Analytic-versus-finite-difference gradient verification.

use rand::Rng;

use super::cell::{lstm_backward, lstm_forward, lstm_loss};
use super::params::{LstmGradient, LstmParams};
use crate::error::{Error, Result};
use crate::seed::{combine, rng_from};

/// Denominator floor of the relative error, so entries whose true gradient is
/// essentially zero are judged on absolute error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub seq_len: usize,
    pub instances: usize,
    pub eps: f64,
    pub tolerance: f64,
    pub seed: u64,
    /// Scale of the uniform parameter draw; `0` checks the all-zero instance.
    pub param_scale: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            input_dim: 2,
            hidden_dim: 3,
            seq_len: 5,
            instances: 20,
            eps: 1e-5,
            tolerance: 1e-4,
            seed: 1,
            param_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub instances: usize,
    pub entries_checked: usize,
    pub max_rel_error: f64,
    /// `tensor[index]` of the worst entry.
    pub worst_entry: String,
    /// Largest relative error per tensor name.
    pub per_tensor: Vec<(String, f64)>,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

fn loss_of(params: &LstmParams, seq: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    let (y_hat, _) = lstm_forward(params, seq)?;
    lstm_loss(&y_hat, y)
}

/// Central differences of the sequence loss with respect to every parameter.
pub fn numeric_gradient(params: &LstmParams, seq: &[Vec<f64>], y: &[f64], eps: f64) -> Result<LstmGradient> {
    let mut grad = LstmParams::zeros(params.input_dim(), params.hidden_dim());
    let mut probe = params.clone();
    let shapes: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();
    for (t, &len) in shapes.iter().enumerate() {
        for k in 0..len {
            let orig = probe.tensors()[t].1[k];
            probe.tensors_mut()[t].1[k] = orig + eps;
            let up = loss_of(&probe, seq, y)?;
            probe.tensors_mut()[t].1[k] = orig - eps;
            let down = loss_of(&probe, seq, y)?;
            probe.tensors_mut()[t].1[k] = orig;
            grad.tensors_mut()[t].1[k] = (up - down) / (2.0 * eps);
        }
    }
    Ok(grad)
}

/// Runs the check; `corrupt` may alter each analytic gradient before
/// comparison (used to confirm the harness detects errors).
pub fn gradcheck_with(config: &GradcheckConfig, corrupt: impl Fn(&mut LstmGradient)) -> Result<GradcheckReport> {
    if config.input_dim == 0 || config.hidden_dim == 0 || config.seq_len == 0 || config.instances == 0 {
        return Err(Error::Config("gradient check dimensions must be positive".into()));
    }
    if !(config.eps > 0.0) {
        return Err(Error::Config("eps must be positive".into()));
    }
    let mut per_tensor: Vec<(String, f64)> = LstmParams::zeros(config.input_dim, config.hidden_dim)
        .tensor_shapes()
        .into_iter()
        .map(|(n, _, _)| (n, 0.0))
        .collect();
    let mut max_rel = 0.0_f64;
    let mut worst = String::new();
    let mut entries = 0;
    for inst in 0..config.instances {
        let mut rng = rng_from(combine(config.seed, inst as u64));
        let params = if config.param_scale > 0.0 {
            LstmParams::random_uniform(config.input_dim, config.hidden_dim, config.param_scale, &mut rng)
        } else {
            LstmParams::zeros(config.input_dim, config.hidden_dim)
        };
        let seq: Vec<Vec<f64>> = (0..config.seq_len)
            .map(|_| (0..config.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = if config.param_scale > 0.0 {
            (0..config.seq_len).map(|_| rng.random_range(-1.0..1.0)).collect()
        } else {
            vec![0.0; config.seq_len]
        };

        let (_, cache) = lstm_forward(&params, &seq)?;
        let mut analytic = lstm_backward(&params, &cache, &y)?;
        corrupt(&mut analytic);
        let numeric = numeric_gradient(&params, &seq, &y, config.eps)?;

        for (t, ((name, a), (_, n))) in analytic.tensors().into_iter().zip(numeric.tensors()).enumerate() {
            for (k, (av, nv)) in a.iter().zip(n).enumerate() {
                let rel = relative_error(*av, *nv);
                entries += 1;
                if rel > per_tensor[t].1 {
                    per_tensor[t].1 = rel;
                }
                if rel > max_rel || worst.is_empty() {
                    max_rel = max_rel.max(rel);
                    worst = format!("{name}[{k}] (instance {inst})");
                }
            }
        }
    }
    Ok(GradcheckReport {
        instances: config.instances,
        entries_checked: entries,
        max_rel_error: max_rel,
        worst_entry: worst,
        per_tensor,
        passed: max_rel < config.tolerance,
    })
}

pub fn gradcheck(config: &GradcheckConfig) -> Result<GradcheckReport> {
    gradcheck_with(config, |_| {})
}
