use super::params::{Gate, LstmGradient, LstmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            c: vec![0.0; hidden_dim],
            h: vec![0.0; hidden_dim],
        }
    }
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub p: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub y_hat: f64,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub steps: Vec<StepCache>,
    fingerprint: u64,
}

#[inline]
fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `out = W x + U h + b` for one gate.
#[inline]
fn preactivation(params: &LstmParams, g: Gate, x: &[f64], h: &[f64], out: &mut [f64]) {
    let (n, d) = (params.input_dim(), params.hidden_dim());
    let (w, u, b) = (&params.w[g as usize], &params.u[g as usize], &params.b[g as usize]);
    for r in 0..d {
        let wr = &w[r * n..(r + 1) * n];
        let ur = &u[r * d..(r + 1) * d];
        let mut z = b[r];
        for k in 0..n {
            z += wr[k] * x[k];
        }
        for k in 0..d {
            z += ur[k] * h[k];
        }
        out[r] = z;
    }
}

fn step_cached(params: &LstmParams, c_prev: &[f64], h_prev: &[f64], x: &[f64]) -> Result<StepCache> {
    let (n, d) = (params.input_dim(), params.hidden_dim());
    if x.len() != n {
        return Err(Error::Shape(format!("input has {} features, cell expects {n}", x.len())));
    }
    if c_prev.len() != d || h_prev.len() != d {
        return Err(Error::Shape(format!("state has dimension {}, cell expects {d}", h_prev.len())));
    }
    let mut f = vec![0.0; d];
    let mut i = vec![0.0; d];
    let mut o = vec![0.0; d];
    let mut p = vec![0.0; d];
    preactivation(params, Gate::Forget, x, h_prev, &mut f);
    preactivation(params, Gate::Input, x, h_prev, &mut i);
    preactivation(params, Gate::Output, x, h_prev, &mut o);
    preactivation(params, Gate::Candidate, x, h_prev, &mut p);
    let mut c = vec![0.0; d];
    let mut tanh_c = vec![0.0; d];
    let mut h = vec![0.0; d];
    let mut y_hat = params.b_y;
    for r in 0..d {
        f[r] = logistic(f[r]);
        i[r] = logistic(i[r]);
        o[r] = logistic(o[r]);
        p[r] = p[r].tanh();
        c[r] = f[r] * c_prev[r] + i[r] * p[r];
        tanh_c[r] = c[r].tanh();
        h[r] = o[r] * tanh_c[r];
        y_hat += params.w_y[r] * h[r];
    }
    if !y_hat.is_finite() || c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("LSTM step".into()));
    }
    Ok(StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        f,
        i,
        o,
        p,
        c,
        tanh_c,
        h,
        y_hat,
    })
}

/// One application of the cell: gates, cell update, hidden state, read-out.
pub fn lstm_step(params: &LstmParams, state: &LstmState, x: &[f64]) -> Result<(LstmState, f64)> {
    let s = step_cached(params, &state.c, &state.h, x)?;
    Ok((LstmState { c: s.c, h: s.h }, s.y_hat))
}

pub(crate) fn forward_steps(params: &LstmParams, sequence: &[Vec<f64>]) -> Result<Vec<StepCache>> {
    if sequence.is_empty() {
        return Err(Error::Shape("empty input sequence".into()));
    }
    let zeros = vec![0.0; params.hidden_dim()];
    let mut steps: Vec<StepCache> = Vec::with_capacity(sequence.len());
    for x in sequence {
        let (c_prev, h_prev) = match steps.last() {
            Some(s) => (s.c.as_slice(), s.h.as_slice()),
            None => (zeros.as_slice(), zeros.as_slice()),
        };
        let step = step_cached(params, c_prev, h_prev, x)?;
        steps.push(step);
    }
    Ok(steps)
}

/// Runs the cell over `sequence` from the zero state, returning the read-out
/// at every position.
pub fn lstm_forward(params: &LstmParams, sequence: &[Vec<f64>]) -> Result<(Vec<f64>, ForwardCache)> {
    let steps = forward_steps(params, sequence)?;
    let y_hat = steps.iter().map(|s| s.y_hat).collect();
    Ok((
        y_hat,
        ForwardCache {
            steps,
            fingerprint: params.fingerprint(),
        },
    ))
}

/// Final read-out of a forward pass over `sequence`.
pub fn lstm_predict(params: &LstmParams, sequence: &[Vec<f64>]) -> Result<f64> {
    if sequence.is_empty() {
        return Err(Error::Shape("empty input sequence".into()));
    }
    let mut state = LstmState::zeros(params.hidden_dim());
    let mut y = 0.0;
    for x in sequence {
        let (next, out) = lstm_step(params, &state, x)?;
        state = next;
        y = out;
    }
    Ok(y)
}

/// Mean squared error.
pub fn lstm_loss(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() || y.is_empty() {
        return Err(Error::Shape(format!(
            "prediction length {} vs target length {}",
            y_hat.len(),
            y.len()
        )));
    }
    Ok(y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Gradient of [`lstm_loss`] with respect to every parameter, by
/// backpropagation through time over the cached forward pass.
pub fn lstm_backward(params: &LstmParams, cache: &ForwardCache, y: &[f64]) -> Result<LstmGradient> {
    if cache.fingerprint != params.fingerprint() {
        return Err(Error::Usage("forward cache was produced by different parameters".into()));
    }
    if cache.steps.len() != y.len() {
        return Err(Error::Usage(format!(
            "cache covers {} steps, targets have {}",
            cache.steps.len(),
            y.len()
        )));
    }
    let mut grad = LstmParams::zeros(params.input_dim(), params.hidden_dim());
    accumulate_backward(params, &cache.steps, y, 1.0, &mut grad);
    Ok(grad)
}

/// Adds `weight` times the loss gradient of one cached sequence to `grad`.
pub(crate) fn accumulate_backward(params: &LstmParams, steps: &[StepCache], y: &[f64], weight: f64, grad: &mut LstmGradient) {
    let (n, d) = (params.input_dim(), params.hidden_dim());
    let len = y.len() as f64;
    let mut dh_next = vec![0.0; d];
    let mut dc_next = vec![0.0; d];
    let mut dz = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];

    for (s, &target) in steps.iter().zip(y).rev() {
        let dy = weight * 2.0 * (s.y_hat - target) / len;
        grad.b_y += dy;
        for r in 0..d {
            grad.w_y[r] += dy * s.h[r];
        }
        for r in 0..d {
            let dh = params.w_y[r] * dy + dh_next[r];
            let d_o = dh * s.tanh_c[r];
            let dc = dh * s.o[r] * (1.0 - s.tanh_c[r] * s.tanh_c[r]) + dc_next[r];
            let d_f = dc * s.c_prev[r];
            let d_i = dc * s.p[r];
            let d_p = dc * s.i[r];
            dc_next[r] = dc * s.f[r];
            dz[Gate::Forget as usize][r] = d_f * s.f[r] * (1.0 - s.f[r]);
            dz[Gate::Input as usize][r] = d_i * s.i[r] * (1.0 - s.i[r]);
            dz[Gate::Output as usize][r] = d_o * s.o[r] * (1.0 - s.o[r]);
            dz[Gate::Candidate as usize][r] = d_p * (1.0 - s.p[r] * s.p[r]);
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for g in Gate::ALL {
            let gi = g as usize;
            let (gw, gu, gb) = (&mut grad.w[gi], &mut grad.u[gi], &mut grad.b[gi]);
            let u = &params.u[gi];
            for r in 0..d {
                let z = dz[gi][r];
                gb[r] += z;
                for k in 0..n {
                    gw[r * n + k] += z * s.x[k];
                }
                for k in 0..d {
                    gu[r * d + k] += z * s.h_prev[k];
                    dh_next[k] += u[r * d + k] * z;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn zero_params_give_half_gates_and_zero_output() {
        let p = LstmParams::zeros(3, 4);
        let (y_hat, cache) = lstm_forward(&p, &[vec![0.3, -1.0, 2.0]]).unwrap();
        let s = &cache.steps[0];
        assert!(s.f.iter().chain(&s.i).chain(&s.o).all(|&g| g == 0.5));
        assert!(s.p.iter().chain(&s.c).chain(&s.h).all(|&v| v == 0.0));
        assert_eq!(y_hat, vec![0.0]);
    }

    #[test]
    fn output_bias_passthrough() {
        let mut p = LstmParams::zeros(2, 3);
        p.b_y = 0.7;
        for x in [[0.0, 0.0], [5.0, -3.0], [1e3, 1e-3]] {
            let (_, y) = lstm_step(&p, &LstmState::zeros(3), &x).unwrap();
            assert_eq!(y, 0.7);
        }
        assert_eq!(lstm_predict(&p, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(), 0.7);
    }

    #[test]
    fn scalar_hand_case() {
        let mut p = LstmParams::zeros(1, 1);
        p.w[Gate::Candidate as usize][0] = 1.0;
        p.b[Gate::Input as usize][0] = 40.0;
        p.b[Gate::Forget as usize][0] = -40.0;
        p.w_y[0] = 1.0;
        let (state, y) = lstm_step(&p, &LstmState::zeros(1), &[1.0]).unwrap();
        assert_abs_diff_eq!(state.c[0], 1f64.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(state.c[0], 0.76159, epsilon = 1e-5);
        assert_abs_diff_eq!(state.h[0], 0.5 * 0.761_594_155_955_764_9_f64.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(state.h[0], 0.32101, epsilon = 1e-5);
        assert_eq!(y, state.h[0]);
    }

    #[test]
    fn single_step_forward_equals_step() {
        let p = LstmParams::random_uniform(2, 3, 0.5, &mut rng_from(1));
        let x = vec![0.4, -0.2];
        let (y_seq, _) = lstm_forward(&p, &[x.clone()]).unwrap();
        let (_, y) = lstm_step(&p, &LstmState::zeros(3), &x).unwrap();
        assert_eq!(y_seq[0], y);
    }

    #[test]
    fn repeated_input_without_feedback_is_constant() {
        let mut p = LstmParams::random_uniform(2, 3, 0.5, &mut rng_from(2));
        for u in p.u.iter_mut() {
            u.iter_mut().for_each(|v| *v = 0.0);
        }
        p.b[Gate::Forget as usize].iter_mut().for_each(|v| *v = -50.0);
        let seq = vec![vec![0.3, 0.9]; 6];
        let (y, _) = lstm_forward(&p, &seq).unwrap();
        for v in &y {
            assert_abs_diff_eq!(*v, y[0], epsilon = 1e-15);
        }
    }

    #[test]
    fn forward_is_deterministic_and_predict_is_last() {
        let p = LstmParams::random_uniform(2, 3, 0.5, &mut rng_from(3));
        let seq: Vec<Vec<f64>> = (0..5).map(|i| vec![f64::from(i) * 0.1, 1.0 - f64::from(i) * 0.2]).collect();
        let (a, _) = lstm_forward(&p, &seq).unwrap();
        let (b, _) = lstm_forward(&p, &seq).unwrap();
        assert_eq!(a, b);
        assert_eq!(lstm_predict(&p, &seq).unwrap(), *a.last().unwrap());
    }

    #[test]
    fn gate_ranges() {
        let mut rng = rng_from(4);
        for _ in 0..50 {
            let p = LstmParams::random_uniform(3, 4, 2.0, &mut rng);
            let seq: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let (_, cache) = lstm_forward(&p, &seq).unwrap();
            for s in &cache.steps {
                assert!(s.f.iter().chain(&s.i).chain(&s.o).all(|&g| g > 0.0 && g < 1.0));
                assert!(s.p.iter().chain(&s.h).all(|&v| v > -1.0 && v < 1.0));
            }
        }
    }

    #[test]
    fn loss_values() {
        assert_eq!(lstm_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(lstm_loss(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(
            lstm_loss(&[0.3, -1.0], &[2.0, 0.5]).unwrap(),
            lstm_loss(&[-1.0, 0.3], &[0.5, 2.0]).unwrap()
        );
        assert!(lstm_loss(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn shape_errors() {
        let p = LstmParams::zeros(2, 3);
        assert!(matches!(lstm_step(&p, &LstmState::zeros(3), &[1.0]), Err(Error::Shape(_))));
        assert!(matches!(lstm_step(&p, &LstmState::zeros(2), &[1.0, 2.0]), Err(Error::Shape(_))));
        assert!(matches!(lstm_forward(&p, &[]), Err(Error::Shape(_))));
    }

    #[test]
    fn non_finite_input_is_numeric_error() {
        let mut p = LstmParams::zeros(1, 1);
        p.w_y[0] = 1.0;
        p.w[Gate::Candidate as usize][0] = 1.0;
        assert!(matches!(lstm_step(&p, &LstmState::zeros(1), &[f64::NAN]), Err(Error::Numeric(_))));
    }

    #[test]
    fn zero_params_zero_targets_have_zero_readout_gradient() {
        let p = LstmParams::zeros(2, 3);
        let seq = vec![vec![1.0, -1.0]; 4];
        let (_, cache) = lstm_forward(&p, &seq).unwrap();
        let g = lstm_backward(&p, &cache, &[0.0; 4]).unwrap();
        assert!(g.w_y.iter().all(|&v| v == 0.0));
        assert_eq!(g.b_y, 0.0);
    }

    #[test]
    fn stale_cache_rejected() {
        let mut p = LstmParams::random_uniform(1, 2, 0.3, &mut rng_from(5));
        let (_, cache) = lstm_forward(&p, &[vec![1.0], vec![0.5]]).unwrap();
        assert!(matches!(lstm_backward(&p, &cache, &[0.0]), Err(Error::Usage(_))));
        p.b_y += 1.0;
        assert!(matches!(lstm_backward(&p, &cache, &[0.0, 0.0]), Err(Error::Usage(_))));
    }
}
