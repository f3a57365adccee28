//! Single-layer LSTM regressor with a scalar read-out.
//!
//! Per step, from the previous hidden state `h` and cell state `c`:
//!
//! ```text
//! f = σ(W_f x + U_f h + b_f)      i = σ(W_i x + U_i h + b_i)
//! o = σ(W_o x + U_o h + b_o)      p = tanh(W_c x + U_c h + b_c)
//! c' = f ⊙ c + i ⊙ p              h' = o ⊙ tanh(c')
//! ŷ = W_y h' + b_y
//! ```
//!
//! Every forward pass starts from `c = 0, h = 0`. Training is full-batch
//! gradient descent on mean squared error with global norm clipping.

mod cell;
pub mod gradcheck;
mod params;
mod train;

pub use cell::{lstm_backward, lstm_forward, lstm_loss, lstm_predict, lstm_step, ForwardCache, LstmState, StepCache};
pub use gradcheck::{gradcheck, gradcheck_with, GradcheckConfig, GradcheckReport};
pub use params::{Gate, LstmGradient, LstmParams};
pub use train::{batch_gradient, lstm_train, TrainConfig, TrainedLstm};
