use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{hash_str, mix64, TaskRng};

/// Gate order used for every per-gate array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Output = 2,
    Candidate = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Output, Gate::Candidate];

    fn suffix(self) -> char {
        match self {
            Gate::Forget => 'f',
            Gate::Input => 'i',
            Gate::Output => 'o',
            Gate::Candidate => 'c',
        }
    }
}

/// Weights of one LSTM layer with a scalar linear read-out.
///
/// Matrices are row-major: `w[g]` is `hidden x input`, `u[g]` is
/// `hidden x hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    input_dim: usize,
    hidden_dim: usize,
    pub w: [Vec<f64>; 4],
    pub u: [Vec<f64>; 4],
    pub b: [Vec<f64>; 4],
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

/// Gradients share the parameter layout.
pub type LstmGradient = LstmParams;

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let (n, d) = (input_dim, hidden_dim);
        Self {
            input_dim: n,
            hidden_dim: d,
            w: std::array::from_fn(|_| vec![0.0; d * n]),
            u: std::array::from_fn(|_| vec![0.0; d * d]),
            b: std::array::from_fn(|_| vec![0.0; d]),
            w_y: vec![0.0; d],
            b_y: 0.0,
        }
    }

    /// Every entry drawn from `uniform(-scale, scale)`.
    pub fn random_uniform(input_dim: usize, hidden_dim: usize, scale: f64, rng: &mut TaskRng) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        for (_, t) in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.random_range(-scale..=scale);
            }
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// `(name, rows, cols)` of each tensor, in [`tensors`](Self::tensors) order.
    pub fn tensor_shapes(&self) -> Vec<(String, usize, usize)> {
        let (n, d) = (self.input_dim, self.hidden_dim);
        let mut out = Vec::with_capacity(14);
        for g in Gate::ALL {
            out.push((format!("W_{}", g.suffix()), d, n));
        }
        for g in Gate::ALL {
            out.push((format!("U_{}", g.suffix()), d, d));
        }
        for g in Gate::ALL {
            out.push((format!("b_{}", g.suffix()), d, 1));
        }
        out.push(("W_y".to_string(), 1, d));
        out.push(("b_y".to_string(), 1, 1));
        out
    }

    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let names = self.tensor_shapes().into_iter().map(|(n, _, _)| n);
        let slices = self
            .w
            .iter()
            .chain(&self.u)
            .chain(&self.b)
            .map(Vec::as_slice)
            .chain([self.w_y.as_slice(), std::slice::from_ref(&self.b_y)]);
        names.zip(slices).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let names: Vec<String> = self.tensor_shapes().into_iter().map(|(n, _, _)| n).collect();
        let LstmParams { w, u, b, w_y, b_y, .. } = self;
        let slices = w
            .iter_mut()
            .chain(u.iter_mut())
            .chain(b.iter_mut())
            .map(Vec::as_mut_slice)
            .chain([w_y.as_mut_slice(), std::slice::from_mut(b_y)]);
        names.into_iter().zip(slices).collect()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim && self.hidden_dim == other.hidden_dim
    }

    fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.w
            .iter()
            .chain(&self.u)
            .chain(&self.b)
            .map(Vec::as_slice)
            .chain([self.w_y.as_slice(), std::slice::from_ref(&self.b_y)])
    }

    fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        let LstmParams { w, u, b, w_y, b_y, .. } = self;
        w.iter_mut()
            .chain(u.iter_mut())
            .chain(b.iter_mut())
            .map(Vec::as_mut_slice)
            .chain([w_y.as_mut_slice(), std::slice::from_mut(b_y)])
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert!(self.same_shape(other), "axpy on mismatched parameter shapes");
        for (a, b) in self.slices_mut().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in self.slices_mut() {
            t.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    /// Euclidean norm over all entries.
    pub fn norm(&self) -> f64 {
        self.slices().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().flatten().all(|v| v.is_finite())
    }

    /// Bit-level fingerprint, used to detect stale forward caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h = hash_str("lstm") ^ ((self.input_dim as u64) << 32) ^ self.hidden_dim as u64;
        for v in self.slices().flatten() {
            h = mix64(h ^ v.to_bits());
        }
        h
    }

    /// Writes `tensor_name,row,col,value` lines.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<parameter dump>", e);
        writeln!(out, "tensor_name,row,col,value").map_err(io)?;
        for ((name, rows, cols), (_, t)) in self.tensor_shapes().into_iter().zip(self.tensors()) {
            for r in 0..rows {
                for c in 0..cols {
                    writeln!(out, "{name},{r},{c},{}", t[r * cols + c]).map_err(io)?;
                }
            }
        }
        Ok(())
    }
}
