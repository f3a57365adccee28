use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::TaskRng;

/// Circular block bootstrap: blocks of `block_length` consecutive indices,
/// each from a uniform random start and wrapping modulo `n`, concatenated
/// and truncated to `n` indices.
pub fn circular_block_bootstrap(n: usize, block_length: usize, rng: &mut TaskRng) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Fit("cannot resample an empty window".into()));
    }
    if block_length == 0 {
        return Err(Error::Config("block_length must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n + block_length);
    while out.len() < n {
        let start = rng.random_range(0..n);
        out.extend((0..block_length).map(|k| (start + k) % n));
    }
    out.truncate(n);
    Ok(out)
}
