//! CART regression trees and random forests grown on circular block
//! bootstrap resamples of a window.

mod bootstrap;
mod tree;

pub use bootstrap::circular_block_bootstrap;
pub use tree::{grow_tree, tree_predict, FeatureSubsetting, Node, Tree, TreeConfig};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::seed::{combine, rng_from};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `max(1, ceil(k / 3))`.
    pub max_features: Option<usize>,
    pub block_length: usize,
    pub subsetting: FeatureSubsetting,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_leaf: 3,
            max_features: None,
            block_length: 5,
            subsetting: FeatureSubsetting::PerSplit,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        if self.block_length == 0 {
            return Err(Error::Config("block_length must be at least 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::Config("max_features must be at least 1".into()));
        }
        Ok(())
    }

    /// Effective candidate count for `k` predictors, clamped to `1..=k`.
    pub fn resolved_max_features(&self, k: usize) -> usize {
        self.max_features.unwrap_or(k.div_ceil(3)).clamp(1, k.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub config: ForestConfig,
}

/// Grows `n_trees` trees, each on its own block-bootstrap resample. Tree `b`
/// draws from a generator seeded by `combine(config.seed, b)`.
pub fn rf_fit(x: &DMatrix<f64>, y: &[f64], config: &ForestConfig) -> Result<Forest> {
    config.validate()?;
    tree::check_training_data(x, y)?;
    let tree_cfg = TreeConfig {
        min_leaf: config.min_leaf,
        max_features: config.resolved_max_features(x.ncols()),
        subsetting: config.subsetting,
    };
    let trees = (0..config.n_trees)
        .map(|b| {
            let mut rng = rng_from(combine(config.seed, b as u64));
            let rows = circular_block_bootstrap(y.len(), config.block_length, &mut rng)?;
            tree::grow_tree_on(x, y, rows, &tree_cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        trees,
        config: config.clone(),
    })
}

/// Average of the tree predictions.
pub fn rf_predict(forest: &Forest, x: &[f64]) -> Result<f64> {
    let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for t in &forest.trees {
        let p = t.predict(x)?;
        sum += p;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    // Rounding in the sum must not push the mean outside the tree range.
    Ok((sum / forest.trees.len() as f64).clamp(lo, hi))
}

impl Forest {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        rf_predict(self, x)
    }
}
