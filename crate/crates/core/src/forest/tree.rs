use nalgebra::DMatrix;
use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed::TaskRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` routes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        n_samples: usize,
    },
}

/// How candidate features are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureSubsetting {
    /// A fresh draw at every split.
    #[default]
    PerSplit,
    /// One draw per tree, shared by all of its splits.
    PerTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    pub min_leaf: usize,
    pub max_features: usize,
    pub subsetting: FeatureSubsetting,
}

/// A binary regression tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl Tree {
    /// Builds a tree from explicit nodes, checking that they form a single
    /// binary tree rooted at index 0.
    pub fn from_nodes(nodes: Vec<Node>, n_features: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Config("tree needs at least one node".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if id >= nodes.len() || seen[id] {
                return Err(Error::Config(format!("node {id} missing or reached twice")));
            }
            seen[id] = true;
            if let Node::Split { feature, left, right, .. } = nodes[id] {
                if feature >= n_features {
                    return Err(Error::Config(format!("split on feature {feature} of {n_features}")));
                }
                stack.push(right);
                stack.push(left);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Config("unreachable nodes".into()));
        }
        Ok(Self { nodes, n_features })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn parent_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Split { .. }))
            .collect()
    }

    pub fn terminal_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Leaf { .. }))
            .collect()
    }

    /// Heap-style position of every node (root 0, children `2j+1` and `2j+2`),
    /// or `None` if a position overflows.
    pub fn positional_labels(&self) -> Option<Vec<u128>> {
        let mut labels = vec![0u128; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if let Node::Split { left, right, .. } = self.nodes[id] {
                let j = labels[id];
                labels[left] = j.checked_mul(2)?.checked_add(1)?;
                labels[right] = j.checked_mul(2)?.checked_add(2)?;
                stack.push(left);
                stack.push(right);
            }
        }
        Some(labels)
    }

    /// Path from the root to each leaf as `(parent, went_left)` pairs.
    pub fn leaf_paths(&self) -> Vec<(usize, Vec<(usize, bool)>)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((id, path)) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { .. } => out.push((id, path)),
                Node::Split { left, right, .. } => {
                    let mut lp = path.clone();
                    lp.push((id, true));
                    let mut rp = path;
                    rp.push((id, false));
                    stack.push((right, rp));
                    stack.push((left, lp));
                }
            }
        }
        out.sort_by_key(|(id, _)| *id);
        out
    }

    fn leaf_for(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        tree_predict(self, x)
    }

    /// Value of every leaf's basis function at `x`: the product over parent
    /// nodes of `I^(n(1+n)/2) * (1-I)^((1-n)(1+n))`, with `I = 1{x_s <= c}`
    /// and `n` = 1 (path goes left), 0 (goes right) or -1 (not on the path).
    pub fn basis_values(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        self.check_len(x)?;
        let parents = self.parent_nodes();
        Ok(self
            .leaf_paths()
            .into_iter()
            .map(|(leaf, path)| {
                let b = parents
                    .iter()
                    .map(|&j| {
                        let Node::Split { feature, threshold, .. } = self.nodes[j] else {
                            unreachable!()
                        };
                        let ind = if x[feature] <= threshold { 1.0_f64 } else { 0.0 };
                        let n: i32 = match path.iter().find(|(p, _)| *p == j) {
                            None => -1,
                            Some((_, true)) => 1,
                            Some((_, false)) => 0,
                        };
                        ind.powi(n * (1 + n) / 2) * (1.0 - ind).powi((1 - n) * (1 + n))
                    })
                    .product();
                (leaf, b)
            })
            .collect())
    }

    /// Prediction as `Σ β_i B_i(x)` over leaves.
    pub fn predict_by_basis(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .basis_values(x)?
            .into_iter()
            .map(|(leaf, b)| match self.nodes[leaf] {
                Node::Leaf { value, .. } => value * b,
                Node::Split { .. } => unreachable!(),
            })
            .sum())
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(())
    }
}

/// Routes `x` to its leaf and returns the leaf value.
pub fn tree_predict(tree: &Tree, x: &[f64]) -> Result<f64> {
    tree.check_len(x)?;
    match tree.nodes[tree.leaf_for(x)] {
        Node::Leaf { value, .. } => Ok(value),
        Node::Split { .. } => unreachable!(),
    }
}

pub(crate) fn check_training_data(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.nrows(), y.len())));
    }
    if y.is_empty() || x.ncols() == 0 {
        return Err(Error::Fit("empty training data".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("tree training data".into()));
    }
    Ok(())
}

/// Grows a CART tree on all rows of `x`.
pub fn grow_tree(x: &DMatrix<f64>, y: &[f64], config: &TreeConfig, rng: &mut TaskRng) -> Result<Tree> {
    check_training_data(x, y)?;
    grow_tree_on(x, y, (0..y.len()).collect(), config, rng)
}

/// Grows a CART tree on the given row sample (duplicates allowed).
pub(crate) fn grow_tree_on(
    x: &DMatrix<f64>,
    y: &[f64],
    rows: Vec<usize>,
    config: &TreeConfig,
    rng: &mut TaskRng,
) -> Result<Tree> {
    let k = x.ncols();
    if config.min_leaf == 0 || config.max_features == 0 || config.max_features > k {
        return Err(Error::Config(format!(
            "invalid tree config: min_leaf {}, max_features {} of {k}",
            config.min_leaf, config.max_features
        )));
    }
    let tree_features = match config.subsetting {
        FeatureSubsetting::PerTree => Some(draw_features(k, config.max_features, rng)),
        FeatureSubsetting::PerSplit => None,
    };
    let mut builder = Builder {
        x,
        y,
        config,
        tree_features,
        nodes: Vec::new(),
    };
    builder.grow(rows, rng);
    Ok(Tree {
        nodes: builder.nodes,
        n_features: k,
    })
}

fn draw_features(k: usize, m: usize, rng: &mut TaskRng) -> Vec<usize> {
    let mut f = index::sample(rng, k, m).into_vec();
    f.sort_unstable();
    f
}

struct Builder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    config: &'a TreeConfig,
    tree_features: Option<Vec<usize>>,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    sse: f64,
}

impl Builder<'_> {
    fn grow(&mut self, rows: Vec<usize>, rng: &mut TaskRng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(self.leaf(&rows));
        let n = rows.len();
        let first = self.y[rows[0]];
        let pure = rows.iter().all(|&r| self.y[r] == first);
        if pure || n < 2 * self.config.min_leaf {
            return id;
        }
        let features = match &self.tree_features {
            Some(f) => f.clone(),
            None => draw_features(self.x.ncols(), self.config.max_features, rng),
        };
        let Some(split) = best_split(self.x, self.y, &rows, &features, self.config.min_leaf) else {
            return id;
        };
        if split.sse >= node_sse(self.y, &rows) {
            return id;
        }
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[(r, split.feature)] <= split.threshold);
        let left = self.grow(left_rows, rng);
        let right = self.grow(right_rows, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn leaf(&self, rows: &[usize]) -> Node {
        let (lo, hi) = rows
            .iter()
            .map(|&r| self.y[r])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        Node::Leaf {
            value: mean.clamp(lo, hi),
            n_samples: rows.len(),
        }
    }
}

fn node_sse(y: &[f64], rows: &[usize]) -> f64 {
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
    rows.iter().map(|&r| (y[r] - mean).powi(2)).sum()
}

/// Exhaustive search over `features` (in the given order) and midpoints
/// between consecutive distinct values. Ties keep the first candidate.
fn best_split(x: &DMatrix<f64>, y: &[f64], rows: &[usize], features: &[usize], min_leaf: usize) -> Option<SplitChoice> {
    let n = rows.len();
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
    let total_sq: f64 = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum();
    let total: f64 = rows.iter().map(|&r| y[r] - mean).sum();

    let mut best: Option<SplitChoice> = None;
    let mut order: Vec<usize> = rows.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[(a, f)].total_cmp(&x[(b, f)]));
        let mut left_sum = 0.0;
        for i in 1..n {
            left_sum += y[order[i - 1]] - mean;
            let (lo, hi) = (x[(order[i - 1], f)], x[(order[i], f)]);
            if i < min_leaf || n - i < min_leaf || lo == hi {
                continue;
            }
            let right_sum = total - left_sum;
            let sse = total_sq - left_sum * left_sum / i as f64 - right_sum * right_sum / (n - i) as f64;
            if best.as_ref().is_none_or(|b| sse < b.sse) {
                let mid = 0.5 * (lo + hi);
                let threshold = if mid < hi { mid } else { lo };
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    sse: sse.max(0.0),
                });
            }
        }
    }
    best
}
