//! Constrained random decision trees used as pattern generators.
//!
//! Each tree is grown on a bootstrap sample. At every node a few feature
//! dimensions are sampled, a few thresholds are sampled per dimension, and the
//! candidate with the largest impurity reduction wins. Growth is bounded by a
//! depth limit and a minimum bag size: a node splits only when both children
//! keep at least `min_bag` instances.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, LabelKind};
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Splits must beat this impurity reduction to count as positive.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub n_trees: usize,
    /// Maximum depth; the root sits at depth 0.
    pub max_depth: usize,
    /// Minimum tree-bag size of any node.
    pub min_bag: usize,
    /// Dimensions sampled per split; `None` means `⌈√d⌉`.
    pub n_feature_candidates: Option<usize>,
    pub n_threshold_candidates: usize,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            n_trees: 100,
            max_depth: 6,
            min_bag: 10,
            n_feature_candidates: None,
            n_threshold_candidates: 4,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} must be at least 1")));
        if self.n_trees == 0 {
            return bad("tree count");
        }
        if self.max_depth == 0 {
            return bad("max depth");
        }
        if self.min_bag == 0 {
            return bad("min bag size");
        }
        if self.n_feature_candidates == Some(0) {
            return bad("feature candidate count");
        }
        if self.n_threshold_candidates == 0 {
            return bad("threshold candidate count");
        }
        Ok(())
    }

    pub fn feature_candidates(&self, d: usize) -> usize {
        self.n_feature_candidates
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1))
    }
}

/// Impurity criterion, derived from the label kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Shannon entropy (bits) over `n_classes` classes.
    Entropy { n_classes: usize },
    /// Mean squared deviation from the bag mean.
    Mse,
}

impl Criterion {
    pub fn for_dataset(ds: &Dataset) -> Self {
        match ds.label_kind {
            LabelKind::Class => Criterion::Entropy { n_classes: ds.n_classes.max(1) },
            LabelKind::Real => Criterion::Mse,
        }
    }
}

/// Impurity of a nonempty label bag.
pub fn impurity(labels: &[f64], criterion: Criterion) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("impurity of an empty bag".into()));
    }
    Ok(match criterion {
        Criterion::Entropy { n_classes } => {
            let mut counts = vec![0usize; n_classes];
            for &y in labels {
                let c = y as usize;
                if c >= n_classes {
                    return Err(Error::InvalidArgument(format!("class {c} out of range")));
                }
                counts[c] += 1;
            }
            entropy(&counts, labels.len())
        }
        Criterion::Mse => sse(labels.iter().copied()) / labels.len() as f64,
    })
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn sse(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    values.map(|v| (v - mean) * (v - mean)).sum()
}

/// `n · impurity` of the bag, the quantity split gains are measured in.
fn weighted_impurity(ds: &Dataset, bag: &[usize], criterion: Criterion) -> f64 {
    match criterion {
        Criterion::Entropy { n_classes } => {
            let mut counts = vec![0usize; n_classes];
            for &i in bag {
                counts[ds.y[i] as usize] += 1;
            }
            bag.len() as f64 * entropy(&counts, bag.len())
        }
        Criterion::Mse => sse(bag.iter().map(|&i| ds.y[i])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub dim: usize,
    pub threshold: f64,
    /// Impurity reduction weighted by child sizes, per instance of the parent.
    pub gain: f64,
}

/// Best of the randomly sampled `(dimension, threshold)` candidates for `bag`,
/// or `None` when the bag is too small, no candidate leaves both children
/// with at least `min_bag` instances, or no candidate has positive gain.
///
/// Dummy-indicator dimensions are split at 0.5 only. Ties go to the lowest
/// `(dim, threshold)`.
pub fn best_random_split(
    bag: &[usize],
    ds: &Dataset,
    cfg: &TreeConfig,
    rng: &mut ChaCha8Rng,
) -> Option<Split> {
    if bag.len() < 2 * cfg.min_bag || ds.d == 0 {
        return None;
    }
    let criterion = Criterion::for_dataset(ds);
    let parent = weighted_impurity(ds, bag, criterion);
    let n = bag.len() as f64;
    let mut best: Option<Split> = None;
    let mut left = Vec::with_capacity(bag.len());
    let mut right = Vec::with_capacity(bag.len());
    let mut dims = index::sample(rng, ds.d, cfg.feature_candidates(ds.d)).into_vec();
    dims.sort_unstable();
    for dim in dims {
        let thresholds: Vec<f64> = if ds.binary_dims[dim] {
            vec![0.5]
        } else {
            let (lo, hi) = bag.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = ds.value(i, dim);
                (lo.min(v), hi.max(v))
            });
            if lo >= hi {
                continue;
            }
            (0..cfg.n_threshold_candidates)
                .map(|_| loop {
                    let t = rng.gen_range(lo..hi);
                    if t > lo {
                        break t;
                    }
                })
                .collect()
        };
        for threshold in thresholds {
            left.clear();
            right.clear();
            for &i in bag {
                if ds.value(i, dim) < threshold {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            if left.len() < cfg.min_bag || right.len() < cfg.min_bag {
                continue;
            }
            let children =
                weighted_impurity(ds, &left, criterion) + weighted_impurity(ds, &right, criterion);
            let gain = (parent - children) / n;
            if gain <= MIN_GAIN {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    gain > b.gain
                        || (gain == b.gain && (dim, threshold) < (b.dim, b.threshold))
                }
            };
            if better {
                best = Some(Split { dim, threshold, gain });
            }
        }
    }
    best
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum LeafValue {
    /// Class frequencies of the bag.
    Distribution(Vec<f64>),
    Mean(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Instances with `x[dim] < threshold` go left, the rest right.
    Internal {
        dim: usize,
        threshold: f64,
        left: NodeId,
        right: NodeId,
        bag_size: usize,
        depth: usize,
    },
    Leaf {
        prediction: LeafValue,
        bag_size: usize,
        depth: usize,
    },
}

impl TreeNode {
    pub fn bag_size(&self) -> usize {
        match self {
            TreeNode::Internal { bag_size, .. } | TreeNode::Leaf { bag_size, .. } => *bag_size,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Internal { depth, .. } | TreeNode::Leaf { depth, .. } => *depth,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

/// Arena-allocated tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub bootstrap: Vec<usize>,
}

impl DecisionTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn non_leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    /// Node ids visited when routing `x` from the root to a leaf.
    pub fn route(&self, x: &[f64]) -> Vec<NodeId> {
        let mut path = vec![0];
        let mut id = 0;
        while let TreeNode::Internal { dim, threshold, left, right, .. } = &self.nodes[id] {
            id = if x[*dim] < *threshold { *left } else { *right };
            path.push(id);
        }
        path
    }
}

/// Grows one tree on a bootstrap sample of `ds` (n draws with replacement).
pub fn fit_tree(ds: &Dataset, cfg: &TreeConfig, rng: &mut ChaCha8Rng) -> Result<DecisionTree> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot grow a tree on an empty dataset".into()));
    }
    let bootstrap: Vec<usize> = (0..ds.n).map(|_| rng.gen_range(0..ds.n)).collect();
    let mut tree = DecisionTree { nodes: Vec::new(), bootstrap: bootstrap.clone() };
    grow(&mut tree, ds, cfg, rng, bootstrap, 0);
    Ok(tree)
}

fn grow(
    tree: &mut DecisionTree,
    ds: &Dataset,
    cfg: &TreeConfig,
    rng: &mut ChaCha8Rng,
    bag: Vec<usize>,
    depth: usize,
) -> NodeId {
    let id = tree.nodes.len();
    let split = if depth < cfg.max_depth { best_random_split(&bag, ds, cfg, rng) } else { None };
    let Some(split) = split else {
        tree.nodes.push(TreeNode::Leaf {
            prediction: leaf_value(ds, &bag),
            bag_size: bag.len(),
            depth,
        });
        return id;
    };
    // Placeholder until the children ids are known.
    tree.nodes.push(TreeNode::Leaf { prediction: LeafValue::Mean(0.0), bag_size: 0, depth });
    let bag_size = bag.len();
    let (left_bag, right_bag): (Vec<usize>, Vec<usize>) =
        bag.into_iter().partition(|&i| ds.value(i, split.dim) < split.threshold);
    let left = grow(tree, ds, cfg, rng, left_bag, depth + 1);
    let right = grow(tree, ds, cfg, rng, right_bag, depth + 1);
    tree.nodes[id] = TreeNode::Internal {
        dim: split.dim,
        threshold: split.threshold,
        left,
        right,
        bag_size,
        depth,
    };
    id
}

fn leaf_value(ds: &Dataset, bag: &[usize]) -> LeafValue {
    match ds.label_kind {
        LabelKind::Class => {
            let mut dist = vec![0.0; ds.n_classes.max(1)];
            for &i in bag {
                dist[ds.y[i] as usize] += 1.0;
            }
            let n = bag.len().max(1) as f64;
            dist.iter_mut().for_each(|p| *p /= n);
            LeafValue::Distribution(dist)
        }
        LabelKind::Real => {
            LeafValue::Mean(bag.iter().map(|&i| ds.y[i]).sum::<f64>() / bag.len().max(1) as f64)
        }
    }
}

/// `n_trees` trees; tree `t` uses a generator seeded from `(seed, t)`, so the
/// forest does not depend on thread scheduling.
pub fn fit_forest(ds: &Dataset, cfg: &TreeConfig) -> Result<Vec<DecisionTree>> {
    cfg.validate()?;
    (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(ds, cfg, &mut tree_rng(cfg.seed, t)))
        .collect()
}

/// Generator used for tree `t` of a forest seeded with `seed`.
pub fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    rng_for(seed, t as u64)
}
