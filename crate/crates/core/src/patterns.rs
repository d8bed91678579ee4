//! Conditions, patterns, pattern-pool extraction and the binary pattern space.
//!
//! Every non-leaf node `u` of a tree contributes one pattern: the conditions
//! on the path from the root down to `u`, followed by `u`'s own split in the
//! `>=` direction. A stump therefore yields the single pattern
//! `(x_dim >= v)`, and a tree's patterns plus an intercept span the
//! indicators of all of its leaves.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numfmt::sig6;
use crate::tree::{DecisionTree, NodeId, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Lt,
    Ge,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Lt => "<",
            Op::Ge => ">=",
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Op::Lt => "lt",
            Op::Ge => "ge",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "lt" => Some(Op::Lt),
            "ge" => Some(Op::Ge),
            _ => None,
        }
    }
}

/// `x[dim] < threshold` or `x[dim] >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub dim: usize,
    pub op: Op,
    pub threshold: f64,
}

impl Condition {
    pub fn new(dim: usize, op: Op, threshold: f64) -> Self {
        Condition { dim, op, threshold }
    }

    #[inline]
    pub fn holds(&self, x: &[f64]) -> bool {
        let v = x[self.dim];
        match self.op {
            Op::Lt => v < self.threshold,
            Op::Ge => v >= self.threshold,
        }
    }
}

/// A conjunction of conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub conditions: Vec<Condition>,
}

impl Pattern {
    pub fn new(conditions: Vec<Condition>) -> Self {
        Pattern { conditions }
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// Keeps only the tightest bound per `(dim, op)` and sorts by `(dim, op)`.
    pub fn canonicalize(&self) -> Pattern {
        let mut out: Vec<Condition> = Vec::with_capacity(self.conditions.len());
        for c in &self.conditions {
            match out.iter_mut().find(|o| o.dim == c.dim && o.op == c.op) {
                Some(o) => {
                    o.threshold = match c.op {
                        Op::Lt => o.threshold.min(c.threshold),
                        Op::Ge => o.threshold.max(c.threshold),
                    }
                }
                None => out.push(*c),
            }
        }
        out.sort_by_key(|c| (c.dim, c.op));
        Pattern { conditions: out }
    }

    /// True iff `x` satisfies every condition.
    pub fn matches(&self, x: &[f64]) -> Result<bool> {
        if let Some(c) = self.conditions.iter().find(|c| c.dim >= x.len()) {
            return Err(Error::DimensionMismatch { expected: c.dim + 1, got: x.len() });
        }
        Ok(self.holds(x))
    }

    /// Unchecked form of [`Pattern::matches`]; dims must be in range.
    #[inline]
    pub fn holds(&self, x: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.holds(x))
    }

    /// Like [`Pattern::holds`], adding the number of conditions evaluated
    /// (short-circuiting) to `counter`.
    #[inline]
    pub fn holds_counted(&self, x: &[f64], counter: &mut usize) -> bool {
        for c in &self.conditions {
            *counter += 1;
            if !c.holds(x) {
                return false;
            }
        }
        true
    }

    pub fn max_dim(&self) -> Option<usize> {
        self.conditions.iter().map(|c| c.dim).max()
    }

    /// `(name < v) AND (name >= v) ...`, thresholds to 6 significant digits.
    pub fn render(&self, feature_names: &[String]) -> String {
        self.conditions
            .iter()
            .map(|c| {
                let name = feature_names
                    .get(c.dim)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", c.dim));
                format!("({} {} {})", name, c.op.symbol(), sig6(c.threshold))
            })
            .collect::<Vec<_>>()
            .join(" AND ")
    }

    fn key(&self) -> Vec<(usize, Op, u64)> {
        self.conditions.iter().map(|c| (c.dim, c.op, c.threshold.to_bits())).collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&[]))
    }
}

/// Where a pooled pattern came from: the tree and the node whose bag it selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternSource {
    pub tree: usize,
    pub node: NodeId,
}

/// Deduplicated candidate patterns from a forest.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternPool {
    pub patterns: Vec<Pattern>,
    /// Largest bootstrap bag size seen at the source node of each pattern.
    pub source_counts: Vec<usize>,
    /// First source of each pattern.
    pub sources: Vec<PatternSource>,
    /// Patterns generated before deduplication.
    pub generated: usize,
}

impl PatternPool {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// One canonical pattern per non-leaf node per tree, deduplicated by exact
/// canonical form.
pub fn extract_patterns(forest: &[DecisionTree]) -> Result<PatternPool> {
    if forest.is_empty() {
        return Err(Error::InvalidArgument("empty forest".into()));
    }
    let mut pool = PatternPool {
        patterns: Vec::new(),
        source_counts: Vec::new(),
        sources: Vec::new(),
        generated: 0,
    };
    let mut seen: HashMap<Vec<(usize, Op, u64)>, usize> = HashMap::new();
    for (t, tree) in forest.iter().enumerate() {
        for (pattern, node) in tree_patterns(tree) {
            pool.generated += 1;
            let bag = tree.nodes[node].bag_size();
            match seen.get(&pattern.key()) {
                Some(&idx) => pool.source_counts[idx] = pool.source_counts[idx].max(bag),
                None => {
                    seen.insert(pattern.key(), pool.patterns.len());
                    pool.patterns.push(pattern);
                    pool.source_counts.push(bag);
                    pool.sources.push(PatternSource { tree: t, node });
                }
            }
        }
    }
    Ok(pool)
}

/// Canonical patterns of one tree with the node each one selects (the
/// right child of the generating split), in depth-first order.
pub fn tree_patterns(tree: &DecisionTree) -> Vec<(Pattern, NodeId)> {
    let mut out = Vec::new();
    let mut stack: Vec<(NodeId, Vec<Condition>)> = vec![(0, Vec::new())];
    while let Some((id, path)) = stack.pop() {
        if let TreeNode::Internal { dim, threshold, left, right, .. } = tree.nodes[id] {
            let mut right_path = path.clone();
            right_path.push(Condition::new(dim, Op::Ge, threshold));
            out.push((Pattern::new(right_path.clone()).canonicalize(), right));
            let mut left_path = path;
            left_path.push(Condition::new(dim, Op::Lt, threshold));
            stack.push((right, right_path));
            stack.push((left, left_path));
        }
    }
    out
}

/// Dense `n × p` binary matrix; entry `(i, j)` is 1 iff instance `i`
/// satisfies pattern `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpace {
    pub n: usize,
    pub p: usize,
    bits: Vec<u8>,
}

impl PatternSpace {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let mut bits = Vec::with_capacity(rows.len() * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: r.len() });
            }
            if r.iter().any(|&b| b > 1) {
                return Err(Error::InvalidArgument("pattern space entries must be 0 or 1".into()));
            }
            bits.extend_from_slice(r);
        }
        Ok(PatternSpace { n: rows.len(), p, bits })
    }

    pub(crate) fn from_raw(n: usize, p: usize, bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), n * p);
        PatternSpace { n, p, bits }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.bits[i * self.p + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    /// Row indices with a 1 in column `j`.
    pub fn column_support(&self, j: usize) -> Vec<u32> {
        (0..self.n).filter(|&i| self.get(i, j) == 1).map(|i| i as u32).collect()
    }

    /// Keeps columns `cols` in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> PatternSpace {
        let mut bits = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            bits.extend(cols.iter().map(|&j| row[j]));
        }
        PatternSpace { n: self.n, p: cols.len(), bits }
    }

    /// Keeps rows `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> PatternSpace {
        let mut bits = Vec::with_capacity(rows.len() * self.p);
        for &i in rows {
            bits.extend_from_slice(self.row(i));
        }
        PatternSpace { n: rows.len(), p: self.p, bits }
    }
}

/// Maps every instance of `ds` into the space spanned by `patterns`.
pub fn construct_pattern_space(ds: &Dataset, patterns: &[Pattern]) -> Result<PatternSpace> {
    if let Some(dim) = patterns.iter().filter_map(Pattern::max_dim).max() {
        if dim >= ds.d {
            return Err(Error::DimensionMismatch { expected: dim + 1, got: ds.d });
        }
    }
    let p = patterns.len();
    let mut bits = vec![0u8; ds.n * p];
    if p > 0 {
        bits.par_chunks_mut(p).enumerate().for_each(|(i, row)| {
            let x = ds.row(i);
            for (b, pat) in row.iter_mut().zip(patterns) {
                *b = pat.holds(x) as u8;
            }
        });
    }
    Ok(PatternSpace { n: ds.n, p, bits })
}
