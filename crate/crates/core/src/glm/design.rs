//! Grouped sparse design matrices and per-group losses.
//!
//! Pattern-space rows are binary, so instances with identical rows can be
//! merged into one weighted group without changing any loss or gradient.
//! Groups are stored twice, by row (active columns) and by column (groups
//! containing a 1), which is what gradient and coordinate updates need.

use std::collections::HashMap;

use crate::patterns::PatternSpace;

#[derive(Debug, Clone)]
pub(crate) struct Design {
    /// Total instance count `N`; losses are averaged over it.
    pub n_obs: f64,
    pub n_cols: usize,
    pub counts: Vec<f64>,
    row_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    col_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl Design {
    /// Groups identical rows of `xp`; returns the design and each
    /// instance's group.
    pub fn grouped(xp: &PatternSpace) -> (Design, Vec<u32>) {
        let mut index: HashMap<&[u8], u32> = HashMap::new();
        let mut rows: Vec<Vec<u32>> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        let mut group_of = Vec::with_capacity(xp.n);
        for i in 0..xp.n {
            let row = xp.row(i);
            let g = *index.entry(row).or_insert_with(|| {
                rows.push(
                    row.iter()
                        .enumerate()
                        .filter(|(_, &b)| b == 1)
                        .map(|(j, _)| j as u32)
                        .collect(),
                );
                counts.push(0.0);
                (rows.len() - 1) as u32
            });
            counts[g as usize] += 1.0;
            group_of.push(g);
        }
        (Design::from_rows(xp.n as f64, xp.p, counts, &rows), group_of)
    }

    /// One group per instance, built from per-column supports.
    #[cfg(test)]
    pub fn ungrouped(n: usize, columns: &[Vec<u32>]) -> Design {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        col_ptr.push(0);
        let mut col_idx = Vec::with_capacity(columns.iter().map(Vec::len).sum());
        for c in columns {
            col_idx.extend_from_slice(c);
            col_ptr.push(col_idx.len());
        }
        let (row_ptr, row_idx) = transpose(n, &col_ptr, &col_idx);
        Design {
            n_obs: n as f64,
            n_cols: columns.len(),
            counts: vec![1.0; n],
            row_ptr,
            row_idx,
            col_ptr,
            col_idx,
        }
    }

    /// Explicit groups: `rows[g]` lists the active columns of group `g`.
    pub fn from_rows(n_obs: f64, n_cols: usize, counts: Vec<f64>, rows: &[Vec<u32>]) -> Design {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut row_idx = Vec::new();
        for r in rows {
            row_idx.extend_from_slice(r);
            row_ptr.push(row_idx.len());
        }
        let (col_ptr, col_idx) = transpose(n_cols, &row_ptr, &row_idx);
        Design { n_obs, n_cols, counts, row_ptr, row_idx, col_ptr, col_idx }
    }

    pub fn n_groups(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn row(&self, g: usize) -> &[u32] {
        &self.row_idx[self.row_ptr[g]..self.row_ptr[g + 1]]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[u32] {
        &self.col_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// Linear predictor per group.
    pub fn predictor(&self, weights: &[f64], intercept: f64) -> Vec<f64> {
        (0..self.n_groups())
            .map(|g| {
                let mut z = intercept;
                for &j in self.row(g) {
                    z += weights[j as usize];
                }
                z
            })
            .collect()
    }
}

/// CSR <-> CSC transpose of a 0/1 pattern.
fn transpose(n_out: usize, ptr: &[usize], idx: &[u32]) -> (Vec<usize>, Vec<u32>) {
    let mut counts = vec![0usize; n_out + 1];
    for &j in idx {
        counts[j as usize + 1] += 1;
    }
    for k in 1..=n_out {
        counts[k] += counts[k - 1];
    }
    let out_ptr = counts.clone();
    let mut fill = counts;
    let mut out_idx = vec![0u32; idx.len()];
    for g in 0..ptr.len() - 1 {
        for &j in &idx[ptr[g]..ptr[g + 1]] {
            out_idx[fill[j as usize]] = g as u32;
            fill[j as usize] += 1;
        }
    }
    (out_ptr, out_idx)
}

#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Unnormalized loss of each group as a function of its linear predictor.
#[derive(Debug, Clone)]
pub(crate) enum GroupLoss {
    /// Cross-entropy with `pos[g]` positives among `counts[g]` instances.
    Logistic { counts: Vec<f64>, pos: Vec<f64> },
    /// Squared error; `mean[g]` and `m2[g]` (sum of squared deviations from
    /// the group mean) summarize the group's targets.
    Squared { counts: Vec<f64>, mean: Vec<f64>, m2: Vec<f64> },
}

impl GroupLoss {
    /// Builds group statistics of per-instance `target` (0/1 for logistic).
    pub fn from_targets(logistic: bool, design: &Design, group_of: &[u32], target: &[f64]) -> Self {
        let k = design.n_groups();
        let counts = design.counts.clone();
        if logistic {
            let mut pos = vec![0.0; k];
            for (&g, &t) in group_of.iter().zip(target) {
                pos[g as usize] += t;
            }
            GroupLoss::Logistic { counts, pos }
        } else {
            let mut n = vec![0.0; k];
            let mut mean = vec![0.0; k];
            let mut m2 = vec![0.0; k];
            for (&g, &t) in group_of.iter().zip(target) {
                let g = g as usize;
                n[g] += 1.0;
                let delta = t - mean[g];
                mean[g] += delta / n[g];
                m2[g] += delta * (t - mean[g]);
            }
            GroupLoss::Squared { counts, mean, m2 }
        }
    }

    #[inline]
    pub fn value(&self, g: usize, z: f64) -> f64 {
        match self {
            GroupLoss::Logistic { counts, pos } => counts[g] * softplus(z) - pos[g] * z,
            GroupLoss::Squared { counts, mean, m2 } => {
                let r = z - mean[g];
                counts[g] * r * r + m2[g]
            }
        }
    }

    /// First and second derivative of [`GroupLoss::value`] in `z`.
    #[inline]
    pub fn derivatives(&self, g: usize, z: f64) -> (f64, f64) {
        match self {
            GroupLoss::Logistic { counts, pos } => {
                let p = sigmoid(z);
                (counts[g] * p - pos[g], counts[g] * p * (1.0 - p))
            }
            GroupLoss::Squared { counts, mean, .. } => {
                (2.0 * counts[g] * (z - mean[g]), 2.0 * counts[g])
            }
        }
    }

    /// Closed-form optimal intercept with all weights at zero.
    pub fn null_intercept(&self) -> f64 {
        match self {
            GroupLoss::Logistic { counts, pos } => {
                let n: f64 = counts.iter().sum();
                let p: f64 = pos.iter().sum::<f64>() / n;
                if p <= 0.0 || p >= 1.0 {
                    0.0
                } else {
                    (p / (1.0 - p)).ln()
                }
            }
            GroupLoss::Squared { counts, mean, .. } => {
                let n: f64 = counts.iter().sum();
                counts.iter().zip(mean).map(|(c, m)| c * m).sum::<f64>() / n
            }
        }
    }

    /// Mean loss at predictor `z` (no penalty).
    pub fn mean_loss(&self, design: &Design, z: &[f64]) -> f64 {
        z.iter().enumerate().map(|(g, &zg)| self.value(g, zg)).sum::<f64>() / design.n_obs
    }
}
