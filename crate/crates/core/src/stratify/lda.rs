//! Latent Dirichlet allocation by collapsed Gibbs sampling over bags of
//! pattern ids, with hard argmax assignment and frozen-topic fold-in.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::rng_for;

const TRAIN_STREAM: u64 = 0x1da;
const EMPTY_STREAM: u64 = 0x1db;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    /// Document-topic prior; `None` means `50 / G`.
    pub alpha: Option<f64>,
    /// Topic-word prior.
    pub beta: f64,
    pub iterations: usize,
    pub fold_in_iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig { alpha: None, beta: 0.1, iterations: 500, fold_in_iterations: 50, seed: 0 }
    }
}

impl LdaConfig {
    pub fn alpha_for(&self, topics: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / topics as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument("LDA alpha must be positive".into()));
            }
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument("LDA beta must be positive".into()));
        }
        if self.iterations == 0 || self.fold_in_iterations == 0 {
            return Err(Error::InvalidArgument("LDA sweep counts must be positive".into()));
        }
        Ok(())
    }
}

/// Fitted topics, frozen for fold-in.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub alpha: f64,
    /// `topics[g][w]`: probability of pattern `w` under topic `g`; rows sum to 1.
    pub topics: Vec<Vec<f64>>,
    pub fold_in_iterations: usize,
    pub seed: u64,
}

/// Topic assignments of the training bags plus the fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub lda: LdaModel,
}

fn sample_topic(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (g, &w) in weights.iter().enumerate() {
        if u < w {
            return g;
        }
        u -= w;
    }
    weights.len() - 1
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Collapsed Gibbs sampling with `topics` topics over `docs` (token ids
/// below `vocab`). Each document is assigned the argmax of its smoothed
/// topic proportions; empty documents get a seeded uniform topic.
pub fn fit_lda(docs: &[Vec<u32>], vocab: usize, topics: usize, cfg: &LdaConfig) -> Result<Clustering> {
    cfg.validate()?;
    if topics == 0 {
        return Err(Error::InvalidArgument("topic count must be at least 1".into()));
    }
    if let Some(w) = docs.iter().flatten().find(|&&w| w as usize >= vocab) {
        return Err(Error::InvalidArgument(format!("token {w} outside vocabulary of {vocab}")));
    }
    let alpha = cfg.alpha_for(topics);
    let beta = cfg.beta;
    let vbeta = vocab as f64 * beta;
    let mut rng = rng_for(cfg.seed, TRAIN_STREAM);

    let mut n_dg = vec![vec![0.0f64; topics]; docs.len()];
    let mut n_gw = vec![vec![0.0f64; vocab]; topics];
    let mut n_g = vec![0.0f64; topics];
    let mut z: Vec<Vec<usize>> = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            doc.iter()
                .map(|&w| {
                    let g = rng.gen_range(0..topics);
                    n_dg[d][g] += 1.0;
                    n_gw[g][w as usize] += 1.0;
                    n_g[g] += 1.0;
                    g
                })
                .collect()
        })
        .collect();

    let mut weights = vec![0.0; topics];
    for _ in 0..cfg.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (t, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = z[d][t];
                n_dg[d][old] -= 1.0;
                n_gw[old][w] -= 1.0;
                n_g[old] -= 1.0;
                for g in 0..topics {
                    weights[g] = (n_dg[d][g] + alpha) * (n_gw[g][w] + beta) / (n_g[g] + vbeta);
                }
                let new = sample_topic(&mut rng, &weights);
                z[d][t] = new;
                n_dg[d][new] += 1.0;
                n_gw[new][w] += 1.0;
                n_g[new] += 1.0;
            }
        }
    }

    let mut empty_rng = rng_for(cfg.seed, EMPTY_STREAM);
    let assignments = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            if doc.is_empty() {
                empty_rng.gen_range(0..topics)
            } else {
                let n_dg = &n_dg[d];
                let proportion = smoothed_proportion(doc, z[d].as_slice(), alpha, topics, |g, w, own| {
                    let own = own as u8 as f64;
                    (n_dg[g] - own + alpha) * (n_gw[g][w] - own + beta) / (n_g[g] - own + vbeta)
                });
                argmax(proportion.into_iter())
            }
        })
        .collect();
    let topics = (0..topics)
        .map(|g| (0..vocab).map(|w| (n_gw[g][w] + beta) / (n_g[g] + vbeta)).collect())
        .collect();
    Ok(Clustering {
        assignments,
        lda: LdaModel { alpha, topics, fold_in_iterations: cfg.fold_in_iterations, seed: cfg.seed },
    })
}

impl LdaModel {
    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn vocab(&self) -> usize {
        self.topics.first().map_or(0, Vec::len)
    }

    /// Topic of a new document by Gibbs sampling its token assignments
    /// against the frozen topics. `key` seeds the chain, so the same key
    /// and bag always give the same topic.
    pub fn fold_in(&self, doc: &[u32], key: u64) -> usize {
        let g_count = self.n_topics();
        let mut rng = rng_for(self.seed, key);
        if g_count == 1 {
            return 0;
        }
        if doc.is_empty() {
            return rng.gen_range(0..g_count);
        }
        let mut n_dg = vec![0.0f64; g_count];
        let mut z: Vec<usize> = doc
            .iter()
            .map(|_| {
                let g = rng.gen_range(0..g_count);
                n_dg[g] += 1.0;
                g
            })
            .collect();
        let mut weights = vec![0.0; g_count];
        for _ in 0..self.fold_in_iterations {
            for (t, &w) in doc.iter().enumerate() {
                n_dg[z[t]] -= 1.0;
                for g in 0..g_count {
                    weights[g] = (n_dg[g] + self.alpha) * self.topics[g][w as usize];
                }
                z[t] = sample_topic(&mut rng, &weights);
                n_dg[z[t]] += 1.0;
            }
        }
        let proportion = smoothed_proportion(doc, &z, self.alpha, g_count, |g, w, own| {
            (n_dg[g] - own as u8 as f64 + self.alpha) * self.topics[g][w]
        });
        argmax(proportion.into_iter())
    }
}

/// Topic proportion of one document from its final Gibbs state, with each
/// token contributing its full conditional instead of its sampled topic.
/// `weight(g, w, own)` is the unnormalized conditional of topic `g` for
/// word `w`, where `own` says whether the token currently sits in `g` and
/// so must be removed from the counts.
fn smoothed_proportion(
    doc: &[u32],
    z: &[usize],
    alpha: f64,
    topics: usize,
    weight: impl Fn(usize, usize, bool) -> f64,
) -> Vec<f64> {
    let mut theta = vec![alpha; topics];
    let mut cond = vec![0.0; topics];
    for (&w, &zt) in doc.iter().zip(z) {
        for (g, c) in cond.iter_mut().enumerate() {
            *c = weight(g, w as usize, g == zt);
        }
        let total: f64 = cond.iter().sum();
        for (t, c) in theta.iter_mut().zip(&cond) {
            *t += c / total;
        }
    }
    theta
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
