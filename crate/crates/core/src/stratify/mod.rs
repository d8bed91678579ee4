//! Cluster-aware prediction with global and local patterns.
//!
//! 1. Mine `K_g` global patterns on all instances.
//! 2. Cluster instances by LDA over their bags of satisfied global patterns.
//! 3. Mine `K_l` local patterns inside each cluster.
//! 4. Fit one GLM over `K_g + K_l` features: the global bits followed by the
//!    bits of the instance's own cluster's local patterns.
//!
//! Both blocks are zero-padded to their full width, so every instance has
//! exactly `K_g + K_l` features whatever its cluster.

pub mod lda;
pub mod longitudinal;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::data::{denormalize, Dataset, EncodeOptions, Encoding, RawTable};
use crate::error::{Error, Result};
use crate::glm::{fit_glm, predict_glm, GlmModel};
use crate::model::format::{self, Reader, Writer};
use crate::model::{
    check_training_data, csv_field, read_provenance, train_with_report, write_provenance,
    HyperParams, Prediction, TaskKind,
};
use crate::patterns::{construct_pattern_space, Pattern, PatternSpace};
use crate::seed::derive_seed;

pub use lda::{adjusted_rand_index, fit_lda, Clustering, LdaConfig, LdaModel};
pub use longitudinal::{longitudinal_features, LongitudinalFeatures};

pub const FORMAT_MAGIC: &str = "dppred-stratified";
pub const FORMAT_VERSION: u32 = 1;

/// Seed stream offset for per-cluster local forests.
const LOCAL_STREAM: u64 = 0x10ca1;
/// Seed stream offset for fold-in chains.
const FOLD_IN_STREAM: u64 = 0xf01d;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratifyConfig {
    pub k_global: usize,
    pub k_local: usize,
    pub clusters: usize,
    pub lda: LdaConfig,
}

impl Default for StratifyConfig {
    fn default() -> Self {
        StratifyConfig { k_global: 30, k_local: 10, clusters: 3, lda: LdaConfig::default() }
    }
}

impl StratifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_global == 0 || self.k_local == 0 || self.clusters == 0 {
            return Err(Error::InvalidArgument(
                "K_g, K_l and the cluster count must all be at least 1".into(),
            ));
        }
        self.lda.validate()
    }

    pub fn width(&self) -> usize {
        self.k_global + self.k_local
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedModel {
    pub global_patterns: Vec<Pattern>,
    pub lda: LdaModel,
    /// Local patterns per cluster; empty for clusters that fell back to
    /// global patterns only.
    pub local_patterns: Vec<Vec<Pattern>>,
    /// Unified model over `K_g + K_l` features.
    pub glm: GlmModel,
    pub cluster_assignments: Vec<usize>,
    pub feature_names: Vec<String>,
    pub encoding: Option<Encoding>,
    pub label_bounds: Option<(f64, f64)>,
    pub hyper: HyperParams,
    pub config: StratifyConfig,
}

/// Bags of satisfied pattern ids, one per row of `space`.
pub fn pattern_bags(space: &PatternSpace) -> Vec<Vec<u32>> {
    (0..space.n)
        .map(|i| {
            space.row(i).iter().enumerate().filter(|(_, &b)| b == 1).map(|(j, _)| j as u32).collect()
        })
        .collect()
}

/// LDA clustering of the rows of a global pattern space.
pub fn cluster_patients(global_space: &PatternSpace, cfg: &StratifyConfig) -> Result<Clustering> {
    cfg.validate()?;
    fit_lda(&pattern_bags(global_space), global_space.p, cfg.clusters, &cfg.lda)
}

/// Unified feature row: global bits padded to `K_g`, then the local bits
/// padded to `K_l`.
fn unified_row(
    x: &[f64],
    global: &[Pattern],
    local: &[Pattern],
    cfg: &StratifyConfig,
    out: &mut Vec<u8>,
) {
    out.clear();
    out.extend(global.iter().map(|p| p.holds(x) as u8));
    out.resize(cfg.k_global, 0);
    out.extend(local.iter().map(|p| p.holds(x) as u8));
    out.resize(cfg.width(), 0);
}

/// Key for a row's fold-in chain: a hash of its encoded feature bits, so a
/// row gets the same cluster alone or in any batch.
fn row_key(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    derive_seed(FOLD_IN_STREAM, h)
}

pub fn train_stratified(ds: &Dataset, hp: &HyperParams, cfg: &StratifyConfig) -> Result<StratifiedModel> {
    cfg.validate()?;
    hp.validate()?;
    check_training_data(ds, hp.task)?;

    let global_hp = HyperParams { k: cfg.k_global, ..hp.clone() };
    let (global, _) = train_with_report(ds, &global_hp)?;
    let global_patterns = global.patterns;
    let space = construct_pattern_space(ds, &global_patterns)?;
    let clustering = cluster_patients(&space, cfg)?;

    let members: Vec<Vec<usize>> = (0..cfg.clusters)
        .map(|c| (0..ds.n).filter(|&i| clustering.assignments[i] == c).collect())
        .collect();
    let local_patterns = members
        .par_iter()
        .enumerate()
        .map(|(c, idx)| train_local(ds, hp, cfg, c, idx))
        .collect::<Result<Vec<_>>>()?;

    let mut bits = Vec::with_capacity(ds.n * cfg.width());
    let mut row = Vec::with_capacity(cfg.width());
    for i in 0..ds.n {
        let c = clustering.assignments[i];
        unified_row(ds.row(i), &global_patterns, &local_patterns[c], cfg, &mut row);
        bits.extend_from_slice(&row);
    }
    let unified = PatternSpace::from_raw(ds.n, cfg.width(), bits);
    let glm = fit_glm(&unified, &ds.y, hp.task.glm_task(), &hp.fit)?;

    Ok(StratifiedModel {
        global_patterns,
        lda: clustering.lda,
        local_patterns,
        glm,
        cluster_assignments: clustering.assignments,
        feature_names: ds.feature_names.clone(),
        encoding: ds.encoding.clone(),
        label_bounds: ds.label_bounds,
        hyper: hp.clone(),
        config: *cfg,
    })
}

fn train_local(
    ds: &Dataset,
    hp: &HyperParams,
    cfg: &StratifyConfig,
    cluster: usize,
    idx: &[usize],
) -> Result<Vec<Pattern>> {
    if idx.len() < hp.tree.min_bag {
        log::warn!(
            "cluster {cluster} has {} instances (< {}); using global patterns only",
            idx.len(),
            hp.tree.min_bag
        );
        return Ok(Vec::new());
    }
    let mut local_hp = HyperParams { k: cfg.k_local, ..hp.clone() };
    local_hp.tree.seed = derive_seed(hp.tree.seed, LOCAL_STREAM + cluster as u64);
    match train_with_report(&ds.subset(idx), &local_hp) {
        Ok((m, _)) => Ok(m.patterns),
        Err(e @ (Error::NoPatterns | Error::SingleClass | Error::NoSupport)) => {
            log::warn!("cluster {cluster}: {e}; using global patterns only");
            Ok(Vec::new())
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratifiedPrediction {
    pub prediction: Prediction,
    pub cluster: usize,
}

impl StratifiedModel {
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn task(&self) -> TaskKind {
        self.hyper.task
    }

    pub fn encode(&self, raw: &RawTable) -> Result<Dataset> {
        let enc = self.encoding.as_ref().ok_or_else(|| {
            Error::SchemaMismatch("model was trained without a column encoding".into())
        })?;
        enc.encode(raw, EncodeOptions::default())
    }

    pub fn check_compatible(&self, ds: &Dataset) -> Result<()> {
        if ds.d != self.dim() || ds.feature_names != self.feature_names {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} encoded features named as at training time, data has {}",
                self.dim(),
                ds.d
            )));
        }
        Ok(())
    }

    /// Cluster of one encoded feature vector by fold-in over its global bag.
    pub fn assign_cluster(&self, x: &[f64]) -> usize {
        let bag: Vec<u32> = self
            .global_patterns
            .iter()
            .enumerate()
            .filter(|(_, p)| p.holds(x))
            .map(|(j, _)| j as u32)
            .collect();
        self.lda.fold_in(&bag, row_key(x))
    }

    /// Unified `K_g + K_l` feature row of `x` given its cluster.
    pub fn features(&self, x: &[f64], cluster: usize) -> Vec<u8> {
        let mut row = Vec::with_capacity(self.config.width());
        unified_row(x, &self.global_patterns, &self.local_patterns[cluster], &self.config, &mut row);
        row
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<StratifiedPrediction> {
        if x.len() != self.dim() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> StratifiedPrediction {
        let cluster = self.assign_cluster(x);
        let g = predict_glm(&self.glm, &self.features(x, cluster)).expect("unified width is fixed");
        let value = match (self.task(), self.label_bounds) {
            (TaskKind::Regression, Some(b)) => denormalize(g.value, b),
            _ => g.value,
        };
        StratifiedPrediction { prediction: Prediction { value, probability: g.probability }, cluster }
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::new(FORMAT_MAGIC, FORMAT_VERSION);
        write_provenance(&mut w, &self.hyper, 0);
        w.section("stratify");
        w.line("k_global", &[self.config.k_global.to_string()]);
        w.line("k_local", &[self.config.k_local.to_string()]);
        w.line("clusters", &[self.config.clusters.to_string()]);
        w.line("alpha", &[format::hex(self.lda.alpha)]);
        w.line("beta", &[format::hex(self.config.lda.beta)]);
        w.line("iterations", &[self.config.lda.iterations.to_string()]);
        w.line("fold_in_iterations", &[self.lda.fold_in_iterations.to_string()]);
        w.line("lda_seed", &[self.lda.seed.to_string()]);
        format::write_schema(&mut w, &self.feature_names, self.encoding.as_ref(), self.label_bounds);
        format::write_patterns(&mut w, "global", &self.global_patterns, &self.feature_names);
        w.section("topics");
        w.line("vocab", &[self.lda.vocab().to_string()]);
        for row in &self.lda.topics {
            w.line("topic", &row.iter().map(|v| format::hex(*v)).collect::<Vec<_>>());
        }
        for (c, local) in self.local_patterns.iter().enumerate() {
            format::write_patterns(&mut w, &format!("local {c}"), local, &self.feature_names);
        }
        format::write_glm(&mut w, "glm", &self.glm);
        w.section("assignments");
        w.line("count", &[self.cluster_assignments.len().to_string()]);
        for chunk in self.cluster_assignments.chunks(64) {
            w.line("a", &chunk.iter().map(|c| c.to_string()).collect::<Vec<_>>());
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text, FORMAT_MAGIC, FORMAT_VERSION)?;
        let (hyper, _) = read_provenance(&mut r)?;
        r.expect_section("stratify")?;
        let k_global = r.usize_of("k_global")?;
        let k_local = r.usize_of("k_local")?;
        let clusters = r.usize_of("clusters")?;
        let alpha = r.word_of("alpha")?;
        let alpha = r.finite("alpha", alpha)?;
        let beta = r.word_of("beta")?;
        let beta = r.finite("beta", beta)?;
        let iterations = r.usize_of("iterations")?;
        let fold_in_iterations = r.usize_of("fold_in_iterations")?;
        let seed = r.word_of("lda_seed")?;
        let seed = r.u64("lda_seed", seed)?;
        let config = StratifyConfig {
            k_global,
            k_local,
            clusters,
            lda: LdaConfig { alpha: Some(alpha), beta, iterations, fold_in_iterations, seed },
        };
        config.validate().map_err(|e| r.err(e.to_string()))?;

        let schema = format::read_schema(&mut r)?;
        let d = schema.feature_names.len();
        let global_patterns = format::read_patterns(&mut r, "global", d)?;
        if global_patterns.len() > k_global {
            return Err(r.err(format!("{} global patterns exceed K_g = {k_global}", global_patterns.len())));
        }
        r.expect_section("topics")?;
        let vocab = r.usize_of("vocab")?;
        if vocab != global_patterns.len() {
            return Err(r.err("topic vocabulary must equal the global pattern count"));
        }
        let mut topics = Vec::with_capacity(clusters.min(1 << 12));
        for _ in 0..clusters {
            let v = r.expect("topic")?;
            if v.len() != vocab {
                return Err(r.err(format!("topic has {} entries, expected {vocab}", v.len())));
            }
            let row = v.iter().map(|t| r.finite("topic", t)).collect::<Result<Vec<_>>>()?;
            if row.iter().any(|p| *p < 0.0) {
                return Err(r.err("negative topic probability"));
            }
            topics.push(row);
        }
        let mut local_patterns = Vec::with_capacity(clusters.min(1 << 12));
        for c in 0..clusters {
            let local = format::read_patterns(&mut r, &format!("local {c}"), d)?;
            if local.len() > k_local {
                return Err(r.err(format!("{} local patterns exceed K_l = {k_local}", local.len())));
            }
            local_patterns.push(local);
        }
        let glm = format::read_glm(&mut r, "glm")?;
        if glm.dim() != config.width() {
            return Err(r.err(format!("GLM dimension {} is not K_g + K_l = {}", glm.dim(), config.width())));
        }
        if glm.task != hyper.task.glm_task() {
            return Err(r.err("GLM task does not match the model task"));
        }
        r.expect_section("assignments")?;
        let count = r.usize_of("count")?;
        let mut cluster_assignments = Vec::with_capacity(count.min(1 << 20));
        while cluster_assignments.len() < count {
            for v in r.expect("a")? {
                let c = r.usize("a", v)?;
                if c >= clusters {
                    return Err(r.err(format!("cluster {c} out of range")));
                }
                cluster_assignments.push(c);
            }
        }
        if cluster_assignments.len() != count {
            return Err(r.err("assignment count mismatch"));
        }
        r.finish()?;
        Ok(StratifiedModel {
            global_patterns,
            lda: LdaModel { alpha, topics, fold_in_iterations, seed },
            local_patterns,
            glm,
            cluster_assignments,
            feature_names: schema.feature_names,
            encoding: schema.encoding,
            label_bounds: schema.label_bounds,
            hyper,
            config,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Source column name of every encoded dimension.
    pub fn source_names(&self) -> Vec<String> {
        source_names(&self.feature_names, self.encoding.as_ref())
    }

    /// Importance rows `(variable, cluster, frequency)`: how many conditions
    /// on each source variable appear in the global patterns (cluster
    /// `global`) and in each cluster's local patterns.
    pub fn importance(&self) -> Vec<(String, String, usize)> {
        let names = self.source_names();
        let mut rows = Vec::new();
        let mut block = |label: String, patterns: &[Pattern]| {
            let mut counts: BTreeMap<usize, (String, usize)> = BTreeMap::new();
            let mut order: Vec<String> = Vec::new();
            for c in patterns.iter().flat_map(|p| &p.conditions) {
                let var = &names[c.dim];
                let first = order.iter().position(|v| v == var).unwrap_or_else(|| {
                    order.push(var.clone());
                    order.len() - 1
                });
                counts.entry(first).or_insert_with(|| (var.clone(), 0)).1 += 1;
            }
            for (_, (var, n)) in counts {
                rows.push((var, label.clone(), n));
            }
        };
        block("global".into(), &self.global_patterns);
        for (c, local) in self.local_patterns.iter().enumerate() {
            block(c.to_string(), local);
        }
        rows
    }

    pub fn importance_csv(&self) -> String {
        let mut out = String::from("variable,cluster,frequency\n");
        for (var, cluster, n) in self.importance() {
            out.push_str(&format!("{},{cluster},{n}\n", csv_field(&var)));
        }
        out
    }
}

pub(crate) fn source_names(feature_names: &[String], encoding: Option<&Encoding>) -> Vec<String> {
    match encoding {
        Some(enc) => {
            let (_, _, sources) = enc.layout();
            sources.iter().map(|&s| enc.columns[s].name().to_string()).collect()
        }
        None => feature_names.to_vec(),
    }
}

/// Predicts every row of `ds` in order; each row takes the same path as
/// [`StratifiedModel::predict_one`].
pub fn predict_stratified(m: &StratifiedModel, ds: &Dataset) -> Result<Vec<StratifiedPrediction>> {
    m.check_compatible(ds)?;
    Ok((0..ds.n).into_par_iter().map(|i| m.predict_unchecked(ds.row(i))).collect())
}
