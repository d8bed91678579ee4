//! End-to-end training, prediction, evaluation and model persistence.

pub(crate) mod format;

use std::path::Path;

use rayon::prelude::*;

use crate::data::{denormalize, Dataset, EncodeOptions, Encoding, LabelKind, RawTable};
use crate::error::{Error, Result};
use crate::glm::{FitConfig, GlmModel, GlmTask};
use crate::patterns::{construct_pattern_space, extract_patterns, Pattern, PatternSpace};
use crate::selection::{forward_select, lasso_select, SelectionResult};
use crate::tree::{fit_forest, TreeConfig};

use format::{Reader, Writer};

pub const FORMAT_MAGIC: &str = "dppred-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Classification,
    Regression,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Classification => "classification",
            TaskKind::Regression => "regression",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "classification" => Some(TaskKind::Classification),
            "regression" => Some(TaskKind::Regression),
            _ => None,
        }
    }

    pub fn glm_task(self) -> GlmTask {
        match self {
            TaskKind::Classification => GlmTask::Logistic,
            TaskKind::Regression => GlmTask::Linear,
        }
    }

    pub fn label_kind(self) -> LabelKind {
        match self {
            TaskKind::Classification => LabelKind::Class,
            TaskKind::Regression => LabelKind::Real,
        }
    }

    pub fn for_labels(kind: LabelKind) -> Self {
        match kind {
            LabelKind::Class => TaskKind::Classification,
            LabelKind::Real => TaskKind::Regression,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    Forward,
    Lasso,
}

impl SelectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMethod::Forward => "forward",
            SelectionMethod::Lasso => "lasso",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "forward" => Some(SelectionMethod::Forward),
            "lasso" => Some(SelectionMethod::Lasso),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub tree: TreeConfig,
    pub k: usize,
    pub method: SelectionMethod,
    pub task: TaskKind,
    pub fit: FitConfig,
    /// LASSO search resolution; `None` means `lambda_max * 1e-3`.
    pub lasso_epsilon: Option<f64>,
}

impl HyperParams {
    /// T = 100, D = 6, sigma = 10, k = 20.
    pub fn classification() -> Self {
        HyperParams {
            tree: TreeConfig::default(),
            k: 20,
            method: SelectionMethod::Forward,
            task: TaskKind::Classification,
            fit: FitConfig::default(),
            lasso_epsilon: None,
        }
    }

    /// As [`HyperParams::classification`] with k = 30.
    pub fn regression() -> Self {
        HyperParams { k: 30, task: TaskKind::Regression, ..Self::classification() }
    }

    pub fn for_task(task: TaskKind) -> Self {
        match task {
            TaskKind::Classification => Self::classification(),
            TaskKind::Regression => Self::regression(),
        }
    }

    /// Preset for high-dimensional data: D = 10, T = 200, k = 50.
    pub fn high_dimensional(task: TaskKind) -> Self {
        let mut hp = Self::for_task(task);
        hp.tree.max_depth = 10;
        hp.tree.n_trees = 200;
        hp.k = 50;
        hp
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        self.fit.validate()?;
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if let Some(e) = self.lasso_epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidArgument("lasso epsilon must be positive".into()));
            }
        }
        Ok(())
    }
}

/// The trained artifact: top-k patterns, the GLM over them, and everything
/// needed to encode raw rows the way the training data was encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct DppredModel {
    pub patterns: Vec<Pattern>,
    pub glm: GlmModel,
    pub feature_names: Vec<String>,
    pub encoding: Option<Encoding>,
    pub label_bounds: Option<(f64, f64)>,
    pub hyper: HyperParams,
    /// Candidate pool size the patterns were selected from.
    pub pool_size: usize,
}

/// Side information from [`train_with_report`].
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub generated: usize,
    pub pool_size: usize,
    pub selection: SelectionResult,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Class index for classification, original-scale value for regression.
    pub value: f64,
    /// Probability of the predicted class (classification only).
    pub probability: Option<f64>,
}

pub fn train(ds: &Dataset, hp: &HyperParams) -> Result<DppredModel> {
    train_with_report(ds, hp).map(|(m, _)| m)
}

/// Forest, pattern pool, pattern space, top-k selection and GLM refit.
pub fn train_with_report(ds: &Dataset, hp: &HyperParams) -> Result<(DppredModel, TrainReport)> {
    hp.validate()?;
    check_training_data(ds, hp.task)?;
    let forest = fit_forest(ds, &hp.tree)?;
    let pool = extract_patterns(&forest)?;
    if pool.is_empty() {
        return Err(Error::NoPatterns);
    }
    log::info!("pattern pool: {} generated, {} distinct", pool.generated, pool.len());
    let xp = construct_pattern_space(ds, &pool.patterns)?;
    let selection = select(&xp, &ds.y, hp)?;
    let model = DppredModel {
        patterns: selection.chosen.iter().map(|&j| pool.patterns[j].clone()).collect(),
        glm: selection.model.clone(),
        feature_names: ds.feature_names.clone(),
        encoding: ds.encoding.clone(),
        label_bounds: ds.label_bounds,
        hyper: hp.clone(),
        pool_size: pool.len(),
    };
    let report = TrainReport { generated: pool.generated, pool_size: pool.len(), selection };
    Ok((model, report))
}

pub(crate) fn check_training_data(ds: &Dataset, task: TaskKind) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if !ds.labeled {
        return Err(Error::InvalidArgument("training data has no labels".into()));
    }
    if ds.label_kind != task.label_kind() {
        return Err(Error::UnsupportedTask(format!(
            "{} task on {} labels",
            task.as_str(),
            ds.label_kind.as_str()
        )));
    }
    Ok(())
}

pub(crate) fn select(xp: &PatternSpace, y: &[f64], hp: &HyperParams) -> Result<SelectionResult> {
    let task = hp.task.glm_task();
    match hp.method {
        SelectionMethod::Forward => forward_select(xp, y, hp.k, task, &hp.fit),
        SelectionMethod::Lasso => lasso_select(xp, y, hp.k, hp.lasso_epsilon, task, &hp.fit),
    }
}

impl DppredModel {
    pub fn task(&self) -> TaskKind {
        self.hyper.task
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Encodes raw rows with the training-time encoding.
    pub fn encode(&self, raw: &RawTable) -> Result<Dataset> {
        let enc = self.encoding.as_ref().ok_or_else(|| {
            Error::SchemaMismatch("model was trained without a column encoding".into())
        })?;
        enc.encode(raw, EncodeOptions::default())
    }

    /// Class name for a predicted class index, when the model knows them.
    pub fn class_name(&self, index: usize) -> Option<&str> {
        self.encoding.as_ref()?.classes.get(index).map(String::as_str)
    }

    /// Predicts one encoded feature vector.
    pub fn predict_one(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x, &mut 0))
    }

    /// [`DppredModel::predict_one`], adding the number of conditions
    /// evaluated to `counter`.
    pub fn predict_counted(&self, x: &[f64], counter: &mut usize) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x, counter))
    }

    fn predict_unchecked(&self, x: &[f64], counter: &mut usize) -> Prediction {
        let bits: Vec<u8> = self.patterns.iter().map(|p| p.holds_counted(x, counter) as u8).collect();
        self.apply_glm(&bits)
    }

    pub(crate) fn apply_glm(&self, bits: &[u8]) -> Prediction {
        let g = crate::glm::predict_glm(&self.glm, bits).expect("model dimensions are consistent");
        let value = match (self.task(), self.label_bounds) {
            (TaskKind::Regression, Some(b)) => denormalize(g.value, b),
            _ => g.value,
        };
        Prediction { value, probability: g.probability }
    }

    pub fn check_compatible(&self, ds: &Dataset) -> Result<()> {
        if ds.d != self.dim() {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} encoded features, data has {}",
                self.dim(),
                ds.d
            )));
        }
        if ds.feature_names != self.feature_names {
            return Err(Error::SchemaMismatch("encoded feature names differ from the model's".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::new(FORMAT_MAGIC, FORMAT_VERSION);
        write_provenance(&mut w, &self.hyper, self.pool_size);
        format::write_schema(&mut w, &self.feature_names, self.encoding.as_ref(), self.label_bounds);
        format::write_patterns(&mut w, "patterns", &self.patterns, &self.feature_names);
        format::write_glm(&mut w, "glm", &self.glm);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text, FORMAT_MAGIC, FORMAT_VERSION)?;
        let (hyper, pool_size) = read_provenance(&mut r)?;
        let schema = format::read_schema(&mut r)?;
        let patterns = format::read_patterns(&mut r, "patterns", schema.feature_names.len())?;
        let glm = format::read_glm(&mut r, "glm")?;
        if glm.dim() != patterns.len() {
            return Err(r.err(format!(
                "GLM dimension {} does not match {} patterns",
                glm.dim(),
                patterns.len()
            )));
        }
        if glm.task != hyper.task.glm_task() {
            return Err(r.err("GLM task does not match the model task"));
        }
        r.finish()?;
        Ok(DppredModel {
            patterns,
            glm,
            feature_names: schema.feature_names,
            encoding: schema.encoding,
            label_bounds: schema.label_bounds,
            hyper,
            pool_size,
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
}

pub(crate) fn write_provenance(w: &mut Writer, hp: &HyperParams, pool_size: usize) {
    use format::hex;
    w.section("provenance");
    w.line("task", &[hp.task.as_str().into()]);
    w.line("method", &[hp.method.as_str().into()]);
    w.line("k", &[hp.k.to_string()]);
    w.line("trees", &[hp.tree.n_trees.to_string()]);
    w.line("depth", &[hp.tree.max_depth.to_string()]);
    w.line("min_bag", &[hp.tree.min_bag.to_string()]);
    w.line(
        "feature_candidates",
        &[hp.tree.n_feature_candidates.map_or("auto".into(), |v| v.to_string())],
    );
    w.line("threshold_candidates", &[hp.tree.n_threshold_candidates.to_string()]);
    w.line("seed", &[hp.tree.seed.to_string()]);
    w.line("max_iterations", &[hp.fit.max_iterations.to_string()]);
    w.line("tolerance", &[hex(hp.fit.tolerance)]);
    w.line("lasso_epsilon", &[hp.lasso_epsilon.map_or("auto".into(), hex)]);
    w.line("pool_size", &[pool_size.to_string()]);
}

pub(crate) fn read_provenance(r: &mut Reader) -> Result<(HyperParams, usize)> {
    r.expect_section("provenance")?;
    let task = r.word_of("task")?;
    let task = TaskKind::parse(task).ok_or_else(|| r.err(format!("unknown task '{task}'")))?;
    let method = r.word_of("method")?;
    let method =
        SelectionMethod::parse(method).ok_or_else(|| r.err(format!("unknown method '{method}'")))?;
    let mut hp = HyperParams { method, ..HyperParams::for_task(task) };
    hp.k = r.usize_of("k")?;
    hp.tree.n_trees = r.usize_of("trees")?;
    hp.tree.max_depth = r.usize_of("depth")?;
    hp.tree.min_bag = r.usize_of("min_bag")?;
    let fc = r.word_of("feature_candidates")?;
    hp.tree.n_feature_candidates =
        if fc == "auto" { None } else { Some(r.usize("feature_candidates", fc)?) };
    hp.tree.n_threshold_candidates = r.usize_of("threshold_candidates")?;
    let seed = r.word_of("seed")?;
    hp.tree.seed = r.u64("seed", seed)?;
    hp.fit.max_iterations = r.usize_of("max_iterations")?;
    let tol = r.word_of("tolerance")?;
    hp.fit.tolerance = r.finite("tolerance", tol)?;
    let eps = r.word_of("lasso_epsilon")?;
    hp.lasso_epsilon = if eps == "auto" { None } else { Some(r.finite("lasso_epsilon", eps)?) };
    let pool_size = r.usize_of("pool_size")?;
    hp.validate().map_err(|e| r.err(e.to_string()))?;
    Ok((hp, pool_size))
}

/// Predicts every instance of `ds`, in order. Each row goes through the same
/// path as [`DppredModel::predict_one`], so results match row-at-a-time use
/// bit for bit.
pub fn predict(m: &DppredModel, ds: &Dataset) -> Result<Vec<Prediction>> {
    m.check_compatible(ds)?;
    Ok((0..ds.n).into_par_iter().map(|i| m.predict_unchecked(ds.row(i), &mut 0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    pub mean: f64,
    pub mean_abs: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Metrics {
    Classification {
        accuracy: f64,
        /// `confusion[truth][predicted]`.
        confusion: Vec<Vec<usize>>,
    },
    Regression {
        rmse: f64,
        /// Residuals are `prediction - truth`.
        residuals: ResidualSummary,
    },
}

impl Metrics {
    /// Accuracy or RMSE.
    pub fn primary(&self) -> f64 {
        match self {
            Metrics::Classification { accuracy, .. } => *accuracy,
            Metrics::Regression { rmse, .. } => *rmse,
        }
    }

    /// Higher-is-better form: accuracy, or negative RMSE.
    pub fn score(&self) -> f64 {
        match self {
            Metrics::Classification { accuracy, .. } => *accuracy,
            Metrics::Regression { rmse, .. } => -rmse,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metrics::Classification { .. } => "accuracy",
            Metrics::Regression { .. } => "rmse",
        }
    }
}

pub fn evaluate(preds: &[f64], truth: &[f64], task: TaskKind) -> Result<Metrics> {
    if preds.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: preds.len() });
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    let n = preds.len() as f64;
    match task {
        TaskKind::Classification => {
            let as_class = |v: f64| -> Result<usize> {
                if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
                    Ok(v as usize)
                } else {
                    Err(Error::InvalidArgument(format!("'{v}' is not a class index")))
                }
            };
            let mut pairs = Vec::with_capacity(preds.len());
            for (&p, &t) in preds.iter().zip(truth) {
                pairs.push((as_class(t)?, as_class(p)?));
            }
            let c = pairs.iter().map(|&(t, p)| t.max(p)).max().unwrap_or(0) + 1;
            let mut confusion = vec![vec![0usize; c]; c];
            let mut correct = 0usize;
            for (t, p) in pairs {
                confusion[t][p] += 1;
                correct += (t == p) as usize;
            }
            Ok(Metrics::Classification { accuracy: correct as f64 / n, confusion })
        }
        TaskKind::Regression => {
            let r: Vec<f64> = preds.iter().zip(truth).map(|(p, t)| p - t).collect();
            let rmse = (r.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            let residuals = ResidualSummary {
                mean: r.iter().sum::<f64>() / n,
                mean_abs: r.iter().map(|v| v.abs()).sum::<f64>() / n,
                min: r.iter().copied().fold(f64::INFINITY, f64::min),
                max: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            Ok(Metrics::Regression { rmse, residuals })
        }
    }
}

/// Predicts `ds` and scores against its own (original-scale) labels.
pub fn evaluate_model(m: &DppredModel, ds: &Dataset) -> Result<Metrics> {
    if !ds.labeled {
        return Err(Error::InvalidArgument("evaluation data has no labels".into()));
    }
    let preds: Vec<f64> = predict(m, ds)?.iter().map(|p| p.value).collect();
    evaluate(&preds, &ds.original_labels(), m.task())
}

/// Prediction CSV: `row_index,prediction[,probability]`. Classes print by
/// name when the model knows them.
pub fn predictions_csv(m: &DppredModel, preds: &[Prediction]) -> String {
    let mut out = String::new();
    let with_prob = m.task() == TaskKind::Classification;
    out.push_str(if with_prob { "row_index,prediction,probability\n" } else { "row_index,prediction\n" });
    for (i, p) in preds.iter().enumerate() {
        let value = match m.task() {
            TaskKind::Classification => m
                .class_name(p.value as usize)
                .map(csv_field)
                .unwrap_or_else(|| format!("{}", p.value as usize)),
            TaskKind::Regression => format!("{}", p.value),
        };
        match p.probability {
            Some(prob) if with_prob => out.push_str(&format!("{i},{value},{prob}\n")),
            _ => out.push_str(&format!("{i},{value}\n")),
        }
    }
    out
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode_categoricals, Schema};
    use crate::glm::LinearScore;
    use crate::patterns::{Condition, Op};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xor_like(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        let y = rows.iter().map(|r| ((r[0] > 0.5) ^ (r[1] > 0.3)) as u8 as f64).collect();
        Dataset::from_rows(&rows, y, LabelKind::Class).unwrap()
    }

    fn small_hp() -> HyperParams {
        let mut hp = HyperParams::classification();
        hp.tree.n_trees = 10;
        hp.tree.max_depth = 3;
        hp.k = 5;
        hp
    }

    #[test]
    fn defaults_follow_published_settings() {
        let c = HyperParams::classification();
        assert_eq!((c.tree.n_trees, c.tree.max_depth, c.tree.min_bag, c.k), (100, 6, 10, 20));
        assert_eq!(HyperParams::regression().k, 30);
        let h = HyperParams::high_dimensional(TaskKind::Classification);
        assert_eq!((h.tree.n_trees, h.tree.max_depth, h.k), (200, 10, 50));
    }

    #[test]
    fn train_learns_xor_like_rule() {
        let ds = xor_like(600, 1);
        let m = train(&ds, &small_hp()).unwrap();
        assert!(m.patterns.len() <= 5);
        assert_eq!(m.glm.dim(), m.patterns.len());
        let acc = evaluate_model(&m, &ds).unwrap().primary();
        assert!(acc > 0.9, "accuracy {acc}");
    }

    #[test]
    fn pure_labels_generate_no_patterns() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows(&rows, vec![1.0; 50], LabelKind::Class).unwrap();
        assert!(matches!(train(&ds, &small_hp()), Err(Error::NoPatterns)));
    }

    #[test]
    fn task_must_match_labels() {
        let ds = xor_like(50, 2);
        let hp = HyperParams { task: TaskKind::Regression, ..small_hp() };
        assert!(matches!(train(&ds, &hp), Err(Error::UnsupportedTask(_))));
    }

    #[test]
    fn training_is_deterministic_to_the_byte() {
        let ds = xor_like(300, 3);
        let a = train(&ds, &small_hp()).unwrap().to_text();
        let b = train(&ds, &small_hp()).unwrap().to_text();
        assert_eq!(a, b);
    }

    fn constant_model(w: f64, b: f64) -> DppredModel {
        DppredModel {
            patterns: vec![Pattern::new(vec![Condition::new(0, Op::Ge, f64::NEG_INFINITY)])],
            glm: GlmModel {
                task: GlmTask::Linear,
                n_classes: 0,
                scores: vec![LinearScore { weights: vec![w], intercept: b }],
            },
            feature_names: vec!["x0".into()],
            encoding: None,
            label_bounds: None,
            hyper: HyperParams::regression(),
            pool_size: 1,
        }
    }

    #[test]
    fn always_true_pattern_gives_constant_prediction() {
        let m = constant_model(1.5, 0.25);
        let rows: Vec<Vec<f64>> = vec![vec![-3.0], vec![0.0], vec![1e9]];
        let ds = Dataset::from_rows(&rows, vec![0.0; 3], LabelKind::Real).unwrap();
        let p = predict(&m, &ds).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|p| p.value == 1.75 && p.probability.is_none()));
    }

    #[test]
    fn label_bounds_are_inverted_without_clamping() {
        let mut m = constant_model(1.0, 0.5);
        m.label_bounds = Some((10.0, 20.0));
        assert_eq!(m.predict_one(&[0.0]).unwrap().value, 25.0);
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let m = constant_model(1.0, 0.0);
        let ds = Dataset::from_rows(&[vec![1.0, 2.0]], vec![0.0], LabelKind::Real).unwrap();
        assert!(matches!(predict(&m, &ds), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn evaluate_examples() {
        let m = evaluate(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0], TaskKind::Classification).unwrap();
        assert_eq!(m.primary(), 1.0);
        let m = evaluate(&[1.0, 0.0], &[0.0, 1.0], TaskKind::Classification).unwrap();
        assert_eq!(m.primary(), 0.0);
        let Metrics::Classification { confusion, .. } = m else { panic!() };
        assert_eq!(confusion, vec![vec![0, 1], vec![1, 0]]);
        let m = evaluate(&[0.3, -0.4], &[0.0, 0.0], TaskKind::Regression).unwrap();
        assert!((m.primary() - (0.25f64 / 2.0).sqrt()).abs() < 1e-15);
        assert!((m.primary() - 0.35355).abs() < 1e-5);
        assert_eq!(evaluate(&[2.0], &[2.0], TaskKind::Regression).unwrap().primary(), 0.0);
        assert!(evaluate(&[1.0], &[1.0, 2.0], TaskKind::Regression).is_err());
    }

    #[test]
    fn round_trip_preserves_predictions_bitwise() {
        let ds = xor_like(300, 4);
        let m = train(&ds, &small_hp()).unwrap();
        let back = DppredModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let a = predict(&m, &ds).unwrap();
        let b = predict(&back, &ds).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.value.to_bits(), y.value.to_bits());
            assert_eq!(x.probability.map(f64::to_bits), y.probability.map(f64::to_bits));
        }
    }

    #[test]
    fn round_trip_with_encoding() {
        let schema = Schema::parse("label_task,real\nage,numeric\nblood type,categorical\ny,label\n").unwrap();
        let mut csv = String::from("age,blood type,y\n");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let age: u32 = rng.gen_range(1..60);
            let b = ["A", "B", "O", "AB"][rng.gen_range(0..4)];
            let y = if age > 30 { 2.0 } else { 0.0 } + if b == "O" { 1.0 } else { 0.0 };
            csv.push_str(&format!("{age},{b},{y}\n"));
        }
        let raw = RawTable::from_reader(csv.as_bytes()).unwrap();
        let ds = crate::data::minmax_normalize_labels(&encode_categoricals(&raw, &schema).unwrap()).unwrap();
        let mut hp = HyperParams::regression();
        hp.tree.n_trees = 8;
        hp.k = 4;
        let m = train(&ds, &hp).unwrap();
        let text = m.to_text();
        assert!(text.contains("blood%20type"));
        let back = DppredModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        let reencoded = back.encode(&raw).unwrap();
        let a = predict(&m, &ds).unwrap();
        let b = predict(&back, &reencoded).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_file_names_the_section() {
        let ds = xor_like(200, 6);
        let text = train(&ds, &small_hp()).unwrap().to_text();
        let cut = &text[..text.find("[glm]").unwrap()];
        match DppredModel::from_text(cut) {
            Err(Error::ModelFormat { section, .. }) => assert_eq!(section, "glm"),
            other => panic!("unexpected {other:?}"),
        }
        let cut = &text[..text.find("[end]").unwrap()];
        assert!(matches!(
            DppredModel::from_text(cut),
            Err(Error::ModelFormat { section, .. }) if section == "end"
        ));
    }

    #[test]
    fn newer_version_is_rejected() {
        let ds = xor_like(200, 7);
        let text = train(&ds, &small_hp()).unwrap().to_text();
        let newer = text.replacen("dppred-model 1", "dppred-model 2", 1);
        assert!(matches!(
            DppredModel::from_text(&newer),
            Err(Error::UnsupportedVersion { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn prediction_cost_is_bounded_by_k_times_depth() {
        let ds = xor_like(400, 8);
        let hp = small_hp();
        let m = train(&ds, &hp).unwrap();
        for i in 0..ds.n {
            let mut counter = 0;
            m.predict_counted(ds.row(i), &mut counter).unwrap();
            assert!(counter <= hp.k * hp.tree.max_depth);
        }
        assert!(m.patterns.iter().all(|p| p.len() <= hp.tree.max_depth));
    }

    #[test]
    fn predictions_csv_layout() {
        let m = constant_model(1.0, 0.0);
        let csv = predictions_csv(&m, &[Prediction { value: 1.0, probability: None }]);
        assert_eq!(csv, "row_index,prediction\n0,1\n");
    }
}
