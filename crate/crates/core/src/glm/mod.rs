//! Generalized linear models over the binary pattern space.
//!
//! Logistic regression (mean cross-entropy) for classification and least
//! squares (mean squared error) for regression, each with an unpenalized
//! intercept. Multi-class problems are fitted one-vs-rest over the shared
//! pattern space. The L1 penalty is `lambda * |w|_1` added to the *mean*
//! loss, so `lambda` does not scale with the dataset size.

mod design;
mod solver;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::patterns::PatternSpace;

pub(crate) use design::{sigmoid, softplus, Design, GroupLoss};
pub(crate) use solver::{coordinate_descent, gradient_descent, Coefs, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlmTask {
    Logistic,
    Linear,
}

impl GlmTask {
    pub fn as_str(self) -> &'static str {
        match self {
            GlmTask::Logistic => "logistic",
            GlmTask::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logistic" => Some(GlmTask::Logistic),
            "linear" => Some(GlmTask::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    /// Start every iteration at `initial` and halve until sufficient decrease.
    Backtracking { initial: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop once the relative objective change drops below this.
    pub tolerance: f64,
    pub step: StepPolicy,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 5000,
            tolerance: 1e-7,
            step: StepPolicy::Backtracking { initial: 1.0 },
        }
    }
}

impl FitConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        match self.step {
            StepPolicy::Fixed(t) | StepPolicy::Backtracking { initial: t } if !(t > 0.0) => {
                Err(Error::InvalidArgument("step size must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One linear score `w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScore {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearScore {
    #[inline]
    pub fn score(&self, xp: &[u8]) -> f64 {
        let mut z = self.intercept;
        for (w, &b) in self.weights.iter().zip(xp) {
            if b == 1 {
                z += w;
            }
        }
        z
    }
}

/// A fitted model. Binary logistic and linear models hold one score;
/// multi-class logistic holds one one-vs-rest score per class.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel {
    pub task: GlmTask,
    /// Class count for logistic models, 0 for linear.
    pub n_classes: usize,
    pub scores: Vec<LinearScore>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmPrediction {
    /// Class index (as `f64`) for logistic models, the fitted value otherwise.
    pub value: f64,
    /// Probability of the predicted class (logistic only).
    pub probability: Option<f64>,
}

impl GlmModel {
    pub fn dim(&self) -> usize {
        self.scores.first().map_or(0, |s| s.weights.len())
    }

    /// Columns with a non-zero weight in any score.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&j| self.scores.iter().any(|s| s.weights[j] != 0.0))
            .collect()
    }

    fn predict_unchecked(&self, xp: &[u8]) -> GlmPrediction {
        match self.task {
            GlmTask::Linear => GlmPrediction { value: self.scores[0].score(xp), probability: None },
            GlmTask::Logistic if self.scores.len() == 1 => {
                let p = sigmoid(self.scores[0].score(xp));
                // Class 1 only when strictly more likely; p = 0.5 goes to class 0.
                if p > 0.5 {
                    GlmPrediction { value: 1.0, probability: Some(p) }
                } else {
                    GlmPrediction { value: 0.0, probability: Some(1.0 - p) }
                }
            }
            GlmTask::Logistic => {
                let mut best = (0, f64::NEG_INFINITY);
                for (c, s) in self.scores.iter().enumerate() {
                    let z = s.score(xp);
                    if z > best.1 {
                        best = (c, z);
                    }
                }
                GlmPrediction { value: best.0 as f64, probability: Some(sigmoid(best.1)) }
            }
        }
    }
}

/// Applies `m` to one pattern-space row.
pub fn predict_glm(m: &GlmModel, xp: &[u8]) -> Result<GlmPrediction> {
    if xp.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: xp.len() });
    }
    Ok(m.predict_unchecked(xp))
}

/// Per-score 0/1 (logistic) or real (linear) targets.
pub(crate) fn score_targets(task: GlmTask, y: &[f64]) -> Result<(usize, Vec<Vec<f64>>)> {
    match task {
        GlmTask::Linear => {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite regression target".into()));
            }
            Ok((0, vec![y.to_vec()]))
        }
        GlmTask::Logistic => {
            if y.iter().any(|v| *v < 0.0 || v.fract() != 0.0 || !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "class labels must be non-negative integers".into(),
                ));
            }
            let n_classes = y.iter().fold(0.0f64, |a, &b| a.max(b)) as usize + 1;
            let first = y.first().copied();
            if y.iter().all(|v| Some(*v) == first) {
                return Err(Error::SingleClass);
            }
            let targets = if n_classes == 2 {
                vec![y.to_vec()]
            } else {
                (0..n_classes)
                    .map(|c| y.iter().map(|&v| (v as usize == c) as u8 as f64).collect())
                    .collect()
            };
            Ok((n_classes, targets))
        }
    }
}

/// Design plus one loss per score, ready for the solvers.
pub(crate) struct Problem {
    pub task: GlmTask,
    pub n_classes: usize,
    pub design: Design,
    pub losses: Vec<GroupLoss>,
}

impl Problem {
    pub fn new(xp: &PatternSpace, y: &[f64], task: GlmTask) -> Result<Self> {
        if xp.n != y.len() {
            return Err(Error::DimensionMismatch { expected: xp.n, got: y.len() });
        }
        if xp.n == 0 {
            return Err(Error::InvalidArgument("no instances".into()));
        }
        let (n_classes, targets) = score_targets(task, y)?;
        let (design, group_of) = Design::grouped(xp);
        Ok(Self::with_design(task, n_classes, design, &group_of, &targets))
    }

    pub fn with_design(
        task: GlmTask,
        n_classes: usize,
        design: Design,
        group_of: &[u32],
        targets: &[Vec<f64>],
    ) -> Self {
        let logistic = task == GlmTask::Logistic;
        let losses = targets
            .iter()
            .map(|t| GroupLoss::from_targets(logistic, &design, group_of, t))
            .collect();
        Problem { task, n_classes, design, losses }
    }

    pub fn null_coefs(&self) -> Vec<Coefs> {
        self.losses
            .iter()
            .map(|l| Coefs::zeros(self.design.n_cols, l.null_intercept()))
            .collect()
    }

    pub fn lambda_max(&self) -> f64 {
        let mut best = 0.0f64;
        for (loss, c) in self.losses.iter().zip(self.null_coefs()) {
            let z = vec![c.intercept; self.design.n_groups()];
            let (gw, _) = solver::gradient(&self.design, loss, &z);
            best = gw.iter().fold(best, |a, g| a.max(g.abs()));
        }
        best
    }

    pub fn lasso(&self, lambda: f64, init: Vec<Coefs>, cfg: &FitConfig) -> Result<Vec<Outcome>> {
        self.losses
            .par_iter()
            .zip(init)
            .map(|(loss, c)| {
                coordinate_descent(&self.design, loss, lambda, c, cfg.tolerance, cfg.max_iterations)
            })
            .collect()
    }

    pub fn gradient_descent(&self, init: Vec<Coefs>, cfg: &FitConfig) -> Result<Vec<Outcome>> {
        self.losses
            .par_iter()
            .zip(init)
            .map(|(loss, c)| gradient_descent(&self.design, loss, c, cfg))
            .collect()
    }

    pub fn model(&self, coefs: Vec<Coefs>) -> GlmModel {
        GlmModel {
            task: self.task,
            n_classes: self.n_classes,
            scores: coefs
                .into_iter()
                .map(|c| LinearScore { weights: c.weights, intercept: c.intercept })
                .collect(),
        }
    }
}

pub(crate) fn coefs_of(m: &GlmModel) -> Vec<Coefs> {
    m.scores
        .iter()
        .map(|s| Coefs { weights: s.weights.clone(), intercept: s.intercept })
        .collect()
}

/// Unpenalized fit by gradient descent, starting from zero weights and the
/// closed-form null intercept.
pub fn fit_glm(xp: &PatternSpace, y: &[f64], task: GlmTask, cfg: &FitConfig) -> Result<GlmModel> {
    fit_glm_from(xp, y, task, cfg, None)
}

/// [`fit_glm`] warm-started from `init` when given.
pub fn fit_glm_from(
    xp: &PatternSpace,
    y: &[f64],
    task: GlmTask,
    cfg: &FitConfig,
    init: Option<&GlmModel>,
) -> Result<GlmModel> {
    cfg.validate()?;
    let problem = Problem::new(xp, y, task)?;
    let start = match init {
        Some(m) => {
            if m.dim() != xp.p || m.scores.len() != problem.losses.len() {
                return Err(Error::DimensionMismatch { expected: xp.p, got: m.dim() });
            }
            coefs_of(m)
        }
        None => problem.null_coefs(),
    };
    let out = problem.gradient_descent(start, cfg)?;
    for (s, o) in out.iter().enumerate() {
        log::debug!(
            "score {s}: objective {:.6e} -> {:.6e} in {} iterations",
            o.initial_objective,
            o.objective,
            o.iterations
        );
    }
    Ok(problem.model(out.into_iter().map(|o| o.coefs).collect()))
}

/// L1-penalized fit by coordinate descent with soft-thresholding. Weights
/// driven to zero are exactly zero; see [`GlmModel::support`].
pub fn fit_lasso(
    xp: &PatternSpace,
    y: &[f64],
    lambda: f64,
    task: GlmTask,
    cfg: &FitConfig,
) -> Result<GlmModel> {
    cfg.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let problem = Problem::new(xp, y, task)?;
    let out = problem.lasso(lambda, problem.null_coefs(), cfg)?;
    Ok(problem.model(out.into_iter().map(|o| o.coefs).collect()))
}

/// Smallest penalty at which all-zero weights (with the optimal intercept)
/// are optimal: the largest absolute loss gradient there.
pub fn lambda_max(xp: &PatternSpace, y: &[f64], task: GlmTask) -> Result<f64> {
    if task == GlmTask::Logistic {
        if let Err(Error::SingleClass) = score_targets(task, y) {
            return Ok(0.0);
        }
    }
    Ok(Problem::new(xp, y, task)?.lambda_max())
}

/// Per-instance loss of one score: mean cross-entropy against 0/1 targets
/// or mean squared error, with its analytic gradient `(d/dw, d/db)`.
///
/// This is the direct per-instance form; the solvers work on grouped
/// designs and are checked against it.
pub fn loss_and_gradient(
    task: GlmTask,
    xp: &PatternSpace,
    target: &[f64],
    weights: &[f64],
    intercept: f64,
) -> (f64, Vec<f64>, f64) {
    let n = xp.n as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; xp.p];
    let mut gb = 0.0;
    for i in 0..xp.n {
        let row = xp.row(i);
        let mut z = intercept;
        for (w, &b) in weights.iter().zip(row) {
            if b == 1 {
                z += w;
            }
        }
        let (l, d) = match task {
            GlmTask::Logistic => (softplus(z) - target[i] * z, sigmoid(z) - target[i]),
            GlmTask::Linear => ((z - target[i]).powi(2), 2.0 * (z - target[i])),
        };
        loss += l;
        gb += d;
        for (g, &b) in gw.iter_mut().zip(row) {
            if b == 1 {
                *g += d;
            }
        }
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (loss / n, gw, gb / n)
}

/// Penalized objective of `m` on `(xp, y)`, summed over scores, evaluated
/// instance by instance in row order.
pub fn objective(m: &GlmModel, xp: &PatternSpace, y: &[f64], lambda: f64) -> Result<f64> {
    if xp.p != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: xp.p });
    }
    let (_, targets) = score_targets(m.task, y)?;
    let mut total = 0.0;
    for (s, t) in m.scores.iter().zip(&targets) {
        let mut loss = 0.0;
        for i in 0..xp.n {
            let z = s.score(xp.row(i));
            loss += match m.task {
                GlmTask::Logistic => softplus(z) - t[i] * z,
                GlmTask::Linear => (z - t[i]).powi(2),
            };
        }
        total += loss / xp.n as f64 + lambda * s.weights.iter().map(|w| w.abs()).sum::<f64>();
    }
    Ok(total)
}

/// Training performance used to compare models: mean log-likelihood for
/// logistic models, negative MSE for linear ones. Higher is better.
pub fn training_performance(m: &GlmModel, xp: &PatternSpace, y: &[f64]) -> Result<f64> {
    objective(m, xp, y, 0.0).map(|v| -v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col(bits: &[u8]) -> PatternSpace {
        PatternSpace::from_rows(&bits.iter().map(|&b| vec![b]).collect::<Vec<_>>()).unwrap()
    }

    fn random_problem(seed: u64, n: usize, p: usize, logistic: bool) -> (PatternSpace, Vec<f64>) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<u8>> =
            (0..n).map(|_| (0..p).map(|_| r.gen_bool(0.4) as u8).collect()).collect();
        let xp = PatternSpace::from_rows(&rows).unwrap();
        let y = rows
            .iter()
            .map(|row| {
                let s: f64 = row.iter().enumerate().map(|(j, &b)| b as f64 * (j as f64 - 1.0)).sum();
                if logistic {
                    (s + r.gen_range(-1.5..1.5) > 0.5) as u8 as f64
                } else {
                    s + r.gen_range(-0.5..0.5)
                }
            })
            .collect();
        (xp, y)
    }

    fn mixed_cells(seed: u64, n: usize, p: usize) -> (PatternSpace, Vec<f64>) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<u8>> = (0..n).map(|_| (0..p).map(|_| r.gen_bool(0.5) as u8).collect()).collect();
        let y = rows
            .iter()
            .map(|row| r.gen_bool(0.3 + 0.2 * row[0] as f64 + 0.2 * row[1] as f64) as u8 as f64)
            .collect();
        (PatternSpace::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn separable_column_is_learned() {
        let xp = col(&[1, 1, 0, 0, 1, 0]);
        let y = [1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let m = fit_glm(&xp, &y, GlmTask::Logistic, &FitConfig::default()).unwrap();
        assert!(m.scores[0].weights[0] > 0.0);
        for i in 0..xp.n {
            assert_eq!(predict_glm(&m, xp.row(i)).unwrap().value, y[i]);
        }
    }

    #[test]
    fn constant_column_reproduces_mean() {
        let xp = col(&[1, 1, 1, 1]);
        let y = [1.0, 2.0, 3.0, 6.0];
        let m = fit_glm(&xp, &y, GlmTask::Linear, &FitConfig::default()).unwrap();
        let fitted = m.scores[0].weights[0] + m.scores[0].intercept;
        assert!((fitted - 3.0).abs() < 1e-6);
        let mse = objective(&m, &xp, &y, 0.0).unwrap();
        assert!((mse - 3.5).abs() < 1e-6, "mse {mse}");
    }

    #[test]
    fn single_class_logistic_errors() {
        let xp = col(&[1, 0, 1]);
        assert!(matches!(
            fit_glm(&xp, &[1.0, 1.0, 1.0], GlmTask::Logistic, &FitConfig::default()),
            Err(Error::SingleClass)
        ));
        assert!(fit_glm(&xp, &[1.0, 0.0], GlmTask::Linear, &FitConfig::default()).is_err());
    }

    #[test]
    fn divergent_fixed_step_reports_non_finite() {
        let xp = col(&[1, 0, 1, 0]);
        let cfg = FitConfig { step: StepPolicy::Fixed(1e300), ..FitConfig::default() };
        let r = fit_glm(&xp, &[1e300, 0.0, -1e300, 3.0], GlmTask::Linear, &cfg);
        assert!(matches!(r, Err(Error::NonFinite)), "{r:?}");
    }

    #[test]
    fn predict_examples() {
        let zero_lin = GlmModel {
            task: GlmTask::Linear,
            n_classes: 0,
            scores: vec![LinearScore { weights: vec![0.0, 0.0], intercept: 0.0 }],
        };
        assert_eq!(predict_glm(&zero_lin, &[1, 0]).unwrap().value, 0.0);
        let lin = GlmModel {
            scores: vec![LinearScore { weights: vec![2.0, -1.0], intercept: 0.0 }],
            ..zero_lin.clone()
        };
        assert_eq!(predict_glm(&lin, &[1, 1]).unwrap().value, 1.0);
        assert!(predict_glm(&lin, &[1]).is_err());
        let logit = GlmModel { task: GlmTask::Logistic, n_classes: 2, ..zero_lin };
        let p = predict_glm(&logit, &[0, 1]).unwrap();
        assert_eq!((p.value, p.probability), (0.0, Some(0.5)));
    }

    #[test]
    fn multiclass_argmax_ties_to_lowest() {
        let m = GlmModel {
            task: GlmTask::Logistic,
            n_classes: 3,
            scores: vec![
                LinearScore { weights: vec![1.0], intercept: 0.0 },
                LinearScore { weights: vec![1.0], intercept: 0.0 },
                LinearScore { weights: vec![0.0], intercept: 0.0 },
            ],
        };
        assert_eq!(predict_glm(&m, &[1]).unwrap().value, 0.0);
    }

    #[test]
    fn multiclass_fit_recovers_classes() {
        let rows: Vec<Vec<u8>> = (0..60).map(|i| vec![(i % 3 == 1) as u8, (i % 3 == 2) as u8]).collect();
        let y: Vec<f64> = (0..60).map(|i| (i % 3) as f64).collect();
        let xp = PatternSpace::from_rows(&rows).unwrap();
        let m = fit_glm(&xp, &y, GlmTask::Logistic, &FitConfig::default()).unwrap();
        assert_eq!(m.scores.len(), 3);
        for i in 0..60 {
            assert_eq!(predict_glm(&m, xp.row(i)).unwrap().value, y[i]);
        }
    }

    #[test]
    fn lambda_max_constant_target_is_zero() {
        let xp = col(&[1, 0, 1]);
        assert_eq!(lambda_max(&xp, &[2.0, 2.0, 2.0], GlmTask::Linear).unwrap(), 0.0);
    }

    #[test]
    fn lambda_max_single_aligned_column_by_hand() {
        // y = +-1 centred, column equals the positive indicator.
        // Gradient at w = 0, b = mean(y) = 0: (2/n) * sum_{x=1} (0 - y_i) = -2 * (2/4) = -1.
        let xp = col(&[1, 1, 0, 0]);
        let y = [1.0, 1.0, -1.0, -1.0];
        assert!((lambda_max(&xp, &y, GlmTask::Linear).unwrap() - 1.0).abs() < 1e-15);
        // Logistic, same column, y in {0,1}: b0 = logit(1/2) = 0, p = 1/2,
        // gradient = (1/4) * sum_{x=1} (1/2 - 1) = -1/4.
        let yl = [1.0, 1.0, 0.0, 0.0];
        assert!((lambda_max(&xp, &yl, GlmTask::Logistic).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lasso_above_lambda_max_is_exactly_zero() {
        for seed in 0..10 {
            for task in [GlmTask::Linear, GlmTask::Logistic] {
                let (xp, y) = random_problem(seed, 40, 5, task == GlmTask::Logistic);
                let lmax = lambda_max(&xp, &y, task).unwrap();
                let m = fit_lasso(&xp, &y, 1.01 * lmax, task, &FitConfig::default()).unwrap();
                assert!(m.support().is_empty(), "seed {seed} {task:?}");
            }
        }
    }

    #[test]
    fn lasso_at_zero_matches_glm_objective() {
        for seed in 0..5 {
            for task in [GlmTask::Linear, GlmTask::Logistic] {
                // Every pattern cell must hold both labels, otherwise the
                // logistic optimum is at infinity and neither solver reaches it.
                let (xp, y) = match task {
                    GlmTask::Linear => random_problem(seed, 50, 4, false),
                    GlmTask::Logistic => mixed_cells(seed, 200, 3),
                };
                let cfg = FitConfig { tolerance: 1e-12, max_iterations: 50_000, ..FitConfig::default() };
                let a = fit_lasso(&xp, &y, 0.0, task, &cfg).unwrap();
                let b = fit_glm(&xp, &y, task, &cfg).unwrap();
                let (fa, fb) = (objective(&a, &xp, &y, 0.0).unwrap(), objective(&b, &xp, &y, 0.0).unwrap());
                assert!((fa - fb).abs() <= 1e-6 * fa.abs().max(1.0), "{task:?} {fa} {fb}");
            }
        }
    }

    #[test]
    fn lasso_support_shrinks_on_separable_column() {
        let xp = col(&[1, 1, 1, 0, 0, 0, 1, 0]);
        let y = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let lmax = lambda_max(&xp, &y, GlmTask::Logistic).unwrap();
        let mut last = usize::MAX;
        for k in 0..10 {
            let lambda = lmax * (1.0 - k as f64 / 10.0) + 1e-3;
            let m = fit_lasso(&xp, &y, lambda, GlmTask::Logistic, &FitConfig::default()).unwrap();
            let s = m.support().len();
            assert!(s <= 1);
            if last != usize::MAX {
                assert!(s >= last);
            }
            last = s;
        }
    }

    #[test]
    fn grouped_gradient_matches_per_instance() {
        let (xp, y) = random_problem(3, 30, 4, false);
        let problem = Problem::new(&xp, &y, GlmTask::Linear).unwrap();
        let w = [0.3, -0.2, 0.1, 0.5];
        let z = problem.design.predictor(&w, 0.7);
        let (gw, gb) = solver::gradient(&problem.design, &problem.losses[0], &z);
        let (l, gw2, gb2) = loss_and_gradient(GlmTask::Linear, &xp, &y, &w, 0.7);
        assert!((problem.losses[0].mean_loss(&problem.design, &z) - l).abs() < 1e-12);
        assert!((gb - gb2).abs() < 1e-12);
        for (a, b) in gw.iter().zip(&gw2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn coordinate_descent_is_monotone(seed in 0u64..1000, frac in 0.0f64..1.0, logistic: bool) {
            let (xp, y) = random_problem(seed, 40, 6, logistic);
            let task = if logistic { GlmTask::Logistic } else { GlmTask::Linear };
            let Ok(problem) = Problem::new(&xp, &y, task) else { return Ok(()) };
            let lambda = frac * problem.lambda_max();
            let mut c = problem.null_coefs().remove(0);
            let mut f = problem.losses[0].mean_loss(&problem.design, &problem.design.predictor(&c.weights, c.intercept));
            for _ in 0..20 {
                let out = coordinate_descent(&problem.design, &problem.losses[0], lambda, c.clone(), 1e-300, 1).unwrap();
                prop_assert!(out.objective <= f + 1e-12 * f.abs().max(1.0));
                f = out.objective;
                c = out.coefs;
            }
        }

        #[test]
        fn logistic_probabilities_in_open_interval(seed in 0u64..500) {
            let (xp, y) = random_problem(seed, 30, 3, true);
            let Ok(m) = fit_glm(&xp, &y, GlmTask::Logistic, &FitConfig::default()) else { return Ok(()) };
            for i in 0..xp.n {
                let p = sigmoid(m.scores[0].score(xp.row(i)));
                prop_assert!(p > 0.0 && p < 1.0);
                let q = predict_glm(&m, xp.row(i)).unwrap().probability.unwrap();
                prop_assert!((0.5..1.0).contains(&q));
            }
        }
    }
}
