//! Top-k pattern selection by combination performance.
//!
//! [`forward_select`] grows the chosen set one pattern per round, keeping the
//! candidate whose GLM refit on `chosen + {p}` fits the training data best.
//! [`lasso_select`] binary-searches the L1 penalty until the non-zero support
//! has at most `k` patterns, then refits without the penalty.
//!
//! Identical pool columns are collapsed to their lowest index first; a
//! duplicate can never improve on the incumbent that already holds its twin.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::glm::{
    coordinate_descent, fit_glm_from, objective, score_targets, Coefs, Design,
    FitConfig, GlmModel, GlmTask, GroupLoss, LinearScore, Problem,
};
use crate::patterns::PatternSpace;

/// Relative tolerance of the candidate fits inside a forward round.
const CANDIDATE_TOLERANCE: f64 = 1e-5;
const CANDIDATE_MAX_SWEEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardStep {
    pub round: usize,
    pub pattern_index: usize,
    /// Training performance after the round (higher is better).
    pub metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoStep {
    pub lambda: f64,
    pub support_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Forward(Vec<ForwardStep>),
    Lasso(Vec<LassoStep>),
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Trace::Forward(steps) => {
                out.push_str("round,pattern_index,metric\n");
                for s in steps {
                    let _ = writeln!(out, "{},{},{}", s.round, s.pattern_index, s.metric);
                }
            }
            Trace::Lasso(steps) => {
                out.push_str("lambda,support_size\n");
                for s in steps {
                    let _ = writeln!(out, "{},{}", s.lambda, s.support_size);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Pool indices in selection order (forward) or ascending (LASSO).
    pub chosen: Vec<usize>,
    /// Unpenalized model over the chosen columns, in `chosen` order.
    pub model: GlmModel,
    pub trace: Trace,
}

/// Lowest index of each distinct column, in ascending order.
fn distinct_columns(xp: &PatternSpace) -> Vec<usize> {
    let mut seen: HashMap<Vec<u32>, ()> = HashMap::new();
    let mut out = Vec::new();
    for j in 0..xp.p {
        if seen.insert(xp.column_support(j), ()).is_none() {
            out.push(j);
        }
    }
    out
}

fn check_inputs(xp: &PatternSpace, y: &[f64], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if xp.p == 0 {
        return Err(Error::NoPatterns);
    }
    if xp.n != y.len() {
        return Err(Error::DimensionMismatch { expected: xp.n, got: y.len() });
    }
    if xp.n == 0 {
        return Err(Error::InvalidArgument("no instances".into()));
    }
    Ok(())
}

/// Per-cell target statistics for one score.
#[derive(Clone)]
struct CellStats {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

/// Partition of the instances by their bits on the chosen columns.
struct Cells {
    of: Vec<u32>,
    count: Vec<f64>,
    /// Positions (into `chosen`) of the columns each cell satisfies.
    active: Vec<Vec<u32>>,
}

impl Cells {
    fn single(n: usize) -> Self {
        Cells { of: vec![0; n], count: vec![n as f64], active: vec![Vec::new()] }
    }

    fn stats(&self, target: &[f64]) -> CellStats {
        let k = self.count.len();
        let mut sum = vec![0.0; k];
        let mut sumsq = vec![0.0; k];
        for (&c, &t) in self.of.iter().zip(target) {
            sum[c as usize] += t;
            sumsq[c as usize] += t * t;
        }
        CellStats { sum, sumsq }
    }

    /// Splits every cell by `support` (sorted rows), `pos` being the new
    /// column's position in `chosen`.
    fn split(&self, support: &[u32], pos: u32) -> Cells {
        let mut on = vec![false; self.of.len()];
        for &i in support {
            on[i as usize] = true;
        }
        let mut ids: HashMap<(u32, bool), u32> = HashMap::new();
        let mut next = Cells { of: Vec::with_capacity(self.of.len()), count: Vec::new(), active: Vec::new() };
        for (i, &c) in self.of.iter().enumerate() {
            let key = (c, on[i]);
            let id = *ids.entry(key).or_insert_with(|| {
                let mut a = self.active[c as usize].clone();
                if on[i] {
                    a.push(pos);
                }
                next.count.push(0.0);
                next.active.push(a);
                (next.count.len() - 1) as u32
            });
            next.count[id as usize] += 1.0;
            next.of.push(id);
        }
        next
    }
}

fn loss_from_sums(task: GlmTask, counts: Vec<f64>, sum: Vec<f64>, sumsq: Vec<f64>) -> GroupLoss {
    match task {
        GlmTask::Logistic => GroupLoss::Logistic { counts, pos: sum },
        GlmTask::Linear => {
            let mean: Vec<f64> = sum.iter().zip(&counts).map(|(s, c)| s / c).collect();
            let m2 = sumsq
                .iter()
                .zip(&sum)
                .zip(&counts)
                .map(|((q, s), c)| (q - s * s / c).max(0.0))
                .collect();
            GroupLoss::Squared { counts, mean, m2 }
        }
    }
}

/// Fits `chosen + {candidate}` from the incumbent with the new weight at 0.
/// Returns the summed objective and the coefficients.
#[allow(clippy::too_many_arguments)]
fn fit_candidate(
    task: GlmTask,
    n: usize,
    cells: &Cells,
    stats: &[CellStats],
    targets: &[Vec<f64>],
    support: &[u32],
    incumbent: &[Coefs],
) -> Result<(f64, Vec<Coefs>)> {
    let n_cells = cells.count.len();
    let width = incumbent[0].weights.len() + 1;
    let mut ones = vec![0.0; n_cells];
    let mut on_sum = vec![vec![0.0; n_cells]; targets.len()];
    let mut on_sq = vec![vec![0.0; n_cells]; targets.len()];
    for &i in support {
        let c = cells.of[i as usize] as usize;
        ones[c] += 1.0;
        for (s, t) in targets.iter().enumerate() {
            let v = t[i as usize];
            on_sum[s][c] += v;
            on_sq[s][c] += v * v;
        }
    }
    // Groups: (cell, 0) then (cell, 1), skipping empty halves.
    let mut counts = Vec::with_capacity(2 * n_cells);
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(2 * n_cells);
    let mut layout = Vec::with_capacity(2 * n_cells);
    for c in 0..n_cells {
        let off = cells.count[c] - ones[c];
        if off > 0.0 {
            counts.push(off);
            rows.push(cells.active[c].clone());
            layout.push((c, false));
        }
        if ones[c] > 0.0 {
            let mut r = cells.active[c].clone();
            r.push((width - 1) as u32);
            counts.push(ones[c]);
            rows.push(r);
            layout.push((c, true));
        }
    }
    let design = Design::from_rows(n as f64, width, counts.clone(), &rows);
    let mut total = 0.0;
    let mut out = Vec::with_capacity(targets.len());
    for (s, st) in stats.iter().enumerate() {
        let mut sum = Vec::with_capacity(layout.len());
        let mut sq = Vec::with_capacity(layout.len());
        for &(c, on) in &layout {
            if on {
                sum.push(on_sum[s][c]);
                sq.push(on_sq[s][c]);
            } else {
                sum.push(st.sum[c] - on_sum[s][c]);
                sq.push(st.sumsq[c] - on_sq[s][c]);
            }
        }
        let loss = loss_from_sums(task, counts.clone(), sum, sq);
        let mut init = incumbent[s].clone();
        init.weights.push(0.0);
        let fit = coordinate_descent(
            &design,
            &loss,
            0.0,
            init,
            CANDIDATE_TOLERANCE,
            CANDIDATE_MAX_SWEEPS,
        )?;
        total += fit.objective;
        out.push(fit.coefs);
    }
    Ok((total, out))
}

fn model_from(task: GlmTask, n_classes: usize, coefs: &[Coefs]) -> GlmModel {
    GlmModel {
        task,
        n_classes,
        scores: coefs
            .iter()
            .map(|c| LinearScore { weights: c.weights.clone(), intercept: c.intercept })
            .collect(),
    }
}

/// Greedy forward selection of up to `k` patterns.
///
/// Every round fits each remaining candidate next to the chosen set and keeps
/// the best by training performance (mean log-likelihood or negative MSE),
/// ties going to the lowest pool index. The recorded metric never decreases
/// from one round to the next. The final model is refitted with `cfg`.
pub fn forward_select(
    xp: &PatternSpace,
    y: &[f64],
    k: usize,
    task: GlmTask,
    cfg: &FitConfig,
) -> Result<SelectionResult> {
    check_inputs(xp, y, k)?;
    cfg.validate()?;
    let (n_classes, targets) = score_targets(task, y)?;
    if k > xp.p {
        log::warn!("k = {k} exceeds the pool size {}; selecting the whole pool", xp.p);
    }
    let candidates = distinct_columns(xp);
    let supports: Vec<Vec<u32>> = candidates.iter().map(|&j| xp.column_support(j)).collect();
    let rounds = k.min(candidates.len());

    let null = Problem::with_design(
        task,
        n_classes,
        Design::from_rows(xp.n as f64, 0, vec![xp.n as f64], &[Vec::new()]),
        &vec![0; xp.n],
        &targets,
    );
    let mut coefs = null.null_coefs();
    let mut cells = Cells::single(xp.n);
    let mut taken = vec![false; candidates.len()];
    let mut chosen: Vec<usize> = Vec::with_capacity(rounds);
    let mut steps = Vec::with_capacity(rounds);
    let mut prev_metric = f64::NEG_INFINITY;

    for round in 1..=rounds {
        let stats: Vec<CellStats> = targets.iter().map(|t| cells.stats(t)).collect();
        let evaluated: Vec<(usize, f64, Vec<Coefs>)> = (0..candidates.len())
            .into_par_iter()
            .filter(|&c| !taken[c])
            .map(|c| {
                fit_candidate(task, xp.n, &cells, &stats, &targets, &supports[c], &coefs)
                    .map(|(f, w)| (c, f, w))
            })
            .collect::<Result<_>>()?;
        let (best, _, best_coefs) = evaluated
            .into_iter()
            .reduce(|a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
            .expect("at least one candidate remains");

        taken[best] = true;
        chosen.push(candidates[best]);
        cells = cells.split(&supports[best], (chosen.len() - 1) as u32);

        let sub = xp.select_columns(&chosen);
        let mut next = best_coefs;
        let mut metric = -objective(&model_from(task, n_classes, &next), &sub, y, 0.0)?;
        if metric < prev_metric {
            // The incumbent with the new weight at zero reproduces the
            // previous fit exactly.
            next = coefs
                .iter()
                .map(|c| {
                    let mut w = c.clone();
                    w.weights.push(0.0);
                    w
                })
                .collect();
            metric = -objective(&model_from(task, n_classes, &next), &sub, y, 0.0)?;
        }
        coefs = next;
        prev_metric = metric;
        steps.push(ForwardStep { round, pattern_index: candidates[best], metric });
        log::debug!("forward round {round}: pattern {} metric {metric}", candidates[best]);
    }

    let sub = xp.select_columns(&chosen);
    let warm = model_from(task, n_classes, &coefs);
    let model = fit_glm_from(&sub, y, task, cfg, Some(&warm))?;
    Ok(SelectionResult { chosen, model, trace: Trace::Forward(steps) })
}

/// Grouped design over a subset of columns without materializing it.
fn grouped_columns(xp: &PatternSpace, cols: &[usize]) -> (Design, Vec<u32>) {
    let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut rows: Vec<Vec<u32>> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut group_of = Vec::with_capacity(xp.n);
    for i in 0..xp.n {
        let row = xp.row(i);
        let active: Vec<u32> =
            cols.iter().enumerate().filter(|(_, &j)| row[j] == 1).map(|(q, _)| q as u32).collect();
        let g = *index.entry(active).or_insert_with_key(|a| {
            rows.push(a.clone());
            counts.push(0.0);
            (rows.len() - 1) as u32
        });
        counts[g as usize] += 1.0;
        group_of.push(g);
    }
    (Design::from_rows(xp.n as f64, cols.len(), counts, &rows), group_of)
}

/// LASSO selection: binary search on the penalty over
/// `[0, 1.05 * lambda_max]` until the bracket is narrower than `epsilon`
/// (default `lambda_max * 1e-3`). Every fit with at most `k` non-zero
/// patterns records its support and moves the upper end down; larger
/// supports move the lower end up. The recorded support is refitted without
/// the penalty.
pub fn lasso_select(
    xp: &PatternSpace,
    y: &[f64],
    k: usize,
    epsilon: Option<f64>,
    task: GlmTask,
    cfg: &FitConfig,
) -> Result<SelectionResult> {
    check_inputs(xp, y, k)?;
    cfg.validate()?;
    if let Some(e) = epsilon {
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}")));
        }
    }
    let (n_classes, targets) = score_targets(task, y)?;
    let columns = distinct_columns(xp);
    let (design, group_of) = grouped_columns(xp, &columns);
    let problem = Problem::with_design(task, n_classes, design, &group_of, &targets);
    let lambda_max = problem.lambda_max();
    let epsilon = epsilon.unwrap_or(lambda_max * 1e-3);

    let support_of = |c: &[Coefs]| -> Vec<usize> {
        (0..columns.len()).filter(|&j| c.iter().any(|s| s.weights[j] != 0.0)).collect()
    };

    let mut lo = 0.0;
    let mut hi = 1.05 * lambda_max;
    let mut warm = problem.null_coefs();
    let mut recorded: Option<(Vec<usize>, Vec<Coefs>)> = None;
    let mut visited: Vec<(f64, Vec<usize>, Vec<Coefs>)> = Vec::new();
    let mut steps = Vec::new();
    while lo + epsilon < hi {
        let mid = 0.5 * (lo + hi);
        let fit = problem.lasso(mid, warm, cfg)?;
        let coefs: Vec<Coefs> = fit.into_iter().map(|o| o.coefs).collect();
        let support = support_of(&coefs);
        steps.push(LassoStep { lambda: mid, support_size: support.len() });
        log::debug!("lasso lambda {mid}: {} non-zero patterns", support.len());
        if support.len() <= k {
            recorded = Some((support.clone(), coefs.clone()));
            visited.push((mid, support, coefs.clone()));
            hi = mid;
        } else {
            lo = mid;
        }
        warm = coefs;
    }

    let (support, coefs) = match recorded {
        Some((s, c)) if !s.is_empty() => (s, c),
        _ => visited
            .into_iter()
            .filter(|(_, s, _)| !s.is_empty())
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, s, c)| (s, c))
            .ok_or(Error::NoSupport)?,
    };

    let chosen: Vec<usize> = support.iter().map(|&j| columns[j]).collect();
    let restricted: Vec<Coefs> = coefs
        .iter()
        .map(|c| Coefs {
            weights: support.iter().map(|&j| c.weights[j]).collect(),
            intercept: c.intercept,
        })
        .collect();
    let sub = xp.select_columns(&chosen);
    let warm = model_from(task, n_classes, &restricted);
    let model = fit_glm_from(&sub, y, task, cfg, Some(&warm))?;
    Ok(SelectionResult { chosen, model, trace: Trace::Lasso(steps) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    InfoGain,
}

/// Information gain in bits of splitting binary labels `y` by column `col`.
pub fn info_gain(col: &[u8], y: &[f64]) -> f64 {
    fn entropy(pos: f64, n: f64) -> f64 {
        if n == 0.0 {
            return 0.0;
        }
        [pos / n, 1.0 - pos / n]
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }
    let n = y.len() as f64;
    let (mut n1, mut p1, mut p) = (0.0, 0.0, 0.0);
    for (&b, &v) in col.iter().zip(y) {
        p += v;
        if b == 1 {
            n1 += 1.0;
            p1 += v;
        }
    }
    let n0 = n - n1;
    let h = entropy(p, n) - (n1 / n) * entropy(p1, n1) - (n0 / n) * entropy(p - p1, n0);
    h.max(0.0)
}

/// Ranks single pattern columns by an independent heuristic, best first,
/// ties in column order. Binary 0/1 labels only.
pub fn rank_heuristic(xp: &PatternSpace, y: &[f64], heuristic: Heuristic) -> Result<Vec<usize>> {
    if xp.n != y.len() {
        return Err(Error::DimensionMismatch { expected: xp.n, got: y.len() });
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::UnsupportedTask(
            "information gain ranking needs binary 0/1 labels".into(),
        ));
    }
    let Heuristic::InfoGain = heuristic;
    let gains: Vec<f64> = (0..xp.p).map(|j| info_gain(&xp.column(j), y)).collect();
    let mut order: Vec<usize> = (0..xp.p).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    Ok(order)
}
