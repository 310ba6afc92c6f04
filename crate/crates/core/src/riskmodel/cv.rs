//! Stratified splitting and cross-validated choice of the L2 penalty.

use rand::seq::SliceRandom;

use super::logreg::{balanced_weight, LogisticProblem, SolverConfig};
use super::RiskModelError;
use crate::matrix::Matrix;
use crate::metrics;
use crate::rng::{self, purpose};

fn class_indices(labels: &[bool], class: bool) -> Vec<usize> {
    labels.iter().enumerate().filter(|(_, &y)| y == class).map(|(i, _)| i).collect()
}

/// Stratified train/test split; each class contributes `round(frac * n_c)`
/// rows to the test side. Both index lists are ascending.
pub fn stratified_split(labels: &[bool], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [false, true] {
        let mut idx = class_indices(labels, class);
        idx.shuffle(&mut rng::stream(seed, purpose::SPLIT, u64::from(class)));
        let n_test = (test_fraction * idx.len() as f64).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Fold id per row. Each class is shuffled and dealt round-robin; negatives
/// continue where positives stopped so fold sizes also differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    let mut offset = 0;
    for class in [true, false] {
        let mut idx = class_indices(labels, class);
        idx.shuffle(&mut rng::stream(seed, purpose::FOLDS, u64::from(class)));
        for (pos, &i) in idx.iter().enumerate() {
            fold[i] = (offset + pos) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    fold
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    pub lambda: f64,
    /// `(lambda, mean out-of-fold AUC)` in grid order.
    pub mean_auc: Vec<(f64, f64)>,
    /// Out-of-fold decision scores at the chosen lambda, one per row.
    pub oof_scores: Vec<f64>,
    /// Fits that stopped before reaching the gradient tolerance.
    pub unconverged: usize,
}

/// Picks the grid value with the best mean out-of-fold AUC (ties to the
/// smaller lambda). Each fold walks the grid from strong to weak penalty,
/// warm-starting from the previous solution.
pub fn select_lambda(
    x: &Matrix,
    labels: &[bool],
    grid: &[f64],
    folds: usize,
    solver: &SolverConfig,
    seed: u64,
) -> Result<LambdaSelection, RiskModelError> {
    if grid.is_empty() {
        return Err(RiskModelError::InvalidParameter("empty lambda grid".into()));
    }
    if folds < 2 {
        return Err(RiskModelError::InvalidParameter(format!("{folds} folds")));
    }
    let fold_of = stratified_folds(labels, folds, seed);
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));

    let mut oof = vec![vec![0.0; labels.len()]; grid.len()];
    let mut auc_sum = vec![0.0; grid.len()];
    let mut auc_count = vec![0usize; grid.len()];
    let mut unconverged = 0;
    for f in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
        let valid: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
        let y_train: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let y_valid: Vec<bool> = valid.iter().map(|&i| labels[i]).collect();
        let problem = LogisticProblem::new(&x.select_rows(&train), &y_train, balanced_weight(&y_train)?)?;
        let x_valid = x.select_rows(&valid);
        let mut warm: Option<Vec<f64>> = None;
        for &g in &order {
            let fit = problem.fit(grid[g], solver, warm.as_deref())?;
            unconverged += usize::from(!fit.converged);
            let scores: Vec<f64> = (0..valid.len()).map(|r| fit.decision(x_valid.row(r))).collect();
            for (&i, &s) in valid.iter().zip(&scores) {
                oof[g][i] = s;
            }
            if let Ok(a) = metrics::auc(&scores, &y_valid) {
                auc_sum[g] += a;
                auc_count[g] += 1;
            }
            warm = Some(fit.theta());
        }
    }
    let mean_auc: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(g, &l)| (l, if auc_count[g] > 0 { auc_sum[g] / auc_count[g] as f64 } else { f64::NAN }))
        .collect();
    let best = (0..grid.len())
        .filter(|&g| auc_count[g] > 0)
        .max_by(|&a, &b| mean_auc[a].1.total_cmp(&mean_auc[b].1).then(grid[b].total_cmp(&grid[a])))
        .ok_or(RiskModelError::SingleClass)?;
    Ok(LambdaSelection { lambda: grid[best], mean_auc, oof_scores: std::mem::take(&mut oof[best]), unconverged })
}
