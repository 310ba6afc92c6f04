//! End-to-end training over all horizons, bundle evaluation and risk series.

use super::bundle::{HorizonModel, RiskModelBundle};
use super::cv::{select_lambda, stratified_split};
use super::logreg::{balanced_weight, LogisticProblem};
use super::platt::fit_platt;
use super::{RiskModelError, TrainConfig};
use crate::datastore::Datastore;
use crate::features::{
    build_all_datasets, build_dataset, extract_features, impute_and_standardize, FeatureSpec, HorizonDataset,
};
use crate::metrics::{evaluate_horizon, EvaluationReport, HorizonMetrics, SkippedHorizon};
use crate::time;
use crate::timeline::{RiskPoint, RiskSeries};

/// Test-split scores kept for checks that need more than the report.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutScores {
    pub t_hours: u32,
    pub labels: Vec<bool>,
    pub decision: Vec<f64>,
    pub calibrated: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonDiagnostics {
    pub t_hours: u32,
    pub lambda: f64,
    pub cv_auc: Vec<(f64, f64)>,
    /// Cross-validation fits that hit the iteration cap or stalled.
    pub cv_unconverged: usize,
    pub final_converged: bool,
    pub final_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonOutcome {
    pub model: HorizonModel,
    pub metrics: HorizonMetrics,
    pub holdout: HoldoutScores,
    pub diagnostics: HorizonDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub bundle: RiskModelBundle,
    pub report: EvaluationReport,
    pub holdout: Vec<HoldoutScores>,
    pub diagnostics: Vec<HorizonDiagnostics>,
}

fn horizon_seed(seed: u64, t_hours: u32) -> u64 {
    seed ^ (u64::from(t_hours) << 32)
}

fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Split, select lambda, fit, calibrate on out-of-fold scores and evaluate
/// on the held-out split.
pub fn train_horizon(ds: &HorizonDataset, cfg: &TrainConfig) -> Result<HorizonOutcome, RiskModelError> {
    cfg.validate()?;
    let t = ds.t_hours;
    let labels = ds.labels();
    balanced_weight(&labels)?;
    let seed = horizon_seed(cfg.seed, t);
    let (train_idx, test_idx) = stratified_split(&labels, cfg.test_fraction, seed);
    let y_train = pick(&labels, &train_idx);
    let y_test = pick(&labels, &test_idx);
    let pos_train = y_train.iter().filter(|&&y| y).count();
    if pos_train < cfg.cv_folds || y_train.len() - pos_train < cfg.cv_folds {
        return Err(RiskModelError::TooFew(pos_train.min(y_train.len() - pos_train)));
    }
    let (x_train, stats) = impute_and_standardize(&pick(&ds.raw, &train_idx), None)?;
    let (x_test, _) = impute_and_standardize(&pick(&ds.raw, &test_idx), Some(&stats))?;

    let selection = select_lambda(&x_train, &y_train, &cfg.lambda_grid, cfg.cv_folds, &cfg.solver, seed)?;
    let fit = LogisticProblem::new(&x_train, &y_train, balanced_weight(&y_train)?)?.fit(
        selection.lambda,
        &cfg.solver,
        None,
    )?;
    let platt = fit_platt(&selection.oof_scores, &y_train)?;
    let model = HorizonModel {
        t_hours: t,
        feature_names: FeatureSpec::default().column_names(t),
        train_stats: stats,
        weights: fit.weights.clone(),
        intercept: fit.intercept,
        platt_a: platt.a,
        platt_b: platt.b,
        lambda: selection.lambda,
    };
    let (decision, calibrated): (Vec<f64>, Vec<f64>) =
        (0..x_test.rows()).map(|i| model.score_standardized(x_test.row(i))).unzip();
    let metrics =
        evaluate_horizon(t, (ds.members.len(), ds.n_events()), &calibrated, &y_test, cfg.bootstrap_resamples, cfg.seed)?;
    Ok(HorizonOutcome {
        model,
        metrics,
        holdout: HoldoutScores { t_hours: t, labels: y_test, decision, calibrated },
        diagnostics: HorizonDiagnostics {
            t_hours: t,
            lambda: selection.lambda,
            cv_auc: selection.mean_auc,
            cv_unconverged: selection.unconverged,
            final_converged: fit.converged,
            final_iterations: fit.iterations,
        },
    })
}

/// Trains every horizon that has enough support of both classes. Horizons
/// that cannot be trained are listed in the report instead of failing.
pub fn train_all_horizons(
    store: &Datastore,
    cfg: &TrainConfig,
    created_at: &str,
) -> Result<TrainingOutcome, RiskModelError> {
    cfg.validate()?;
    let datasets = build_all_datasets(store, &FeatureSpec::default())?;
    let mut models = Vec::new();
    let mut report = EvaluationReport::default();
    let mut holdout = Vec::new();
    let mut diagnostics = Vec::new();
    for ds in &datasets {
        match train_horizon(ds, cfg) {
            Ok(out) => {
                models.push(out.model);
                report.horizons.push(out.metrics);
                holdout.push(out.holdout);
                diagnostics.push(out.diagnostics);
            }
            Err(e) => report.skipped.push(SkippedHorizon { t_hours: ds.t_hours, reason: e.to_string() }),
        }
    }
    if models.is_empty() {
        return Err(RiskModelError::NoModels);
    }
    let bundle = RiskModelBundle {
        bundle_id: RiskModelBundle::content_id(cfg.seed, &models),
        created_at: created_at.to_string(),
        seed: cfg.seed,
        horizons: models,
    };
    Ok(TrainingOutcome { bundle, report, holdout, diagnostics })
}

/// Scores each bundle model on its full horizon cohort in `store`.
pub fn evaluate_bundle(
    bundle: &RiskModelBundle,
    store: &Datastore,
    n_resamples: usize,
    seed: u64,
) -> Result<EvaluationReport, RiskModelError> {
    let spec = FeatureSpec::default();
    let mut report = EvaluationReport::default();
    for model in &bundle.horizons {
        let ds = build_dataset(store, model.t_hours, &spec)?;
        let labels = ds.labels();
        let probs: Vec<f64> =
            ds.raw.iter().map(|r| model.predict_score(r).map(|s| s.1)).collect::<Result<_, _>>()?;
        match evaluate_horizon(model.t_hours, (ds.members.len(), ds.n_events()), &probs, &labels, n_resamples, seed) {
            Ok(m) => report.horizons.push(m),
            Err(e) => report.skipped.push(SkippedHorizon { t_hours: model.t_hours, reason: e.to_string() }),
        }
    }
    Ok(report)
}

/// Calibrated risk at `intime + t` for every bundle horizon `t` the stay has
/// reached.
pub fn risk_timeline(bundle: &RiskModelBundle, store: &Datastore, icustay_id: i64) -> Result<RiskSeries, RiskModelError> {
    let stay = store.icustay(icustay_id).ok_or(RiskModelError::UnknownStay(icustay_id))?;
    let spec = FeatureSpec::default();
    let elapsed = stay.duration_hours();
    let mut points = Vec::new();
    for model in bundle.horizons.iter().filter(|m| f64::from(m.t_hours) <= elapsed) {
        let raw = extract_features(store, icustay_id, model.t_hours, &spec)?;
        let (_, p) = model.predict_score(&raw)?;
        points.push(RiskPoint { time: stay.intime + time::hours(i64::from(model.t_hours)), probability: p });
    }
    Ok(RiskSeries { model_id: bundle.bundle_id.clone(), points })
}
