//! Horizon-indexed mortality models: training, calibration and scoring.

mod bundle;
mod cv;
mod logreg;
mod platt;
mod train;

use thiserror::Error;

pub use bundle::{valid_bundle_id, HorizonModel, RiskModelBundle};
pub use cv::{select_lambda, stratified_folds, stratified_split, LambdaSelection};
pub use logreg::{balanced_weight, sigmoid, softplus, train_logreg, LogisticFit, LogisticProblem, SolverConfig};
pub use platt::{fit_platt, platt_probability, PlattParams};
pub use train::{
    evaluate_bundle, risk_timeline, train_all_horizons, train_horizon, HoldoutScores, HorizonDiagnostics, HorizonOutcome,
    TrainingOutcome,
};

use crate::features::FeatureError;
use crate::metrics::MetricsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskModelError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("too few rows ({0})")]
    TooFew(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bundle schema violation: {0}")]
    Schema(String),
    #[error("no horizon could be trained")]
    NoModels,
    #[error("unknown ICU stay {0}")]
    UnknownStay(i64),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    pub test_fraction: f64,
    pub bootstrap_resamples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            cv_folds: 5,
            seed: 0,
            solver: SolverConfig::default(),
            test_fraction: 0.3,
            bootstrap_resamples: crate::metrics::DEFAULT_RESAMPLES,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), RiskModelError> {
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(RiskModelError::InvalidParameter("lambda grid must be nonempty and positive".into()));
        }
        if self.cv_folds < 2 {
            return Err(RiskModelError::InvalidParameter(format!("{} folds", self.cv_folds)));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(RiskModelError::InvalidParameter(format!("test fraction {}", self.test_fraction)));
        }
        Ok(())
    }
}
