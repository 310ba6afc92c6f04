//! Serialized horizon models and their schema checks.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::platt::platt_probability;
use super::RiskModelError;
use crate::features::{dim_for, validate_horizon, FeatureSpec, StandardizationStats};
use crate::json;
use crate::matrix::dot;

/// One trained horizon: scaling statistics, weights and Platt parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "HorizonRecord", into = "HorizonRecord")]
pub struct HorizonModel {
    pub t_hours: u32,
    pub feature_names: Vec<String>,
    pub train_stats: StandardizationStats,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub lambda: f64,
}

/// Wire layout of [`HorizonModel`], with the scaling statistics inline.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HorizonRecord {
    t_hours: u32,
    feature_names: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
    weights: Vec<f64>,
    intercept: f64,
    platt_a: f64,
    platt_b: f64,
    lambda: f64,
}

impl From<HorizonRecord> for HorizonModel {
    fn from(r: HorizonRecord) -> Self {
        Self {
            t_hours: r.t_hours,
            feature_names: r.feature_names,
            train_stats: StandardizationStats { means: r.means, stds: r.stds },
            weights: r.weights,
            intercept: r.intercept,
            platt_a: r.platt_a,
            platt_b: r.platt_b,
            lambda: r.lambda,
        }
    }
}

impl From<HorizonModel> for HorizonRecord {
    fn from(m: HorizonModel) -> Self {
        Self {
            t_hours: m.t_hours,
            feature_names: m.feature_names,
            means: m.train_stats.means,
            stds: m.train_stats.stds,
            weights: m.weights,
            intercept: m.intercept,
            platt_a: m.platt_a,
            platt_b: m.platt_b,
            lambda: m.lambda,
        }
    }
}

impl HorizonModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Decision value and calibrated probability for a raw feature vector.
    pub fn predict_score(&self, raw: &[Option<f64>]) -> Result<(f64, f64), RiskModelError> {
        if raw.len() != self.dim() {
            return Err(RiskModelError::DimensionMismatch { expected: self.dim(), got: raw.len() });
        }
        let x = self.train_stats.transform(raw)?;
        Ok(self.score_standardized(&x))
    }

    /// Same as [`predict_score`](Self::predict_score) for an already
    /// standardized vector.
    pub fn score_standardized(&self, x: &[f64]) -> (f64, f64) {
        let z = dot(&self.weights, x) + self.intercept;
        (z, platt_probability(self.platt_a, self.platt_b, z))
    }

    pub fn validate(&self) -> Result<(), RiskModelError> {
        let schema = |m: String| Err(RiskModelError::Schema(format!("horizon {}: {m}", self.t_hours)));
        if validate_horizon(self.t_hours).is_err() {
            return schema("t_hours must be a multiple of 12 in 12..=168".into());
        }
        let d = dim_for(self.t_hours);
        for (name, len) in [
            ("feature_names", self.feature_names.len()),
            ("means", self.train_stats.means.len()),
            ("stds", self.train_stats.stds.len()),
            ("weights", self.weights.len()),
        ] {
            if len != d {
                return schema(format!("{name} has length {len}, expected {d}"));
            }
        }
        if self.feature_names != FeatureSpec::default().column_names(self.t_hours) {
            return schema("feature_names differ from the fixed feature layout".into());
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.weights) || !finite(&self.train_stats.means) || !finite(&self.train_stats.stds) {
            return schema("non-finite value in weights, means or stds".into());
        }
        if self.train_stats.stds.iter().any(|&s| s < 0.0) {
            return schema("negative standard deviation".into());
        }
        if !(self.intercept.is_finite() && self.platt_a.is_finite() && self.platt_b.is_finite()) {
            return schema("non-finite intercept or Platt parameter".into());
        }
        if self.platt_a > 0.0 {
            return schema("platt_a must be <= 0".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return schema("lambda must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskModelBundle {
    pub bundle_id: String,
    pub created_at: String,
    pub seed: u64,
    pub horizons: Vec<HorizonModel>,
}

/// Bundle ids become file names, so they are restricted to a safe alphabet.
pub fn valid_bundle_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl RiskModelBundle {
    /// Content-derived id: `icutl-` and the first 16 hex digits of the
    /// SHA-256 of the seed and horizon models.
    pub fn content_id(seed: u64, horizons: &[HorizonModel]) -> String {
        let body = json::to_precise_compact(&(seed, horizons)).expect("models serialize");
        let digest = Sha256::digest(body.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("icutl-{hex}")
    }

    pub fn horizon(&self, t_hours: u32) -> Option<&HorizonModel> {
        self.horizons.iter().find(|m| m.t_hours == t_hours)
    }

    pub fn validate(&self) -> Result<(), RiskModelError> {
        if !valid_bundle_id(&self.bundle_id) {
            return Err(RiskModelError::Schema(format!("invalid bundle_id {:?}", self.bundle_id)));
        }
        if self.horizons.is_empty() || self.horizons.len() > 14 {
            return Err(RiskModelError::Schema(format!("{} horizon models (expected 1..=14)", self.horizons.len())));
        }
        if !self.horizons.windows(2).all(|w| w[0].t_hours < w[1].t_hours) {
            return Err(RiskModelError::Schema("horizons must be strictly increasing".into()));
        }
        self.horizons.iter().try_for_each(HorizonModel::validate)
    }

    pub fn from_json(text: &str) -> Result<Self, RiskModelError> {
        let bundle: Self = serde_json::from_str(text).map_err(|e| RiskModelError::Schema(e.to_string()))?;
        bundle.validate()?;
        Ok(bundle)
    }

    /// Pretty JSON with sorted keys and 17 significant digits per float.
    pub fn to_json(&self) -> String {
        json::to_precise_string(self).expect("bundle serializes")
    }
}
