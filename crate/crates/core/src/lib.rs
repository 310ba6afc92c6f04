//! Integrated ICU patient timelines with horizon-indexed mortality risk.
//!
//! The crate ingests MIMIC-shaped relational tables into an immutable
//! [`Datastore`], assembles per-admission [`TimelineDocument`]s, and trains
//! fourteen class-weighted logistic-regression models (one per 12 hour
//! horizon over the first week of the first ICU stay) whose calibrated
//! predictions are rendered as one more series on the timeline.
//!
//! Module map:
//!
//! - [`datastore`]: CSV contract, validation and indices.
//! - [`synthgen`]: deterministic synthetic datasets with a latent severity process.
//! - [`cohort`]: conjunctive admission filters.
//! - [`timeline`]: document assembly and the series catalog.
//! - [`features`]: horizon cohorts, windowed features, imputation and scaling.
//! - [`riskmodel`]: logistic regression, Platt scaling, lambda selection, bundles.
//! - [`metrics`]: AUC, bootstrap intervals, calibration deciles, Hosmer-Lemeshow.

pub mod cohort;
pub mod datastore;
pub mod features;
pub mod json;
pub mod matrix;
pub mod metrics;
pub mod riskmodel;
pub mod rng;
pub mod synthgen;
pub mod time;
pub mod timeline;
pub mod vocab;

#[cfg(test)]
mod testkit;

pub use cohort::{apply_filters, FilterSpec};
pub use datastore::{Datastore, EventKind, IngestError};
pub use features::{FeatureSpec, HORIZONS};
pub use metrics::EvaluationReport;
pub use riskmodel::{HorizonModel, RiskModelBundle, TrainConfig};
pub use time::Timestamp;
pub use timeline::TimelineDocument;

