//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export returns a JSON string. The plain `*_json` functions carry the
//! logic and are what the native tests call; the `#[wasm_bindgen]` wrappers
//! only convert errors.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use icutl_core::metrics::{auc, calibration_deciles, hosmer_lemeshow, CalibrationBin};
use icutl_core::riskmodel::{fit_platt, sigmoid};
use icutl_core::synthgen::{generate_tables, severity_trajectory, SeverityParams, SynthConfig, CASE_STUDY_HADM};
use icutl_core::timeline::{assemble_timeline, series_catalog, unknown_series};
use icutl_core::{json, rng, Datastore};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;
use wasm_bindgen::prelude::*;

pub const MAX_STEPS: usize = 5000;
pub const MAX_PATHS: usize = 50;
pub const MAX_SAMPLES: usize = 200_000;

/// Stream purpose for demo draws; distinct from every library purpose.
const DEMO_PURPOSE: u64 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum DemoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown series: {0}")]
    UnknownSeries(String),
    #[error("{0}")]
    Core(String),
}

fn case_store() -> &'static Datastore {
    static STORE: OnceLock<Datastore> = OnceLock::new();
    STORE.get_or_init(|| {
        let cfg = SynthConfig { n_patients: 0, include_case_study: true, ..SynthConfig::default() };
        Datastore::from_tables(generate_tables(&cfg).expect("case study generates")).expect("case study is valid")
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, DemoError> {
    json::to_canonical_string(value).map_err(|e| DemoError::Core(e.to_string()))
}

/// Series names available for the case-study patient, keyed by category
/// (the same shape as the service's catalog endpoint).
pub fn case_study_catalog_json() -> Result<String, DemoError> {
    let map: BTreeMap<String, Vec<String>> =
        series_catalog(case_store()).into_iter().map(|e| (e.category, e.names)).collect();
    to_json(&map)
}

/// Timeline document of the case-study admission with the given
/// comma-separated series selected.
pub fn case_study_timeline_json(series: &str) -> Result<String, DemoError> {
    let store = case_store();
    let selected: BTreeSet<String> =
        series.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    let unknown = unknown_series(store, selected.iter().map(String::as_str));
    if !unknown.is_empty() {
        return Err(DemoError::UnknownSeries(unknown.join(", ")));
    }
    let doc = assemble_timeline(store, CASE_STUDY_HADM, &selected).map_err(|e| DemoError::Core(e.to_string()))?;
    Ok(doc.to_json())
}

#[derive(Debug, Serialize)]
struct SeverityPaths {
    paths: Vec<Vec<f64>>,
    stationary_sd: f64,
    empirical_sd: f64,
}

/// AR(1) severity paths as used by the generator, plus the stationary and
/// observed spread.
pub fn severity_paths_json(phi: f64, sigma: f64, mu: f64, steps: usize, paths: usize, seed: u64) -> Result<String, DemoError> {
    if !(phi.abs() < 1.0) || !(sigma >= 0.0) || !mu.is_finite() || !sigma.is_finite() {
        return Err(DemoError::InvalidInput(format!("need |phi| < 1 and sigma >= 0, got phi={phi} sigma={sigma}")));
    }
    if steps == 0 || steps > MAX_STEPS || paths == 0 || paths > MAX_PATHS {
        return Err(DemoError::InvalidInput(format!("steps in 1..={MAX_STEPS}, paths in 1..={MAX_PATHS}")));
    }
    let params = SeverityParams { phi, sigma, mu };
    let all: Vec<Vec<f64>> = (0..paths)
        .map(|k| severity_trajectory(params, steps, &mut rng::stream(seed, DEMO_PURPOSE, k as u64)))
        .collect();
    let values: Vec<f64> = all.iter().flatten().copied().collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    to_json(&SeverityPaths { paths: all, stationary_sd: sigma / (1.0 - phi * phi).sqrt(), empirical_sd: var.sqrt() })
}

#[derive(Debug, Serialize)]
struct CalibrationSide {
    auc: f64,
    hl_chi2: Option<f64>,
    hl_p: Option<f64>,
    bins: Vec<CalibrationBin>,
}

#[derive(Debug, Serialize)]
struct CalibrationDemo {
    n: usize,
    events: usize,
    platt_a: f64,
    platt_b: f64,
    raw: CalibrationSide,
    calibrated: CalibrationSide,
}

fn side(probs: &[f64], labels: &[bool]) -> Result<CalibrationSide, DemoError> {
    let hl = hosmer_lemeshow(probs, labels, 10).ok();
    Ok(CalibrationSide {
        auc: auc(probs, labels).map_err(|e| DemoError::Core(e.to_string()))?,
        hl_chi2: hl.map(|h| h.chi2),
        hl_p: hl.map(|h| h.p_value),
        bins: calibration_deciles(probs, labels).map_err(|e| DemoError::Core(e.to_string()))?,
    })
}

/// Draws `x ~ N(0,1)` and outcomes with `P(y) = sigmoid(intercept + slope*x)`,
/// then compares the naive reading `sigmoid(x)` with its Platt recalibration.
pub fn calibration_demo_json(n: usize, slope: f64, intercept: f64, seed: u64) -> Result<String, DemoError> {
    if !(100..=MAX_SAMPLES).contains(&n) || !slope.is_finite() || !intercept.is_finite() {
        return Err(DemoError::InvalidInput(format!("n in 100..={MAX_SAMPLES} and finite coefficients")));
    }
    let mut r = rng::stream(seed, DEMO_PURPOSE, u64::MAX);
    let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
    let labels: Vec<bool> = x.iter().map(|&x| r.random::<f64>() < sigmoid(intercept + slope * x)).collect();
    let events = labels.iter().filter(|&&y| y).count();
    if events == 0 || events == n {
        return Err(DemoError::InvalidInput("all outcomes fell in one class".into()));
    }
    let platt = fit_platt(&x, &labels).map_err(|e| DemoError::Core(e.to_string()))?;
    let raw: Vec<f64> = x.iter().map(|&z| sigmoid(z)).collect();
    let calibrated: Vec<f64> = x.iter().map(|&z| platt.apply(z)).collect();
    to_json(&CalibrationDemo {
        n,
        events,
        platt_a: platt.a,
        platt_b: platt.b,
        raw: side(&raw, &labels)?,
        calibrated: side(&calibrated, &labels)?,
    })
}

fn js(r: Result<String, DemoError>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = caseStudyCatalog)]
pub fn case_study_catalog() -> Result<String, JsError> {
    js(case_study_catalog_json())
}

#[wasm_bindgen(js_name = caseStudyTimeline)]
pub fn case_study_timeline(series: &str) -> Result<String, JsError> {
    js(case_study_timeline_json(series))
}

#[wasm_bindgen(js_name = severityPaths)]
pub fn severity_paths(phi: f64, sigma: f64, mu: f64, steps: usize, paths: usize, seed: u32) -> Result<String, JsError> {
    js(severity_paths_json(phi, sigma, mu, steps, paths, u64::from(seed)))
}

#[wasm_bindgen(js_name = calibrationDemo)]
pub fn calibration_demo(n: usize, slope: f64, intercept: f64, seed: u32) -> Result<String, JsError> {
    js(calibration_demo_json(n, slope, intercept, u64::from(seed)))
}
