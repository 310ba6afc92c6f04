//! HTTP routes. Every body is canonical JSON (keys sorted), so repeated
//! reads are byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path as FsPath;
use std::sync::Arc;

use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use icutl_core::cohort::{age_at_admission, apply_filters, FilterSpec};
use icutl_core::datastore::{Admission, Datastore, Gender};
use icutl_core::riskmodel::{risk_timeline, RiskModelBundle, RiskModelError};
use icutl_core::time::{serde_ts, serde_ts_opt, Timestamp};
use icutl_core::timeline::{assemble_timeline, series_catalog, unknown_series, RiskSeries};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::ApiError;
use crate::state::AppState;

pub const DEFAULT_PAGE_LIMIT: usize = 100;
pub const MAX_PAGE_LIMIT: usize = 10_000;

type Shared = State<Arc<AppState>>;
type ApiResult = Result<Response, ApiError>;

pub fn router(state: Arc<AppState>, static_dir: Option<&FsPath>) -> Router {
    let api = Router::new()
        .route("/api/admissions", get(list_admissions))
        .route("/api/admissions/{hadm_id}/timeline", get(timeline))
        .route("/api/subjects/{subject_id}", get(subject))
        .route("/api/catalog/series", get(catalog))
        .route("/api/models", get(list_models).post(import_model))
        .route("/api/models/{bundle_id}/metrics", get(model_metrics));
    let api = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    api.with_state(state)
}

fn json<T: Serialize>(value: &T) -> Response {
    match icutl_core::json::to_canonical_string(value) {
        Ok(body) => ([(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => ApiError::internal(e.to_string()).into_response(),
    }
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

/// Query parameters of the admissions list. List-valued filters are comma
/// separated; an empty list does not constrain.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissionQuery {
    pub icd9: Option<String>,
    pub interventions: Option<String>,
    pub services: Option<String>,
    pub age_min: Option<f64>,
    pub age_max: Option<f64>,
    pub gender: Option<Gender>,
    pub los_min: Option<f64>,
    pub los_max: Option<f64>,
    pub died: Option<bool>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

fn comma_set(s: &Option<String>) -> Option<BTreeSet<String>> {
    s.as_ref().map(|s| s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect())
}

fn range(min: Option<f64>, max: Option<f64>) -> Option<[f64; 2]> {
    (min.is_some() || max.is_some()).then(|| [min.unwrap_or(f64::NEG_INFINITY), max.unwrap_or(f64::INFINITY)])
}

impl AdmissionQuery {
    pub fn filter_spec(&self) -> FilterSpec {
        FilterSpec {
            primary_icd9: comma_set(&self.icd9),
            intervention_labels: comma_set(&self.interventions),
            services: comma_set(&self.services),
            age_range: range(self.age_min, self.age_max),
            gender: self.gender,
            los_range: range(self.los_min, self.los_max),
            died_in_hospital: self.died,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionSummary {
    pub hadm_id: i64,
    pub subject_id: i64,
    pub age: Option<f64>,
    pub gender: Option<Gender>,
    pub admission_diagnosis: String,
    #[serde(with = "serde_ts")]
    pub admittime: Timestamp,
    pub los_days: f64,
    pub died: bool,
}

impl AdmissionSummary {
    pub fn of(store: &Datastore, a: &Admission) -> Self {
        let patient = store.patient(a.subject_id);
        Self {
            hadm_id: a.hadm_id,
            subject_id: a.subject_id,
            age: patient.and_then(|p| age_at_admission(p.dob, a.admittime).ok()),
            gender: patient.map(|p| p.gender),
            admission_diagnosis: a.admission_diagnosis.clone(),
            admittime: a.admittime,
            los_days: a.los_days(),
            died: a.died_in_hospital(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionPage {
    pub total: usize,
    pub limit: usize,
    pub offset: usize,
    pub items: Vec<AdmissionSummary>,
}

async fn list_admissions(State(app): Shared, query: Result<Query<AdmissionQuery>, QueryRejection>) -> ApiResult {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let limit = q.limit.unwrap_or(DEFAULT_PAGE_LIMIT);
    if limit > MAX_PAGE_LIMIT {
        return Err(ApiError::bad_request(format!("limit must be at most {MAX_PAGE_LIMIT}")));
    }
    let offset = q.offset.unwrap_or(0);
    let ids = apply_filters(&app.store, &q.filter_spec())?;
    let items = ids
        .iter()
        .skip(offset)
        .take(limit)
        .map(|&id| AdmissionSummary::of(&app.store, app.store.admission(id).expect("filtered id exists")))
        .collect();
    Ok(json(&AdmissionPage { total: ids.len(), limit, offset, items }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectAttributes {
    pub subject_id: i64,
    pub gender: Gender,
    #[serde(with = "serde_ts")]
    pub dob: Timestamp,
    #[serde(with = "serde_ts_opt")]
    pub dod: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectView {
    pub attributes: SubjectAttributes,
    /// Ordered by admittime; the first is the default admission.
    pub admissions: Vec<AdmissionSummary>,
}

fn path_id(p: Result<Path<i64>, PathRejection>) -> Result<i64, ApiError> {
    p.map(|Path(id)| id).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn subject(State(app): Shared, id: Result<Path<i64>, PathRejection>) -> ApiResult {
    let id = path_id(id)?;
    let p = app
        .store
        .patient(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownSubject", format!("unknown subject {id}")))?;
    let view = SubjectView {
        attributes: SubjectAttributes { subject_id: p.subject_id, gender: p.gender, dob: p.dob, dod: p.dod },
        admissions: app.store.admissions_for_subject(id).into_iter().map(|a| AdmissionSummary::of(&app.store, a)).collect(),
    };
    Ok(json(&view))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineQuery {
    pub series: Option<String>,
}

/// Calibrated risk for every ICU stay of the admission under one bundle.
pub fn admission_risk(bundle: &RiskModelBundle, store: &Datastore, hadm_id: i64) -> Result<RiskSeries, RiskModelError> {
    let mut points = Vec::new();
    for stay in store.icustays_for_admission(hadm_id) {
        points.extend(risk_timeline(bundle, store, stay.icustay_id)?.points);
    }
    Ok(RiskSeries { model_id: bundle.bundle_id.clone(), points })
}

async fn timeline(
    State(app): Shared,
    id: Result<Path<i64>, PathRejection>,
    query: Result<Query<TimelineQuery>, QueryRejection>,
) -> ApiResult {
    let hadm_id = path_id(id)?;
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let selected = comma_set(&q.series).unwrap_or_default();
    let mut doc = assemble_timeline(&app.store, hadm_id, &selected)?;
    let unknown = unknown_series(&app.store, selected.iter().map(String::as_str));
    if !unknown.is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "UnknownSeriesName",
            format!("unknown series: {}", unknown.join(", ")),
        ));
    }
    for bundle in app.models.snapshot().iter() {
        doc.risk_series.push(admission_risk(bundle, &app.store, hadm_id)?);
    }
    Ok(json(&doc))
}

async fn catalog(State(app): Shared) -> Response {
    let map: BTreeMap<String, Vec<String>> =
        series_catalog(&app.store).into_iter().map(|e| (e.category, e.names)).collect();
    json(&map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelListing {
    pub bundle_id: String,
    pub created_at: String,
    pub seed: u64,
    pub horizons: Vec<u32>,
}

async fn list_models(State(app): Shared) -> Response {
    let list: Vec<ModelListing> = app
        .models
        .snapshot()
        .iter()
        .map(|b| ModelListing {
            bundle_id: b.bundle_id.clone(),
            created_at: b.created_at.clone(),
            seed: b.seed,
            horizons: b.horizons.iter().map(|m| m.t_hours).collect(),
        })
        .collect();
    json(&list)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportResponse {
    pub bundle_id: String,
}

async fn import_model(State(app): Shared, body: String) -> ApiResult {
    let bundle = RiskModelBundle::from_json(&body)?;
    let bundle_id = app.models.import(bundle)?;
    let mut resp = json(&ImportResponse { bundle_id });
    *resp.status_mut() = StatusCode::CREATED;
    Ok(resp)
}

async fn model_metrics(State(app): Shared, Path(bundle_id): Path<String>) -> ApiResult {
    let bundle = app
        .models
        .get(&bundle_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownModel", format!("unknown bundle {bundle_id}")))?;
    let store = app.clone();
    let report = tokio::task::spawn_blocking(move || store.metrics(&bundle))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(json(&*report))
}
