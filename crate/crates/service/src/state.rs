//! Shared server state: the immutable datastore and a swappable bundle set.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::http::StatusCode;
use icutl_core::metrics::DEFAULT_RESAMPLES;
use icutl_core::riskmodel::{evaluate_bundle, RiskModelBundle};
use icutl_core::{Datastore, EvaluationReport};

use crate::config::ServiceConfig;
use crate::error::{ApiError, CliError};

/// Loaded bundles, ordered by bundle_id. Never mutated once published.
pub type BundleSet = Arc<Vec<Arc<RiskModelBundle>>>;

pub struct ModelRegistry {
    dir: PathBuf,
    current: RwLock<BundleSet>,
    /// Serializes imports so the duplicate check and the swap are atomic.
    import_lock: Mutex<()>,
}

impl ModelRegistry {
    /// Loads every `*.json` bundle in `dir`, creating the directory if needed.
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| CliError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut bundles = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
            let bundle = RiskModelBundle::from_json(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            bundles.push(Arc::new(bundle));
        }
        bundles.sort_by(|a, b| a.bundle_id.cmp(&b.bundle_id));
        bundles.dedup_by(|a, b| a.bundle_id == b.bundle_id);
        Ok(Self { dir: dir.to_path_buf(), current: RwLock::new(Arc::new(bundles)), import_lock: Mutex::new(()) })
    }

    pub fn snapshot(&self) -> BundleSet {
        self.current.read().expect("registry lock").clone()
    }

    pub fn get(&self, bundle_id: &str) -> Option<Arc<RiskModelBundle>> {
        self.snapshot().iter().find(|b| b.bundle_id == bundle_id).cloned()
    }

    /// Validates, persists and publishes `bundle`.
    pub fn import(&self, bundle: RiskModelBundle) -> Result<String, ApiError> {
        bundle.validate()?;
        let _guard = self.import_lock.lock().expect("import lock");
        let old = self.snapshot();
        if old.iter().any(|b| b.bundle_id == bundle.bundle_id) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "Duplicate",
                format!("bundle {} already loaded", bundle.bundle_id),
            ));
        }
        let path = self.dir.join(format!("{}.json", bundle.bundle_id));
        let tmp = self.dir.join(format!(".{}.json.tmp", bundle.bundle_id));
        std::fs::write(&tmp, bundle.to_json())
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|e| ApiError::internal(format!("cannot persist bundle: {e}")))?;
        let id = bundle.bundle_id.clone();
        let mut next: Vec<_> = old.iter().cloned().collect();
        next.push(Arc::new(bundle));
        next.sort_by(|a, b| a.bundle_id.cmp(&b.bundle_id));
        *self.current.write().expect("registry lock") = Arc::new(next);
        Ok(id)
    }
}

pub struct AppState {
    pub store: Arc<Datastore>,
    pub models: ModelRegistry,
    /// Per-bundle evaluation reports; deterministic, so caching is invisible.
    metrics_cache: Mutex<HashMap<String, Arc<EvaluationReport>>>,
    pub bootstrap_resamples: usize,
    pub evaluation_seed: u64,
}

impl AppState {
    pub fn new(store: Datastore, models: ModelRegistry) -> Self {
        Self {
            store: Arc::new(store),
            models,
            metrics_cache: Mutex::new(HashMap::new()),
            bootstrap_resamples: DEFAULT_RESAMPLES,
            evaluation_seed: 0,
        }
    }

    pub fn load(cfg: &ServiceConfig) -> Result<Self, CliError> {
        let store = Datastore::ingest(&cfg.data_dir)?;
        let models = ModelRegistry::open(&cfg.models_dir)?;
        Ok(Self::new(store, models))
    }

    pub fn metrics(&self, bundle: &RiskModelBundle) -> Result<Arc<EvaluationReport>, ApiError> {
        if let Some(r) = self.metrics_cache.lock().expect("cache lock").get(&bundle.bundle_id) {
            return Ok(r.clone());
        }
        let report = Arc::new(evaluate_bundle(bundle, &self.store, self.bootstrap_resamples, self.evaluation_seed)?);
        self.metrics_cache.lock().expect("cache lock").insert(bundle.bundle_id.clone(), report.clone());
        Ok(report)
    }
}
