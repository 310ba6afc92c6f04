//! Horizon cohorts and windowed feature vectors over first ICU stays.
//!
//! A horizon `t` (hours) uses windows `[12k, 12(k+1))` for `k < t/12`,
//! measured from ICU intime. Each window holds the mean of every charted
//! value of each of the 29 features; the vector is window-major.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::age_at_admission;
use crate::datastore::{Datastore, Symbol};
use crate::matrix::Matrix;
use crate::time::{self, Timestamp};
use crate::vocab::{FEATURES_PER_WINDOW, FEATURE_NAMES};

pub const WINDOW_HOURS: u32 = 12;
/// Outcome must occur at least this long after the prediction time.
pub const GAP_HOURS: u32 = 12;
pub const MIN_AGE_YEARS: f64 = 15.0;
pub const HORIZONS: [u32; 14] = [12, 24, 36, 48, 60, 72, 84, 96, 108, 120, 132, 144, 156, 168];
/// Columns with a smaller training standard deviation are zeroed.
pub const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("invalid horizon {0}h (expected a multiple of 12 in 12..=168)")]
    InvalidHorizon(u32),
    #[error("stay {icustay_id} lasts {hours:.2}h, shorter than the {t_hours}h horizon")]
    StayTooShort { icustay_id: i64, hours: f64, t_hours: u32 },
    #[error("unknown ICU stay {0}")]
    UnknownStay(i64),
    #[error("no feature vectors")]
    EmptyInput,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub fn validate_horizon(t_hours: u32) -> Result<u32, FeatureError> {
    if HORIZONS.contains(&t_hours) {
        Ok(t_hours)
    } else {
        Err(FeatureError::InvalidHorizon(t_hours))
    }
}

pub fn windows_for(t_hours: u32) -> usize {
    (t_hours / WINDOW_HOURS) as usize
}

pub fn dim_for(t_hours: u32) -> usize {
    FEATURES_PER_WINDOW * windows_for(t_hours)
}

/// Ordered feature vocabulary; always the 29 fixed names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub names: Vec<String>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self { names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect() }
    }
}

impl FeatureSpec {
    /// Column names for horizon `t`: `heart_rate_w0`, ..., window-major.
    pub fn column_names(&self, t_hours: u32) -> Vec<String> {
        (0..windows_for(t_hours)).flat_map(|k| self.names.iter().map(move |n| format!("{n}_w{k}"))).collect()
    }
}

/// One row of a horizon cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CohortMember {
    pub icustay_id: i64,
    pub hadm_id: i64,
    pub subject_id: i64,
    /// In-hospital death at or after intime + t + gap.
    pub label: bool,
}

/// Patients' first ICU stays eligible at horizon `t`, sorted by icustay_id.
pub fn build_cohort(store: &Datastore, t_hours: u32) -> Result<Vec<CohortMember>, FeatureError> {
    validate_horizon(t_hours)?;
    let mut out = Vec::new();
    for p in store.patients() {
        let Some(stay) = store.first_icu_stay(p.subject_id) else { continue };
        let Some(adm) = store.admission(stay.hadm_id) else { continue };
        match age_at_admission(p.dob, adm.admittime) {
            Ok(age) if age > MIN_AGE_YEARS => {}
            _ => continue,
        }
        if stay.outtime < stay.intime + time::hours(t_hours as i64) {
            continue;
        }
        let cutoff = stay.intime + time::hours((t_hours + GAP_HOURS) as i64);
        if adm.dischtime < cutoff || adm.deathtime.is_some_and(|d| d < cutoff) {
            continue;
        }
        out.push(CohortMember {
            icustay_id: stay.icustay_id,
            hadm_id: stay.hadm_id,
            subject_id: stay.subject_id,
            label: adm.deathtime.is_some(),
        });
    }
    out.sort_by_key(|m| m.icustay_id);
    Ok(out)
}

/// Raw window means with `None` for windows without a value.
pub type RawFeatures = Vec<Option<f64>>;

fn window_index(intime: Timestamp, at: Timestamp, n_windows: usize) -> Option<usize> {
    let secs = (at - intime).num_seconds();
    if secs < 0 {
        return None;
    }
    let k = (secs / (WINDOW_HOURS as i64 * 3600)) as usize;
    (k < n_windows).then_some(k)
}

fn accumulate(sums: &mut [(f64, u32)], intime: Timestamp, values: impl Iterator<Item = (Timestamp, f64)>) {
    for (at, v) in values {
        if let Some(k) = window_index(intime, at, sums.len()) {
            sums[k].0 += v;
            sums[k].1 += 1;
        }
    }
}

/// Window means for the first `n_windows` windows of a stay, without the
/// duration check. Chart values win over lab values within a window.
fn window_means(store: &Datastore, spec: &FeatureSpec, icustay_id: i64, n_windows: usize) -> Result<RawFeatures, FeatureError> {
    let stay = store.icustay(icustay_id).ok_or(FeatureError::UnknownStay(icustay_id))?;
    let width = spec.names.len();
    let mut out = vec![None; width * n_windows];
    let mut chart = vec![(0.0, 0u32); n_windows];
    let mut lab = vec![(0.0, 0u32); n_windows];
    for (j, name) in spec.names.iter().enumerate() {
        let Some(sym): Option<Symbol> = store.lookup_symbol(name) else { continue };
        chart.fill((0.0, 0));
        lab.fill((0.0, 0));
        accumulate(&mut chart, stay.intime, store.chart_series(icustay_id, sym).map(|e| (e.charttime, e.value_num)));
        accumulate(&mut lab, stay.intime, store.lab_series(stay.hadm_id, sym).map(|e| (e.charttime, e.value_num)));
        for k in 0..n_windows {
            let (sum, n) = if chart[k].1 > 0 { chart[k] } else { lab[k] };
            if n > 0 {
                out[k * width + j] = Some(sum / n as f64);
            }
        }
    }
    Ok(out)
}

/// Raw feature vector of length `29 * t / 12` for one stay.
pub fn extract_features(
    store: &Datastore,
    icustay_id: i64,
    t_hours: u32,
    spec: &FeatureSpec,
) -> Result<RawFeatures, FeatureError> {
    validate_horizon(t_hours)?;
    let stay = store.icustay(icustay_id).ok_or(FeatureError::UnknownStay(icustay_id))?;
    let hours = stay.duration_hours();
    if hours < t_hours as f64 {
        return Err(FeatureError::StayTooShort { icustay_id, hours, t_hours });
    }
    window_means(store, spec, icustay_id, windows_for(t_hours))
}

/// Copies each feature's last observed value into later missing windows.
pub fn forward_fill(raw: &[Option<f64>], width: usize) -> RawFeatures {
    let mut out = raw.to_vec();
    for i in width..out.len() {
        if out[i].is_none() {
            out[i] = out[i - width];
        }
    }
    out
}

/// Training-split column means and population standard deviations, computed
/// after forward-fill so the mean equals that of the imputed column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit(rows: &[RawFeatures]) -> Result<Self, FeatureError> {
        let d = rows.first().ok_or(FeatureError::EmptyInput)?.len();
        let width = FEATURES_PER_WINDOW.min(d.max(1));
        let filled: Vec<RawFeatures> = rows
            .iter()
            .map(|r| {
                if r.len() != d {
                    return Err(FeatureError::DimensionMismatch { expected: d, got: r.len() });
                }
                Ok(forward_fill(r, width))
            })
            .collect::<Result<_, _>>()?;
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        let mut stds = vec![0.0; d];
        for j in 0..d {
            let (sum, count) = filled.iter().filter_map(|r| r[j]).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            if count == 0 {
                continue;
            }
            let mean = sum / count as f64;
            let ss: f64 = filled.iter().filter_map(|r| r[j]).map(|v| (v - mean) * (v - mean)).sum();
            means[j] = mean;
            stds[j] = (ss / n).sqrt();
        }
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Forward-fill, mean-impute, then z-score. The same code path serves
    /// training rows and live predictions.
    pub fn transform(&self, raw: &[Option<f64>]) -> Result<Vec<f64>, FeatureError> {
        if raw.len() != self.dim() {
            return Err(FeatureError::DimensionMismatch { expected: self.dim(), got: raw.len() });
        }
        let width = FEATURES_PER_WINDOW.min(raw.len().max(1));
        Ok(forward_fill(raw, width)
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let std = self.stds[j];
                if std < MIN_STD {
                    0.0
                } else {
                    (v.unwrap_or(self.means[j]) - self.means[j]) / std
                }
            })
            .collect())
    }
}

/// Imputes and standardizes `rows`, fitting stats unless `stats` is given.
pub fn impute_and_standardize(
    rows: &[RawFeatures],
    stats: Option<&StandardizationStats>,
) -> Result<(Matrix, StandardizationStats), FeatureError> {
    if rows.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let stats = match stats {
        Some(s) => s.clone(),
        None => StandardizationStats::fit(rows)?,
    };
    let mut data = Vec::with_capacity(rows.len() * stats.dim());
    for r in rows {
        data.extend(stats.transform(r)?);
    }
    Ok((Matrix::from_vec(rows.len(), stats.dim(), data), stats))
}

/// A horizon cohort with raw (unimputed) feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonDataset {
    pub t_hours: u32,
    pub members: Vec<CohortMember>,
    pub raw: Vec<RawFeatures>,
}

impl HorizonDataset {
    pub fn labels(&self) -> Vec<bool> {
        self.members.iter().map(|m| m.label).collect()
    }

    pub fn n_events(&self) -> usize {
        self.members.iter().filter(|m| m.label).count()
    }
}

/// Datasets for every horizon. Window means are computed once per stay at
/// the longest horizon and sliced, which yields the same values as
/// [`extract_features`].
pub fn build_all_datasets(store: &Datastore, spec: &FeatureSpec) -> Result<Vec<HorizonDataset>, FeatureError> {
    let cohorts: Vec<Vec<CohortMember>> = HORIZONS.iter().map(|&t| build_cohort(store, t)).collect::<Result<_, _>>()?;
    let max_windows = windows_for(*HORIZONS.last().expect("horizons"));
    let mut cache: std::collections::HashMap<i64, RawFeatures> = std::collections::HashMap::new();
    for m in cohorts.iter().flatten() {
        if !cache.contains_key(&m.icustay_id) {
            cache.insert(m.icustay_id, window_means(store, spec, m.icustay_id, max_windows)?);
        }
    }
    Ok(HORIZONS
        .iter()
        .zip(cohorts)
        .map(|(&t, members)| {
            let d = spec.names.len() * windows_for(t);
            let raw = members.iter().map(|m| cache[&m.icustay_id][..d].to_vec()).collect();
            HorizonDataset { t_hours: t, members, raw }
        })
        .collect())
}

pub fn build_dataset(store: &Datastore, t_hours: u32, spec: &FeatureSpec) -> Result<HorizonDataset, FeatureError> {
    let members = build_cohort(store, t_hours)?;
    let raw = members
        .iter()
        .map(|m| extract_features(store, m.icustay_id, t_hours, spec))
        .collect::<Result<_, _>>()?;
    Ok(HorizonDataset { t_hours, members, raw })
}

/// `icustay_id,label,f_0,...,f_{d-1}` with one row per member.
pub fn features_csv(members: &[CohortMember], x: &Matrix) -> String {
    let mut out = String::from("icustay_id,label");
    for j in 0..x.cols() {
        let _ = write!(out, ",f_{j}");
    }
    out.push('\n');
    for (i, m) in members.iter().enumerate() {
        let _ = write!(out, "{},{}", m.icustay_id, u8::from(m.label));
        for v in x.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
