//! Per-admission timeline documents and the series catalog.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cohort::age_at_admission;
use crate::datastore::{Datastore, Gender, IntervalEvent, QueryError};
use crate::json;
use crate::time::{serde_ts, Timestamp};
use crate::vocab::{categories_for, CATEGORIES, OTHER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectAttributes {
    pub subject_id: i64,
    pub gender: Gender,
    /// Years at admission; absent when the recorded birth date is later.
    pub age: Option<f64>,
    pub admission_diagnosis: String,
    #[serde(with = "serde_ts")]
    pub admittime: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEvent {
    #[serde(with = "serde_ts")]
    pub time: Timestamp,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteMarker {
    #[serde(with = "serde_ts")]
    pub time: Timestamp,
    pub category: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuePoint {
    #[serde(with = "serde_ts")]
    pub time: Timestamp,
    pub value: f64,
    pub tooltip: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSeries {
    pub name: String,
    pub categories: Vec<String>,
    pub unit: String,
    pub points: Vec<ValuePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    #[serde(with = "serde_ts")]
    pub time: Timestamp,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSeries {
    pub model_id: String,
    pub points: Vec<RiskPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineDocument {
    pub hadm_id: i64,
    pub subject_attributes: SubjectAttributes,
    pub point_events: Vec<PointEvent>,
    pub interval_events: Vec<IntervalEvent>,
    pub note_events: Vec<NoteMarker>,
    pub series: Vec<ValueSeries>,
    pub risk_series: Vec<RiskSeries>,
}

impl TimelineDocument {
    /// Compact JSON with alphabetically ordered keys.
    pub fn to_json(&self) -> String {
        json::to_canonical_string(self).expect("document serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub category: String,
    pub names: Vec<String>,
}

/// Every item name in the store grouped by category, in the fixed category
/// order followed by "Other". Names are sorted within a category and may
/// appear under more than one.
pub fn series_catalog(store: &Datastore) -> Vec<CatalogEntry> {
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for name in store.item_names() {
        for cat in categories_for(name) {
            groups.entry(cat).or_default().push(name.clone());
        }
    }
    CATEGORIES
        .iter()
        .chain(std::iter::once(&OTHER))
        .filter_map(|cat| groups.remove(cat).map(|names| CatalogEntry { category: cat.to_string(), names }))
        .collect()
}

/// Requested names the store has never seen, in request order.
pub fn unknown_series<'a>(store: &Datastore, names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    names.into_iter().filter(|n| !store.item_names().contains(*n)).map(str::to_string).collect()
}

fn value_series(store: &Datastore, hadm_id: i64, name: &str) -> ValueSeries {
    let mut points: Vec<(Timestamp, u8, usize, ValuePoint)> = Vec::new();
    let mut unit = None;
    if let Some(sym) = store.lookup_symbol(name) {
        for stay in store.icustays_for_admission(hadm_id) {
            for (k, e) in store.chart_series(stay.icustay_id, sym).enumerate() {
                let u = store.symbol(e.unit).to_string();
                unit.get_or_insert_with(|| u.clone());
                let tooltip = BTreeMap::from([
                    ("icustay_id".to_string(), stay.icustay_id.to_string()),
                    ("source".to_string(), "chart".to_string()),
                    ("unit".to_string(), u),
                ]);
                points.push((e.charttime, 0, k, ValuePoint { time: e.charttime, value: e.value_num, tooltip }));
            }
        }
        for (k, e) in store.lab_series(hadm_id, sym).enumerate() {
            let u = store.symbol(e.unit).to_string();
            unit.get_or_insert_with(|| u.clone());
            let tooltip = BTreeMap::from([
                ("fluid".to_string(), store.symbol(e.fluid).to_string()),
                ("source".to_string(), "lab".to_string()),
                ("unit".to_string(), u),
            ]);
            points.push((e.charttime, 1, k, ValuePoint { time: e.charttime, value: e.value_num, tooltip }));
        }
    }
    points.sort_by_key(|p| (p.0, p.1, p.2));
    ValueSeries {
        name: name.to_string(),
        categories: categories_for(name).into_iter().map(str::to_string).collect(),
        unit: unit.unwrap_or_default(),
        points: points.into_iter().map(|p| p.3).collect(),
    }
}

/// Integrates all events of one admission. `selected_series` picks the value
/// series; names without data yield empty series. Risk series are left
/// empty for the caller to fill.
pub fn assemble_timeline(
    store: &Datastore,
    hadm_id: i64,
    selected_series: &BTreeSet<String>,
) -> Result<TimelineDocument, QueryError> {
    let adm = store.admission(hadm_id).ok_or(QueryError::UnknownAdmission(hadm_id))?;
    let patient = store.patient(adm.subject_id);
    let subject_attributes = SubjectAttributes {
        subject_id: adm.subject_id,
        gender: patient.map(|p| p.gender).unwrap_or(Gender::M),
        age: patient.and_then(|p| age_at_admission(p.dob, adm.admittime).ok()),
        admission_diagnosis: adm.admission_diagnosis.clone(),
        admittime: adm.admittime,
    };
    let mut point_events = vec![
        PointEvent { time: adm.admittime, label: "admission".into() },
        PointEvent { time: adm.dischtime, label: "discharge".into() },
    ];
    if let Some(d) = adm.deathtime {
        point_events.push(PointEvent { time: d, label: "death".into() });
    }
    Ok(TimelineDocument {
        hadm_id,
        subject_attributes,
        point_events,
        interval_events: store.intervals_for_admission(hadm_id).cloned().collect(),
        note_events: store
            .notes_for_admission(hadm_id)
            .map(|n| NoteMarker { time: n.charttime, category: n.category.clone(), text: n.text.clone() })
            .collect(),
        series: selected_series.iter().map(|name| value_series(store, hadm_id, name)).collect(),
        risk_series: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{h, Builder};

    fn names(entry: &CatalogEntry) -> Vec<&str> {
        entry.names.iter().map(String::as_str).collect()
    }

    #[test]
    fn catalog_examples() {
        let mut b = Builder::default();
        b.patient(1, Gender::M, 50).admission(10, 1, 0, 50, false).stay(100, 10, 0, 40);
        b.chart(100, h(1), "heart_rate", 80.0);
        let cat = series_catalog(&b.build());
        assert_eq!(cat.len(), 1);
        assert_eq!(cat[0].category, "Vitals");
        assert_eq!(names(&cat[0]), ["heart_rate"]);

        b.chart(100, h(2), "oxygen_saturation", 95.0).lab(10, h(3), "troponin", 0.1);
        let cat = series_catalog(&b.build());
        let holding: Vec<&str> =
            cat.iter().filter(|e| e.names.iter().any(|n| n == "oxygen_saturation")).map(|e| e.category.as_str()).collect();
        assert_eq!(holding, ["Vitals", "Respiratory"]);
        assert_eq!(cat.last().unwrap().category, "Other");
        assert_eq!(names(cat.last().unwrap()), ["troponin"]);
    }

    #[test]
    fn empty_admission_has_two_points() {
        let mut b = Builder::default();
        b.patient(1, Gender::F, 50).admission(10, 1, 0, 50, false);
        let store = b.build();
        let doc = assemble_timeline(&store, 10, &BTreeSet::new()).unwrap();
        assert_eq!(doc.point_events.len(), 2);
        assert!(doc.interval_events.is_empty() && doc.note_events.is_empty() && doc.series.is_empty());
        assert_eq!(assemble_timeline(&store, 11, &BTreeSet::new()), Err(QueryError::UnknownAdmission(11)));
    }

    #[test]
    fn series_merge_sources_with_tooltips() {
        let mut b = Builder::default();
        b.patient(1, Gender::F, 50).admission(10, 1, 0, 50, true).stay(100, 10, 0, 40);
        b.lab(10, h(5), "wbc", 12.0).chart(100, h(5), "wbc", 11.0).chart(100, h(2), "wbc", 9.0);
        let store = b.build();
        let selected: BTreeSet<String> = ["wbc", "lactate"].map(String::from).into();
        let doc = assemble_timeline(&store, 10, &selected).unwrap();
        assert_eq!(doc.point_events.iter().map(|p| p.label.as_str()).collect::<Vec<_>>(), ["admission", "discharge", "death"]);
        let wbc = doc.series.iter().find(|s| s.name == "wbc").unwrap();
        assert_eq!(wbc.points.iter().map(|p| p.value).collect::<Vec<_>>(), [9.0, 11.0, 12.0]);
        assert_eq!(wbc.points[2].tooltip["fluid"], "Blood");
        assert_eq!(wbc.categories, ["Hematology"]);
        let lactate = doc.series.iter().find(|s| s.name == "lactate").unwrap();
        assert!(lactate.points.is_empty());
        assert_eq!(doc.to_json(), assemble_timeline(&store, 10, &selected).unwrap().to_json());
        assert_eq!(unknown_series(&store, ["wbc", "nope"]), ["nope"]);
    }
}
