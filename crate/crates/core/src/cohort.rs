//! Conjunctive admission filters behind the cohort-selection panel.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datastore::{Admission, Datastore, Gender, IntervalKind};
use crate::time::Timestamp;

/// Ages above this at admission are de-identification artifacts.
pub const AGE_ARTIFACT_THRESHOLD: f64 = 120.0;
/// Age reported for such artifacts.
pub const AGE_ARTIFACT_CAP: f64 = 90.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CohortError {
    #[error("admission precedes date of birth")]
    NegativeAge,
    #[error("invalid {field} range [{min}, {max}]")]
    InvalidRange { field: &'static str, min: f64, max: f64 },
}

/// Age in years (days / 365.25) at `admittime`, with artifact ages capped.
pub fn age_at_admission(dob: Timestamp, admittime: Timestamp) -> Result<f64, CohortError> {
    if admittime < dob {
        return Err(CohortError::NegativeAge);
    }
    let years = (admittime - dob).num_seconds() as f64 / 86_400.0 / 365.25;
    Ok(if years > AGE_ARTIFACT_THRESHOLD { AGE_ARTIFACT_CAP } else { years })
}

/// Conjunction of optional constraints; an absent (or empty) field does not
/// constrain. Ranges are inclusive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSpec {
    /// Prefixes matched against the admission's seq_num = 1 ICD-9 code.
    pub primary_icd9: Option<BTreeSet<String>>,
    /// Admission matches if any intervention carries one of these labels.
    pub intervention_labels: Option<BTreeSet<String>>,
    /// Admission matches if it received any of these services.
    pub services: Option<BTreeSet<String>>,
    pub age_range: Option<[f64; 2]>,
    pub gender: Option<Gender>,
    pub los_range: Option<[f64; 2]>,
    pub died_in_hospital: Option<bool>,
}

fn nonempty(set: &Option<BTreeSet<String>>) -> Option<&BTreeSet<String>> {
    set.as_ref().filter(|s| !s.is_empty())
}

fn check_range(field: &'static str, range: Option<[f64; 2]>) -> Result<(), CohortError> {
    match range {
        Some([min, max]) if !(min <= max) => Err(CohortError::InvalidRange { field, min, max }),
        _ => Ok(()),
    }
}

fn in_range(range: Option<[f64; 2]>, v: f64) -> bool {
    range.is_none_or(|[lo, hi]| lo <= v && v <= hi)
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), CohortError> {
        check_range("age", self.age_range)?;
        check_range("los", self.los_range)
    }

    pub fn is_unconstrained(&self) -> bool {
        *self == FilterSpec::default()
    }

    /// Whether `admission` satisfies every present constraint.
    pub fn matches(&self, store: &Datastore, a: &Admission) -> bool {
        if self.died_in_hospital.is_some_and(|d| d != a.died_in_hospital()) {
            return false;
        }
        if !in_range(self.los_range, a.los_days()) {
            return false;
        }
        if self.gender.is_some() || self.age_range.is_some() {
            let Some(p) = store.patient(a.subject_id) else { return false };
            if self.gender.is_some_and(|g| g != p.gender) {
                return false;
            }
            if self.age_range.is_some() {
                match age_at_admission(p.dob, a.admittime) {
                    Ok(age) if in_range(self.age_range, age) => {}
                    _ => return false,
                }
            }
        }
        if let Some(prefixes) = nonempty(&self.primary_icd9) {
            let Some(primary) = store.primary_diagnosis(a.hadm_id) else { return false };
            if !prefixes.iter().any(|p| primary.icd9_code.starts_with(p.as_str())) {
                return false;
            }
        }
        if let Some(labels) = nonempty(&self.intervention_labels) {
            if !store
                .intervals_for_admission(a.hadm_id)
                .any(|iv| iv.kind == IntervalKind::Intervention && labels.contains(&iv.label))
            {
                return false;
            }
        }
        if let Some(services) = nonempty(&self.services) {
            if !store
                .intervals_for_admission(a.hadm_id)
                .any(|iv| iv.kind == IntervalKind::Service && services.contains(&iv.label))
            {
                return false;
            }
        }
        true
    }
}

/// All admissions satisfying `spec`, as sorted hadm_ids.
pub fn apply_filters(store: &Datastore, spec: &FilterSpec) -> Result<BTreeSet<i64>, CohortError> {
    spec.validate()?;
    Ok(store.admissions().iter().filter(|a| spec.matches(store, a)).map(|a| a.hadm_id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::{InterventionRow, ServiceRow};
    use crate::synthgen::{generate_tables, SynthConfig};
    use crate::testkit::{h, Builder};
    use crate::time;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn ts(s: &str) -> Timestamp {
        time::parse(s).unwrap()
    }

    #[test]
    fn age_examples() {
        let age = age_at_admission(ts("2000-01-01T00:00:00"), ts("2080-01-01T00:00:00")).unwrap();
        assert!((age - 80.0).abs() < 0.1);
        assert_eq!(age_at_admission(ts("2000-01-01T00:00:00"), ts("2000-01-01T00:00:00")).unwrap(), 0.0);
        assert_eq!(age_at_admission(ts("1800-01-01T00:00:00"), ts("2100-01-01T00:00:00")).unwrap(), 90.0);
        assert_eq!(
            age_at_admission(ts("2001-01-01T00:00:00"), ts("2000-01-01T00:00:00")),
            Err(CohortError::NegativeAge)
        );
    }

    #[test]
    fn ranges_validated() {
        let spec = FilterSpec { los_range: Some([5.0, 2.0]), ..Default::default() };
        assert!(matches!(spec.validate(), Err(CohortError::InvalidRange { field: "los", .. })));
        let spec = FilterSpec { age_range: Some([f64::NAN, 2.0]), ..Default::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn json_field_names() {
        let spec: FilterSpec =
            serde_json::from_str(r#"{"gender":"F","los_range":[0,1],"died_in_hospital":true,"primary_icd9":["486"]}"#)
                .unwrap();
        assert_eq!(spec.gender, Some(Gender::F));
        assert_eq!(spec.los_range, Some([0.0, 1.0]));
        assert!(serde_json::from_str::<FilterSpec>(r#"{"sex":"F"}"#).is_err());
    }

    fn set(items: &[&str]) -> Option<BTreeSet<String>> {
        Some(items.iter().map(|s| s.to_string()).collect())
    }

    /// Subject 1: 70y man, pneumonia, ventilated, died after 48h in MED.
    /// Subject 2: 40y woman, CHF, survived 5 days, CMED then SURG.
    /// Subject 3: 300y artifact (capped to 90), sepsis, survived 1 day.
    fn fixture() -> Datastore {
        let mut b = Builder::default();
        b.patient(1, Gender::M, 70).patient(2, Gender::F, 40).patient(3, Gender::F, 300);
        b.admission(10, 1, 0, 48, true).admission(20, 2, 0, 120, false).admission(30, 3, 0, 24, false);
        b.stay(100, 10, 2, 48).stay(200, 20, 1, 30).stay(300, 30, 1, 20);
        b.diagnosis(10, "486", 1).diagnosis(10, "4280", 2);
        b.diagnosis(20, "4280", 1).diagnosis(20, "486", 2);
        b.diagnosis(30, "0389", 1);
        b.t.interventions.push(InterventionRow { icustay_id: 100, label: "ventilation".into(), starttime: h(3), endtime: h(40) });
        b.t.interventions.push(InterventionRow { icustay_id: 200, label: "vasopressor".into(), starttime: h(5), endtime: h(9) });
        for (hadm, at, svc) in [(10, 0, "MED"), (20, 0, "CMED"), (20, 40, "SURG"), (30, 0, "MED")] {
            b.t.services.push(ServiceRow { hadm_id: hadm, transfertime: h(at), service: svc.into() });
        }
        b.build()
    }

    fn ids(spec: FilterSpec) -> Vec<i64> {
        apply_filters(&fixture(), &spec).unwrap().into_iter().collect()
    }

    #[test]
    fn fixture_filters() {
        assert_eq!(ids(FilterSpec::default()), vec![10, 20, 30]);
        assert_eq!(ids(FilterSpec { primary_icd9: set(&["486"]), ..Default::default() }), vec![10]);
        assert_eq!(ids(FilterSpec { primary_icd9: set(&["42", "03"]), ..Default::default() }), vec![20, 30]);
        assert_eq!(ids(FilterSpec { primary_icd9: set(&[]), ..Default::default() }), vec![10, 20, 30]);
        assert_eq!(ids(FilterSpec { intervention_labels: set(&["ventilation"]), ..Default::default() }), vec![10]);
        assert_eq!(ids(FilterSpec { services: set(&["SURG"]), ..Default::default() }), vec![20]);
        assert_eq!(ids(FilterSpec { services: set(&["MED"]), ..Default::default() }), vec![10, 30]);
        assert_eq!(ids(FilterSpec { gender: Some(Gender::F), ..Default::default() }), vec![20, 30]);
        assert_eq!(ids(FilterSpec { age_range: Some([80.0, 100.0]), ..Default::default() }), vec![30]);
        assert_eq!(ids(FilterSpec { age_range: Some([15.0, 75.0]), ..Default::default() }), vec![10, 20]);
        assert_eq!(ids(FilterSpec { los_range: Some([1.0, 2.0]), ..Default::default() }), vec![10, 30]);
        assert_eq!(ids(FilterSpec { died_in_hospital: Some(false), ..Default::default() }), vec![20, 30]);
        let both = FilterSpec { gender: Some(Gender::F), died_in_hospital: Some(false), los_range: Some([3.0, 9.0]), ..Default::default() };
        assert_eq!(ids(both), vec![20]);
        let none = FilterSpec { primary_icd9: set(&["486"]), gender: Some(Gender::F), ..Default::default() };
        assert!(ids(none).is_empty());
    }

    fn synth_store() -> &'static Datastore {
        static STORE: OnceLock<Datastore> = OnceLock::new();
        STORE.get_or_init(|| {
            let cfg = SynthConfig { n_patients: 150, seed: 4, note_rate_per_day: 0.0, ..SynthConfig::default() };
            Datastore::from_tables(generate_tables(&cfg).unwrap()).unwrap()
        })
    }

    fn arb_set(pool: &'static [&'static str]) -> impl Strategy<Value = Option<BTreeSet<String>>> {
        prop::option::of(prop::sample::subsequence(pool, 0..=pool.len()))
            .prop_map(|o| o.map(|v| v.into_iter().map(String::from).collect()))
    }

    fn arb_range(lo: f64, hi: f64) -> impl Strategy<Value = Option<[f64; 2]>> {
        prop::option::of((lo..hi, lo..hi).prop_map(|(a, b)| [a.min(b), a.max(b)]))
    }

    fn arb_spec() -> impl Strategy<Value = FilterSpec> {
        (
            arb_set(&["486", "4", "0389", "5", "431"]),
            arb_set(&["ventilation", "vasopressor"]),
            arb_set(&["MED", "SURG", "CMED", "NMED"]),
            arb_range(0.0, 100.0),
            prop::option::of(prop_oneof![Just(Gender::M), Just(Gender::F)]),
            arb_range(0.0, 20.0),
            prop::option::of(any::<bool>()),
        )
            .prop_map(|(primary_icd9, intervention_labels, services, age_range, gender, los_range, died_in_hospital)| {
                FilterSpec { primary_icd9, intervention_labels, services, age_range, gender, los_range, died_in_hospital }
            })
    }

    /// Splits a spec into one single-constraint spec per present field.
    fn atoms(spec: &FilterSpec) -> Vec<FilterSpec> {
        let d = FilterSpec::default;
        let mut out = Vec::new();
        if spec.primary_icd9.is_some() { out.push(FilterSpec { primary_icd9: spec.primary_icd9.clone(), ..d() }); }
        if spec.intervention_labels.is_some() { out.push(FilterSpec { intervention_labels: spec.intervention_labels.clone(), ..d() }); }
        if spec.services.is_some() { out.push(FilterSpec { services: spec.services.clone(), ..d() }); }
        if spec.age_range.is_some() { out.push(FilterSpec { age_range: spec.age_range, ..d() }); }
        if spec.gender.is_some() { out.push(FilterSpec { gender: spec.gender, ..d() }); }
        if spec.los_range.is_some() { out.push(FilterSpec { los_range: spec.los_range, ..d() }); }
        if spec.died_in_hospital.is_some() { out.push(FilterSpec { died_in_hospital: spec.died_in_hospital, ..d() }); }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn result_is_intersection_of_single_constraints(spec in arb_spec()) {
            let store = synth_store();
            let all: BTreeSet<i64> = store.admissions().iter().map(|a| a.hadm_id).collect();
            let expected = atoms(&spec)
                .iter()
                .map(|a| apply_filters(store, a).unwrap())
                .fold(all, |acc, s| acc.intersection(&s).copied().collect());
            prop_assert_eq!(apply_filters(store, &spec).unwrap(), expected);
        }

        #[test]
        fn adding_a_constraint_never_grows_the_cohort(spec in arb_spec(), extra in arb_spec()) {
            let store = synth_store();
            let mut tighter = spec.clone();
            if tighter.gender.is_none() { tighter.gender = extra.gender; }
            if tighter.los_range.is_none() { tighter.los_range = extra.los_range; }
            if tighter.services.is_none() { tighter.services = extra.services; }
            let loose = apply_filters(store, &spec).unwrap();
            prop_assert!(apply_filters(store, &tighter).unwrap().is_subset(&loose));
        }
    }
}
