//! Timeline documents against counts taken straight from the raw tables.

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use icutl_core::datastore::TableSet;
use icutl_core::synthgen::{generate_tables, SynthConfig, CASE_STUDY_HADM};
use icutl_core::timeline::assemble_timeline;
use icutl_core::Datastore;
use rand::seq::IndexedRandom;
use rand::SeedableRng;

struct RawCounts {
    points: usize,
    intervals: usize,
    notes: usize,
    values: usize,
}

/// Linear scans over the source rows, no datastore indices involved.
fn raw_counts(t: &TableSet, hadm_id: i64, selected: &BTreeSet<String>) -> RawCounts {
    let adm = t.admissions.iter().find(|a| a.hadm_id == hadm_id).unwrap();
    let stays: HashSet<i64> = t.icustays.iter().filter(|s| s.hadm_id == hadm_id).map(|s| s.icustay_id).collect();
    let wanted = |sym| selected.contains(t.symbols.resolve(sym));
    RawCounts {
        points: 2 + usize::from(adm.deathtime.is_some()),
        intervals: t.interventions.iter().filter(|i| stays.contains(&i.icustay_id)).count()
            + t.transfers.iter().filter(|r| r.hadm_id == hadm_id).count()
            + t.services.iter().filter(|r| r.hadm_id == hadm_id).count(),
        notes: t.noteevents.iter().filter(|n| n.hadm_id == hadm_id).count(),
        values: t.chartevents.iter().filter(|c| stays.contains(&c.icustay_id) && wanted(c.item)).count()
            + t.labevents.iter().filter(|l| l.hadm_id == hadm_id && wanted(l.item)).count(),
    }
}

#[test]
fn documents_conserve_event_counts() {
    let cfg = SynthConfig { n_patients: 200, seed: 31, include_case_study: true, ..SynthConfig::default() };
    let tables = generate_tables(&cfg).unwrap();
    let store = Datastore::from_tables(tables.clone()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let hadms: Vec<i64> = store.admissions().iter().map(|a| a.hadm_id).collect();
    let all_items: BTreeSet<String> = store.item_names().clone();
    let some_items: BTreeSet<String> = ["wbc", "heart_rate", "lactate", "not_measured"].map(String::from).into();
    for (k, &hadm) in hadms.choose_multiple(&mut rng, 50).enumerate() {
        let selected = if k % 2 == 0 { &all_items } else { &some_items };
        let doc = assemble_timeline(&store, hadm, selected).unwrap();
        let want = raw_counts(&tables, hadm, selected);
        assert_eq!(doc.point_events.len(), want.points, "hadm {hadm}");
        assert_eq!(doc.interval_events.len(), want.intervals, "hadm {hadm}");
        assert_eq!(doc.note_events.len(), want.notes, "hadm {hadm}");
        assert_eq!(doc.series.iter().map(|s| s.points.len()).sum::<usize>(), want.values, "hadm {hadm}");
        assert_eq!(doc.series.len(), selected.len());
        for s in &doc.series {
            assert!(s.points.windows(2).all(|w| w[0].time <= w[1].time), "{} unsorted", s.name);
        }
    }
}

fn case_study_json() -> String {
    let cfg = SynthConfig { n_patients: 0, include_case_study: true, ..SynthConfig::default() };
    let store = Datastore::from_tables(generate_tables(&cfg).unwrap()).unwrap();
    let selected: BTreeSet<String> = ["wbc", "oxygen_saturation"].map(String::from).into();
    assemble_timeline(&store, CASE_STUDY_HADM, &selected).unwrap().to_json()
}

#[test]
fn case_study_document_matches_golden() {
    let json = case_study_json();
    assert_eq!(json, case_study_json());
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/case_study_timeline.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &json).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file; run with UPDATE_GOLDEN=1 to create");
    assert!(golden == json, "case-study timeline drifted from {}", path.display());

    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["series"].as_array().unwrap().len(), 2);
    let vent: Vec<_> =
        doc["interval_events"].as_array().unwrap().iter().filter(|i| i["label"] == "ventilation").collect();
    assert_eq!(vent.len(), 2);
    assert!(vent[0]["endtime"].as_str().unwrap() < vent[1]["starttime"].as_str().unwrap());
    assert!(doc["point_events"].as_array().unwrap().iter().any(|p| p["label"] == "death"));
}
