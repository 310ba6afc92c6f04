use super::*;
use crate::datastore::{Datastore, ALL_TABLES};
use crate::vocab::FEATURE_NAMES;
use rand::SeedableRng;

fn small(n: usize, seed: u64) -> SynthConfig {
    SynthConfig { n_patients: n, seed, ..SynthConfig::default() }
}

fn death_rate(t: &TableSet) -> (usize, usize) {
    (t.admissions.iter().filter(|a| a.deathtime.is_some()).count(), t.admissions.len())
}

#[test]
fn degenerate_trajectories() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let s = severity_trajectory(SeverityParams { phi: 1.0, sigma: 0.0, mu: -0.7 }, 50, &mut rng);
    assert!(s.iter().all(|&v| v == -0.7));
    let s = severity_trajectory(SeverityParams { phi: 0.0, sigma: 0.0, mu: 2.0 }, 50, &mut rng);
    assert_eq!(s.len(), 50);
    assert!(s.iter().all(|&v| v == 2.0));
}

#[test]
fn stationary_variance_matches_ar1() {
    let params = SeverityParams { phi: 0.8, sigma: 1.0, mu: 0.0 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let n = 100_000;
    let late: Vec<f64> = (0..n).map(|_| *severity_trajectory(params, 60, &mut rng).last().unwrap()).collect();
    let mean = late.iter().sum::<f64>() / n as f64;
    let var = late.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let expected = 1.0 / (1.0 - 0.64);
    assert!((var / expected - 1.0).abs() < 0.05, "var {var} vs {expected}");
}

#[test]
fn death_rate_quadrature_matches_monte_carlo() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for a in [-4.0, -2.0, 0.0, 1.5] {
        let n = 400_000;
        let mc = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigmoid(a + KAPPA * z)
            })
            .sum::<f64>()
            / n as f64;
        assert!((expected_death_rate(a) - mc).abs() < 2e-3, "a={a}");
    }
    // symmetric link: E[sigmoid(KAPPA Z)] = 1/2
    assert!((expected_death_rate(0.0) - 0.5).abs() < 1e-12);
}

#[test]
fn intercept_inverts_rate() {
    for rate in [0.01, 0.15, 0.18, 0.5, 0.8] {
        let a = mortality_intercept(rate);
        assert!((expected_death_rate(a) - rate).abs() < 1e-10);
    }
    assert!(mortality_intercept(0.1) < mortality_intercept(0.2));
}

#[test]
fn config_validation() {
    assert!(SynthConfig::default().validate().is_ok());
    for bad in [
        SynthConfig { mortality_base_rate: 0.0, ..SynthConfig::default() },
        SynthConfig { mortality_base_rate: 0.9, ..SynthConfig::default() },
        SynthConfig { signal_strength: -1.0, ..SynthConfig::default() },
        SynthConfig { mean_icu_los_hours: 0.0, ..SynthConfig::default() },
        SynthConfig { note_rate_per_day: f64::NAN, ..SynthConfig::default() },
    ] {
        assert!(matches!(generate_tables(&bad), Err(SynthError::InvalidConfig(_))), "{bad:?}");
    }
    assert_eq!(parse_signal("strong"), Some(1.0));
    assert_eq!(parse_signal("weak"), Some(0.3));
    assert_eq!(parse_signal("null"), Some(0.0));
    assert_eq!(parse_signal("0.5"), Some(0.5));
    assert_eq!(parse_signal("-1"), None);
}

#[test]
fn profiles_follow_feature_order() {
    let names: Vec<&str> = PROFILES.iter().map(|p| p.name).collect();
    assert_eq!(names, FEATURE_NAMES.to_vec());
    for p in PROFILES.iter() {
        assert_eq!(p.mean_at(2.0, 0.0), p.baseline);
        assert!(p.lo < p.baseline && p.baseline < p.hi, "{}", p.name);
        assert_eq!(p.finish(p.hi + 100.0), p.hi);
    }
}

#[test]
fn hysteresis_intervals() {
    let sev = [0.0, 1.1, 0.9, 0.5, 0.2, 1.2, 1.3];
    assert_eq!(threshold_intervals(&sev, 0, 7, (1.0, 0.6)), vec![(1, 3), (5, 7)]);
    assert_eq!(threshold_intervals(&sev, 2, 5, (1.0, 0.6)), vec![]);
}

#[test]
fn zero_patients_give_header_only_files() {
    let dir = tempfile::tempdir().unwrap();
    let summary = generate(&small(0, 1), dir.path()).unwrap();
    assert_eq!(summary.counts, TableCounts::default());
    for (table, cols) in ALL_TABLES {
        let text = std::fs::read_to_string(dir.path().join(format!("{table}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 1, "{table}");
        assert_eq!(text.trim_end(), cols.join(","));
    }
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = SynthConfig { include_case_study: true, ..small(25, 11) };
    generate(&cfg, a.path()).unwrap();
    generate(&cfg, b.path()).unwrap();
    for (table, _) in ALL_TABLES {
        let name = format!("{table}.csv");
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
    }
    let c = tempfile::tempdir().unwrap();
    generate(&small(25, 12), c.path()).unwrap();
    assert_ne!(std::fs::read(a.path().join("chartevents.csv")).unwrap(), std::fs::read(c.path().join("chartevents.csv")).unwrap());
}

#[test]
fn ingested_counts_equal_emitted_counts() {
    let dir = tempfile::tempdir().unwrap();
    let summary = generate(&small(3, 5), dir.path()).unwrap();
    let store = Datastore::ingest(dir.path()).unwrap();
    assert_eq!(store.counts(), summary.counts);
    assert_eq!(summary.counts.patients, 3);
}

#[test]
fn generated_datasets_pass_validation() {
    for (seed, signal, rate) in [(1, SIGNAL_STRONG, 0.15), (2, SIGNAL_NULL, 0.05), (3, SIGNAL_WEAK, 0.6)] {
        let cfg = SynthConfig {
            signal_strength: signal,
            mortality_base_rate: rate,
            include_case_study: true,
            ..small(150, seed)
        };
        let store = Datastore::from_tables(generate_tables(&cfg).unwrap()).unwrap();
        assert_eq!(store.patients().len(), 151);
    }
}

#[test]
fn admission_structure() {
    let t = generate_tables(&small(300, 21)).unwrap();
    let store = Datastore::from_tables(t).unwrap();
    for p in store.patients() {
        let adms = store.admissions_for_subject(p.subject_id);
        assert!(!adms.is_empty() && adms.len() <= 2);
        assert!(!store.icustays_for_admission(adms[0].hadm_id).is_empty());
        for (j, a) in adms.iter().enumerate() {
            if a.deathtime.is_some() {
                assert_eq!(j + 1, adms.len(), "death before a readmission");
                assert_eq!(a.deathtime, Some(a.dischtime));
                let stay = store.icustays_for_admission(a.hadm_id)[0];
                assert_eq!(stay.outtime, a.dischtime);
                assert_eq!(p.dod, a.deathtime);
            }
            let primary = store.primary_diagnosis(a.hadm_id).unwrap();
            assert!(DIAGNOSES.iter().any(|d| d.code == primary.icd9_code));
        }
    }
}

#[test]
fn every_feature_is_measured() {
    let store = Datastore::from_tables(generate_tables(&small(40, 8)).unwrap()).unwrap();
    let names = store.item_names();
    for f in FEATURE_NAMES {
        assert!(names.contains(f), "{f} never measured");
    }
}

#[test]
fn mortality_matches_base_rate_at_5000() {
    let t = generate_tables(&SynthConfig { note_rate_per_day: 0.0, ..small(5000, 7) }).unwrap();
    let (deaths, n) = death_rate(&t);
    let rate = deaths as f64 / n as f64;
    assert!((rate - 0.15).abs() <= 0.02, "observed {rate}");
}

#[test]
fn mortality_monotone_in_base_rate() {
    let mut last = (0usize, 0usize);
    for rate in [0.05, 0.15, 0.3] {
        let cfg = SynthConfig { mortality_base_rate: rate, note_rate_per_day: 0.0, ..small(400, 3) };
        let (deaths, n) = death_rate(&generate_tables(&cfg).unwrap());
        assert!(deaths as f64 / n as f64 >= last.0 as f64 / last.1.max(1) as f64);
        // death decisions only flip from survive to die as the rate grows
        assert!(deaths >= last.0);
        last = (deaths, n);
    }
}

#[test]
fn case_study_shape() {
    let cfg = SynthConfig { include_case_study: true, ..small(0, 0) };
    let store = Datastore::from_tables(generate_tables(&cfg).unwrap()).unwrap();
    let a = store.admission(CASE_STUDY_HADM).unwrap();
    assert!(a.admission_diagnosis.contains("PNEUMONIA"));
    assert_eq!(store.primary_diagnosis(CASE_STUDY_HADM).unwrap().icd9_code, "486");
    assert!(a.deathtime.is_some());
    let stay = store.icustay(CASE_STUDY_ICUSTAY).unwrap();
    assert_eq!(stay.first_careunit, "MICU");
    let vent: Vec<_> = store.intervals_for_admission(CASE_STUDY_HADM).filter(|i| i.label == "ventilation").collect();
    assert_eq!(vent.len(), 2);
    assert!(vent[0].endtime < vent[1].starttime, "ventilation gap");
    let pressor = store.intervals_for_admission(CASE_STUDY_HADM).find(|i| i.label == "vasopressor").unwrap();
    assert!(pressor.starttime > vent[1].starttime);
    // pre-ICU WBC is low, the ICU values climb well above it
    let wbc = store.lookup_symbol("wbc").unwrap();
    let pre: Vec<_> = store.lab_series(CASE_STUDY_HADM, wbc).collect();
    assert_eq!(pre.len(), 1);
    assert!(pre[0].charttime < stay.intime);
    let icu_max = store.chart_series(CASE_STUDY_ICUSTAY, wbc).map(|c| c.value_num).fold(0.0, f64::max);
    assert!(icu_max > 25.0 && pre[0].value_num < 4.0);
    assert!(store.notes_for_admission(CASE_STUDY_HADM).any(|n| n.text.contains("comfort measures")));
    // same fixture regardless of the configured seed
    let other = generate_tables(&SynthConfig { include_case_study: true, ..small(0, 99) }).unwrap();
    assert_eq!(other.chartevents, store.tables().chartevents);
}
