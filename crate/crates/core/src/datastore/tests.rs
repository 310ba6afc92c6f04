use super::*;
use std::fs;
use tempfile::TempDir;

const HEADERS: [(&str, &str); 10] = [
    ("patients", "subject_id,gender,dob,dod"),
    ("admissions", "hadm_id,subject_id,admittime,dischtime,deathtime,admission_diagnosis"),
    ("icustays", "icustay_id,hadm_id,subject_id,intime,outtime,first_careunit"),
    ("chartevents", "icustay_id,charttime,item_name,value_num,unit"),
    ("labevents", "hadm_id,charttime,item_name,value_num,unit,fluid"),
    ("noteevents", "hadm_id,charttime,category,text"),
    ("interventions", "icustay_id,label,starttime,endtime"),
    ("transfers", "hadm_id,careunit,intime,outtime"),
    ("services", "hadm_id,transfertime,service"),
    ("diagnoses", "hadm_id,icd9_code,seq_num"),
];

/// Writes every table with its header plus any rows given in `rows`.
fn fixture(rows: &[(&str, &[&str])]) -> TempDir {
    let dir = TempDir::new().unwrap();
    for (table, header) in HEADERS {
        let mut body = format!("{header}\n");
        for (t, lines) in rows {
            if *t == table {
                for l in *lines {
                    body.push_str(l);
                    body.push('\n');
                }
            }
        }
        fs::write(dir.path().join(format!("{table}.csv")), body).unwrap();
    }
    dir
}

fn small() -> TempDir {
    fixture(&[
        ("patients", &["1,M,2070-01-01T00:00:00,", "2,F,2060-05-01T00:00:00,2150-01-10T00:00:00"]),
        (
            "admissions",
            &[
                // admissions listed out of time order for subject 1
                "11,1,2150-03-01T00:00:00,2150-03-05T00:00:00,,\"PNEUMONIA, CHF\"",
                "10,1,2150-01-01T00:00:00,2150-01-04T00:00:00,,SEPSIS",
                "20,2,2150-01-01T00:00:00,2150-01-10T00:00:00,2150-01-10T00:00:00,MI",
            ],
        ),
        (
            "icustays",
            &[
                "100,10,1,2150-01-01T02:00:00,2150-01-03T00:00:00,MICU",
                "200,20,2,2150-01-01T01:00:00,2150-01-10T00:00:00,CCU",
            ],
        ),
        (
            "chartevents",
            &[
                "100,2150-01-01T05:00:00,heart_rate,90,bpm",
                "100,2150-01-01T03:00:00,heart_rate,80,bpm",
                "100,2150-01-01T00:00:00,wbc,3.1,K/uL",
                "200,2150-01-02T00:00:00,heart_rate,70,bpm",
            ],
        ),
        (
            "labevents",
            &[
                "10,2150-01-02T00:00:00,sodium,140,mEq/L,Blood",
                "10,2150-01-01T06:00:00,sodium,138,mEq/L,Blood",
                "10,2150-01-01T06:00:00,lactate,2.1,mmol/L,Arterial Blood",
                "10,2150-01-03T00:00:00,glucose,120,mg/dL,Blood",
                "10,2150-01-03T12:00:00,potassium,4.0,mEq/L,Blood",
                "20,2150-01-03T12:00:00,potassium,4.4,mEq/L,Blood",
            ],
        ),
        ("noteevents", &["20,2150-01-02T00:00:00,Echo,\"Echo report, normal EF\""]),
        ("interventions", &["100,ventilation,2150-01-01T03:00:00,2150-01-02T00:00:00"]),
        (
            "transfers",
            &["10,MICU,2150-01-01T02:00:00,2150-01-03T00:00:00", "10,Ward,2150-01-03T00:00:00,2150-01-04T00:00:00"],
        ),
        ("services", &["10,2150-01-02T00:00:00,SURG", "10,2150-01-01T00:00:00,MED"]),
        ("diagnoses", &["10,0389,1", "10,486,2", "20,41071,1"]),
    ])
}

#[test]
fn empty_tables_give_empty_store() {
    let dir = fixture(&[]);
    let store = ingest(dir.path()).unwrap();
    assert_eq!(store.counts().total(), 0);
    assert!(store.item_names().is_empty());
}

#[test]
fn counts_and_lookups() {
    let dir = small();
    let store = ingest(dir.path()).unwrap();
    let c = store.counts();
    assert_eq!((c.patients, c.admissions, c.icustays, c.chartevents, c.labevents), (2, 3, 2, 4, 6));
    assert_eq!(store.admission(11).unwrap().admission_diagnosis, "PNEUMONIA, CHF");
    assert_eq!(store.patient(2).unwrap().gender, Gender::F);
    assert_eq!(store.first_icu_stay(1).unwrap().icustay_id, 100);
    assert_eq!(store.primary_diagnosis(10).unwrap().icd9_code, "0389");
    let names: Vec<_> = store.item_names().iter().cloned().collect();
    assert_eq!(names, ["glucose", "heart_rate", "lactate", "potassium", "sodium", "wbc"]);
}

#[test]
fn admissions_sorted_by_admittime() {
    let dir = small();
    let store = ingest(dir.path()).unwrap();
    let ids: Vec<i64> = store.admissions_for_subject(1).iter().map(|a| a.hadm_id).collect();
    assert_eq!(ids, [10, 11]);
    assert!(store.admissions_for_subject(99).is_empty());
}

#[test]
fn events_time_sorted_with_stable_ties() {
    let dir = small();
    let store = ingest(dir.path()).unwrap();
    let labs = store.events_for_admission(10, EventKind::Lab).unwrap();
    assert_eq!(labs.len(), 5);
    let times: Vec<_> = labs.iter().map(Event::time).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    // sodium (row 2) and lactate (row 3) share a timestamp: source order wins
    match (labs[0], labs[1]) {
        (Event::Lab(a), Event::Lab(b)) => {
            assert_eq!(store.symbol(a.item), "sodium");
            assert_eq!(store.symbol(b.item), "lactate");
        }
        _ => unreachable!(),
    }
    let chart = store.events_for_admission(10, EventKind::Chart).unwrap();
    assert_eq!(chart.len(), 3);
    assert!(chart.windows(2).all(|w| w[0].time() <= w[1].time()));
    assert!(store.events_for_admission(11, EventKind::Note).unwrap().is_empty());
    assert_eq!(store.events_for_admission(999, EventKind::Lab).unwrap_err(), QueryError::UnknownAdmission(999));
}

#[test]
fn services_become_intervals_until_next_change() {
    let dir = small();
    let store = ingest(dir.path()).unwrap();
    let services = store.events_for_admission(10, EventKind::Service).unwrap();
    let spans: Vec<(String, String, String)> = services
        .iter()
        .map(|e| match e {
            Event::Interval(iv) => (iv.label.clone(), time::format(&iv.starttime), time::format(&iv.endtime)),
            _ => unreachable!(),
        })
        .collect();
    assert_eq!(
        spans,
        [
            ("MED".into(), "2150-01-01T00:00:00".into(), "2150-01-02T00:00:00".into()),
            ("SURG".into(), "2150-01-02T00:00:00".into(), "2150-01-04T00:00:00".into()),
        ]
    );
    assert_eq!(store.events_for_admission(10, EventKind::Careunit).unwrap().len(), 2);
    assert_eq!(store.events_for_admission(10, EventKind::Intervention).unwrap().len(), 1);
}

#[test]
fn unknown_stay_in_chartevents_is_rejected() {
    let dir = small();
    let path = dir.path().join("chartevents.csv");
    let mut body = fs::read_to_string(&path).unwrap();
    body.push_str("999,2150-01-01T05:00:00,heart_rate,90,bpm\n");
    fs::write(&path, body).unwrap();
    match ingest(dir.path()) {
        Err(IngestError::ReferentialViolation { table, row, .. }) => {
            assert_eq!(table, "chartevents");
            assert_eq!(row, 5);
        }
        other => panic!("expected violation, got {other:?}"),
    }
}

#[test]
fn missing_table_and_schema_mismatch() {
    let dir = small();
    fs::remove_file(dir.path().join("services.csv")).unwrap();
    assert!(matches!(ingest(dir.path()), Err(IngestError::MissingTable(t)) if t == "services"));

    let dir = small();
    fs::write(dir.path().join("diagnoses.csv"), "hadm_id,icd9,seq_num\n").unwrap();
    match ingest(dir.path()) {
        Err(IngestError::SchemaMismatch { table, column }) => {
            assert_eq!((table.as_str(), column.as_str()), ("diagnoses", "icd9_code"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn parse_errors_report_line() {
    let dir = small();
    fs::write(
        dir.path().join("labevents.csv"),
        "hadm_id,charttime,item_name,value_num,unit,fluid\n10,2150-01-02T00:00:00,sodium,abc,mEq/L,Blood\n",
    )
    .unwrap();
    match ingest(dir.path()) {
        Err(IngestError::ParseError { table, line, .. }) => assert_eq!((table.as_str(), line), ("labevents", 2)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn invariant_violations() {
    let cases: [(&str, &[&str], &str); 5] = [
        ("admissions", &["30,1,2150-01-02T00:00:00,2150-01-01T00:00:00,,X"], "admissions"),
        ("admissions", &["30,77,2150-01-01T00:00:00,2150-01-02T00:00:00,,X"], "admissions"),
        ("diagnoses", &["10,486,1"], "diagnoses"),
        ("labevents", &["10,2150-01-02T00:00:00,sodium,140,mEq/L,"], "labevents"),
        ("chartevents", &["100,2150-01-03T07:00:00,heart_rate,90,bpm"], "chartevents"),
    ];
    for (table, extra, expect) in cases {
        let dir = small();
        let path = dir.path().join(format!("{table}.csv"));
        let mut body = fs::read_to_string(&path).unwrap();
        for l in extra {
            body.push_str(l);
            body.push('\n');
        }
        fs::write(&path, body).unwrap();
        match ingest(dir.path()) {
            Err(IngestError::ReferentialViolation { table, .. }) => assert_eq!(table, expect),
            other => panic!("{table}: {other:?}"),
        }
    }
}

#[test]
fn write_then_read_is_lossless() {
    let dir = small();
    let tables = read_tables(dir.path()).unwrap();
    let out = TempDir::new().unwrap();
    write_tables(&tables, out.path()).unwrap();
    let again = read_tables(out.path()).unwrap();
    assert_eq!(tables.patients, again.patients);
    assert_eq!(tables.admissions, again.admissions);
    assert_eq!(tables.noteevents, again.noteevents);
    assert_eq!(tables.counts(), again.counts());
    for (a, b) in tables.chartevents.iter().zip(&again.chartevents) {
        assert_eq!(a.value_num, b.value_num);
        assert_eq!(tables.symbols.resolve(a.item), again.symbols.resolve(b.item));
    }
}
