//! In-memory table builder for unit tests.

use crate::datastore::*;
use crate::time::{self, Timestamp};

pub fn ts(s: &str) -> Timestamp {
    time::parse(s).unwrap_or_else(|| panic!("bad timestamp {s}"))
}

/// Base instant all `h(..)` offsets are measured from.
pub fn base() -> Timestamp {
    ts("2150-01-01T00:00:00")
}

pub fn h(hours: i64) -> Timestamp {
    base() + time::hours(hours)
}

#[derive(Default)]
pub struct Builder {
    pub t: TableSet,
}

impl Builder {
    pub fn patient(&mut self, subject_id: i64, gender: Gender, age_years: i64) -> &mut Self {
        self.t.patients.push(Patient {
            subject_id,
            gender,
            dob: base() - chrono::Duration::days((age_years as f64 * 365.25) as i64),
            dod: None,
        });
        self
    }

    /// Admission spanning hours `[from, to]` relative to the base instant.
    pub fn admission(&mut self, hadm_id: i64, subject_id: i64, from: i64, to: i64, died: bool) -> &mut Self {
        self.t.admissions.push(Admission {
            hadm_id,
            subject_id,
            admittime: h(from),
            dischtime: h(to),
            deathtime: died.then(|| h(to)),
            admission_diagnosis: "TEST".into(),
        });
        self
    }

    pub fn stay(&mut self, icustay_id: i64, hadm_id: i64, from: i64, to: i64) -> &mut Self {
        let subject_id = self.t.admissions.iter().find(|a| a.hadm_id == hadm_id).expect("admission").subject_id;
        self.t.icustays.push(IcuStay {
            icustay_id,
            hadm_id,
            subject_id,
            intime: h(from),
            outtime: h(to),
            first_careunit: "MICU".into(),
        });
        self
    }

    pub fn chart(&mut self, icustay_id: i64, at: Timestamp, item: &str, value: f64) -> &mut Self {
        let item = self.t.symbols.intern(item);
        let unit = self.t.symbols.intern("u");
        self.t.chartevents.push(ChartEvent { icustay_id, charttime: at, item, value_num: value, unit });
        self
    }

    pub fn lab(&mut self, hadm_id: i64, at: Timestamp, item: &str, value: f64) -> &mut Self {
        let item = self.t.symbols.intern(item);
        let unit = self.t.symbols.intern("u");
        let fluid = self.t.symbols.intern("Blood");
        self.t.labevents.push(LabEvent { hadm_id, charttime: at, item, value_num: value, unit, fluid });
        self
    }

    pub fn diagnosis(&mut self, hadm_id: i64, code: &str, seq_num: u32) -> &mut Self {
        self.t.diagnoses.push(DiagnosisRecord { hadm_id, icd9_code: code.into(), seq_num });
        self
    }

    pub fn build(&self) -> Datastore {
        Datastore::from_tables(self.t.clone()).expect("valid fixture")
    }
}
