use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::intern::{Interner, Symbol};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::M => "M",
            Gender::F => "F",
        })
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "M" => Ok(Gender::M),
            "F" => Ok(Gender::F),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub subject_id: i64,
    pub gender: Gender,
    pub dob: Timestamp,
    pub dod: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub hadm_id: i64,
    pub subject_id: i64,
    pub admittime: Timestamp,
    pub dischtime: Timestamp,
    pub deathtime: Option<Timestamp>,
    pub admission_diagnosis: String,
}

impl Admission {
    pub fn los_days(&self) -> f64 {
        crate::time::hours_between(self.admittime, self.dischtime) / 24.0
    }

    pub fn died_in_hospital(&self) -> bool {
        self.deathtime.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcuStay {
    pub icustay_id: i64,
    pub hadm_id: i64,
    pub subject_id: i64,
    pub intime: Timestamp,
    pub outtime: Timestamp,
    pub first_careunit: String,
}

impl IcuStay {
    pub fn duration_hours(&self) -> f64 {
        crate::time::hours_between(self.intime, self.outtime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartEvent {
    pub icustay_id: i64,
    pub charttime: Timestamp,
    pub item: Symbol,
    pub value_num: f64,
    pub unit: Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabEvent {
    pub hadm_id: i64,
    pub charttime: Timestamp,
    pub item: Symbol,
    pub value_num: f64,
    pub unit: Symbol,
    pub fluid: Symbol,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoteEvent {
    pub hadm_id: i64,
    pub charttime: Timestamp,
    pub category: String,
    pub text: String,
}

/// Row of `interventions.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionRow {
    pub icustay_id: i64,
    pub label: String,
    pub starttime: Timestamp,
    pub endtime: Timestamp,
}

/// Row of `transfers.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub hadm_id: i64,
    pub careunit: String,
    pub intime: Timestamp,
    pub outtime: Timestamp,
}

/// Row of `services.csv`. A service lasts until the next service change of
/// the same admission, or discharge.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRow {
    pub hadm_id: i64,
    pub transfertime: Timestamp,
    pub service: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisRecord {
    pub hadm_id: i64,
    pub icd9_code: String,
    pub seq_num: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    Careunit,
    Service,
    Intervention,
}

/// Duration event derived from interventions, transfers or services.
/// `scope_id` is the ICU stay for interventions and the admission otherwise;
/// `hadm_id` is always the owning admission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEvent {
    pub scope_id: i64,
    pub hadm_id: i64,
    pub kind: IntervalKind,
    pub label: String,
    #[serde(with = "crate::time::serde_ts")]
    pub starttime: Timestamp,
    #[serde(with = "crate::time::serde_ts")]
    pub endtime: Timestamp,
}

/// The ten source tables as parsed rows, in source order.
#[derive(Debug, Default, Clone)]
pub struct TableSet {
    pub symbols: Interner,
    pub patients: Vec<Patient>,
    pub admissions: Vec<Admission>,
    pub icustays: Vec<IcuStay>,
    pub chartevents: Vec<ChartEvent>,
    pub labevents: Vec<LabEvent>,
    pub noteevents: Vec<NoteEvent>,
    pub interventions: Vec<InterventionRow>,
    pub transfers: Vec<TransferRow>,
    pub services: Vec<ServiceRow>,
    pub diagnoses: Vec<DiagnosisRecord>,
}

/// Row counts per source table, keyed by file stem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCounts {
    pub patients: usize,
    pub admissions: usize,
    pub icustays: usize,
    pub chartevents: usize,
    pub labevents: usize,
    pub noteevents: usize,
    pub interventions: usize,
    pub transfers: usize,
    pub services: usize,
    pub diagnoses: usize,
}

impl TableCounts {
    pub fn as_pairs(&self) -> [(&'static str, usize); 10] {
        [
            ("patients", self.patients),
            ("admissions", self.admissions),
            ("icustays", self.icustays),
            ("chartevents", self.chartevents),
            ("labevents", self.labevents),
            ("noteevents", self.noteevents),
            ("interventions", self.interventions),
            ("transfers", self.transfers),
            ("services", self.services),
            ("diagnoses", self.diagnoses),
        ]
    }

    pub fn total(&self) -> usize {
        self.as_pairs().iter().map(|(_, n)| n).sum()
    }
}

impl TableSet {
    pub fn counts(&self) -> TableCounts {
        TableCounts {
            patients: self.patients.len(),
            admissions: self.admissions.len(),
            icustays: self.icustays.len(),
            chartevents: self.chartevents.len(),
            labevents: self.labevents.len(),
            noteevents: self.noteevents.len(),
            interventions: self.interventions.len(),
            transfers: self.transfers.len(),
            services: self.services.len(),
            diagnoses: self.diagnoses.len(),
        }
    }
}
