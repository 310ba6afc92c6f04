//! Immutable, indexed in-memory image of the MIMIC-shaped source tables.
//!
//! [`ingest`] reads the ten CSV files, [`Datastore::from_tables`] validates
//! every referential invariant (fail-fast: the first violation aborts) and
//! builds lookups by subject, admission, ICU stay and `(scope, item)`.
//! Nothing is mutable after construction, so a `Datastore` can be shared
//! freely between threads.

mod csv_io;
mod intern;
mod records;

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use csv_io::{read_tables, write_tables, ALL_TABLES};
pub use intern::{Interner, Symbol};
pub use records::*;

use crate::time::{self, Timestamp};

/// Chart events may precede ICU admission (or trail discharge) by this much.
pub const CHART_SLACK_HOURS: i64 = 6;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing table {0}")]
    MissingTable(String),
    #[error("schema mismatch in {table}: expected column {column}")]
    SchemaMismatch { table: String, column: String },
    #[error("referential violation in {table} row {row}: {reason}")]
    ReferentialViolation { table: String, row: usize, reason: String },
    #[error("parse error in {table} line {line}: {detail}")]
    ParseError { table: String, line: u64, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl IngestError {
    /// Stable machine-readable error name.
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::MissingTable(_) => "MissingTable",
            IngestError::SchemaMismatch { .. } => "SchemaMismatch",
            IngestError::ReferentialViolation { .. } => "ReferentialViolation",
            IngestError::ParseError { .. } => "ParseError",
            IngestError::Io { .. } => "IoError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown admission {0}")]
    UnknownAdmission(i64),
    #[error("unknown ICU stay {0}")]
    UnknownStay(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Chart,
    Lab,
    Note,
    Intervention,
    Careunit,
    Service,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::Chart,
        EventKind::Lab,
        EventKind::Note,
        EventKind::Intervention,
        EventKind::Careunit,
        EventKind::Service,
    ];

    fn interval_kind(self) -> Option<IntervalKind> {
        match self {
            EventKind::Intervention => Some(IntervalKind::Intervention),
            EventKind::Careunit => Some(IntervalKind::Careunit),
            EventKind::Service => Some(IntervalKind::Service),
            _ => None,
        }
    }
}

/// Borrowed view of one event of any kind.
#[derive(Debug, Clone, Copy)]
pub enum Event<'a> {
    Chart(&'a ChartEvent),
    Lab(&'a LabEvent),
    Note(&'a NoteEvent),
    Interval(&'a IntervalEvent),
}

impl Event<'_> {
    pub fn time(&self) -> Timestamp {
        match self {
            Event::Chart(c) => c.charttime,
            Event::Lab(l) => l.charttime,
            Event::Note(n) => n.charttime,
            Event::Interval(i) => i.starttime,
        }
    }
}

type Index = HashMap<i64, Vec<u32>>;

#[derive(Debug)]
pub struct Datastore {
    tables: TableSet,
    intervals: Vec<IntervalEvent>,
    patient_by_id: HashMap<i64, u32>,
    admission_by_id: HashMap<i64, u32>,
    stay_by_id: HashMap<i64, u32>,
    admissions_by_subject: Index,
    stays_by_hadm: Index,
    chart_by_stay: Index,
    chart_by_stay_item: HashMap<(i64, Symbol), Vec<u32>>,
    labs_by_hadm: Index,
    labs_by_hadm_item: HashMap<(i64, Symbol), Vec<u32>>,
    notes_by_hadm: Index,
    intervals_by_hadm: Index,
    diagnoses_by_hadm: Index,
    item_names: BTreeSet<String>,
}

/// Read and validate the dataset in `dir`.
pub fn ingest(dir: &Path) -> Result<Datastore, IngestError> {
    Datastore::from_tables(read_tables(dir)?)
}

fn violation(table: &str, row: usize, reason: impl Into<String>) -> IngestError {
    IngestError::ReferentialViolation { table: table.to_owned(), row: row + 1, reason: reason.into() }
}

fn push(index: &mut Index, key: i64, row: usize) {
    index.entry(key).or_default().push(row as u32);
}

/// Stable sort of every posting list by a time key; ties keep source order.
fn sort_postings<K: Ord>(index: &mut Index, key: impl Fn(usize) -> K) {
    for rows in index.values_mut() {
        rows.sort_by_key(|&r| key(r as usize));
    }
}

impl Datastore {
    pub fn ingest(dir: &Path) -> Result<Self, IngestError> {
        ingest(dir)
    }

    /// Validate `tables` and build all indices.
    pub fn from_tables(tables: TableSet) -> Result<Self, IngestError> {
        let slack = time::hours(CHART_SLACK_HOURS);

        let mut patient_by_id = HashMap::with_capacity(tables.patients.len());
        for (row, p) in tables.patients.iter().enumerate() {
            if patient_by_id.insert(p.subject_id, row as u32).is_some() {
                return Err(violation("patients", row, format!("duplicate subject_id {}", p.subject_id)));
            }
            if matches!(p.dod, Some(dod) if dod < p.dob) {
                return Err(violation("patients", row, "dod precedes dob"));
            }
        }

        let mut admission_by_id = HashMap::with_capacity(tables.admissions.len());
        let mut admissions_by_subject = Index::new();
        for (row, a) in tables.admissions.iter().enumerate() {
            if admission_by_id.insert(a.hadm_id, row as u32).is_some() {
                return Err(violation("admissions", row, format!("duplicate hadm_id {}", a.hadm_id)));
            }
            if !patient_by_id.contains_key(&a.subject_id) {
                return Err(violation("admissions", row, format!("unknown subject_id {}", a.subject_id)));
            }
            if a.dischtime <= a.admittime {
                return Err(violation("admissions", row, "dischtime not after admittime"));
            }
            if matches!(a.deathtime, Some(d) if d < a.admittime || d > a.dischtime) {
                return Err(violation("admissions", row, "deathtime outside admission"));
            }
            push(&mut admissions_by_subject, a.subject_id, row);
        }
        let admission = |hadm_id: i64| admission_by_id.get(&hadm_id).map(|&r| &tables.admissions[r as usize]);
        // Every event linked to an admission must fall in [admittime - slack, dischtime].
        let within_admission = |a: &Admission, t: Timestamp| t >= a.admittime - slack && t <= a.dischtime;

        let mut stay_by_id = HashMap::with_capacity(tables.icustays.len());
        let mut stays_by_hadm = Index::new();
        for (row, s) in tables.icustays.iter().enumerate() {
            if stay_by_id.insert(s.icustay_id, row as u32).is_some() {
                return Err(violation("icustays", row, format!("duplicate icustay_id {}", s.icustay_id)));
            }
            let Some(a) = admission(s.hadm_id) else {
                return Err(violation("icustays", row, format!("unknown hadm_id {}", s.hadm_id)));
            };
            if a.subject_id != s.subject_id {
                return Err(violation("icustays", row, "subject_id differs from parent admission"));
            }
            if s.outtime <= s.intime {
                return Err(violation("icustays", row, "outtime not after intime"));
            }
            if s.intime < a.admittime || s.outtime > a.dischtime {
                return Err(violation("icustays", row, "stay outside parent admission"));
            }
            push(&mut stays_by_hadm, s.hadm_id, row);
        }
        let stay = |id: i64| stay_by_id.get(&id).map(|&r| &tables.icustays[r as usize]);

        let mut item_syms = BTreeSet::new();
        let mut chart_by_stay = Index::new();
        for (row, c) in tables.chartevents.iter().enumerate() {
            let Some(s) = stay(c.icustay_id) else {
                return Err(violation("chartevents", row, format!("unknown icustay_id {}", c.icustay_id)));
            };
            if !c.value_num.is_finite() {
                return Err(violation("chartevents", row, "non-finite value_num"));
            }
            if c.charttime < s.intime - slack || c.charttime > s.outtime + slack {
                return Err(violation("chartevents", row, "charttime outside ICU stay"));
            }
            if !within_admission(admission(s.hadm_id).expect("validated"), c.charttime) {
                return Err(violation("chartevents", row, "charttime outside admission"));
            }
            item_syms.insert(c.item);
            push(&mut chart_by_stay, c.icustay_id, row);
        }

        let mut labs_by_hadm = Index::new();
        for (row, l) in tables.labevents.iter().enumerate() {
            let Some(a) = admission(l.hadm_id) else {
                return Err(violation("labevents", row, format!("unknown hadm_id {}", l.hadm_id)));
            };
            if !l.value_num.is_finite() {
                return Err(violation("labevents", row, "non-finite value_num"));
            }
            if tables.symbols.resolve(l.fluid).trim().is_empty() {
                return Err(violation("labevents", row, "empty fluid"));
            }
            if !within_admission(a, l.charttime) {
                return Err(violation("labevents", row, "charttime outside admission"));
            }
            item_syms.insert(l.item);
            push(&mut labs_by_hadm, l.hadm_id, row);
        }

        let mut notes_by_hadm = Index::new();
        for (row, n) in tables.noteevents.iter().enumerate() {
            let Some(a) = admission(n.hadm_id) else {
                return Err(violation("noteevents", row, format!("unknown hadm_id {}", n.hadm_id)));
            };
            if n.text.trim().is_empty() {
                return Err(violation("noteevents", row, "empty text"));
            }
            if !within_admission(a, n.charttime) {
                return Err(violation("noteevents", row, "charttime outside admission"));
            }
            push(&mut notes_by_hadm, n.hadm_id, row);
        }

        let mut intervals = Vec::with_capacity(
            tables.interventions.len() + tables.transfers.len() + tables.services.len(),
        );
        for (row, i) in tables.interventions.iter().enumerate() {
            let Some(s) = stay(i.icustay_id) else {
                return Err(violation("interventions", row, format!("unknown icustay_id {}", i.icustay_id)));
            };
            if i.endtime < i.starttime {
                return Err(violation("interventions", row, "endtime before starttime"));
            }
            let a = admission(s.hadm_id).expect("validated");
            if !within_admission(a, i.starttime) || !within_admission(a, i.endtime) {
                return Err(violation("interventions", row, "interval outside admission"));
            }
            intervals.push(IntervalEvent {
                scope_id: i.icustay_id,
                hadm_id: s.hadm_id,
                kind: IntervalKind::Intervention,
                label: i.label.clone(),
                starttime: i.starttime,
                endtime: i.endtime,
            });
        }
        for (row, t) in tables.transfers.iter().enumerate() {
            let Some(a) = admission(t.hadm_id) else {
                return Err(violation("transfers", row, format!("unknown hadm_id {}", t.hadm_id)));
            };
            if t.outtime < t.intime {
                return Err(violation("transfers", row, "outtime before intime"));
            }
            if !within_admission(a, t.intime) || !within_admission(a, t.outtime) {
                return Err(violation("transfers", row, "interval outside admission"));
            }
            intervals.push(IntervalEvent {
                scope_id: t.hadm_id,
                hadm_id: t.hadm_id,
                kind: IntervalKind::Careunit,
                label: t.careunit.clone(),
                starttime: t.intime,
                endtime: t.outtime,
            });
        }
        let mut services_by_hadm = Index::new();
        for (row, s) in tables.services.iter().enumerate() {
            let Some(a) = admission(s.hadm_id) else {
                return Err(violation("services", row, format!("unknown hadm_id {}", s.hadm_id)));
            };
            if !within_admission(a, s.transfertime) {
                return Err(violation("services", row, "transfertime outside admission"));
            }
            push(&mut services_by_hadm, s.hadm_id, row);
        }
        sort_postings(&mut services_by_hadm, |r| tables.services[r].transfertime);
        let mut service_intervals: Vec<(usize, IntervalEvent)> = Vec::with_capacity(tables.services.len());
        for (hadm_id, rows) in &services_by_hadm {
            let dischtime = admission(*hadm_id).expect("validated").dischtime;
            for (k, &r) in rows.iter().enumerate() {
                let s = &tables.services[r as usize];
                let endtime = rows.get(k + 1).map_or(dischtime, |&next| tables.services[next as usize].transfertime);
                service_intervals.push((
                    r as usize,
                    IntervalEvent {
                        scope_id: *hadm_id,
                        hadm_id: *hadm_id,
                        kind: IntervalKind::Service,
                        label: s.service.clone(),
                        starttime: s.transfertime,
                        endtime: endtime.max(s.transfertime),
                    },
                ));
            }
        }
        service_intervals.sort_by_key(|(r, _)| *r);
        intervals.extend(service_intervals.into_iter().map(|(_, iv)| iv));

        let mut intervals_by_hadm = Index::new();
        for (row, iv) in intervals.iter().enumerate() {
            push(&mut intervals_by_hadm, iv.hadm_id, row);
        }

        let mut diagnoses_by_hadm = Index::new();
        let mut seen = std::collections::HashSet::new();
        for (row, d) in tables.diagnoses.iter().enumerate() {
            if admission(d.hadm_id).is_none() {
                return Err(violation("diagnoses", row, format!("unknown hadm_id {}", d.hadm_id)));
            }
            if d.seq_num == 0 {
                return Err(violation("diagnoses", row, "seq_num must be positive"));
            }
            if !seen.insert((d.hadm_id, d.seq_num)) {
                return Err(violation("diagnoses", row, format!("duplicate seq_num {}", d.seq_num)));
            }
            push(&mut diagnoses_by_hadm, d.hadm_id, row);
        }

        sort_postings(&mut admissions_by_subject, |r| tables.admissions[r].admittime);
        sort_postings(&mut stays_by_hadm, |r| tables.icustays[r].intime);
        sort_postings(&mut chart_by_stay, |r| tables.chartevents[r].charttime);
        sort_postings(&mut labs_by_hadm, |r| tables.labevents[r].charttime);
        sort_postings(&mut notes_by_hadm, |r| tables.noteevents[r].charttime);
        sort_postings(&mut intervals_by_hadm, |r| intervals[r].starttime);
        sort_postings(&mut diagnoses_by_hadm, |r| tables.diagnoses[r].seq_num);

        let mut chart_by_stay_item: HashMap<(i64, Symbol), Vec<u32>> = HashMap::new();
        for (&stay_id, rows) in &chart_by_stay {
            for &r in rows {
                chart_by_stay_item.entry((stay_id, tables.chartevents[r as usize].item)).or_default().push(r);
            }
        }
        let mut labs_by_hadm_item: HashMap<(i64, Symbol), Vec<u32>> = HashMap::new();
        for (&hadm_id, rows) in &labs_by_hadm {
            for &r in rows {
                labs_by_hadm_item.entry((hadm_id, tables.labevents[r as usize].item)).or_default().push(r);
            }
        }

        let item_names = item_syms.into_iter().map(|s| tables.symbols.resolve(s).to_owned()).collect();

        Ok(Self {
            tables,
            intervals,
            patient_by_id,
            admission_by_id,
            stay_by_id,
            admissions_by_subject,
            stays_by_hadm,
            chart_by_stay,
            chart_by_stay_item,
            labs_by_hadm,
            labs_by_hadm_item,
            notes_by_hadm,
            intervals_by_hadm,
            diagnoses_by_hadm,
            item_names,
        })
    }

    pub fn tables(&self) -> &TableSet {
        &self.tables
    }

    pub fn counts(&self) -> TableCounts {
        self.tables.counts()
    }

    pub fn symbol(&self, sym: Symbol) -> &str {
        self.tables.symbols.resolve(sym)
    }

    pub fn lookup_symbol(&self, name: &str) -> Option<Symbol> {
        self.tables.symbols.get(name)
    }

    pub fn patients(&self) -> &[Patient] {
        &self.tables.patients
    }

    pub fn admissions(&self) -> &[Admission] {
        &self.tables.admissions
    }

    pub fn icustays(&self) -> &[IcuStay] {
        &self.tables.icustays
    }

    pub fn intervals(&self) -> &[IntervalEvent] {
        &self.intervals
    }

    pub fn patient(&self, subject_id: i64) -> Option<&Patient> {
        self.patient_by_id.get(&subject_id).map(|&r| &self.tables.patients[r as usize])
    }

    pub fn admission(&self, hadm_id: i64) -> Option<&Admission> {
        self.admission_by_id.get(&hadm_id).map(|&r| &self.tables.admissions[r as usize])
    }

    pub fn icustay(&self, icustay_id: i64) -> Option<&IcuStay> {
        self.stay_by_id.get(&icustay_id).map(|&r| &self.tables.icustays[r as usize])
    }

    /// Distinct item names across chart and lab events, sorted.
    pub fn item_names(&self) -> &BTreeSet<String> {
        &self.item_names
    }

    /// Admissions of a subject ordered by admittime; empty for unknown subjects.
    pub fn admissions_for_subject(&self, subject_id: i64) -> Vec<&Admission> {
        self.postings(&self.admissions_by_subject, subject_id).map(|r| &self.tables.admissions[r]).collect()
    }

    /// ICU stays of an admission ordered by intime.
    pub fn icustays_for_admission(&self, hadm_id: i64) -> Vec<&IcuStay> {
        self.postings(&self.stays_by_hadm, hadm_id).map(|r| &self.tables.icustays[r]).collect()
    }

    /// The subject's earliest ICU stay across all admissions; ties go to the
    /// lower icustay_id.
    pub fn first_icu_stay(&self, subject_id: i64) -> Option<&IcuStay> {
        self.admissions_for_subject(subject_id)
            .into_iter()
            .flat_map(|a| self.icustays_for_admission(a.hadm_id))
            .min_by_key(|s| (s.intime, s.icustay_id))
    }

    /// Diagnoses of an admission ordered by seq_num.
    pub fn diagnoses_for_admission(&self, hadm_id: i64) -> Vec<&DiagnosisRecord> {
        self.postings(&self.diagnoses_by_hadm, hadm_id).map(|r| &self.tables.diagnoses[r]).collect()
    }

    pub fn primary_diagnosis(&self, hadm_id: i64) -> Option<&DiagnosisRecord> {
        self.diagnoses_for_admission(hadm_id).into_iter().find(|d| d.seq_num == 1)
    }

    /// Chart events of one stay, time-sorted.
    pub fn chart_events_for_stay(&self, icustay_id: i64) -> impl Iterator<Item = &ChartEvent> + '_ {
        self.postings(&self.chart_by_stay, icustay_id).map(|r| &self.tables.chartevents[r])
    }

    /// Chart events of one item in one stay, time-sorted.
    pub fn chart_series(&self, icustay_id: i64, item: Symbol) -> impl Iterator<Item = &ChartEvent> + '_ {
        self.chart_by_stay_item
            .get(&(icustay_id, item))
            .map(Vec::as_slice)
            .unwrap_or_default()
            .iter()
            .map(|&r| &self.tables.chartevents[r as usize])
    }

    /// Lab events of one admission, time-sorted.
    pub fn lab_events_for_admission(&self, hadm_id: i64) -> impl Iterator<Item = &LabEvent> + '_ {
        self.postings(&self.labs_by_hadm, hadm_id).map(|r| &self.tables.labevents[r])
    }

    /// Lab events of one item in one admission, time-sorted.
    pub fn lab_series(&self, hadm_id: i64, item: Symbol) -> impl Iterator<Item = &LabEvent> + '_ {
        self.labs_by_hadm_item
            .get(&(hadm_id, item))
            .map(Vec::as_slice)
            .unwrap_or_default()
            .iter()
            .map(|&r| &self.tables.labevents[r as usize])
    }

    pub fn notes_for_admission(&self, hadm_id: i64) -> impl Iterator<Item = &NoteEvent> + '_ {
        self.postings(&self.notes_by_hadm, hadm_id).map(|r| &self.tables.noteevents[r])
    }

    /// All interval events of an admission, ordered by starttime.
    pub fn intervals_for_admission(&self, hadm_id: i64) -> impl Iterator<Item = &IntervalEvent> + '_ {
        self.postings(&self.intervals_by_hadm, hadm_id).map(|r| &self.intervals[r])
    }

    /// Every event of `kind` linked to the admission, time-sorted with ties in
    /// source order. Chart events are resolved through the admission's stays.
    pub fn events_for_admission(&self, hadm_id: i64, kind: EventKind) -> Result<Vec<Event<'_>>, QueryError> {
        if self.admission(hadm_id).is_none() {
            return Err(QueryError::UnknownAdmission(hadm_id));
        }
        let events = match kind {
            EventKind::Chart => {
                let mut rows: Vec<usize> = self
                    .postings(&self.stays_by_hadm, hadm_id)
                    .flat_map(|s| self.postings(&self.chart_by_stay, self.tables.icustays[s].icustay_id))
                    .collect();
                rows.sort_by_key(|&r| (self.tables.chartevents[r].charttime, r));
                rows.into_iter().map(|r| Event::Chart(&self.tables.chartevents[r])).collect()
            }
            EventKind::Lab => self.lab_events_for_admission(hadm_id).map(Event::Lab).collect(),
            EventKind::Note => self.notes_for_admission(hadm_id).map(Event::Note).collect(),
            _ => {
                let want = kind.interval_kind().expect("interval kind");
                self.intervals_for_admission(hadm_id).filter(|iv| iv.kind == want).map(Event::Interval).collect()
            }
        };
        Ok(events)
    }

    fn postings<'a>(&'a self, index: &'a Index, key: i64) -> impl Iterator<Item = usize> + 'a {
        index.get(&key).map(Vec::as_slice).unwrap_or_default().iter().map(|&r| r as usize)
    }
}

#[cfg(test)]
mod tests;
