//! The ten-file CSV contract, in both directions.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use csv::StringRecord;

use super::records::*;
use super::IngestError;
use crate::time::{self, Timestamp};

pub const PATIENTS: (&str, &[&str]) = ("patients", &["subject_id", "gender", "dob", "dod"]);
pub const ADMISSIONS: (&str, &[&str]) = (
    "admissions",
    &["hadm_id", "subject_id", "admittime", "dischtime", "deathtime", "admission_diagnosis"],
);
pub const ICUSTAYS: (&str, &[&str]) =
    ("icustays", &["icustay_id", "hadm_id", "subject_id", "intime", "outtime", "first_careunit"]);
pub const CHARTEVENTS: (&str, &[&str]) =
    ("chartevents", &["icustay_id", "charttime", "item_name", "value_num", "unit"]);
pub const LABEVENTS: (&str, &[&str]) =
    ("labevents", &["hadm_id", "charttime", "item_name", "value_num", "unit", "fluid"]);
pub const NOTEEVENTS: (&str, &[&str]) = ("noteevents", &["hadm_id", "charttime", "category", "text"]);
pub const INTERVENTIONS: (&str, &[&str]) =
    ("interventions", &["icustay_id", "label", "starttime", "endtime"]);
pub const TRANSFERS: (&str, &[&str]) = ("transfers", &["hadm_id", "careunit", "intime", "outtime"]);
pub const SERVICES: (&str, &[&str]) = ("services", &["hadm_id", "transfertime", "service"]);
pub const DIAGNOSES: (&str, &[&str]) = ("diagnoses", &["hadm_id", "icd9_code", "seq_num"]);

pub const ALL_TABLES: [(&str, &[&str]); 10] = [
    PATIENTS,
    ADMISSIONS,
    ICUSTAYS,
    CHARTEVENTS,
    LABEVENTS,
    NOTEEVENTS,
    INTERVENTIONS,
    TRANSFERS,
    SERVICES,
    DIAGNOSES,
];

pub fn file_name(table: &str) -> String {
    format!("{table}.csv")
}

struct Row<'a> {
    table: &'static str,
    line: u64,
    rec: &'a StringRecord,
}

impl Row<'_> {
    fn err(&self, detail: impl Into<String>) -> IngestError {
        IngestError::ParseError { table: self.table.to_owned(), line: self.line, detail: detail.into() }
    }

    fn text(&self, i: usize) -> Result<&str, IngestError> {
        self.rec.get(i).ok_or_else(|| self.err(format!("missing field {i}")))
    }

    fn int(&self, i: usize) -> Result<i64, IngestError> {
        let raw = self.text(i)?;
        raw.trim().parse().map_err(|_| self.err(format!("bad integer {raw:?}")))
    }

    fn real(&self, i: usize) -> Result<f64, IngestError> {
        let raw = self.text(i)?;
        raw.trim().parse().map_err(|_| self.err(format!("bad number {raw:?}")))
    }

    fn ts(&self, i: usize) -> Result<Timestamp, IngestError> {
        let raw = self.text(i)?;
        time::parse(raw).ok_or_else(|| self.err(format!("bad timestamp {raw:?}")))
    }

    fn opt_ts(&self, i: usize) -> Result<Option<Timestamp>, IngestError> {
        if self.text(i)?.trim().is_empty() {
            Ok(None)
        } else {
            self.ts(i).map(Some)
        }
    }
}

fn for_each_row(
    dir: &Path,
    (table, columns): (&'static str, &[&str]),
    mut f: impl FnMut(Row<'_>) -> Result<(), IngestError>,
) -> Result<(), IngestError> {
    let path = dir.join(file_name(table));
    let file = match File::open(&path) {
        Ok(file) => file,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(IngestError::MissingTable(table.to_owned()))
        }
        Err(source) => return Err(IngestError::Io { path, source }),
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| IngestError::ParseError { table: table.to_owned(), line: 1, detail: e.to_string() })?
        .clone();
    for (i, column) in columns.iter().enumerate() {
        if headers.get(i).map(str::trim) != Some(*column) {
            return Err(IngestError::SchemaMismatch { table: table.to_owned(), column: (*column).to_owned() });
        }
    }
    if let Some(extra) = headers.get(columns.len()) {
        return Err(IngestError::SchemaMismatch { table: table.to_owned(), column: extra.to_owned() });
    }
    let mut rec = StringRecord::new();
    loop {
        match reader.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {
                let line = rec.position().map_or(0, |p| p.line());
                f(Row { table, line, rec: &rec })?;
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(IngestError::ParseError { table: table.to_owned(), line, detail: e.to_string() });
            }
        }
    }
    Ok(())
}

/// Parse all ten tables from `dir`. Only syntax is checked here; referential
/// validation happens in [`super::Datastore::from_tables`].
pub fn read_tables(dir: &Path) -> Result<TableSet, IngestError> {
    for (table, _) in ALL_TABLES {
        if !dir.join(file_name(table)).is_file() {
            return Err(IngestError::MissingTable(table.to_owned()));
        }
    }
    let mut t = TableSet::default();
    for_each_row(dir, PATIENTS, |r| {
        let gender = r.text(1)?.parse().map_err(|e: String| r.err(e))?;
        t.patients.push(Patient { subject_id: r.int(0)?, gender, dob: r.ts(2)?, dod: r.opt_ts(3)? });
        Ok(())
    })?;
    for_each_row(dir, ADMISSIONS, |r| {
        t.admissions.push(Admission {
            hadm_id: r.int(0)?,
            subject_id: r.int(1)?,
            admittime: r.ts(2)?,
            dischtime: r.ts(3)?,
            deathtime: r.opt_ts(4)?,
            admission_diagnosis: r.text(5)?.to_owned(),
        });
        Ok(())
    })?;
    for_each_row(dir, ICUSTAYS, |r| {
        t.icustays.push(IcuStay {
            icustay_id: r.int(0)?,
            hadm_id: r.int(1)?,
            subject_id: r.int(2)?,
            intime: r.ts(3)?,
            outtime: r.ts(4)?,
            first_careunit: r.text(5)?.to_owned(),
        });
        Ok(())
    })?;
    let symbols = &mut t.symbols;
    let chartevents = &mut t.chartevents;
    for_each_row(dir, CHARTEVENTS, |r| {
        chartevents.push(ChartEvent {
            icustay_id: r.int(0)?,
            charttime: r.ts(1)?,
            item: symbols.intern(r.text(2)?),
            value_num: r.real(3)?,
            unit: symbols.intern(r.text(4)?),
        });
        Ok(())
    })?;
    let labevents = &mut t.labevents;
    for_each_row(dir, LABEVENTS, |r| {
        labevents.push(LabEvent {
            hadm_id: r.int(0)?,
            charttime: r.ts(1)?,
            item: symbols.intern(r.text(2)?),
            value_num: r.real(3)?,
            unit: symbols.intern(r.text(4)?),
            fluid: symbols.intern(r.text(5)?),
        });
        Ok(())
    })?;
    for_each_row(dir, NOTEEVENTS, |r| {
        t.noteevents.push(NoteEvent {
            hadm_id: r.int(0)?,
            charttime: r.ts(1)?,
            category: r.text(2)?.to_owned(),
            text: r.text(3)?.to_owned(),
        });
        Ok(())
    })?;
    for_each_row(dir, INTERVENTIONS, |r| {
        t.interventions.push(InterventionRow {
            icustay_id: r.int(0)?,
            label: r.text(1)?.to_owned(),
            starttime: r.ts(2)?,
            endtime: r.ts(3)?,
        });
        Ok(())
    })?;
    for_each_row(dir, TRANSFERS, |r| {
        t.transfers.push(TransferRow {
            hadm_id: r.int(0)?,
            careunit: r.text(1)?.to_owned(),
            intime: r.ts(2)?,
            outtime: r.ts(3)?,
        });
        Ok(())
    })?;
    for_each_row(dir, SERVICES, |r| {
        t.services.push(ServiceRow { hadm_id: r.int(0)?, transfertime: r.ts(1)?, service: r.text(2)?.to_owned() });
        Ok(())
    })?;
    for_each_row(dir, DIAGNOSES, |r| {
        let seq = r.int(2)?;
        let seq_num = u32::try_from(seq).map_err(|_| r.err(format!("bad seq_num {seq}")))?;
        t.diagnoses.push(DiagnosisRecord { hadm_id: r.int(0)?, icd9_code: r.text(1)?.to_owned(), seq_num });
        Ok(())
    })?;
    Ok(t)
}

fn opt(ts: &Option<Timestamp>) -> String {
    ts.as_ref().map(time::format).unwrap_or_default()
}

fn writer(dir: &Path, (table, columns): (&str, &[&str])) -> std::io::Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(dir.join(file_name(table)))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
    w.write_record(columns)?;
    Ok(w)
}

fn finish(w: csv::Writer<BufWriter<File>>) -> std::io::Result<()> {
    let mut inner = w.into_inner().map_err(|e| e.into_error())?;
    inner.flush()
}

/// Write all ten tables into `dir` (created if absent). Output is a pure
/// function of `tables`.
pub fn write_tables(tables: &TableSet, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let sym = |s| tables.symbols.resolve(s);

    let mut w = writer(dir, PATIENTS)?;
    for p in &tables.patients {
        w.write_record([p.subject_id.to_string(), p.gender.to_string(), time::format(&p.dob), opt(&p.dod)])?;
    }
    finish(w)?;

    let mut w = writer(dir, ADMISSIONS)?;
    for a in &tables.admissions {
        w.write_record([
            a.hadm_id.to_string(),
            a.subject_id.to_string(),
            time::format(&a.admittime),
            time::format(&a.dischtime),
            opt(&a.deathtime),
            a.admission_diagnosis.clone(),
        ])?;
    }
    finish(w)?;

    let mut w = writer(dir, ICUSTAYS)?;
    for s in &tables.icustays {
        w.write_record([
            s.icustay_id.to_string(),
            s.hadm_id.to_string(),
            s.subject_id.to_string(),
            time::format(&s.intime),
            time::format(&s.outtime),
            s.first_careunit.clone(),
        ])?;
    }
    finish(w)?;

    let mut w = writer(dir, CHARTEVENTS)?;
    for c in &tables.chartevents {
        w.write_record([
            c.icustay_id.to_string().as_str(),
            &time::format(&c.charttime),
            sym(c.item),
            &c.value_num.to_string(),
            sym(c.unit),
        ])?;
    }
    finish(w)?;

    let mut w = writer(dir, LABEVENTS)?;
    for l in &tables.labevents {
        w.write_record([
            l.hadm_id.to_string().as_str(),
            &time::format(&l.charttime),
            sym(l.item),
            &l.value_num.to_string(),
            sym(l.unit),
            sym(l.fluid),
        ])?;
    }
    finish(w)?;

    let mut w = writer(dir, NOTEEVENTS)?;
    for n in &tables.noteevents {
        w.write_record([n.hadm_id.to_string().as_str(), &time::format(&n.charttime), &n.category, &n.text])?;
    }
    finish(w)?;

    let mut w = writer(dir, INTERVENTIONS)?;
    for i in &tables.interventions {
        w.write_record([
            i.icustay_id.to_string().as_str(),
            &i.label,
            &time::format(&i.starttime),
            &time::format(&i.endtime),
        ])?;
    }
    finish(w)?;

    let mut w = writer(dir, TRANSFERS)?;
    for t in &tables.transfers {
        w.write_record([
            t.hadm_id.to_string().as_str(),
            &t.careunit,
            &time::format(&t.intime),
            &time::format(&t.outtime),
        ])?;
    }
    finish(w)?;

    let mut w = writer(dir, SERVICES)?;
    for s in &tables.services {
        w.write_record([s.hadm_id.to_string().as_str(), &time::format(&s.transfertime), &s.service])?;
    }
    finish(w)?;

    let mut w = writer(dir, DIAGNOSES)?;
    for d in &tables.diagnoses {
        w.write_record([d.hadm_id.to_string(), d.icd9_code.clone(), d.seq_num.to_string()])?;
    }
    finish(w)
}
