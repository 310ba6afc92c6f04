//! The fixed case-study patient: an elderly man admitted through the ED with
//! pneumonia, ventilated with a break in the middle of the stay, started on
//! vasopressors late, and dying on day seven after comfort care.

use chrono::{Duration, NaiveTime};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::profiles::{self, Cadence, PROFILES};
use super::{severity_bucket, Emitter, SynthConfig, SIGNAL_STRONG};
use crate::datastore::*;
use crate::rng::{self, purpose};
use crate::time::{self, Timestamp};

pub const CASE_STUDY_SUBJECT: i64 = 90_000_001;
pub const CASE_STUDY_HADM: i64 = 90_000_011;
pub const CASE_STUDY_ICUSTAY: i64 = 90_000_021;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseStudyIds {
    pub subject_id: i64,
    pub hadm_id: i64,
    pub icustay_id: i64,
}

pub const IDS: CaseStudyIds =
    CaseStudyIds { subject_id: CASE_STUDY_SUBJECT, hadm_id: CASE_STUDY_HADM, icustay_id: CASE_STUDY_ICUSTAY };

/// Hours after ICU admission.
const DEATH_H: i64 = 146;
const VENT_GAP: (i64, i64) = (98, 108);
const PRESSOR_START_H: i64 = 112;
const ED_HOURS: i64 = 6;

fn severity(k: f64) -> f64 {
    0.2 + 2.2 * (k / DEATH_H as f64).powi(2)
}

fn wbc_curve(k: f64) -> f64 {
    16.4 + 12.3 * (-((k - 118.0) / 30.0).powi(2)).exp()
}

fn in_gap(k: f64) -> bool {
    k >= VENT_GAP.0 as f64 && k < VENT_GAP.1 as f64
}

pub(super) fn emit(em: &mut Emitter, _cfg: &SynthConfig) {
    let mut rng = rng::stream(0, purpose::SYNTH_CASE_STUDY, 0);
    let intime = time::parse("2150-11-23T08:00:00").expect("fixture date");
    let admittime = intime - time::hours(ED_HOURS);
    let death = intime + time::hours(DEATH_H);
    let at_h = |k: f64| intime + Duration::seconds((k * 3600.0).round() as i64);
    let hours_of = |t: Timestamp| time::hours_between(intime, t);

    let dob = (admittime - Duration::days((80.4 * 365.25) as i64)).date().and_time(NaiveTime::MIN);
    em.t.patients.push(Patient { subject_id: IDS.subject_id, gender: Gender::M, dob, dod: Some(death) });
    em.t.admissions.push(Admission {
        hadm_id: IDS.hadm_id,
        subject_id: IDS.subject_id,
        admittime,
        dischtime: death,
        deathtime: Some(death),
        admission_diagnosis: "PNEUMONIA; CONGESTIVE HEART FAILURE".into(),
    });
    em.t.diagnoses.push(DiagnosisRecord { hadm_id: IDS.hadm_id, icd9_code: "486".into(), seq_num: 1 });
    em.t.diagnoses.push(DiagnosisRecord { hadm_id: IDS.hadm_id, icd9_code: "4280".into(), seq_num: 2 });
    em.t.icustays.push(IcuStay {
        icustay_id: IDS.icustay_id,
        hadm_id: IDS.hadm_id,
        subject_id: IDS.subject_id,
        intime,
        outtime: death,
        first_careunit: "MICU".into(),
    });
    em.t.transfers.push(TransferRow { hadm_id: IDS.hadm_id, careunit: "ED".into(), intime: admittime, outtime: intime });
    em.t.transfers.push(TransferRow { hadm_id: IDS.hadm_id, careunit: "MICU".into(), intime, outtime: death });
    em.t.services.push(ServiceRow { hadm_id: IDS.hadm_id, transfertime: admittime, service: "MED".into() });
    for (label, from, to) in
        [("ventilation", 3, VENT_GAP.0), ("ventilation", VENT_GAP.1, DEATH_H), ("vasopressor", PRESSOR_START_H, DEATH_H)]
    {
        em.t.interventions.push(InterventionRow {
            icustay_id: IDS.icustay_id,
            label: label.into(),
            starttime: intime + time::hours(from),
            endtime: intime + time::hours(to),
        });
    }

    let spo2 = profiles::profile("oxygen_saturation").expect("profile");
    let wbc = profiles::profile("wbc").expect("profile");
    let weight = profiles::profile("weight").expect("profile");
    for k in 0..DEATH_H {
        let at = intime + time::hours(k) + time::minutes(rng.random_range(0..30));
        let kh = hours_of(at);
        let s = severity(kh);
        for prof in PROFILES.iter().filter(|p| p.cadence == Cadence::Hourly) {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let mut v = prof.mean_at(s, SIGNAL_STRONG) + 0.5 * prof.sd * noise;
            match prof.name {
                "respiratory_rate" if in_gap(kh) => v -= 8.0,
                "diastolic_bp" if kh >= PRESSOR_START_H as f64 => v += 12.0,
                _ => {}
            }
            em.chart(IDS.icustay_id, at, prof, prof.finish(v));
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        let sat = if in_gap(kh) { 86.0 + noise.abs() } else { 96.0 - 1.5 * s + noise };
        em.chart(IDS.icustay_id, at, spo2, spo2.finish(sat));
        if k % 12 == 0 {
            let noise: f64 = StandardNormal.sample(&mut rng);
            em.chart(IDS.icustay_id, at, weight, weight.finish(74.0 + 0.3 * noise));
        }
    }

    // a low white count on arrival in the ED, then the ICU rise
    em.lab(IDS.hadm_id, intime - time::hours(4), wbc, 3.1);
    let mut k = 1.0;
    while k < DEATH_H as f64 {
        let at = at_h(k);
        let s = severity(k);
        for prof in PROFILES.iter().filter(|p| matches!(p.cadence, Cadence::Panel | Cadence::PanelCharted)) {
            if prof.name == "oxygen_saturation" {
                continue;
            }
            let noise: f64 = StandardNormal.sample(&mut rng);
            if prof.name == "wbc" {
                em.chart(IDS.icustay_id, at, prof, prof.finish(wbc_curve(k) + 0.3 * noise));
                continue;
            }
            let v = prof.finish(prof.mean_at(s, SIGNAL_STRONG) + 0.5 * prof.sd * noise);
            if prof.cadence == Cadence::PanelCharted {
                em.chart(IDS.icustay_id, at, prof, v);
            } else {
                em.lab(IDS.hadm_id, at, prof, v);
            }
        }
        k += 6.0;
    }

    let note = |k: i64, category: &str, text: String| NoteEvent {
        hadm_id: IDS.hadm_id,
        charttime: intime + time::hours(k),
        category: category.into(),
        text,
    };
    em.t.noteevents.push(note(-5, "Physician", "ED admission note. Fever, productive cough and hypoxia; febrile, right lower lobe infiltrate on chest film. Admit to MICU.".into()));
    for k in (10..DEATH_H).step_by(12) {
        let bucket = severity_bucket(severity(k as f64));
        em.t.noteevents.push(note(k, "Nursing", format!("Nursing progress note, ICU hour {k}. Patient {bucket}; ventilator settings reviewed.")));
    }
    em.t.noteevents.push(note(30, "Echo", "Echocardiogram: moderately depressed left ventricular function, ejection fraction 30%.".into()));
    em.t.noteevents.push(note(100, "Physician", "Extubated trial this morning; desaturating to high 80s, increased work of breathing.".into()));
    em.t.noteevents.push(note(110, "Radiology", "Chest film: worsening bilateral infiltrates after reintubation.".into()));
    em.t.noteevents.push(note(140, "Physician", "Family meeting held. Transitioned to comfort measures only.".into()));
}
