//! Deterministic MIMIC-shaped datasets driven by a latent severity process.
//!
//! Each admission carries an hourly AR(1) severity trajectory around a
//! baseline drawn from N(0, 1). In-hospital death is Bernoulli with
//! probability `sigmoid(a + KAPPA * baseline)`, where the intercept `a` is
//! solved so the expected death rate per admission equals
//! `mortality_base_rate`. Only a patient's last admission can end in death.
//! Measurements couple to severity through the table in [`profiles`] scaled
//! by `signal_strength`; with strength 0 they are pure noise.

mod case_study;
pub mod profiles;

use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveTime};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use thiserror::Error;

use crate::datastore::*;
use crate::rng::{self, purpose, Stream};
use crate::time::{self, Timestamp};

pub use case_study::{CaseStudyIds, CASE_STUDY_HADM, CASE_STUDY_ICUSTAY, CASE_STUDY_SUBJECT};
use profiles::{Cadence, FeatureProfile, PROFILES};

pub const SIGNAL_STRONG: f64 = 1.0;
pub const SIGNAL_WEAK: f64 = 0.3;
pub const SIGNAL_NULL: f64 = 0.0;

/// Slope of the death log-odds in the baseline severity.
pub const KAPPA: f64 = 2.5;
/// Probability that a patient has a second admission.
pub const READMIT_PROB: f64 = 0.2;
pub const DEFAULT_PHI: f64 = 0.9;
pub const DEFAULT_SIGMA: f64 = 0.25;
/// Severity added at the moment of death, ramping in over the final day.
pub const TERMINAL_RAMP: f64 = 1.5;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub seed: u64,
    pub mortality_base_rate: f64,
    pub signal_strength: f64,
    pub mean_icu_los_hours: f64,
    pub note_rate_per_day: f64,
    /// Append the fixed case-study patient after the generated ones.
    pub include_case_study: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 1000,
            seed: 0,
            mortality_base_rate: 0.15,
            signal_strength: SIGNAL_STRONG,
            mean_icu_los_hours: 96.0,
            note_rate_per_day: 4.0,
            include_case_study: false,
        }
    }
}

/// Parses a preset name (`strong`, `weak`, `null`) or a number.
pub fn parse_signal(s: &str) -> Option<f64> {
    match s {
        "strong" => Some(SIGNAL_STRONG),
        "weak" => Some(SIGNAL_WEAK),
        "null" | "none" => Some(SIGNAL_NULL),
        _ => s.parse().ok().filter(|v: &f64| *v >= 0.0 && v.is_finite()),
    }
}

impl SynthConfig {
    pub fn new(n_patients: usize, seed: u64) -> Self {
        Self { n_patients, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        let max_rate = 1.0 / (1.0 + READMIT_PROB);
        if !(self.mortality_base_rate > 0.0 && self.mortality_base_rate < max_rate) {
            return bad(format!("mortality_base_rate must lie in (0, {max_rate:.4})"));
        }
        if !(self.signal_strength >= 0.0 && self.signal_strength.is_finite()) {
            return bad("signal_strength must be >= 0".into());
        }
        if !(self.mean_icu_los_hours > 0.0 && self.mean_icu_los_hours.is_finite()) {
            return bad("mean_icu_los_hours must be positive".into());
        }
        if !(self.note_rate_per_day >= 0.0 && self.note_rate_per_day.is_finite()) {
            return bad("note_rate_per_day must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverityParams {
    pub phi: f64,
    pub sigma: f64,
    pub mu: f64,
}

/// `s_0 = mu`, `s_{k+1} = mu + phi (s_k - mu) + sigma e_k`; `steps` values.
pub fn severity_trajectory<R: Rng + ?Sized>(params: SeverityParams, steps: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps);
    let mut s = params.mu;
    for _ in 0..steps {
        out.push(s);
        let e: f64 = StandardNormal.sample(rng);
        s = params.mu + params.phi * (s - params.mu) + params.sigma * e;
    }
    out
}

fn sigmoid(z: f64) -> f64 {
    crate::riskmodel::sigmoid(z)
}

/// `E[sigmoid(a + KAPPA Z)]` for standard normal `Z` (Simpson's rule).
pub fn expected_death_rate(a: f64) -> f64 {
    const N: usize = 2000;
    let (lo, hi) = (-8.0f64, 8.0f64);
    let hstep = (hi - lo) / N as f64;
    let f = |z: f64| sigmoid(a + KAPPA * z) * (-0.5 * z * z).exp();
    let mut acc = f(lo) + f(hi);
    for i in 1..N {
        acc += f(lo + i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * hstep / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
}

/// Intercept whose expected death probability equals `rate`.
pub fn mortality_intercept(rate: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected_death_rate(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Diagnosis {
    code: &'static str,
    text: &'static str,
    service: &'static str,
    weight: f64,
}

const DIAGNOSES: [Diagnosis; 8] = [
    Diagnosis { code: "486", text: "PNEUMONIA", service: "MED", weight: 0.20 },
    Diagnosis { code: "0389", text: "SEPSIS", service: "MED", weight: 0.18 },
    Diagnosis { code: "4280", text: "CONGESTIVE HEART FAILURE", service: "CMED", weight: 0.15 },
    Diagnosis { code: "41071", text: "MYOCARDIAL INFARCTION", service: "CMED", weight: 0.12 },
    Diagnosis { code: "5849", text: "ACUTE RENAL FAILURE", service: "MED", weight: 0.10 },
    Diagnosis { code: "51881", text: "ACUTE RESPIRATORY FAILURE", service: "MED", weight: 0.10 },
    Diagnosis { code: "431", text: "INTRACEREBRAL HEMORRHAGE", service: "NMED", weight: 0.08 },
    Diagnosis { code: "5770", text: "ACUTE PANCREATITIS", service: "SURG", weight: 0.07 },
];

const SECONDARY: [&str; 4] = ["4019", "25000", "42731", "5990"];
const NOTE_CATEGORIES: [&str; 4] = ["Nursing", "Physician", "Echo", "Radiology"];
const SERVICES: [&str; 4] = ["MED", "SURG", "CMED", "NMED"];

fn careunit_for(service: &str, rng: &mut Stream) -> &'static str {
    match service {
        "CMED" => "CCU",
        "SURG" if rng.random_bool(0.3) => "CSRU",
        "SURG" | "NMED" => "SICU",
        _ => "MICU",
    }
}

pub fn severity_bucket(s: f64) -> &'static str {
    if s < 0.5 {
        "stable"
    } else if s < 1.5 {
        "guarded"
    } else {
        "critical"
    }
}

/// Ventilation starts at this severity and stops below the second value;
/// likewise for vasopressors.
const VENT_THRESHOLDS: (f64, f64) = (1.0, 0.6);
const PRESSOR_THRESHOLDS: (f64, f64) = (1.6, 1.2);

/// Timestamps and handles shared by the generators.
struct Emitter {
    t: TableSet,
    signal: f64,
}

impl Emitter {
    fn chart(&mut self, icustay_id: i64, at: Timestamp, prof: &FeatureProfile, value: f64) {
        let item = self.t.symbols.intern(prof.name);
        let unit = self.t.symbols.intern(prof.unit);
        self.t.chartevents.push(ChartEvent { icustay_id, charttime: at, item, value_num: value, unit });
    }

    fn lab(&mut self, hadm_id: i64, at: Timestamp, prof: &FeatureProfile, value: f64) {
        let item = self.t.symbols.intern(prof.name);
        let unit = self.t.symbols.intern(prof.unit);
        let fluid = self.t.symbols.intern(if prof.fluid.is_empty() { "Blood" } else { prof.fluid });
        self.t.labevents.push(LabEvent { hadm_id, charttime: at, item, value_num: value, unit, fluid });
    }

    fn measure(&self, prof: &FeatureProfile, severity: f64, rng: &mut Stream) -> f64 {
        let noise: f64 = StandardNormal.sample(rng);
        prof.finish(prof.mean_at(severity, self.signal) + prof.sd * noise)
    }
}

fn hours_f(h: f64) -> Duration {
    Duration::seconds((h * 3600.0).round() as i64)
}

/// Closed intervals over the hours where the hysteresis switch is on.
fn threshold_intervals(sev: &[f64], from: usize, to: usize, (on, off): (f64, f64)) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, &s) in sev.iter().enumerate().take(to).skip(from) {
        match start {
            None if s >= on => start = Some(k),
            Some(st) if s < off => {
                out.push((st, k));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        out.push((st, to));
    }
    out
}

struct AdmissionPlan {
    hadm_id: i64,
    icustay_id: i64,
    subject_id: i64,
    admittime: Timestamp,
    mu: f64,
    died: bool,
    has_icu: bool,
}

/// Returns the admission's discharge (or death) time.
fn emit_admission(em: &mut Emitter, cfg: &SynthConfig, plan: &AdmissionPlan, rng: &mut Stream) -> (Timestamp, bool) {
    let weights: Vec<f64> = DIAGNOSES.iter().map(|d| d.weight).collect();
    let dist = rand_distr::weighted::WeightedIndex::new(&weights).expect("weights");
    let diag = &DIAGNOSES[dist.sample(rng)];
    let adm_start = plan.admittime;
    let pre_icu = rng.random_range(1..=12i64);
    let icu_hours = Exp::new(1.0 / cfg.mean_icu_los_hours).expect("rate").sample(rng).round().max(4.0) as i64;
    let (intime, outtime, dischtime) = if plan.has_icu {
        let intime = adm_start + time::hours(pre_icu);
        let outtime = intime + time::hours(icu_hours);
        let disch = if plan.died { outtime } else { outtime + time::hours(rng.random_range(12..=96i64)) };
        (intime, outtime, disch)
    } else {
        let disch = adm_start + time::hours(rng.random_range(24..=240i64));
        (disch, disch, disch)
    };
    let deathtime = plan.died.then_some(dischtime);
    let total_hours = ((dischtime - adm_start).num_hours()) as usize;

    let mut sev = severity_trajectory(
        SeverityParams { phi: DEFAULT_PHI, sigma: DEFAULT_SIGMA, mu: plan.mu },
        total_hours + 1,
        rng,
    );
    if plan.died {
        for (k, s) in sev.iter_mut().enumerate() {
            let to_death = (total_hours - k) as f64;
            if to_death <= 24.0 {
                *s += TERMINAL_RAMP * (1.0 - to_death / 24.0);
            }
        }
    }
    let sev_at = |at: Timestamp| sev[(((at - adm_start).num_minutes() / 60).max(0) as usize).min(total_hours)];

    em.t.admissions.push(Admission {
        hadm_id: plan.hadm_id,
        subject_id: plan.subject_id,
        admittime: adm_start,
        dischtime,
        deathtime,
        admission_diagnosis: diag.text.to_string(),
    });
    em.t.diagnoses.push(DiagnosisRecord { hadm_id: plan.hadm_id, icd9_code: diag.code.into(), seq_num: 1 });
    let mut seq = 2;
    for code in SECONDARY {
        if rng.random_bool(0.35) {
            em.t.diagnoses.push(DiagnosisRecord { hadm_id: plan.hadm_id, icd9_code: code.into(), seq_num: seq });
            seq += 1;
        }
    }

    // locations and services
    let careunit = careunit_for(diag.service, rng);
    em.t.services.push(ServiceRow { hadm_id: plan.hadm_id, transfertime: adm_start, service: diag.service.into() });
    if plan.has_icu {
        em.t.transfers.push(TransferRow { hadm_id: plan.hadm_id, careunit: "ED".into(), intime: adm_start, outtime: intime });
        em.t.transfers.push(TransferRow { hadm_id: plan.hadm_id, careunit: careunit.into(), intime, outtime });
        if dischtime > outtime {
            em.t.transfers.push(TransferRow { hadm_id: plan.hadm_id, careunit: "Ward".into(), intime: outtime, outtime: dischtime });
            if rng.random_bool(0.3) {
                let next = SERVICES.iter().find(|s| **s != diag.service).expect("another service");
                em.t.services.push(ServiceRow { hadm_id: plan.hadm_id, transfertime: outtime, service: (*next).into() });
            }
        }
        em.t.icustays.push(IcuStay {
            icustay_id: plan.icustay_id,
            hadm_id: plan.hadm_id,
            subject_id: plan.subject_id,
            intime,
            outtime,
            first_careunit: careunit.into(),
        });
    } else {
        em.t.transfers.push(TransferRow { hadm_id: plan.hadm_id, careunit: "Ward".into(), intime: adm_start, outtime: dischtime });
    }

    // hourly and twice-daily charting inside the ICU
    if plan.has_icu {
        let weight0 = Normal::new(80.0, 15.0).expect("normal").sample(rng);
        for k in 0..icu_hours {
            let at = intime + time::hours(k) + time::minutes(rng.random_range(0..50));
            let s = sev_at(at);
            for prof in PROFILES.iter().filter(|p| p.cadence == Cadence::Hourly) {
                let v = em.measure(prof, s, rng);
                em.chart(plan.icustay_id, at, prof, v);
            }
            if k % 12 == 0 {
                let prof = profiles::profile("weight").expect("weight profile");
                let noise: f64 = StandardNormal.sample(rng);
                em.chart(plan.icustay_id, at, prof, prof.finish(weight0 + prof.sd * noise));
            }
        }
    }

    // lab panels every 4-12 hours across the admission
    let mut at = adm_start + time::hours(rng.random_range(0..=3)) + time::minutes(rng.random_range(0..60));
    while at < dischtime {
        let s = sev_at(at);
        let in_icu = plan.has_icu && at >= intime - time::hours(CHART_SLACK_HOURS) && at < outtime;
        for prof in PROFILES.iter() {
            let v = match prof.cadence {
                Cadence::Panel | Cadence::PanelCharted => em.measure(prof, s, rng),
                _ => continue,
            };
            if prof.cadence == Cadence::PanelCharted && in_icu {
                em.chart(plan.icustay_id, at, prof, v);
            } else {
                em.lab(plan.hadm_id, at, prof, v);
            }
        }
        at += time::hours(rng.random_range(4..=12)) + time::minutes(rng.random_range(0..30));
    }

    // notes as a Poisson process
    if cfg.note_rate_per_day > 0.0 {
        let gaps = Exp::new(cfg.note_rate_per_day / 24.0).expect("rate");
        let mut at = adm_start + hours_f(gaps.sample(rng));
        at -= Duration::seconds(at.and_utc().timestamp() % 60);
        while at < dischtime {
            let category = NOTE_CATEGORIES[rng.random_range(0..NOTE_CATEGORIES.len())];
            let s = sev_at(at);
            let text = format!(
                "{category} note, hospital hour {}. Patient {}; {}.",
                (at - adm_start).num_hours(),
                severity_bucket(s),
                if s >= 1.5 { "escalation of care discussed" } else { "continue current plan" },
            );
            em.t.noteevents.push(NoteEvent { hadm_id: plan.hadm_id, charttime: at, category: category.into(), text });
            at += hours_f(gaps.sample(rng)).max(time::minutes(1));
            at -= Duration::seconds(at.and_utc().timestamp() % 60);
        }
    }

    // interventions from severity thresholds during the ICU stay
    if plan.has_icu {
        let from = pre_icu as usize;
        let to = from + icu_hours as usize;
        for (label, thresholds) in [("ventilation", VENT_THRESHOLDS), ("vasopressor", PRESSOR_THRESHOLDS)] {
            for (a, b) in threshold_intervals(&sev, from, to, thresholds) {
                em.t.interventions.push(InterventionRow {
                    icustay_id: plan.icustay_id,
                    label: label.into(),
                    starttime: adm_start + time::hours(a as i64),
                    endtime: adm_start + time::hours(b as i64),
                });
            }
        }
    }
    (dischtime, plan.died)
}

fn emit_patient(em: &mut Emitter, cfg: &SynthConfig, intercept: f64, index: usize) {
    let mut rng = rng::stream(cfg.seed, purpose::SYNTH_PATIENT, index as u64);
    let mut frail = rng::stream(cfg.seed, purpose::SYNTH_FRAILTY, index as u64);
    let n_adm = if rng.random_bool(READMIT_PROB) { 2 } else { 1 };
    // The last admission's draw comes first so the death decision depends
    // only on (seed, index) and is monotone in the base rate.
    let mu_last: f64 = StandardNormal.sample(&mut frail);
    let u_last: f64 = frail.random();
    let died = u_last < sigmoid(intercept + KAPPA * mu_last);
    let mut mus = Vec::with_capacity(n_adm);
    for _ in 1..n_adm {
        loop {
            let mu: f64 = StandardNormal.sample(&mut frail);
            let u: f64 = frail.random();
            if u >= sigmoid(intercept + KAPPA * mu) {
                mus.push(mu);
                break;
            }
        }
    }
    mus.push(mu_last);

    let subject_id = 10_000 + index as i64;
    let gender = if rng.random_bool(0.55) { Gender::M } else { Gender::F };
    let base = time::parse("2150-01-01T00:00:00").expect("base date");
    let mut admittime = base + Duration::days(rng.random_range(0..3650)) + time::hours(rng.random_range(0..24));
    let roll: f64 = rng.random();
    let age_years = if roll < 0.02 {
        rng.random_range(1.0..14.0)
    } else if roll < 0.05 {
        300.0
    } else {
        rng.random_range(18.0..90.0)
    };
    let dob = (admittime - Duration::days((age_years * 365.25) as i64)).date().and_time(NaiveTime::MIN);
    let mut dod = None;
    for (j, &mu) in mus.iter().enumerate() {
        let last = j + 1 == n_adm;
        let plan = AdmissionPlan {
            hadm_id: 100_000 + 10 * index as i64 + j as i64,
            icustay_id: 200_000 + 10 * index as i64 + j as i64,
            subject_id,
            admittime,
            mu,
            died: last && died,
            has_icu: j == 0 || (last && died) || rng.random_bool(0.5),
        };
        let (end, dead) = emit_admission(em, cfg, &plan, &mut rng);
        if dead {
            dod = Some(end);
        }
        admittime = end + Duration::days(rng.random_range(10..400)) + time::hours(rng.random_range(0..24));
    }
    if dod.is_none() && rng.random_bool(0.1) {
        dod = Some(admittime + Duration::days(rng.random_range(0..600)));
    }
    em.t.patients.push(Patient { subject_id, gender, dob, dod });
}

/// Generates all tables in memory.
pub fn generate_tables(cfg: &SynthConfig) -> Result<TableSet, SynthError> {
    cfg.validate()?;
    let intercept = mortality_intercept(cfg.mortality_base_rate * (1.0 + READMIT_PROB));
    let mut em = Emitter { t: TableSet::default(), signal: cfg.signal_strength };
    // fixed interning order keeps symbol ids independent of the data
    for prof in PROFILES.iter() {
        em.t.symbols.intern(prof.name);
    }
    for i in 0..cfg.n_patients {
        emit_patient(&mut em, cfg, intercept, i);
    }
    if cfg.include_case_study {
        case_study::emit(&mut em, cfg);
    }
    Ok(em.t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub counts: TableCounts,
    pub case_study: Option<CaseStudyIds>,
}

/// Generates a dataset and writes the ten CSV files into `dir`.
pub fn generate(cfg: &SynthConfig, dir: &Path) -> Result<SynthSummary, SynthError> {
    let tables = generate_tables(cfg)?;
    write_tables(&tables, dir).map_err(|source| SynthError::Io { path: dir.to_path_buf(), source })?;
    Ok(SynthSummary {
        counts: tables.counts(),
        case_study: cfg.include_case_study.then_some(case_study::IDS),
    })
}

#[cfg(test)]
mod tests;
