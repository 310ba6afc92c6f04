//! Per-feature generator coefficients.
//!
//! A measurement is `baseline + coef * signal_strength * severity + N(0, sd)`,
//! clamped to `[lo, hi]` and rounded to `decimals`. Vital signs are charted
//! hourly in the ICU; everything else is drawn with each lab panel.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    /// Hourly chart event during the ICU stay.
    Hourly,
    /// Chart event every 12 hours during the ICU stay.
    TwiceDaily,
    /// With each lab panel; charted while in the ICU, a lab event otherwise.
    PanelCharted,
    /// With each lab panel as a lab event.
    Panel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureProfile {
    pub name: &'static str,
    pub baseline: f64,
    pub coef: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
    pub decimals: i32,
    pub unit: &'static str,
    pub fluid: &'static str,
    pub cadence: Cadence,
}

const fn p(
    name: &'static str,
    baseline: f64,
    coef: f64,
    sd: f64,
    (lo, hi): (f64, f64),
    decimals: i32,
    unit: &'static str,
    fluid: &'static str,
    cadence: Cadence,
) -> FeatureProfile {
    FeatureProfile { name, baseline, coef, sd, lo, hi, decimals, unit, fluid, cadence }
}

use Cadence::*;

const BLOOD: &str = "Blood";
const ART: &str = "Arterial Blood";

/// Same order as [`crate::vocab::FEATURE_NAMES`].
pub const PROFILES: [FeatureProfile; 29] = [
    p("diastolic_bp", 65.0, -4.0, 8.0, (20.0, 140.0), 0, "mmHg", "", Hourly),
    p("systolic_bp", 120.0, -8.0, 12.0, (50.0, 230.0), 0, "mmHg", "", Hourly),
    p("mean_bp", 80.0, -6.0, 9.0, (30.0, 170.0), 0, "mmHg", "", Hourly),
    p("gcs_total", 13.0, -1.2, 1.5, (3.0, 15.0), 0, "points", "", Hourly),
    p("heart_rate", 88.0, 7.0, 10.0, (30.0, 200.0), 0, "bpm", "", Hourly),
    p("respiratory_rate", 18.0, 2.5, 3.5, (2.0, 50.0), 0, "insp/min", "", Hourly),
    p("temperature", 37.0, 0.3, 0.5, (33.0, 42.0), 1, "degC", "", Hourly),
    p("weight", 80.0, 0.0, 1.0, (2.0, 250.0), 1, "kg", "", TwiceDaily),
    p("wbc", 9.0, 2.5, 2.5, (0.1, 80.0), 1, "K/uL", BLOOD, PanelCharted),
    p("ph", 7.40, -0.04, 0.04, (6.8, 7.8), 2, "units", ART, PanelCharted),
    p("anion_gap", 12.0, 1.5, 2.5, (1.0, 40.0), 0, "mEq/L", BLOOD, Panel),
    p("bicarbonate", 24.0, -1.8, 2.5, (5.0, 50.0), 0, "mEq/L", BLOOD, Panel),
    p("bun", 20.0, 6.0, 8.0, (1.0, 200.0), 0, "mg/dL", BLOOD, Panel),
    p("chloride", 103.0, -0.5, 3.0, (70.0, 140.0), 0, "mEq/L", BLOOD, Panel),
    p("creatinine", 1.1, 0.35, 0.4, (0.1, 15.0), 1, "mg/dL", BLOOD, Panel),
    p("fio2", 40.0, 8.0, 10.0, (21.0, 100.0), 0, "%", ART, Panel),
    p("glucose", 130.0, 12.0, 30.0, (20.0, 800.0), 0, "mg/dL", BLOOD, Panel),
    p("hematocrit", 32.0, -1.5, 4.0, (10.0, 60.0), 1, "%", BLOOD, Panel),
    p("hemoglobin", 10.5, -0.5, 1.4, (3.0, 20.0), 1, "g/dL", BLOOD, Panel),
    p("inr", 1.3, 0.2, 0.25, (0.8, 10.0), 2, "ratio", BLOOD, Panel),
    p("lactate", 1.8, 0.9, 0.8, (0.3, 20.0), 1, "mmol/L", ART, Panel),
    p("magnesium", 2.0, 0.0, 0.25, (0.5, 5.0), 1, "mg/dL", BLOOD, Panel),
    p("oxygen_saturation", 96.0, -1.8, 2.0, (50.0, 100.0), 0, "%", ART, Panel),
    p("ptt", 32.0, 3.0, 6.0, (15.0, 150.0), 1, "sec", BLOOD, Panel),
    p("phosphate", 3.5, 0.4, 0.8, (0.5, 12.0), 1, "mg/dL", BLOOD, Panel),
    p("platelets", 220.0, -25.0, 60.0, (5.0, 900.0), 0, "K/uL", BLOOD, Panel),
    p("potassium", 4.1, 0.15, 0.4, (2.0, 8.0), 1, "mEq/L", BLOOD, Panel),
    p("prothrombin_time", 14.0, 1.5, 2.0, (9.0, 60.0), 1, "sec", BLOOD, Panel),
    p("sodium", 139.0, 0.0, 3.5, (110.0, 170.0), 0, "mEq/L", BLOOD, Panel),
];

pub fn profile(name: &str) -> Option<&'static FeatureProfile> {
    PROFILES.iter().find(|p| p.name == name)
}

impl FeatureProfile {
    /// Deterministic part of a measurement at severity `s`.
    pub fn mean_at(&self, severity: f64, signal_strength: f64) -> f64 {
        self.baseline + self.coef * signal_strength * severity
    }

    /// Clamp to the plausible range and round to the charted precision.
    pub fn finish(&self, v: f64) -> f64 {
        let scale = 10f64.powi(self.decimals);
        (v.clamp(self.lo, self.hi) * scale).round() / scale
    }
}
