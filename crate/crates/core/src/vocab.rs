//! Canonical item names and the series category table.

/// The 29 model features, vitals first then labs, in the fixed order used
/// for every feature vector (window-major, this order within a window).
pub const FEATURE_NAMES: [&str; 29] = [
    // vitals
    "diastolic_bp",
    "systolic_bp",
    "mean_bp",
    "gcs_total",
    "heart_rate",
    "respiratory_rate",
    "temperature",
    "weight",
    "wbc",
    "ph",
    // labs
    "anion_gap",
    "bicarbonate",
    "bun",
    "chloride",
    "creatinine",
    "fio2",
    "glucose",
    "hematocrit",
    "hemoglobin",
    "inr",
    "lactate",
    "magnesium",
    "oxygen_saturation",
    "ptt",
    "phosphate",
    "platelets",
    "potassium",
    "prothrombin_time",
    "sodium",
];

pub const FEATURES_PER_WINDOW: usize = FEATURE_NAMES.len();

/// Category names in display order; [`OTHER`] is the fallback and sorts last.
pub const CATEGORIES: [&str; 5] = ["Blood Gases", "Chemistry", "Hematology", "Vitals", "Respiratory"];

pub const OTHER: &str = "Other";

const CATEGORY_TABLE: &[(&str, &[&str])] = &[
    ("Blood Gases", &["ph", "lactate"]),
    (
        "Chemistry",
        &[
            "anion_gap",
            "bicarbonate",
            "bun",
            "chloride",
            "creatinine",
            "glucose",
            "magnesium",
            "phosphate",
            "potassium",
            "sodium",
        ],
    ),
    (
        "Hematology",
        &["wbc", "hematocrit", "hemoglobin", "platelets", "inr", "ptt", "prothrombin_time"],
    ),
    (
        "Vitals",
        &[
            "diastolic_bp",
            "systolic_bp",
            "mean_bp",
            "gcs_total",
            "heart_rate",
            "respiratory_rate",
            "temperature",
            "weight",
            "oxygen_saturation",
        ],
    ),
    ("Respiratory", &["oxygen_saturation", "fio2"]),
];

/// Every category an item belongs to, in display order. Unknown items map to
/// `["Other"]`.
pub fn categories_for(item: &str) -> Vec<&'static str> {
    let found: Vec<&'static str> = CATEGORY_TABLE
        .iter()
        .filter(|(_, items)| items.contains(&item))
        .map(|(cat, _)| *cat)
        .collect();
    if found.is_empty() {
        vec![OTHER]
    } else {
        found
    }
}
