//! Discrimination and calibration metrics.
//!
//! AUC in its Mann-Whitney form (ties credited one half), percentile
//! bootstrap intervals, equal-count calibration deciles and the
//! Hosmer-Lemeshow goodness-of-fit test.

mod special;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub use special::{chi2_sf, gamma_q, ln_gamma};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const HL_GROUPS: usize = 10;
/// Redraws allowed for a bootstrap resample that lacks one class.
const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("need at least {needed} samples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("scores and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degenerate Hosmer-Lemeshow grouping: {0}")]
    DegenerateBin(String),
    #[error("domain error: {0}")]
    Domain(String),
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<(), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), labels.len()));
    }
    Ok(())
}

/// Area under the ROC curve: `P(s+ > s-) + P(s+ = s-)/2` over all
/// positive/negative pairs, computed from mid-ranks in `O(n log n)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of 1-based mid-ranks of the positives; exact in f64 (integers and halves).
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let positives = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum += mid_rank * positives as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub lo: f64,
    pub hi: f64,
    /// Resamples dropped after exhausting redraws for a missing class.
    pub skipped: usize,
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 2.5/97.5 percentile bootstrap interval of the AUC, resampling rows with
/// replacement. Resamples are drawn sequentially from one seeded stream; a
/// resample missing a class is redrawn up to ten times, then skipped.
pub fn bootstrap_auc_ci(
    scores: &[f64],
    labels: &[bool],
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapInterval, MetricsError> {
    auc(scores, labels)?;
    let n = scores.len();
    let mut rng = rng::stream(seed, rng::purpose::BOOTSTRAP, 0);
    let mut stats = Vec::with_capacity(n_resamples);
    let mut skipped = 0;
    let mut s = vec![0.0; n];
    let mut y = vec![false; n];
    for _ in 0..n_resamples {
        let mut accepted = false;
        for _ in 0..=MAX_REDRAWS {
            for k in 0..n {
                let i = rng.random_range(0..n);
                s[k] = scores[i];
                y[k] = labels[i];
            }
            if let Ok(a) = auc(&s, &y) {
                stats.push(a);
                accepted = true;
                break;
            }
        }
        if !accepted {
            skipped += 1;
        }
    }
    if stats.is_empty() {
        return Err(MetricsError::SingleClass);
    }
    stats.sort_by(f64::total_cmp);
    Ok(BootstrapInterval { lo: quantile_sorted(&stats, 0.025), hi: quantile_sorted(&stats, 0.975), skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_pred: f64,
    pub obs_rate: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct RiskGroup {
    expected_events: f64,
    expected_non_events: f64,
    events: usize,
    count: usize,
}

impl RiskGroup {
    fn merge(&mut self, other: RiskGroup) {
        self.expected_events += other.expected_events;
        self.expected_non_events += other.expected_non_events;
        self.events += other.events;
        self.count += other.count;
    }
}

/// Sort by probability and cut into `g` contiguous groups of size `n / g`,
/// the first `n % g` groups taking one extra row.
fn risk_groups(probs: &[f64], labels: &[bool], g: usize) -> Result<Vec<RiskGroup>, MetricsError> {
    check_lengths(probs, labels)?;
    let n = probs.len();
    if n < g || g == 0 {
        return Err(MetricsError::TooFew { needed: g.max(1), got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let mut groups = Vec::with_capacity(g);
    let mut start = 0;
    for k in 0..g {
        let size = n / g + usize::from(k < n % g);
        let mut grp = RiskGroup::default();
        for &i in &order[start..start + size] {
            grp.expected_events += probs[i];
            grp.expected_non_events += 1.0 - probs[i];
            grp.events += usize::from(labels[i]);
            grp.count += 1;
        }
        groups.push(grp);
        start += size;
    }
    Ok(groups)
}

/// Equal-count deciles of predicted risk with the observed event rate in each.
pub fn calibration_deciles(probs: &[f64], labels: &[bool]) -> Result<Vec<CalibrationBin>, MetricsError> {
    Ok(risk_groups(probs, labels, 10)?
        .into_iter()
        .map(|g| CalibrationBin {
            mean_pred: g.expected_events / g.count as f64,
            obs_rate: g.events as f64 / g.count as f64,
            count: g.count,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HosmerLemeshow {
    pub chi2: f64,
    pub dof: u32,
    pub p_value: f64,
    /// Groups remaining after merging degenerate ones.
    pub groups: usize,
}

/// Hosmer-Lemeshow test over `g` equal-count risk groups, `dof = groups - 2`.
///
/// A group whose expected event (or non-event) count is zero is merged into
/// its neighbour on the side of the centre before the statistic is formed.
pub fn hosmer_lemeshow(probs: &[f64], labels: &[bool], g: usize) -> Result<HosmerLemeshow, MetricsError> {
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(MetricsError::Domain("probabilities must lie in [0, 1]".into()));
    }
    let mut groups = risk_groups(probs, labels, g)?;
    while let Some(i) = groups.iter().position(|g| g.expected_events <= 0.0 || g.expected_non_events <= 0.0) {
        if groups.len() <= 1 {
            return Err(MetricsError::DegenerateBin("all groups have a zero expected count".into()));
        }
        let len = groups.len();
        let target = if 2 * i + 1 < len { i + 1 } else { i - 1 };
        let removed = groups.remove(i);
        let target = if target > i { target - 1 } else { target };
        groups[target].merge(removed);
    }
    if groups.len() < 3 {
        return Err(MetricsError::DegenerateBin(format!("only {} groups after merging", groups.len())));
    }
    let chi2: f64 = groups
        .iter()
        .map(|g| {
            let o1 = g.events as f64;
            let o0 = (g.count - g.events) as f64;
            (o1 - g.expected_events).powi(2) / g.expected_events
                + (o0 - g.expected_non_events).powi(2) / g.expected_non_events
        })
        .sum();
    let dof = (groups.len() - 2) as u32;
    Ok(HosmerLemeshow { chi2, dof, p_value: chi2_sf(chi2, dof)?, groups: groups.len() })
}

/// Held-out performance of one horizon model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub t_hours: u32,
    /// Cohort support at this horizon (train and test).
    pub n_patients: usize,
    pub n_events: usize,
    pub n_test: usize,
    pub n_test_events: usize,
    pub auc: f64,
    pub auc_ci_lo: f64,
    pub auc_ci_hi: f64,
    pub bootstrap_skipped: usize,
    pub hl_chi2: Option<f64>,
    pub hl_dof: Option<u32>,
    pub hl_p: Option<f64>,
    pub calibration_bins: Vec<CalibrationBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedHorizon {
    pub t_hours: u32,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub horizons: Vec<HorizonMetrics>,
    pub skipped: Vec<SkippedHorizon>,
}

/// Score one horizon's test set. `probs` are calibrated probabilities.
pub fn evaluate_horizon(
    t_hours: u32,
    support: (usize, usize),
    probs: &[f64],
    labels: &[bool],
    n_resamples: usize,
    seed: u64,
) -> Result<HorizonMetrics, MetricsError> {
    let point = auc(probs, labels)?;
    let ci = bootstrap_auc_ci(probs, labels, n_resamples, seed ^ u64::from(t_hours))?;
    let hl = hosmer_lemeshow(probs, labels, HL_GROUPS).ok();
    Ok(HorizonMetrics {
        t_hours,
        n_patients: support.0,
        n_events: support.1,
        n_test: labels.len(),
        n_test_events: labels.iter().filter(|&&y| y).count(),
        auc: point,
        auc_ci_lo: ci.lo,
        auc_ci_hi: ci.hi,
        bootstrap_skipped: ci.skipped,
        hl_chi2: hl.map(|h| h.chi2),
        hl_dof: hl.map(|h| h.dof),
        hl_p: hl.map(|h| h.p_value),
        calibration_bins: calibration_deciles(probs, labels).unwrap_or_default(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

impl EvaluationReport {
    pub fn horizon(&self, t_hours: u32) -> Option<&HorizonMetrics> {
        self.horizons.iter().find(|h| h.t_hours == t_hours)
    }

    /// `t_hours,n,events,auc,lo,hi,hl_chi2,hl_p`, one row per horizon.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_hours,n,events,auc,lo,hi,hl_chi2,hl_p\n");
        for h in &self.horizons {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                h.t_hours,
                h.n_patients,
                h.n_events,
                h.auc,
                h.auc_ci_lo,
                h.auc_ci_hi,
                opt(h.hl_chi2),
                opt(h.hl_p)
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:>5} {:>6} {:>6} {:>6} {:>6} {:>6} {:>15} {:>8} {:>8}\n",
            "t(h)", "n", "events", "n_test", "ev_tst", "AUC", "95% CI", "HL chi2", "HL p"
        );
        for h in &self.horizons {
            out.push_str(&format!(
                "{:>5} {:>6} {:>6} {:>6} {:>6} {:>6.3} [{:>5.3},{:>5.3}] {:>8} {:>8}\n",
                h.t_hours,
                h.n_patients,
                h.n_events,
                h.n_test,
                h.n_test_events,
                h.auc,
                h.auc_ci_lo,
                h.auc_ci_hi,
                h.hl_chi2.map_or("-".into(), |v| format!("{v:.2}")),
                h.hl_p.map_or("-".into(), |v| format!("{v:.4}")),
            ));
        }
        for s in &self.skipped {
            out.push_str(&format!("{:>5} skipped: {}\n", s.t_hours, s.reason));
        }
        out
    }
}

#[cfg(test)]
mod tests;
