use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(n^2) pairwise oracle.
fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                credit += 1.0;
            } else if scores[i] == scores[j] {
                credit += 0.5;
            }
        }
    }
    credit / pairs
}

#[test]
fn auc_examples() {
    assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
    assert_eq!(auc(&[0.3; 6], &[false, true, false, true, true, false]).unwrap(), 0.5);
    assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(), 0.75);
    assert_eq!(auc(&[0.1, 0.2], &[true, true]), Err(MetricsError::SingleClass));
    assert!(matches!(auc(&[0.1], &[true, false]), Err(MetricsError::LengthMismatch(1, 2))));
}

#[test]
fn auc_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        // coarse scores so ties are common
        let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 20.0).floor() / 20.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        assert!((auc(&scores, &labels).unwrap() - brute_auc(&scores, &labels)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn auc_invariant_under_monotone_maps(
        raw in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..80),
        scale in 0.1f64..10.0,
        shift in -3.0f64..3.0,
    ) {
        let mut labels: Vec<bool> = raw.iter().map(|r| r.1).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let mapped: Vec<f64> = scores.iter().map(|s| (scale * s + shift).tanh() * 3.0 + s.powi(3)).collect();
        prop_assert!((auc(&scores, &labels).unwrap() - auc(&mapped, &labels).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn calibration_bins_partition_sorted_probs(probs in prop::collection::vec(0.0f64..1.0, 10..300)) {
        let labels: Vec<bool> = probs.iter().map(|p| *p > 0.5).collect();
        let bins = calibration_deciles(&probs, &labels).unwrap();
        prop_assert_eq!(bins.len(), 10);
        prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), probs.len());
        prop_assert!(bins.windows(2).all(|w| w[0].mean_pred <= w[1].mean_pred + 1e-12));
        let n = probs.len();
        for (k, b) in bins.iter().enumerate() {
            prop_assert_eq!(b.count, n / 10 + usize::from(k < n % 10));
        }
    }

    #[test]
    fn chi2_sf_decreasing(k in 1u32..30, x in 0.0f64..60.0, dx in 0.01f64..5.0) {
        prop_assert!(chi2_sf(x + dx, k).unwrap() < chi2_sf(x, k).unwrap() || chi2_sf(x, k).unwrap() < 1e-300);
    }
}

#[test]
fn chi2_sf_two_dof_closed_form_grid() {
    for i in 0..50 {
        let x = i as f64 * 0.8;
        assert!((chi2_sf(x, 2).unwrap() - (-x / 2.0).exp()).abs() < 1e-10, "x={x}");
    }
}

#[test]
fn bootstrap_is_deterministic_and_brackets_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let labels: Vec<bool> = (0..300).map(|_| rng.random_bool(0.3)).collect();
    let scores: Vec<f64> = labels.iter().map(|&y| rng.random::<f64>() + if y { 0.4 } else { 0.0 }).collect();
    let a = bootstrap_auc_ci(&scores, &labels, 200, 9).unwrap();
    let b = bootstrap_auc_ci(&scores, &labels, 200, 9).unwrap();
    assert_eq!(a, b);
    let point = auc(&scores, &labels).unwrap();
    assert!(a.lo <= point && point <= a.hi);

    let tiny = bootstrap_auc_ci(&[0.1, 0.5, 0.3, 0.7, 0.2, 0.9], &[false, true, false, true, false, true], 1000, 3)
        .unwrap();
    assert!(tiny.lo <= 1.0 && tiny.lo <= tiny.hi);
}

#[test]
fn bootstrap_narrow_for_large_separated_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let scores: Vec<f64> = labels.iter().map(|&y| rng.random::<f64>() + if y { 0.8 } else { 0.0 }).collect();
    let ci = bootstrap_auc_ci(&scores, &labels, 1000, 4).unwrap();
    let point = auc(&scores, &labels).unwrap();
    assert!(ci.hi - ci.lo < 0.05, "{ci:?}");
    assert!(ci.lo <= point && point <= ci.hi);
    assert_eq!(ci.skipped, 0);
}

#[test]
fn deciles_examples() {
    assert!(matches!(calibration_deciles(&[0.5; 9], &[true; 9]), Err(MetricsError::TooFew { .. })));
    let probs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    let labels = [false, false, true, false, true, false, true, true, false, true];
    let bins = calibration_deciles(&probs, &labels).unwrap();
    assert!(bins.iter().all(|b| b.count == 1));
    assert_eq!(bins[2].obs_rate, 1.0);
    assert_eq!(bins[3].mean_pred, 0.3);

    // constant probability p with event rate r
    let labels: Vec<bool> = (0..1000).map(|i| i % 5 == 0).collect();
    let bins = calibration_deciles(&[0.2; 1000], &labels).unwrap();
    for b in bins {
        assert!((b.mean_pred - 0.2).abs() < 1e-12);
        assert_eq!(b.count, 100);
        assert!((b.obs_rate - 0.2).abs() < 0.05);
    }
}

#[test]
fn deciles_track_true_bernoulli_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let probs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    let labels: Vec<bool> = probs.iter().map(|&p| rng.random_bool(p)).collect();
    let bins = calibration_deciles(&probs, &labels).unwrap();
    let worst = bins.iter().map(|b| (b.mean_pred - b.obs_rate).abs()).fold(0.0, f64::max);
    assert!(worst < 0.02, "{worst}");
}

const FIXTURE_PROBS: [f64; 40] = [
    0.03, 0.91, 0.12, 0.45, 0.67, 0.08, 0.22, 0.81, 0.55, 0.34, 0.05, 0.72, 0.18, 0.49, 0.63, 0.27, 0.39, 0.95,
    0.14, 0.58, 0.02, 0.86, 0.31, 0.44, 0.76, 0.10, 0.25, 0.69, 0.52, 0.37, 0.07, 0.83, 0.16, 0.41, 0.61, 0.29,
    0.35, 0.88, 0.21, 0.50,
];
const FIXTURE_LABELS: [u8; 40] = [
    0, 1, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 0,
    1, 0, 1,
];

/// Frozen output of `tests/oracles/hl_reference.py` (numpy + scipy).
const FIXTURE_CHI2: f64 = 3.733_363_445_096_379_1;
const FIXTURE_P: f64 = 0.880_343_570_595_030_1;

pub(crate) fn hl_fixture() -> (Vec<f64>, Vec<bool>) {
    (FIXTURE_PROBS.to_vec(), FIXTURE_LABELS.iter().map(|&y| y == 1).collect())
}

#[test]
fn hosmer_lemeshow_matches_reference_fixture() {
    let (probs, labels) = hl_fixture();
    let hl = hosmer_lemeshow(&probs, &labels, 10).unwrap();
    assert!((hl.chi2 - FIXTURE_CHI2).abs() < 1e-6, "{}", hl.chi2);
    assert!((hl.p_value - FIXTURE_P).abs() < 1e-6);
    assert_eq!(hl.dof, 8);
}

#[test]
fn hosmer_lemeshow_zero_statistic() {
    // every group has identical probability 0.5 and exactly half events
    let probs = vec![0.5; 20];
    let labels: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
    // groups of 2 after a stable sort: indices (0,1), (2,3), ... each one event
    let hl = hosmer_lemeshow(&probs, &labels, 10).unwrap();
    assert_eq!(hl.chi2, 0.0);
    assert_eq!(hl.p_value, 1.0);
}

#[test]
fn hosmer_lemeshow_merges_degenerate_groups() {
    let mut probs = vec![0.0; 10];
    probs.extend((0..90).map(|i| 0.05 + i as f64 / 100.0));
    let labels: Vec<bool> = (0..100).map(|i| i % 3 == 0 && i >= 10).collect();
    let hl = hosmer_lemeshow(&probs, &labels, 10).unwrap();
    assert_eq!(hl.groups, 9);
    assert_eq!(hl.dof, 7);
    assert!(hl.chi2.is_finite());

    let all_zero = vec![0.0; 30];
    assert!(matches!(hosmer_lemeshow(&all_zero, &[false; 30], 10), Err(MetricsError::DegenerateBin(_))));
}

/// Labels drawn from sigmoid(-1.5 + x); the probabilities handed to HL are
/// refit with Platt scaling on the raw scores, like a deployed model.
fn platt_fitted_sample(seed: u64, n: usize) -> (Vec<f64>, Vec<bool>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y: Vec<bool> = x.iter().map(|&x| rng.random::<f64>() < crate::riskmodel::sigmoid(-1.5 + x)).collect();
    let platt = crate::riskmodel::fit_platt(&x, &y).unwrap();
    (x.iter().map(|&z| platt.apply(z)).collect(), y)
}

#[test]
fn hl_statistic_averages_its_degrees_of_freedom() {
    let stats: Vec<HosmerLemeshow> =
        (0..100).map(|seed| {
            let (p, y) = platt_fitted_sample(seed, 10_000);
            hosmer_lemeshow(&p, &y, 10).unwrap()
        }).collect();
    assert!(stats.iter().all(|s| s.dof == 8));
    let mean = stats.iter().map(|s| s.chi2).sum::<f64>() / stats.len() as f64;
    assert!((mean / 8.0 - 1.0).abs() <= 0.2, "mean chi2 {mean}");
}

#[test]
fn report_csv_layout() {
    let (probs, labels) = hl_fixture();
    let m = evaluate_horizon(12, (100, 20), &probs, &labels, 100, 1).unwrap();
    let report = EvaluationReport { horizons: vec![m], skipped: vec![] };
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_hours,n,events,auc,lo,hi,hl_chi2,hl_p"));
    assert!(lines.next().unwrap().starts_with("12,100,20,"));
    assert!(report.to_table().contains("AUC"));
}
