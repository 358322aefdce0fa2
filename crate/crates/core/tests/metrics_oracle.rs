use foulscan::metrics::{confusion_at, evaluate, MetricsError};
use foulscan::synthetic::operating_curve_fixture;
use foulscan::{average_precision, pr_curve, select_threshold, slof_from_coverage};
use proptest::prelude::*;

/// AP straight from the definition: for each positive, precision over
/// everything ranked at or above it (ties broken by input order).
fn ap_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let ahead = |i: usize, j: usize| scores[j] > scores[i] || (scores[j] == scores[i] && j <= i);
    let mut sum = 0.0;
    let mut pos = 0;
    for i in (0..scores.len()).filter(|&i| labels[i]) {
        pos += 1;
        let rank = (0..scores.len()).filter(|&j| ahead(i, j)).count();
        let hits = (0..scores.len()).filter(|&j| labels[j] && ahead(i, j)).count();
        sum += hits as f64 / rank as f64;
    }
    sum / pos as f64
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    // a small score alphabet forces many ties
    (1usize..200).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(0u8..8).prop_map(|q| q as f64 / 8.0), 0.0f64..1.0], n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

proptest! {
    #[test]
    fn ap_matches_definition((scores, mut labels) in instance()) {
        labels[0] = true;
        let ap = average_precision(&scores, &labels).unwrap();
        prop_assert!((ap - ap_oracle(&scores, &labels)).abs() <= 1e-12);
        prop_assert!(ap > 0.0 && ap <= 1.0);
    }

    #[test]
    fn pr_curve_matches_threshold_sweep((scores, mut labels) in instance()) {
        labels[0] = true;
        let curve = pr_curve(&scores, &labels).unwrap();
        let mut distinct = scores.clone();
        distinct.sort_by(|a, b| b.total_cmp(a));
        distinct.dedup();
        prop_assert_eq!(&curve.thresholds, &distinct);
        for (i, &t) in curve.thresholds.iter().enumerate() {
            let c = confusion_at(&scores, &labels, t).unwrap();
            prop_assert_eq!(curve.precision[i], c.tp as f64 / (c.tp + c.fp) as f64);
            prop_assert_eq!(curve.recall[i], c.tp as f64 / (c.tp + c.fn_) as f64);
        }
        prop_assert!(curve.recall.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn selected_threshold_is_largest_reaching_target((scores, mut labels) in instance(), target in 0.01f64..=1.0) {
        labels[0] = true;
        let curve = pr_curve(&scores, &labels).unwrap();
        let op = select_threshold(&curve, target).unwrap();
        prop_assert!(op.recall >= target);
        for (i, &t) in curve.thresholds.iter().enumerate() {
            if t > op.threshold {
                prop_assert!(curve.recall[i] < target);
            }
        }
    }

    #[test]
    fn ap_is_invariant_to_monotone_rescaling((scores, mut labels) in instance()) {
        labels[0] = true;
        let squashed: Vec<f64> = scores.iter().map(|s| 0.5 * s + 0.1).collect();
        prop_assert_eq!(average_precision(&scores, &labels), average_precision(&squashed, &labels));
    }
}

#[test]
fn four_item_example() {
    let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
    assert!((ap - 5.0 / 6.0).abs() < 1e-9);
}

#[test]
fn perfect_and_inverted_rankings() {
    let labels = [true, true, false, false];
    assert_eq!(average_precision(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 1.0);
    let inverted = average_precision(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap();
    assert!((inverted - (1.0 / 3.0 + 2.0 / 4.0) / 2.0).abs() < 1e-12);
    assert_eq!(average_precision(&[0.5], &[false]), Err(MetricsError::NoPositives));
}

#[test]
fn operating_point_at_ninety_percent_recall() {
    let (scores, labels) = operating_curve_fixture(11);
    let (report, _) = evaluate(&scores, &labels, 0.9).unwrap();
    assert_eq!(report.positives, 42);
    assert_eq!(report.selected_threshold, 0.25);
    assert!((report.precision_at - 0.76).abs() < 1e-12);
    assert!((report.recall_at - 38.0 / 42.0).abs() < 1e-12);
}

#[test]
fn slof_bands() {
    assert_eq!(slof_from_coverage(0.0).unwrap(), 0);
    assert_eq!(slof_from_coverage(0.10).unwrap(), 1);
    assert_eq!(slof_from_coverage(0.40).unwrap(), 2);
    assert_eq!(slof_from_coverage(0.15).unwrap(), 1);
    assert_eq!(slof_from_coverage(0.16).unwrap(), 2);
    assert!(slof_from_coverage(1.5).is_err());
    let mut prev = 0;
    for i in 0..=1000 {
        let s = slof_from_coverage(i as f64 * 0.001).unwrap();
        assert!(s >= prev);
        prev = s;
    }
}
