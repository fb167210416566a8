use proptest::prelude::*;
use zsdd_core::classify::PredictionRow;
use zsdd_core::metrics::{auprc, fnr, macro_precision_recall, pr_curve, topk_accuracy, BinaryCounts, ConfigEcho, ConfusionMatrix};
use zsdd_core::rng::GaussianStream;
use zsdd_core::evaluate;

fn random_rows(seed: u64, n: usize, classes: usize) -> (Vec<PredictionRow>, Vec<usize>) {
    let mut g = GaussianStream::new(seed, 7);
    let rows: Vec<PredictionRow> = (0..n)
        .map(|i| {
            let truth = g.below(classes);
            let sims = (0..classes).map(|_| g.uniform() * 2.0 - 1.0).collect();
            PredictionRow::from_similarities(format!("s{}", i % 7), format!("{i}"), truth, sims, false)
        })
        .collect();
    let truths = rows.iter().map(|r| r.class_id_true).collect();
    (rows, truths)
}

#[test]
fn topk_matches_membership_loop() {
    let (rows, truths) = random_rows(1, 200, 10);
    for k in 1..=10 {
        let mut hits = 0;
        for (r, &t) in rows.iter().zip(&truths) {
            // rank position from scratch: classes strictly better, or equal with lower id
            let pos = (0..10)
                .filter(|&c| r.similarities[c] > r.similarities[t] || (r.similarities[c] == r.similarities[t] && c < t))
                .count();
            if pos < k {
                hits += 1;
            }
        }
        assert_eq!(topk_accuracy(&rows, &truths, k).unwrap(), hits as f64 / 200.0);
    }
}

#[test]
fn macro_scores_match_loops() {
    let (rows, truths) = random_rows(2, 1000, 6);
    let cm = ConfusionMatrix::from_predictions(&rows, &truths, 6).unwrap();
    assert_eq!(cm.total(), 1000);
    let (mut p_sum, mut r_sum) = (0.0, 0.0);
    for c in 0..6 {
        let tp = rows.iter().zip(&truths).filter(|(r, &t)| t == c && r.predicted_class == c).count();
        let pred = rows.iter().filter(|r| r.predicted_class == c).count();
        let truth = truths.iter().filter(|&&t| t == c).count();
        assert_eq!(cm.row_sum(c), truth as u64);
        p_sum += if pred == 0 { 0.0 } else { tp as f64 / pred as f64 };
        r_sum += if truth == 0 { 0.0 } else { tp as f64 / truth as f64 };
    }
    let (p, r) = macro_precision_recall(&cm);
    assert!((p - p_sum / 6.0).abs() < 1e-15 && (r - r_sum / 6.0).abs() < 1e-15);
}

#[test]
fn fnr_matches_two_by_two_table() {
    let (rows, truths) = random_rows(3, 1000, 10);
    let mut table = [[0u32; 2]; 2];
    for (r, &t) in rows.iter().zip(&truths) {
        table[(t != 0) as usize][(r.predicted_class != 0) as usize] += 1;
    }
    let recall_pos = table[1][1] as f64 / (table[1][0] + table[1][1]) as f64;
    assert!((fnr(&rows, &truths).unwrap() - (1.0 - recall_pos)).abs() < 1e-15);
}

#[test]
fn random_scores_average_precision_near_prevalence() {
    let mut g = GaussianStream::new(4, 0);
    for p in [0.1, 0.5, 0.9] {
        let scores: Vec<f64> = (0..10_000).map(|_| g.uniform()).collect();
        let labels: Vec<bool> = (0..10_000).map(|_| g.uniform() < p).collect();
        let prevalence = labels.iter().filter(|&&l| l).count() as f64 / 10_000.0;
        let ap = auprc(&pr_curve(&scores, &labels).unwrap());
        assert!((ap - prevalence).abs() < 0.03, "p={p} ap={ap}");
    }
}

#[test]
fn uniform_random_predictions() {
    let (rows, truths) = random_rows(5, 10_000, 10);
    let r = evaluate(&rows, &truths, 3, ConfigEcho::default()).unwrap();
    assert!((r.top1 - 0.1).abs() < 0.02, "{}", r.top1);
    assert!((r.top3 - 0.3).abs() < 0.02, "{}", r.top3);
    assert!(r.top3 >= r.top1);
    let micro = r.confusion.trace() as f64 / r.confusion.total() as f64;
    assert_eq!(micro, r.top1);
}

#[test]
fn hard_rule_is_the_zero_threshold_point() {
    for seed in 0..100 {
        let (rows, truths) = random_rows(100 + seed, 300, 10);
        let scores: Vec<f64> = rows.iter().map(|r| r.distraction_score).collect();
        let labels: Vec<bool> = truths.iter().map(|&t| t != 0).collect();
        let point = pr_curve(&scores, &labels).unwrap().point_above(0.0).unwrap();
        let hard = BinaryCounts::from_predictions(&rows, &truths).unwrap();
        assert_eq!((point.precision, point.recall), (hard.precision(), hard.recall()));
    }
}

proptest! {
    #[test]
    fn auprc_invariant_under_monotone_maps(seed in any::<u64>(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let mut g = GaussianStream::new(seed, 0);
        let scores: Vec<f64> = (0..200).map(|_| g.normal()).collect();
        let mut labels: Vec<bool> = (0..200).map(|_| g.uniform() < 0.3).collect();
        labels[0] = true;
        let mapped: Vec<f64> = scores.iter().map(|s| (a * s + b).exp()).collect();
        let ap1 = auprc(&pr_curve(&scores, &labels).unwrap());
        let ap2 = auprc(&pr_curve(&mapped, &labels).unwrap());
        prop_assert_eq!(ap1, ap2);
    }

    #[test]
    fn recall_monotone_and_rates_bounded(seed in any::<u64>()) {
        let (rows, truths) = random_rows(seed, 100, 4);
        let scores: Vec<f64> = rows.iter().map(|r| r.distraction_score).collect();
        let labels: Vec<bool> = truths.iter().map(|&t| t != 0).collect();
        prop_assume!(labels.iter().any(|&l| l));
        let curve = pr_curve(&scores, &labels).unwrap();
        prop_assert!(curve.points().windows(2).all(|w| w[0].recall <= w[1].recall && w[0].threshold > w[1].threshold));
        prop_assert!(curve.points().iter().all(|p| (0.0..=1.0).contains(&p.precision) && (0.0..=1.0).contains(&p.recall)));
        prop_assert_eq!(curve.points().last().unwrap().recall, 1.0);
    }
}
