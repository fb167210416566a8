use zsdd_core::pca::{export_2d, Point2d, PointKind};
use zsdd_core::pipeline::{transform, PipelineOptions, Toggles};
use zsdd_core::synth::{generate, run_ablation, SynthConfig};

fn mean_top1(cfg: impl Fn(u64) -> SynthConfig, cell: usize) -> f64 {
    (0..5).map(|s| run_ablation(&cfg(s)).unwrap()[cell].report.top1).sum::<f64>() / 5.0
}

#[test]
fn strong_confound_is_removed_by_dad() {
    let cfg = |s| SynthConfig { gamma: 0.0, ..SynthConfig::confounded(s) };
    let naive = mean_top1(cfg, 0);
    let dad = mean_top1(cfg, 1);
    assert!(naive < 0.6, "{naive}");
    assert!(dad >= naive + 0.2, "{dad} vs {naive}");
}

#[test]
fn naive_accuracy_falls_with_confound_strength() {
    let at = |alpha| mean_top1(move |s| SynthConfig { alpha, gamma: 0.0, ..SynthConfig::confounded(s) }, 0);
    let (a0, a2, a4) = (at(0.0), at(2.0), at(4.0));
    assert!(a2 <= a0 + 0.02 && a4 <= a2 + 0.02, "{a0} {a2} {a4}");
}

#[test]
fn text_columns_collapse_with_gamma() {
    let mean_cos = |gamma| {
        (0..5)
            .map(|s| {
                let t = generate(&SynthConfig { gamma, ..SynthConfig::confounded(s) }).unwrap().texts;
                let n = t.n_classes();
                let mut acc = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        acc += zsdd_core::cosine(t.column(i), t.column(j)).unwrap();
                    }
                }
                acc / (n * (n - 1) / 2) as f64
            })
            .sum::<f64>()
            / 5.0
    };
    let (g0, g5, g9) = (mean_cos(0.0), mean_cos(0.5), mean_cos(0.9));
    assert!(g5 >= g0 - 0.02 && g9 >= g5 - 0.02, "{g0} {g5} {g9}");
}

#[test]
fn baseline_cell_equals_direct_naive_pipeline() {
    let cfg = SynthConfig::confounded(9);
    let data = generate(&cfg).unwrap();
    let (_, direct) =
        zsdd_core::pipeline::run_and_evaluate(&data.images, &data.texts, &PipelineOptions::new(Toggles::NAIVE), 3, None).unwrap();
    assert_eq!(run_ablation(&cfg).unwrap()[0].report, direct);
}

fn mean_centroid_distance(points: &[Point2d], key: impl Fn(&Point2d) -> String) -> f64 {
    let mut groups: std::collections::BTreeMap<String, (f64, f64, usize)> = Default::default();
    for p in points.iter().filter(|p| p.kind == PointKind::Image) {
        let e = groups.entry(key(p)).or_default();
        e.0 += p.x;
        e.1 += p.y;
        e.2 += 1;
    }
    let c: Vec<(f64, f64)> = groups.values().map(|&(x, y, n)| (x / n as f64, y / n as f64)).collect();
    let mut sum = 0.0;
    let mut pairs = 0;
    for i in 0..c.len() {
        for j in (i + 1)..c.len() {
            sum += ((c[i].0 - c[j].0).powi(2) + (c[i].1 - c[j].1).powi(2)).sqrt();
            pairs += 1;
        }
    }
    sum / pairs as f64
}

#[test]
fn export_geometry_flips_under_dad() {
    let data = generate(&SynthConfig { alpha: 8.0, ..SynthConfig::confounded(2) }).unwrap();
    let by_subject = |p: &Point2d| p.subject_id.clone();
    let by_class = |p: &Point2d| p.class_id.to_string();

    let (raw, texts, _) = transform(&data.images, &data.texts, &PipelineOptions::new(Toggles::NAIVE)).unwrap();
    let before = export_2d(&raw, &texts).unwrap();
    assert_eq!(before.len(), data.images.len() + 10);
    assert!(mean_centroid_distance(&before, by_subject) > mean_centroid_distance(&before, by_class));

    let (dec, texts, _) = transform(&data.images, &data.texts, &PipelineOptions::new(Toggles::FULL)).unwrap();
    let after = export_2d(&dec, &texts).unwrap();
    assert!(mean_centroid_distance(&after, by_subject) < mean_centroid_distance(&after, by_class));
}
