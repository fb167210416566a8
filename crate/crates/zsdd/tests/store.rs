use std::fs;
use std::path::Path;

use proptest::prelude::*;
use zsdd::store::{load_dataset, load_prompts, save_dataset, save_text_matrix, text_matrix};
use zsdd_core::rng::GaussianStream;
use zsdd_core::{Dataset, EmbeddingRecord, TextMatrix};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn random_dataset(seed: u64, n: usize, dim: usize) -> Dataset {
    let mut g = GaussianStream::new(seed, 0);
    let records = (0..n)
        .map(|i| EmbeddingRecord {
            subject_id: format!("driver {}", i % 5),
            sample_id: format!("frame_{i:05}.jpg"),
            class_id: i % 10,
            vector: (0..dim).map(|_| (g.normal() * 10.0) as f32).collect(),
        })
        .collect();
    Dataset::new(dim, records).unwrap()
}

fn files(dir: &Path, stem: &str) -> (Vec<u8>, Vec<u8>) {
    (fs::read(dir.join(format!("{stem}.json"))).unwrap(), fs::read(dir.join(format!("{stem}.f32"))).unwrap())
}

/// Writes the interchange format with nothing but serde_json and byte packing,
/// the way an external producer would.
fn write_foreign(dir: &Path, rows: &[(String, String, usize, Vec<f32>)], dim: usize) {
    let records: Vec<_> = rows
        .iter()
        .map(|(s, id, c, _)| serde_json::json!({"subject_id": s, "sample_id": id, "class_id": c}))
        .collect();
    let manifest = serde_json::json!({
        "format_version": 1, "dim": dim, "count": rows.len(), "payload": "ext.bin", "dtype": "f32le", "records": records,
    });
    fs::write(dir.join("ext.json"), serde_json::to_vec_pretty(&manifest).unwrap()).unwrap();
    let mut payload = Vec::new();
    for (_, _, _, v) in rows {
        for x in v {
            payload.extend_from_slice(&x.to_bits().to_le_bytes());
        }
    }
    fs::write(dir.join("ext.bin"), payload).unwrap();
}

#[test]
fn externally_written_file_loads_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GaussianStream::new(42, 0);
    let rows: Vec<(String, String, usize, Vec<f32>)> = (0..100)
        .map(|i| {
            let mut v: Vec<f32> = (0..32).map(|_| g.normal() as f32).collect();
            v[0] = f32::from_bits(0x0000_0001); // subnormal survives too
            (format!("subj{}", i / 10), format!("{i}"), i % 10, v)
        })
        .collect();
    write_foreign(dir.path(), &rows, 32);
    let ds = load_dataset(dir.path().join("ext.json")).unwrap();
    assert_eq!(ds.len(), 100);
    for (r, (s, id, c, v)) in ds.records().iter().zip(&rows) {
        assert_eq!((&r.subject_id, &r.sample_id, r.class_id), (s, id, *c));
        assert_eq!(r.vector.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn save_is_deterministic_and_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let ds = random_dataset(1, 37, 12);
    save_dataset(&ds, dir.path().join("a.json")).unwrap();
    save_dataset(&ds, dir.path().join("b.json")).unwrap();
    let (ma, pa) = files(dir.path(), "a");
    let (mb, pb) = files(dir.path(), "b");
    assert_eq!(pa, pb);
    assert_eq!(String::from_utf8(ma.clone()).unwrap().replace("a.f32", "b.f32").into_bytes(), mb);

    let loaded = load_dataset(dir.path().join("a.json")).unwrap();
    save_dataset(&loaded, dir.path().join("a.json")).unwrap();
    assert_eq!(files(dir.path(), "a"), (ma, pa));
}

#[test]
fn text_matrix_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GaussianStream::new(3, 0);
    let cols: Vec<Vec<f64>> = (0..10).map(|_| (0..768).map(|_| g.normal() as f32 as f64).collect()).collect();
    let t = TextMatrix::from_columns(768, &cols).unwrap();
    let ours = load_prompts(Path::new(DATA).join("prompts_ours.json")).unwrap();
    save_text_matrix(&t, Some(&ours), dir.path().join("t.json")).unwrap();
    let stored = [load_dataset(dir.path().join("t.json")).unwrap()];
    assert_eq!(text_matrix(&stored, Some(&ours)).unwrap(), t);
    assert_eq!(text_matrix(&stored, None).unwrap(), t);
}

#[test]
fn shipped_prompt_files() {
    let ours = load_prompts(Path::new(DATA).join("prompts_ours.json")).unwrap();
    let base = load_prompts(Path::new(DATA).join("prompts_driveclip.json")).unwrap();
    assert_eq!((ours.len(), base.len()), (10, 10));
    assert_eq!(ours.render(0), "an image of a person holding steering wheel with both hands while driving.");
    assert_eq!(base.render(0), "an image of a person driving safely.");
    let shared: Vec<usize> = (0..10).filter(|&c| ours.render(c) == base.render(c)).collect();
    assert_eq!(shared, vec![1, 2, 4]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn load_inverts_save(seed in any::<u64>(), n in 1usize..40, dim in 1usize..20) {
        let dir = tempfile::tempdir().unwrap();
        let ds = random_dataset(seed, n, dim);
        save_dataset(&ds, dir.path().join("d.json")).unwrap();
        let back = load_dataset(dir.path().join("d.json")).unwrap();
        prop_assert_eq!(back.records().len(), ds.records().len());
        for (a, b) in back.records().iter().zip(ds.records()) {
            prop_assert_eq!(&a.subject_id, &b.subject_id);
            prop_assert_eq!(&a.sample_id, &b.sample_id);
            prop_assert_eq!(a.class_id, b.class_id);
            let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.vector), bits(&b.vector));
        }
    }
}
