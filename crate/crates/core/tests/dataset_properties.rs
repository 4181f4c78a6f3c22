use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::RngCore;
use stain_core::dataset::{
    self, build_manifest, example_rng, fixtures, synthesize_example, AugmentationSpec, DatasetIndex, LoadedCorpus,
    OverlayRole, Split, SplitCounts,
};
use stain_core::dsp::AudioClip;
use stain_core::numerics::seeded_rng;

fn write_files(dir: &Path, prefix: &str, n: usize, make: impl Fn(usize) -> AudioClip) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        make(i).write(&dir.join(format!("{prefix}{i}.wav"))).unwrap();
    }
}

fn small_corpus(root: &Path, coughs: usize, others: usize) {
    let mut rng = seeded_rng(5);
    let c: Vec<AudioClip> = (0..coughs).map(|_| fixtures::cough(&mut rng)).collect();
    let o: Vec<AudioClip> = (0..others).map(|_| fixtures::background(&mut rng)).collect();
    write_files(&root.join("cough"), "c", coughs, |i| c[i].clone());
    write_files(&root.join("other"), "o", others, |i| o[i].clone());
}

fn tiny_loaded() -> LoadedCorpus {
    let mut rng = seeded_rng(3);
    LoadedCorpus {
        coughs: (0..4).map(|i| (PathBuf::from(format!("c{i}.wav")), fixtures::cough(&mut rng))).collect(),
        others: (0..6).map(|i| (PathBuf::from(format!("o{i}.wav")), fixtures::background(&mut rng))).collect(),
    }
}

#[test]
fn manifest_counts_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 3, 5);
    std::fs::write(dir.path().join("other/notes.txt"), "ignored").unwrap();
    let m = build_manifest(dir.path(), "cough", "other").unwrap();
    assert_eq!((m.cough_files.len(), m.other_files.len()), (3, 5));
    assert!(m.cough_files.windows(2).all(|w| w[0] < w[1]), "manifest is sorted");

    std::fs::create_dir_all(dir.path().join("empty")).unwrap();
    assert!(build_manifest(dir.path(), "empty", "other").is_err());
    let err = build_manifest(dir.path(), "other", "other").unwrap_err().to_string();
    assert!(err.contains("overlapping corpus classes"), "{err}");
}

#[test]
fn ten_thousand_duration_draws() {
    let corpus = tiny_loaded();
    let spec = AugmentationSpec { seed: 11, ..AugmentationSpec::default() };
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, 0.0f64, 0.0);
    let n = 10_000;
    for i in 0..n {
        let ex = synthesize_example(&corpus, &spec, i % 2 == 0, &mut example_rng(11, Split::Train, i)).unwrap();
        let d = ex.clip.duration_s();
        lo = lo.min(d);
        hi = hi.max(d);
        sum += d;
    }
    let mean = sum / n as f64;
    assert!(lo >= 2.0 && hi <= 5.0, "{lo}..{hi}");
    assert!((mean - 3.5).abs() <= 0.05, "mean {mean}");
}

#[test]
fn labels_match_overlay_roles() {
    let corpus = tiny_loaded();
    let spec = AugmentationSpec::default();
    for i in 0..200 {
        let label = i % 3 == 0;
        let ex = synthesize_example(&corpus, &spec, label, &mut example_rng(2, Split::Test, i)).unwrap();
        assert_eq!(ex.label, label);
        assert_eq!(ex.cough_sources(), usize::from(label));
        let bg = ex.provenance.iter().filter(|o| o.role == OverlayRole::Background).count();
        assert!((1..=4).contains(&bg));
        for o in &ex.provenance {
            assert!((-18.0..=0.0).contains(&o.gain_db));
            assert!(o.start_s >= 0.0 && o.start_s < ex.clip.duration_s());
            let from_cough = o.source.to_string_lossy().starts_with('c');
            assert_eq!(from_cough, o.role == OverlayRole::Cough);
        }
    }
}

#[test]
fn test_and_train_draws_never_coincide() {
    let first = |split, i| example_rng(9, split, i).next_u64();
    let train: HashSet<u64> = (0..5000).map(|i| first(Split::Train, i)).collect();
    assert_eq!(train.len(), 5000);
    assert!((0..5000).all(|i| !train.contains(&first(Split::Test, i))));
}

#[test]
fn small_build_writes_index_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(&dir.path().join("corpus"), 3, 5);
    let m = build_manifest(&dir.path().join("corpus"), "cough", "other").unwrap();
    let counts = SplitCounts { train_pos: 2, train_neg: 2, test_pos: 1, test_neg: 1 };
    let out = dir.path().join("data");
    let index = dataset::build_dataset(&m, &AugmentationSpec::default(), counts, &out).unwrap();
    assert_eq!(index.records.len(), 6);
    let wavs: usize = ["train", "test"].iter().map(|s| std::fs::read_dir(out.join(s)).unwrap().count()).sum();
    assert_eq!(wavs, 6);

    let back = DatasetIndex::read(&out.join("index.tsv")).unwrap();
    assert_eq!(back.records, index.records);
    assert_eq!(back.split(Split::Test).count(), 2);

    let prov = std::fs::read_to_string(out.join("provenance.tsv")).unwrap();
    for r in &index.records {
        let key = r.path.to_string_lossy();
        let coughs = prov.lines().filter(|l| l.starts_with(&*key) && l.ends_with("\tcough")).count();
        assert_eq!(coughs, usize::from(r.label), "{key}");
    }
    assert_eq!(SplitCounts::FULL.total(), 22_000);
    let zero = SplitCounts { test_neg: 0, ..counts };
    assert!(dataset::build_dataset(&m, &AugmentationSpec::default(), zero, &dir.path().join("z")).is_err());
}

#[test]
fn index_parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.tsv");
    std::fs::write(&path, "train/a.wav\t1\ttrain\ntrain/b.wav\tmaybe\ttrain\n").unwrap();
    let err = DatasetIndex::read(&path).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}
