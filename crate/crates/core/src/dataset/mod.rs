//! Labelled training data built by overlaying corpus sounds on empty clips.
//!
//! A negative example is 2-5 s of silence with a random number of non-cough
//! recordings mixed in at random offsets and gains (overflow trimmed). A
//! positive example additionally receives exactly one cough recording.

pub mod fixtures;
mod index;

pub use index::{DatasetIndex, IndexRecord, Split};

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_xoshiro::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dsp::{resample, AudioClip};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Sample rate of generated examples.
pub const DATASET_RATE: u32 = 16_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub cough_files: Vec<PathBuf>,
    pub other_files: Vec<PathBuf>,
}

fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::file(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::file(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Lists the WAV files of the two class directories in lexicographic order.
pub fn build_manifest(root: &Path, cough_subdir: &str, other_subdir: &str) -> Result<CorpusManifest> {
    let cough_files = list_wavs(&root.join(cough_subdir))?;
    let other_files = list_wavs(&root.join(other_subdir))?;
    if cough_files.is_empty() {
        return Err(Error::Dataset(format!("no .wav files in {}", root.join(cough_subdir).display())));
    }
    if other_files.is_empty() {
        return Err(Error::Dataset(format!("no .wav files in {}", root.join(other_subdir).display())));
    }
    let canon = |p: &PathBuf| p.canonicalize().unwrap_or_else(|_| p.clone());
    let cough_set: std::collections::BTreeSet<PathBuf> = cough_files.iter().map(canon).collect();
    if let Some(dup) = other_files.iter().find(|p| cough_set.contains(&canon(p))) {
        return Err(Error::Dataset(format!("overlapping corpus classes: {} is in both", dup.display())));
    }
    Ok(CorpusManifest { root: root.to_path_buf(), cough_files, other_files })
}

/// Randomisation bounds for synthesising one example.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub duration_range_s: (f64, f64),
    pub overlay_count_range: (usize, usize),
    pub gain_range_db: (f64, f64),
    pub seed: u64,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec {
            duration_range_s: (2.0, 5.0),
            overlay_count_range: (1, 4),
            gain_range_db: (-18.0, 0.0),
            seed: 0,
        }
    }
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.duration_range_s;
        if !(2.0 <= lo && lo < hi && hi <= 5.0) {
            return Err(Error::invalid(format!("duration range [{lo}, {hi}] must be a sub-range of [2, 5] s")));
        }
        let (cmin, cmax) = self.overlay_count_range;
        if cmin > cmax {
            return Err(Error::invalid(format!("overlay count range [{cmin}, {cmax}] is empty")));
        }
        let (glo, ghi) = self.gain_range_db;
        if !(glo.is_finite() && ghi.is_finite() && glo <= ghi) {
            return Err(Error::invalid(format!("gain range [{glo}, {ghi}] dB is invalid")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlayRole {
    Background,
    Cough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub source: PathBuf,
    pub start_s: f64,
    pub gain_db: f64,
    pub role: OverlayRole,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub clip: AudioClip,
    pub label: bool,
    pub provenance: Vec<Overlay>,
}

impl LabeledExample {
    pub fn cough_sources(&self) -> usize {
        self.provenance.iter().filter(|o| o.role == OverlayRole::Cough).count()
    }
}

/// Manifest with every file decoded and resampled to [`DATASET_RATE`].
#[derive(Clone, Debug)]
pub struct LoadedCorpus {
    pub coughs: Vec<(PathBuf, AudioClip)>,
    pub others: Vec<(PathBuf, AudioClip)>,
}

impl LoadedCorpus {
    pub fn load(manifest: &CorpusManifest) -> Result<Self> {
        let load = |files: &[PathBuf]| -> Result<Vec<(PathBuf, AudioClip)>> {
            files
                .iter()
                .map(|p| {
                    let clip = resample(&AudioClip::read(p)?, DATASET_RATE)?;
                    let rel = p.strip_prefix(&manifest.root).unwrap_or(p).to_path_buf();
                    Ok((rel, clip))
                })
                .collect()
        };
        Ok(LoadedCorpus { coughs: load(&manifest.cough_files)?, others: load(&manifest.other_files)? })
    }
}

/// The SplitMix64 output function, used to derive independent stream seeds.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for example `index` of `split`, independent of every other example.
pub fn example_rng(seed: u64, split: Split, index: usize) -> SeededRng {
    let split_tag = match split {
        Split::Train => 0x7472_6169_6e00_0000,
        Split::Test => 0x7465_7374_0000_0000,
    };
    SeededRng::seed_from_u64(mix64(mix64(mix64(seed) ^ split_tag) ^ index as u64))
}

fn mix_in(target: &mut [f64], source: &AudioClip, start: usize, gain_db: f64) {
    let gain = 10f64.powf(gain_db / 20.0);
    for (t, &s) in target[start..].iter_mut().zip(source.samples()) {
        *t += gain * s;
    }
}

/// Synthesises one labelled example.
///
/// Background overlays start anywhere in the clip and are trimmed at its end;
/// the cough of a positive example is placed so that it fits entirely when
/// it is shorter than the clip.
pub fn synthesize_example(
    corpus: &LoadedCorpus,
    spec: &AugmentationSpec,
    label: bool,
    rng: &mut SeededRng,
) -> Result<LabeledExample> {
    spec.validate()?;
    if corpus.others.is_empty() || (label && corpus.coughs.is_empty()) {
        return Err(Error::Dataset("corpus is missing files for the requested label".into()));
    }
    let rate = DATASET_RATE as f64;
    let (lo, hi) = spec.duration_range_s;
    let duration_s = rng.random_range(lo..hi);
    let n = ((duration_s * rate).floor() as usize).clamp((lo * rate).ceil() as usize, (hi * rate).floor() as usize);
    let mut samples = vec![0.0; n];
    let mut provenance = Vec::new();

    let (cmin, cmax) = spec.overlay_count_range;
    let count = rng.random_range(cmin..=cmax);
    let draw_gain = |rng: &mut SeededRng| {
        let (glo, ghi) = spec.gain_range_db;
        if glo == ghi {
            glo
        } else {
            rng.random_range(glo..ghi)
        }
    };
    for _ in 0..count {
        let (path, clip) = &corpus.others[rng.random_range(0..corpus.others.len())];
        let start = rng.random_range(0..n);
        let gain_db = draw_gain(rng);
        mix_in(&mut samples, clip, start, gain_db);
        provenance.push(Overlay { source: path.clone(), start_s: start as f64 / rate, gain_db, role: OverlayRole::Background });
    }
    if label {
        let (path, clip) = &corpus.coughs[rng.random_range(0..corpus.coughs.len())];
        let latest = n.saturating_sub(clip.len());
        let start = rng.random_range(0..=latest);
        let gain_db = draw_gain(rng);
        mix_in(&mut samples, clip, start, gain_db);
        provenance.push(Overlay { source: path.clone(), start_s: start as f64 / rate, gain_db, role: OverlayRole::Cough });
    }
    samples.iter_mut().for_each(|s| *s = s.clamp(-1.0, 1.0));
    Ok(LabeledExample { clip: AudioClip::new(samples, DATASET_RATE)?, label, provenance })
}

/// Example counts per split and class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
}

impl SplitCounts {
    /// Desk-scale default: 200/200 train, 50/50 test.
    pub const DESK: SplitCounts = SplitCounts { train_pos: 200, train_neg: 200, test_pos: 50, test_neg: 50 };
    /// 10 000/10 000 train, 1 000/1 000 test.
    pub const FULL: SplitCounts = SplitCounts { train_pos: 10_000, train_neg: 10_000, test_pos: 1_000, test_neg: 1_000 };

    pub fn total(&self) -> usize {
        self.train_pos + self.train_neg + self.test_pos + self.test_neg
    }

    fn validate(&self) -> Result<()> {
        if self.train_pos == 0 || self.train_neg == 0 || self.test_pos == 0 || self.test_neg == 0 {
            return Err(Error::invalid("every split/class count must be at least 1"));
        }
        Ok(())
    }
}

/// Synthesises all examples, writes them as 16-bit WAV files under `out_dir`
/// and writes `index.tsv` plus `provenance.tsv`. Returns the index.
pub fn build_dataset(
    manifest: &CorpusManifest,
    spec: &AugmentationSpec,
    counts: SplitCounts,
    out_dir: &Path,
) -> Result<DatasetIndex> {
    counts.validate()?;
    spec.validate()?;
    let corpus = LoadedCorpus::load(manifest)?;
    let mut records = Vec::with_capacity(counts.total());
    let mut provenance = String::from("path\tsource\tstart_s\tgain_db\trole\n");
    for (split, pos, neg) in [
        (Split::Train, counts.train_pos, counts.train_neg),
        (Split::Test, counts.test_pos, counts.test_neg),
    ] {
        let dir = out_dir.join(split.name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
        for i in 0..pos + neg {
            let label = i < pos;
            let mut rng = example_rng(spec.seed, split, i);
            let ex = synthesize_example(&corpus, spec, label, &mut rng)?;
            let rel = PathBuf::from(split.name()).join(format!("{i:05}_{}.wav", if label { "cough" } else { "nocough" }));
            ex.clip.write(&out_dir.join(&rel))?;
            for o in &ex.provenance {
                provenance.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    rel.display(),
                    o.source.display(),
                    o.start_s,
                    o.gain_db,
                    match o.role {
                        OverlayRole::Cough => "cough",
                        OverlayRole::Background => "background",
                    }
                ));
            }
            records.push(IndexRecord { path: rel, label, split });
        }
    }
    let index = DatasetIndex { root: out_dir.to_path_buf(), records };
    index.write(&out_dir.join("index.tsv"))?;
    let prov_path = out_dir.join("provenance.tsv");
    std::fs::write(&prov_path, provenance).map_err(|e| Error::file(&prov_path, e))?;
    Ok(index)
}
