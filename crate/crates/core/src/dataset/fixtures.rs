//! Synthetic stand-in corpus so the whole pipeline runs without external audio.
//!
//! Cough surrogates are one to three short broadband noise bursts with a fast
//! attack and exponential decay. Non-cough sounds are steady harmonic tones,
//! linear chirps and steady low-frequency noise.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use super::CorpusManifest;
use crate::dsp::AudioClip;
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, SeededRng};

pub const FIXTURE_RATE: u32 = 16_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixtureSpec {
    pub cough_files: usize,
    pub other_files: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec { cough_files: 40, other_files: 80, seed: 7 }
    }
}

fn seconds(s: f64) -> usize {
    (s * FIXTURE_RATE as f64).round() as usize
}

/// One to three decaying noise bursts of 0.3-0.5 s each.
pub fn cough(rng: &mut SeededRng) -> AudioClip {
    let bursts = rng.random_range(1..=3usize);
    let mut out = Vec::new();
    for b in 0..bursts {
        if b > 0 {
            out.extend(std::iter::repeat_n(0.0, seconds(rng.random_range(0.05..0.15))));
        }
        let len = seconds(rng.random_range(0.3..0.5));
        let amp = rng.random_range(0.5..0.9);
        let tau = rng.random_range(0.06..0.12) * FIXTURE_RATE as f64;
        let attack = seconds(0.01) as f64;
        // mild first-order colouring keeps it broadband but not perfectly white
        let tilt = rng.random_range(-0.3..0.3);
        let mut prev = 0.0;
        for i in 0..len {
            let t = i as f64;
            let env = (t / attack).min(1.0) * (-t / tau).exp();
            let white = rng.sample::<f64, _>(StandardNormal);
            let coloured = white + tilt * prev;
            prev = white;
            out.push((amp * env * coloured * 0.35).clamp(-1.0, 1.0));
        }
    }
    AudioClip::new(out, FIXTURE_RATE).expect("non-empty")
}

/// Steady harmonic tone with 1-3 partials.
pub fn tone(rng: &mut SeededRng, duration_s: f64) -> AudioClip {
    let f0 = rng.random_range(150.0..1500.0);
    let partials = rng.random_range(1..=3usize);
    let amp = rng.random_range(0.2..0.6);
    let n = seconds(duration_s);
    let fade = seconds(0.02) as f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / FIXTURE_RATE as f64;
            let env = (i as f64 / fade).min(1.0).min((n - i) as f64 / fade);
            let s: f64 = (1..=partials).map(|k| (2.0 * PI * f0 * k as f64 * t).sin() / k as f64).sum();
            amp * env * s / 1.5
        })
        .collect();
    AudioClip::new(samples, FIXTURE_RATE).expect("non-empty")
}

/// Linear frequency sweep.
pub fn chirp(rng: &mut SeededRng, duration_s: f64) -> AudioClip {
    let f0 = rng.random_range(200.0..3000.0);
    let f1 = rng.random_range(200.0..3000.0);
    let amp = rng.random_range(0.2..0.6);
    let n = seconds(duration_s);
    let fade = seconds(0.02) as f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / FIXTURE_RATE as f64;
            let env = (i as f64 / fade).min(1.0).min((n - i) as f64 / fade);
            let phase = 2.0 * PI * (f0 * t + (f1 - f0) * t * t / (2.0 * duration_s));
            amp * env * phase.sin()
        })
        .collect();
    AudioClip::new(samples, FIXTURE_RATE).expect("non-empty")
}

/// Noise through three cascaded one-pole low-pass stages, scaled to a random
/// RMS level with a constant envelope.
pub fn rumble(rng: &mut SeededRng, duration_s: f64) -> AudioClip {
    let alpha: f64 = rng.random_range(0.85..0.95);
    let rms = rng.random_range(0.1..0.3);
    let n = seconds(duration_s);
    let fade = seconds(0.05) as f64;
    let mut y = [0.0; 3];
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            let mut x = rng.sample::<f64, _>(StandardNormal);
            for stage in y.iter_mut() {
                *stage = alpha * *stage + (1.0 - alpha) * x;
                x = *stage;
            }
            x
        })
        .collect();
    let level = (raw.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt().max(1e-12);
    let samples = raw
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let env = (i as f64 / fade).min(1.0).min((n - i) as f64 / fade);
            (rms * env * v / level).clamp(-1.0, 1.0)
        })
        .collect();
    AudioClip::new(samples, FIXTURE_RATE).expect("non-empty")
}

/// A non-cough sound of a randomly chosen family.
pub fn background(rng: &mut SeededRng) -> AudioClip {
    let duration = rng.random_range(0.5..3.0);
    match rng.random_range(0..3) {
        0 => tone(rng, duration),
        1 => chirp(rng, duration),
        _ => rumble(rng, duration),
    }
}

/// Writes `cough/` and `other/` WAV directories under `root` and returns their manifest.
pub fn write_fixture_corpus(root: &Path, spec: &FixtureSpec) -> Result<CorpusManifest> {
    if spec.cough_files == 0 || spec.other_files == 0 {
        return Err(Error::invalid("fixture corpus needs at least one file of each class"));
    }
    let mut rng = seeded_rng(spec.seed);
    for (dir, count, cough_class) in [("cough", spec.cough_files, true), ("other", spec.other_files, false)] {
        let d = root.join(dir);
        std::fs::create_dir_all(&d).map_err(|e| Error::file(&d, e))?;
        for i in 0..count {
            let clip = if cough_class { cough(&mut rng) } else { background(&mut rng) };
            clip.write(&d.join(format!("{dir}_{i:04}.wav")))?;
        }
    }
    super::build_manifest(root, "cough", "other")
}
