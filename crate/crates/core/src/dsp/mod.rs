//! Audio decoding and the log-magnitude spectrogram front end.

mod stft;
mod wav;

pub use stft::{
    hann_window, read_spectrogram_dump, FrameAnalyzer, spectrogram, write_spectrogram_dump, FeatureConfig, SliceSequence,
    Spectrogram, StftConfig, LOG_FLOOR, SLICE_DURATION_S,
};
pub use wav::{decode_wav, encode_wav, quantize_i16};

use std::path::Path;

use crate::error::{Error, Result};

/// Mono audio with samples nominally in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("audio clip must contain at least one sample"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(AudioClip { samples, sample_rate })
    }

    pub fn silence(duration_samples: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; duration_samples], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        decode_wav(&bytes).map_err(|e| Error::Wav(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, encode_wav(self)).map_err(|e| Error::file(path, e))
    }
}

/// Linear-interpolation resampling to `target_rate`.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::invalid("target sample rate must be positive"));
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }
    let ratio = clip.sample_rate as f64 / target_rate as f64;
    let n_out = ((clip.len() as f64 / ratio).round() as usize).max(1);
    let src = clip.samples();
    let last = src.len() - 1;
    let out = (0..n_out)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = (pos.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = pos - i0 as f64;
            src[i0] + (src[i1] - src[i0]) * frac.min(1.0)
        })
        .collect();
    AudioClip::new(out, target_rate)
}
