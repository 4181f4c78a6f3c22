use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{resample, AudioClip};
use crate::error::{Error, Result};
use crate::Tensor;

/// Added to magnitudes before the logarithm so silence stays finite.
pub const LOG_FLOOR: f64 = 1e-6;

/// Duration of one model input slice.
pub const SLICE_DURATION_S: f64 = 0.200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
    pub kept_bins: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig { window_len: 512, hop: 160, fft_len: 512, kept_bins: 128 }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 || self.kept_bins == 0 {
            return Err(Error::invalid("stft window, hop and kept bins must be positive"));
        }
        if self.hop > self.window_len {
            return Err(Error::invalid(format!("stft hop {} exceeds window {}", self.hop, self.window_len)));
        }
        if !self.fft_len.is_power_of_two() || self.fft_len < self.window_len {
            return Err(Error::invalid(format!(
                "fft length {} must be a power of two no smaller than the window {}",
                self.fft_len, self.window_len
            )));
        }
        if self.kept_bins > self.fft_len / 2 + 1 {
            return Err(Error::invalid(format!(
                "kept bins {} exceed the {} available",
                self.kept_bins,
                self.fft_len / 2 + 1
            )));
        }
        Ok(())
    }

    /// `1 + floor((len - window) / hop)`, or zero when the clip is shorter than a window.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            1 + (len - self.window_len) / self.hop
        }
    }
}

/// Sample rate plus STFT settings: everything needed to turn audio into model input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub stft: StftConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { sample_rate: 16_000, stft: StftConfig::default() }
    }
}

impl FeatureConfig {
    pub fn frame_hop_s(&self) -> f64 {
        self.stft.hop as f64 / self.sample_rate as f64
    }

    /// Frames per 200 ms slice; errors unless the hop divides the slice evenly.
    pub fn frames_per_slice(&self) -> Result<usize> {
        frames_per_slice(self.frame_hop_s())
    }

    /// Resample if needed, then spectrogram.
    pub fn spectrogram(&self, clip: &AudioClip) -> Result<Spectrogram> {
        if clip.sample_rate() == self.sample_rate {
            spectrogram(clip, &self.stft)
        } else {
            spectrogram(&resample(clip, self.sample_rate)?, &self.stft)
        }
    }

    pub fn slices(&self, clip: &AudioClip) -> Result<SliceSequence> {
        self.spectrogram(clip)?.slice()
    }
}

fn frames_per_slice(hop_s: f64) -> Result<usize> {
    let n = (SLICE_DURATION_S / hop_s).round();
    if n < 1.0 || (n * hop_s - SLICE_DURATION_S).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "frame hop of {hop_s} s does not divide the {SLICE_DURATION_S} s slice evenly"
        )));
    }
    Ok(n as usize)
}

/// Log-magnitude time-frequency image, `values` shaped `[bins, frames]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub values: Tensor,
    pub frame_hop_s: f64,
    pub config: StftConfig,
}

impl Spectrogram {
    pub fn bins(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.values.shape()[1]
    }

    /// Column `frame` as a vector of `bins` values.
    pub fn frame(&self, frame: usize) -> Vec<f64> {
        let frames = self.frames();
        (0..self.bins()).map(|b| self.values.data()[b * frames + frame]).collect()
    }

    /// Splits into consecutive non-overlapping 200 ms slices, zero-padding the last.
    pub fn slice(&self) -> Result<SliceSequence> {
        let per = frames_per_slice(self.frame_hop_s)?;
        let (bins, frames) = (self.bins(), self.frames());
        let count = frames.div_ceil(per);
        let src = self.values.data();
        let slices = (0..count)
            .map(|s| {
                Tensor::from_fn(&[bins, per], |i| {
                    let (b, f) = (i / per, s * per + i % per);
                    if f < frames {
                        src[b * frames + f]
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        Ok(SliceSequence { slices, frames, frames_per_slice: per })
    }
}

/// Hann window in its periodic form, `0.5 - 0.5 cos(2 pi n / N)`.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect()
}

/// Reusable per-frame analyser: Hann window, zero padding to `fft_len`, forward FFT.
pub struct FrameAnalyzer {
    cfg: StftConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl FrameAnalyzer {
    pub fn new(cfg: &StftConfig) -> Result<Self> {
        cfg.validate()?;
        let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.fft_len);
        let scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Ok(FrameAnalyzer {
            cfg: *cfg,
            window: hann_window(cfg.window_len),
            fft,
            buf: vec![Complex::new(0.0, 0.0); cfg.fft_len],
            scratch,
        })
    }

    /// The windowed frame starting at `start`, before zero padding.
    pub fn windowed(&self, samples: &[f64], start: usize) -> Vec<f64> {
        samples[start..start + self.cfg.window_len].iter().zip(&self.window).map(|(s, w)| s * w).collect()
    }

    /// Full `fft_len`-point spectrum of the frame starting at `start`.
    pub fn spectrum(&mut self, samples: &[f64], start: usize) -> &[Complex<f64>] {
        self.buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        let frame = &samples[start..start + self.cfg.window_len];
        for ((c, &s), &w) in self.buf.iter_mut().zip(frame).zip(&self.window) {
            c.re = s * w;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        &self.buf
    }
}

/// Hann-windowed STFT with `ln(|X| + LOG_FLOOR)` magnitudes, keeping the
/// lowest `kept_bins` bins.
pub fn spectrogram(clip: &AudioClip, cfg: &StftConfig) -> Result<Spectrogram> {
    let mut analyzer = FrameAnalyzer::new(cfg)?;
    let frames = cfg.frame_count(clip.len());
    if frames == 0 {
        return Err(Error::invalid(format!(
            "clip of {} samples is shorter than one {}-sample window",
            clip.len(),
            cfg.window_len
        )));
    }
    let mut values = vec![0.0; cfg.kept_bins * frames];
    for f in 0..frames {
        let spectrum = analyzer.spectrum(clip.samples(), f * cfg.hop);
        for (b, x) in spectrum[..cfg.kept_bins].iter().enumerate() {
            values[b * frames + f] = (x.norm() + LOG_FLOOR).ln();
        }
    }
    Ok(Spectrogram {
        values: Tensor::new(&[cfg.kept_bins, frames], values)?,
        frame_hop_s: cfg.hop as f64 / clip.sample_rate() as f64,
        config: *cfg,
    })
}

/// Ordered 200 ms slices, each `[bins, frames_per_slice]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSequence {
    pub slices: Vec<Tensor>,
    /// Real (unpadded) frame count of the source spectrogram.
    pub frames: usize,
    pub frames_per_slice: usize,
}

impl SliceSequence {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slice_duration_s(&self) -> f64 {
        SLICE_DURATION_S
    }

    /// Re-joins the slices and drops the padding, recovering the spectrogram values.
    pub fn concat(&self) -> Tensor {
        let bins = self.slices[0].shape()[0];
        let per = self.frames_per_slice;
        Tensor::from_fn(&[bins, self.frames], |i| {
            let (b, f) = (i / self.frames, i % self.frames);
            self.slices[f / per].data()[b * per + f % per]
        })
    }
}

/// Writes `bins frames hop_s` on one text line followed by the row-major
/// values as little-endian `f64`.
pub fn write_spectrogram_dump(spec: &Spectrogram, mut out: impl Write) -> Result<()> {
    writeln!(out, "{} {} {}", spec.bins(), spec.frames(), spec.frame_hop_s)?;
    for v in spec.values.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a dump written by [`write_spectrogram_dump`]; returns `(values, hop_s)`.
pub fn read_spectrogram_dump(path: &Path) -> Result<(Tensor, f64)> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Parse {
        position: format!("{}: line 1", path.display()),
        message: "missing header line".into(),
    })?;
    let header = String::from_utf8_lossy(&bytes[..nl]);
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad = |m: &str| Error::Parse { position: format!("{}: line 1", path.display()), message: m.into() };
    if fields.len() != 3 {
        return Err(bad("expected 'bins frames hop_s'"));
    }
    let bins: usize = fields[0].parse().map_err(|_| bad("bins is not an integer"))?;
    let frames: usize = fields[1].parse().map_err(|_| bad("frames is not an integer"))?;
    let hop: f64 = fields[2].parse().map_err(|_| bad("hop_s is not a number"))?;
    let body = &bytes[nl + 1..];
    if body.len() != bins * frames * 8 {
        return Err(bad("payload length does not match bins x frames"));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((Tensor::new(&[bins, frames], data)?, hop))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, len: usize) -> AudioClip {
        let s = (0..len).map(|i| 0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin()).collect();
        AudioClip::new(s, rate).unwrap()
    }

    fn fake_spec(frames: usize) -> Spectrogram {
        Spectrogram {
            values: Tensor::from_fn(&[3, frames], |i| i as f64 + 1.0),
            frame_hop_s: 0.01,
            config: StftConfig::default(),
        }
    }

    #[test]
    fn silence_hits_log_floor() {
        let clip = AudioClip::silence(2000, 16000).unwrap();
        let spec = spectrogram(&clip, &StftConfig::default()).unwrap();
        assert!(spec.values.data().iter().all(|&v| v == LOG_FLOOR.ln()));
    }

    #[test]
    fn frame_count_formula() {
        let cfg = StftConfig::default();
        let spec = spectrogram(&AudioClip::silence(32000, 16000).unwrap(), &cfg).unwrap();
        assert_eq!(spec.frames(), 1 + (32000 - 512) / 160);
        assert_eq!(spec.frames(), 197);
        assert_eq!(spec.slice().unwrap().len(), 10);
    }

    #[test]
    fn short_clip_is_an_error() {
        let clip = AudioClip::silence(511, 16000).unwrap();
        assert!(spectrogram(&clip, &StftConfig::default()).is_err());
    }

    #[test]
    fn sine_peak_bin() {
        let cfg = StftConfig::default();
        let f = 1000.0;
        let spec = spectrogram(&sine(f, 16000, 4000), &cfg).unwrap();
        let expected = (f * cfg.fft_len as f64 / 16000.0).round() as usize;
        for frame in 0..spec.frames() {
            let col = spec.frame(frame);
            let argmax = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
            assert_eq!(argmax, expected);
        }
    }

    #[test]
    fn slicing_counts_and_padding() {
        let s = fake_spec(40).slice().unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.slices.iter().all(|t| t.shape() == [3, 20]));

        let spec = fake_spec(45);
        let s = spec.slice().unwrap();
        assert_eq!(s.len(), 3);
        let last = &s.slices[2];
        for b in 0..3 {
            for f in 0..20 {
                let v = last.data()[b * 20 + f];
                if f < 5 {
                    assert_eq!(v, spec.values.data()[b * 45 + 40 + f]);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
        assert_eq!(s.concat(), spec.values);
    }

    #[test]
    fn uneven_hop_is_rejected() {
        let mut spec = fake_spec(10);
        spec.frame_hop_s = 0.03;
        assert!(spec.slice().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(StftConfig::default().validate().is_ok());
        assert!(StftConfig { hop: 600, ..Default::default() }.validate().is_err());
        assert!(StftConfig { fft_len: 500, ..Default::default() }.validate().is_err());
        assert!(StftConfig { kept_bins: 300, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn dump_round_trip() {
        let spec = spectrogram(&sine(440.0, 16000, 3000), &StftConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.spec");
        write_spectrogram_dump(&spec, std::fs::File::create(&path).unwrap()).unwrap();
        let (values, hop) = read_spectrogram_dump(&path).unwrap();
        assert_eq!(values, spec.values);
        assert_eq!(hop, spec.frame_hop_s);
    }
}
