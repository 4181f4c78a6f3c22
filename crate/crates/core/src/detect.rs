//! Sliding-window cough detection over a sample stream.
//!
//! Windows of `window_s` seconds advance by `hop_s`. A window scoring above
//! the threshold is a detection, timed at the first slice above threshold
//! for models with per-slice outputs and at the window centre otherwise. A
//! detection becomes an event only if at least `refractory_s` separates it
//! from the previous detection, so one sound seen by several overlapping
//! windows is reported once.
//!
//! After the last full window, a final window aligned to the end of the
//! stream covers any remainder; a stream shorter than one window is scored
//! as a whole.

use serde::{Deserialize, Serialize};

use crate::dsp::AudioClip;
use crate::error::{Error, Result};
use crate::forecast::CoughEvent;
use crate::models::Model;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub threshold: f64,
    pub window_s: f64,
    pub hop_s: f64,
    pub refractory_s: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig { threshold: 0.5, window_s: 4.0, hop_s: 1.0, refractory_s: 1.0 }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(format!("detection threshold {} must lie in (0, 1)", self.threshold)));
        }
        if !(self.window_s > 0.0 && self.hop_s > 0.0 && self.hop_s <= self.window_s) {
            return Err(Error::invalid(format!(
                "window {} s and hop {} s must be positive with hop <= window",
                self.window_s, self.hop_s
            )));
        }
        if !(self.refractory_s >= 0.0 && self.refractory_s.is_finite()) {
            return Err(Error::invalid("refractory period must be non-negative"));
        }
        Ok(())
    }
}

/// Slack for timestamps assembled from sample offsets and slice centres.
const TIME_EPS_S: f64 = 1e-9;

/// Incremental detector; feeding a stream in any chunking gives the same events.
pub struct Detector<'m> {
    model: &'m Model,
    cfg: DetectionConfig,
    rate: u32,
    window: usize,
    hop: usize,
    /// Samples from absolute index `offset` onwards.
    buffer: Vec<f64>,
    offset: usize,
    next_start: usize,
    windows_scored: usize,
    last_detection: Option<f64>,
}

impl<'m> Detector<'m> {
    /// Samples must arrive at the model's feature sample rate.
    pub fn new(model: &'m Model, cfg: DetectionConfig) -> Result<Self> {
        cfg.validate()?;
        let rate = model.config().features.sample_rate;
        let window = (cfg.window_s * rate as f64).round() as usize;
        let hop = (cfg.hop_s * rate as f64).round().max(1.0) as usize;
        Ok(Detector {
            model,
            cfg,
            rate,
            window,
            hop,
            buffer: Vec::new(),
            offset: 0,
            next_start: 0,
            windows_scored: 0,
            last_detection: None,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.rate
    }

    /// Appends samples and returns events from every window now complete.
    pub fn push(&mut self, samples: &[f64]) -> Result<Vec<CoughEvent>> {
        self.buffer.extend_from_slice(samples);
        let mut events = Vec::new();
        while self.next_start + self.window <= self.offset + self.buffer.len() {
            let start = self.next_start;
            self.score(start, start + self.window, &mut events)?;
            self.next_start += self.hop;
            // keep the last scored window's samples for a final end-aligned window
            let drop = (start - self.offset).min(self.buffer.len());
            self.buffer.drain(..drop);
            self.offset += drop;
        }
        Ok(events)
    }

    /// Scores the trailing partial window, if any, and ends the stream.
    pub fn finish(mut self) -> Result<Vec<CoughEvent>> {
        let end = self.offset + self.buffer.len();
        let mut events = Vec::new();
        if self.windows_scored == 0 {
            if end > 0 {
                self.score(0, end, &mut events)?;
            }
        } else if self.next_start - self.hop + self.window < end {
            self.score(end - self.window, end, &mut events)?;
        }
        Ok(events)
    }

    fn score(&mut self, start: usize, end: usize, events: &mut Vec<CoughEvent>) -> Result<()> {
        self.windows_scored += 1;
        let mut samples = self.buffer[start - self.offset..end - self.offset].to_vec();
        let min_len = self.model.config().features.stft.window_len;
        if samples.len() < min_len {
            samples.resize(min_len, 0.0);
        }
        let clip = AudioClip::new(samples, self.rate)?;
        let seq = self.model.config().features.slices(&clip)?;
        let pred = self.model.predict(&seq)?;
        if !pred.probability.is_finite() {
            return Err(Error::Numeric(format!("non-finite probability for window at sample {start}")));
        }
        if pred.probability <= self.cfg.threshold {
            return Ok(());
        }
        let start_s = start as f64 / self.rate as f64;
        let offset_s = match pred.per_slice.iter().position(|&p| p > self.cfg.threshold) {
            Some(k) => (k as f64 + 0.5) * seq.slice_duration_s(),
            None => (end - start) as f64 / self.rate as f64 / 2.0,
        };
        let t = start_s + offset_s;
        let quiet = self.last_detection.is_none_or(|last| t - last >= self.cfg.refractory_s - TIME_EPS_S);
        if quiet {
            events.push(CoughEvent { timestamp: t, probability: pred.probability });
        }
        self.last_detection = Some(self.last_detection.map_or(t, |last| last.max(t)));
        Ok(())
    }
}

/// Detects over a whole clip, resampling it to the model's rate first.
pub fn detect(model: &Model, clip: &AudioClip, cfg: DetectionConfig) -> Result<Vec<CoughEvent>> {
    let mut detector = Detector::new(model, cfg)?;
    let clip = crate::dsp::resample(clip, detector.sample_rate())?;
    let mut events = detector.push(clip.samples())?;
    events.extend(detector.finish()?);
    Ok(events)
}
