//! The four cough classifiers.
//!
//! * **STAIN**: one slice CNN shared across all 200 ms slices. At step `t` the
//!   CNN sees the slice stacked with the previous hidden state; an encoder
//!   compresses the same stacked input into the next hidden state. The clip
//!   score is the maximum per-slice probability.
//! * **CNN**: STAIN with a hidden state that is always zero.
//! * **RNN**: an Elman cell over individual spectrogram frames.
//! * **CRNN**: a single-channel slice CNN embedding each slice, followed by
//!   an Elman cell over the embeddings.

mod checkpoint;
mod cnn;
mod encoder;
mod recurrent;

pub use checkpoint::{TrainingMeta, CHECKPOINT_MAGIC};
pub use cnn::{flat_len, SliceCnn, CONV1_CHANNELS, CONV2_CHANNELS, DENSE_HIDDEN};
pub use encoder::{Encoder, EncoderKind};
pub use recurrent::RecurrentHead;

use serde::{Deserialize, Serialize};

use crate::dsp::{FeatureConfig, SliceSequence};
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Var};
use crate::{ParamStore, Tape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cnn,
    Rnn,
    Crnn,
    Stain,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Cnn, ModelKind::Rnn, ModelKind::Crnn, ModelKind::Stain];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Rnn => "rnn",
            ModelKind::Crnn => "crnn",
            ModelKind::Stain => "stain",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model kind '{s}' (expected cnn, rnn, crnn or stain)")))
    }
}

/// Architecture and front-end settings; everything needed to rebuild a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub encoder: EncoderKind,
    pub features: FeatureConfig,
    /// Log-magnitudes are standardised as `(v - input_offset) / input_scale`
    /// before entering any network.
    pub input_offset: f64,
    pub input_scale: f64,
    pub rnn_hidden: usize,
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            encoder: EncoderKind::Pool,
            features: FeatureConfig::default(),
            input_offset: -6.0,
            input_scale: 4.0,
            rnn_hidden: 64,
        }
    }

    pub fn slice_shape(&self) -> Result<(usize, usize)> {
        Ok((self.features.stft.kept_bins, self.features.frames_per_slice()?))
    }
}

#[derive(Clone, Debug)]
enum Layout {
    /// STAIN and the plain CNN share this layout; the CNN uses [`Encoder::Zero`].
    Meshed { cnn: SliceCnn, encoder: Encoder },
    Rnn { head: RecurrentHead },
    Crnn { cnn: SliceCnn, head: RecurrentHead },
}

/// Output of one forward pass recorded on a tape.
#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub probability: Var,
    /// Per-slice probabilities, for the slice-max models (STAIN and CNN).
    pub per_slice: Option<Vec<Var>>,
}

/// Clip-level prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub per_slice: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
    layout: Layout,
}

impl Model {
    /// Builds a model with freshly initialised weights.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.features.stft.validate()?;
        if config.input_scale.is_nan() || config.input_scale <= 0.0 || !config.input_offset.is_finite() {
            return Err(Error::invalid("input scale must be positive and offset finite"));
        }
        let (h, w) = config.slice_shape()?;
        if h < 7 || w < 7 {
            return Err(Error::invalid(format!("slice {h}x{w} too small for the two conv/pool groups")));
        }
        let mut rng = seeded_rng(seed);
        let mut params = ParamStore::new();
        let layout = match config.kind {
            ModelKind::Stain | ModelKind::Cnn => {
                let cnn = SliceCnn::register(&mut params, "cnn", 2, (h, w), true, &mut rng)?;
                let encoder = if config.kind == ModelKind::Cnn {
                    Encoder::Zero
                } else {
                    Encoder::register(config.encoder, &mut params, 2, &mut rng)?
                };
                Layout::Meshed { cnn, encoder }
            }
            ModelKind::Rnn => {
                Layout::Rnn { head: RecurrentHead::register(&mut params, "rnn", h, config.rnn_hidden, &mut rng)? }
            }
            ModelKind::Crnn => {
                let cnn = SliceCnn::register(&mut params, "cnn", 1, (h, w), false, &mut rng)?;
                let head = RecurrentHead::register(&mut params, "rnn", DENSE_HIDDEN, config.rnn_hidden, &mut rng)?;
                Layout::Crnn { cnn, head }
            }
        };
        Ok(Model { config, params, layout })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Standardised slices; padded frames stay exactly zero.
    pub fn normalize(&self, seq: &SliceSequence) -> Result<Vec<Tensor>> {
        let (h, w) = self.config.slice_shape()?;
        if seq.is_empty() {
            return Err(Error::invalid("slice sequence is empty"));
        }
        let (off, scale) = (self.config.input_offset, self.config.input_scale);
        seq.slices
            .iter()
            .enumerate()
            .map(|(s, t)| {
                if t.shape() != [h, w] {
                    return Err(Error::shape(format!("model expects {h}x{w} slices, got {:?}", t.shape())));
                }
                let real = seq.frames.saturating_sub(s * w).min(w);
                Tensor::new(
                    &[1, h, w],
                    t.data()
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| if i % w < real { (v - off) / scale } else { 0.0 })
                        .collect(),
                )
            })
            .collect()
    }

    /// Records a forward pass over one clip's slices on `tape`.
    pub fn forward(&self, tape: &mut Tape, seq: &SliceSequence) -> Result<ForwardOutput> {
        let slices = self.normalize(seq)?;
        let store = &self.params;
        match &self.layout {
            Layout::Meshed { cnn, encoder } => {
                let (h, w) = self.config.slice_shape()?;
                let mut hidden = tape.input(Tensor::zeros(&[1, h, w]));
                let mut outs = Vec::with_capacity(slices.len());
                for s in slices {
                    let x = tape.input(s);
                    let stacked = tape.concat_channels(x, hidden)?;
                    outs.push(cnn.forward(tape, store, stacked)?);
                    hidden = encoder.forward(tape, store, stacked)?;
                }
                let probability = tape.max(&outs)?;
                Ok(ForwardOutput { probability, per_slice: Some(outs) })
            }
            Layout::Rnn { head } => {
                let (h, w) = self.config.slice_shape()?;
                let steps: Vec<Var> = (0..seq.frames)
                    .map(|f| {
                        let t = &slices[f / w];
                        let col = (0..h).map(|b| t.data()[b * w + f % w]).collect();
                        tape.input(Tensor::from_vec(col))
                    })
                    .collect();
                let last = head.run(tape, store, &steps)?;
                Ok(ForwardOutput { probability: head.read_out(tape, store, last)?, per_slice: None })
            }
            Layout::Crnn { cnn, head } => {
                let mut embeddings = Vec::with_capacity(slices.len());
                for s in slices {
                    let x = tape.input(s);
                    embeddings.push(cnn.forward(tape, store, x)?);
                }
                let last = head.run(tape, store, &embeddings)?;
                Ok(ForwardOutput { probability: head.read_out(tape, store, last)?, per_slice: None })
            }
        }
    }

    pub fn predict(&self, seq: &SliceSequence) -> Result<Prediction> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, seq)?;
        Ok(Prediction {
            probability: tape.value(out.probability).item(),
            per_slice: out.per_slice.unwrap_or_default().iter().map(|&v| tape.value(v).item()).collect(),
        })
    }

    /// Forward + BCE + backward for one example. Parameter gradients are
    /// accumulated scaled by `weight`; returns the unscaled loss.
    pub fn accumulate_gradient(&mut self, seq: &SliceSequence, label: bool, weight: f64) -> Result<f64> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, seq)?;
        let loss = tape.bce(out.probability, if label { 1.0 } else { 0.0 })?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss {value}")));
        }
        tape.backward(loss, weight)?.accumulate_into(&mut self.params);
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::AudioClip;

    fn zero_weights(model: &mut Model) {
        for p in model.params_mut().iter_mut() {
            p.value.fill(0.0);
        }
    }

    fn slices(n: usize) -> SliceSequence {
        let clip = AudioClip::new(
            (0..(n * 3200 + 352)).map(|i| ((i * 31) % 200) as f64 / 400.0 - 0.25).collect(),
            16_000,
        )
        .unwrap();
        FeatureConfig::default().slices(&clip).unwrap()
    }

    #[test]
    fn zero_weights_give_one_half() {
        let seq = slices(2);
        for kind in ModelKind::ALL {
            let mut m = Model::new(ModelConfig::new(kind), 1).unwrap();
            zero_weights(&mut m);
            assert_eq!(m.predict(&seq).unwrap().probability, 0.5, "{kind}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("lstm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn parameter_counts_are_comparable() {
        let counts: Vec<usize> =
            ModelKind::ALL.iter().map(|&k| Model::new(ModelConfig::new(k), 0).unwrap().params().count()).collect();
        // cnn, rnn, crnn, stain
        assert!(counts.iter().all(|&c| c > 10_000), "{counts:?}");
    }
}
