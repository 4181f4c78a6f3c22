//! Training loop, evaluation, metrics and the four-model benchmark.

mod bench;
mod metrics;

pub use bench::{benchmark, BenchmarkReport, BenchmarkRow, BenchmarkRun, RunRecord};
pub use metrics::{metrics, ConfusionMatrix, MetricsReport};

use rand::seq::SliceRandom;
use rand_xoshiro::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dataset::{mix64, DatasetIndex, Split};
use crate::dsp::{AudioClip, FeatureConfig, SliceSequence};
use crate::error::{Error, Result};
use crate::models::{EncoderKind, Model, ModelConfig, ModelKind, TrainingMeta};
use crate::numerics::SeededRng;
use crate::Sgd;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Number of examples whose gradients are averaged per update.
    pub batch_size: usize,
    pub seed: u64,
    pub kind: ModelKind,
    pub encoder: EncoderKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            momentum: 0.9,
            epochs: 10,
            batch_size: 16,
            seed: 0,
            kind: ModelKind::Stain,
            encoder: EncoderKind::Pool,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!("momentum {} must lie in [0, 1)", self.momentum)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig { encoder: self.encoder, ..ModelConfig::new(self.kind) }
    }
}

/// One clip with its features computed.
#[derive(Clone, Debug)]
pub struct Example {
    pub id: String,
    pub label: bool,
    pub slices: SliceSequence,
}

/// Decodes every clip of `split` and computes its slices.
pub fn load_split(index: &DatasetIndex, split: Split, features: &FeatureConfig) -> Result<Vec<Example>> {
    let examples: Vec<Example> = index
        .split(split)
        .map(|r| {
            let clip = AudioClip::read(&index.resolve(r))?;
            Ok(Example { id: r.path.display().to_string(), label: r.label, slices: features.slices(&clip)? })
        })
        .collect::<Result<_>>()?;
    if examples.is_empty() {
        return Err(Error::Dataset(format!("index has no {split} examples")));
    }
    Ok(examples)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub meta: TrainingMeta,
    /// Mean BCE over each epoch, in order.
    pub epoch_losses: Vec<f64>,
}

impl TrainOutcome {
    pub fn checkpoint_bytes(&self) -> Vec<u8> {
        self.model.to_checkpoint_bytes(&self.meta)
    }
}

/// Trains a fresh model on pre-computed examples.
///
/// Examples are reshuffled each epoch from a generator keyed by the seed;
/// each update applies the mean gradient over `batch_size` examples.
pub fn train_examples(
    examples: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::Dataset("no training examples".into()));
    }
    let mut model = Model::new(cfg.model_config(), cfg.seed)?;
    let mut sgd = Sgd::new(cfg.lr, cfg.momentum)?;
    let mut shuffle_rng = SeededRng::seed_from_u64(mix64(cfg.seed ^ 0x5348_5546_464c_4521));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let weight = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &examples[i];
                total += model.accumulate_gradient(&ex.slices, ex.label, weight).map_err(|e| match e {
                    Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}, example {}: {m}", ex.id)),
                    other => other,
                })?;
            }
            sgd.step(model.params_mut()).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}: {m}")),
                other => other,
            })?;
        }
        let mean = total / examples.len() as f64;
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    let meta = TrainingMeta {
        seed: cfg.seed,
        epochs: cfg.epochs,
        final_loss: *epoch_losses.last().unwrap_or(&f64::NAN),
        lr: cfg.lr,
        momentum: cfg.momentum,
        batch_size: cfg.batch_size,
    };
    Ok(TrainOutcome { model, meta, epoch_losses })
}

/// Trains on the train split of `index`.
pub fn train(index: &DatasetIndex, cfg: &TrainConfig, on_epoch: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    let examples = load_split(index, Split::Train, &cfg.model_config().features)?;
    train_examples(&examples, cfg, on_epoch)
}

/// Probabilities for each example, in order.
pub fn predict_examples(model: &Model, examples: &[Example]) -> Result<Vec<f64>> {
    examples.iter().map(|ex| Ok(model.predict(&ex.slices)?.probability)).collect()
}

/// Confusion matrix with "positive" meaning probability strictly above `threshold`.
pub fn evaluate_examples(model: &Model, examples: &[Example], threshold: f64) -> Result<ConfusionMatrix> {
    let probs = predict_examples(model, examples)?;
    Ok(ConfusionMatrix::from_pairs(examples.iter().zip(probs).map(|(ex, p)| (ex.label, p > threshold))))
}

pub fn evaluate(model: &Model, index: &DatasetIndex, split: Split, threshold: f64) -> Result<ConfusionMatrix> {
    let examples = load_split(index, split, &model.config().features)?;
    evaluate_examples(model, &examples, threshold)
}
