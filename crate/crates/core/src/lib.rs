//! Cough detection on audio spectrograms with a spatio-temporal network,
//! environmental exacerbation-risk estimation from air-quality sensors, and
//! trend-based exacerbation forecasting.
//!
//! The pipeline runs in three stages:
//!
//! * [`dsp`] and [`models`] turn audio into 200 ms spectrogram slices and
//!   score them with one of four classifiers (STAIN, CNN, RNN, CRNN);
//!   [`dataset`] and [`trainkit`] build training data and fit them.
//! * [`envrisk`] ingests sensor snapshots, interpolates them spatially and
//!   converts factor excesses into a percentage risk increase.
//! * [`forecast`] fits a cough-frequency trend and combines it with the
//!   environmental risk into an alert decision. [`detect`] produces the
//!   cough events it consumes from a live or recorded audio stream.

pub mod dataset;
pub mod detect;
pub mod dsp;
pub mod envrisk;
mod error;
pub mod forecast;
pub mod models;
pub mod numerics;
pub mod trainkit;

pub use error::{Error, Result};

/// Element type used by the models, datasets and checkpoints.
pub type Real = f64;
pub type Tensor = numerics::Tensor<Real>;
pub type Tape = numerics::Tape<Real>;
pub type ParamStore = numerics::ParamStore<Real>;
pub type Sgd = numerics::Sgd<Real>;

/// Single-precision tensor, for callers that want to run the kernels in `f32`.
pub type Tensor32 = numerics::Tensor<f32>;
