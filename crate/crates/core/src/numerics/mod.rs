//! Tensor math and reverse-mode differentiation for the detection networks.
//!
//! Everything here is generic over [`Scalar`] (`f32` or `f64`); the rest of
//! the crate works in `f64` through the aliases at the crate root.

pub mod gradcheck;
pub mod kernels;
mod params;
mod scalar;
mod tape;
mod tensor;

pub use params::{seeded_rng, ParamId, ParamStore, Parameter, SeededRng, Sgd};
pub use scalar::Scalar;
pub use tape::{Activation, Gradients, Tape, Var};
pub use tensor::Tensor;
