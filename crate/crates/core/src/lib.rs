//! softsynth learns combinational logic circuits from input-output examples.
//!
//! A layered network of differentiable universal units (AIG, LUT, or LAB) is
//! trained by gradient descent; every wire and every unit-internal choice is
//! a softmax over learned logits, so the whole architecture is part of the
//! optimisation. A sharpening entropy term drives those choices one-hot,
//! after which the discrete circuit can be read out, simulated, verified
//! against the task's examples, and exported as a netlist.
//!
//! Modules:
//! - [`diff`]: reverse-mode tape, Adam, gradient checking.
//! - [`units`]: the three universal unit kinds, soft and hardened.
//! - [`network`]: layered soft networks with softmax-choice wiring.
//! - [`dataset`]: bit-vector task oracles and example-set files.
//! - [`trainer`]: loss, training loop, accuracy metrics, experiment grids.
//! - [`extract`]: thresholded readout into a discrete, exportable netlist.

pub mod dataset;
pub mod diff;
pub mod error;
pub mod extract;
pub mod network;
pub mod results;
pub mod scalar;
pub mod trainer;
pub mod units;

pub use error::{Error, Result};
pub use scalar::{real, to_f64, Real};

/// f64 is the default working scalar for training and extraction.
pub type Tape64 = diff::Tape<f64>;
pub type Tape32 = diff::Tape<f32>;
pub type ParamStore64 = diff::ParamStore<f64>;
pub type ParamStore32 = diff::ParamStore<f32>;
pub type SoftNetwork64 = network::SoftNetwork<f64>;
pub type SoftNetwork32 = network::SoftNetwork<f32>;
