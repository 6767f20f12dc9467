//! From-scratch feed-forward and convolutional networks.
//!
//! Gradients are derived by hand per layer kind; there is no autograd graph.
//! Networks are generic over [`Real`] so training can run in `f32` while the
//! gradient checks and geometry code use `f64`.

mod checkpoint;
mod dropout;
mod layer;
mod network;
mod optim;
mod train;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign};

use num_traits::Float;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use checkpoint::{checkpoint_load, checkpoint_save, to_json as checkpoint_json, AnyNetwork, Checkpoint, FORMAT_VERSION};
pub use dropout::{DropoutConfig, DropoutMask, MaskMode};
pub use layer::{Activation, LayerSpec, Padding, Shape};
pub use network::{Gradients, LayerParams, LossGrad, Network, Output, LOG_FLOOR};
pub use optim::{AdamParams, Optimizer, OptimizerKind, OptimizerState};
pub use train::{evaluate, train, EpochStats, Evaluation, History, TrainConfig};

/// Numeric precision of a network's parameters and arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Single,
    Double,
}

/// Floating-point scalar a [`Network`] can be instantiated with.
pub trait Real:
    Float
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + MulAssign
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    const PRECISION: Precision;

    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Single;

    fn of(v: f64) -> Self {
        v as f32
    }

    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;

    fn of(v: f64) -> Self {
        v
    }

    fn f64(self) -> f64 {
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch between layer {prev} and layer {next}: {reason}")]
    ShapeMismatch {
        prev: usize,
        next: usize,
        reason: String,
    },
    #[error("invalid layer {layer}: {reason}")]
    InvalidLayer { layer: usize, reason: String },
    #[error("input has length {got}, network expects {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite value produced at layer {layer}")]
    NumericOverflow { layer: usize },
    #[error("training diverged at epoch {epoch}, step {step}: loss is not finite")]
    Diverged { epoch: usize, step: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint parameter shape mismatch at layer {layer}: {reason}")]
    CheckpointShape { layer: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
