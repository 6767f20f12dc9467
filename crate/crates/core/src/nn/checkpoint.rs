//! JSON checkpoints.
//!
//! ```json
//! { "format_version": 1, "input_shape": {"flat": 784}, "specs": [...],
//!   "precision": "single", "weights": [...], "biases": [...] }
//! ```
//!
//! Dense weights are nested `[in][out]`, convolution kernels
//! `[out][in][ky][kx]`; parameter-free layers store `[]`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{LayerParams, LayerSpec, Network, NnError, Precision, Real, Shape};
use crate::classifier::{Classifier, GradientClassifier, LabelSet};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize)]
#[serde(untagged)]
enum NestedRef<'a, T> {
    Matrix(Vec<&'a [T]>),
    Kernel(Vec<Vec<Vec<&'a [T]>>>),
}

#[derive(Serialize)]
struct CheckpointOut<'a, T> {
    format_version: u64,
    input_shape: Shape,
    specs: &'a [LayerSpec],
    precision: Precision,
    weights: Vec<NestedRef<'a, T>>,
    biases: Vec<&'a [T]>,
}

/// Parsed checkpoint header plus raw parameter arrays.
#[derive(Debug, Clone, Deserialize)]
pub struct Checkpoint {
    pub format_version: u64,
    pub input_shape: Shape,
    pub specs: Vec<LayerSpec>,
    pub precision: Precision,
    weights: Vec<Value>,
    biases: Vec<Value>,
}

fn nest<'a, T>(spec: &LayerSpec, w: &'a [T]) -> NestedRef<'a, T> {
    match *spec {
        LayerSpec::Dense { out_units, .. } => NestedRef::Matrix(w.chunks(out_units).collect()),
        LayerSpec::Conv2d {
            in_channels,
            kernel_size: k,
            ..
        } => NestedRef::Kernel(
            w.chunks(in_channels * k * k)
                .map(|per_out| per_out.chunks(k * k).map(|plane| plane.chunks(k).collect()).collect())
                .collect(),
        ),
        _ => NestedRef::Matrix(Vec::new()),
    }
}

/// Serialises a network to checkpoint JSON bytes.
pub fn to_json<T: Real>(net: &Network<T>) -> Vec<u8> {
    let out = CheckpointOut {
        format_version: FORMAT_VERSION,
        input_shape: net.input_shape(),
        specs: net.specs(),
        precision: T::PRECISION,
        weights: net.specs().iter().zip(net.params()).map(|(s, p)| nest(s, &p.weights)).collect(),
        biases: net.params().iter().map(|p| p.biases.as_slice()).collect(),
    };
    serde_json::to_vec(&out).expect("checkpoint serialisation cannot fail")
}

pub fn checkpoint_save<T: Real>(net: &Network<T>, path: impl AsRef<Path>) -> Result<(), NnError> {
    fs::write(path, to_json(net))?;
    Ok(())
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<AnyNetwork, NnError> {
    let bytes = fs::read(path)?;
    AnyNetwork::from_json(&bytes)
}

fn flatten_numbers(v: &Value, depth: usize, out: &mut Vec<f64>) -> Result<(), String> {
    match v {
        Value::Array(items) if depth > 0 => {
            for item in items {
                flatten_numbers(item, depth - 1, out)?;
            }
            Ok(())
        }
        Value::Number(n) if depth == 0 => {
            out.push(n.as_f64().ok_or("number out of range")?);
            Ok(())
        }
        _ => Err(format!("expected nesting depth {depth}")),
    }
}

/// Walks nested arrays and checks every level has the expected length.
fn check_dims(v: &Value, dims: &[usize]) -> Result<(), String> {
    match (v, dims.split_first()) {
        (Value::Array(items), Some((&d, rest))) => {
            if items.len() != d {
                return Err(format!("array of length {} where {d} expected", items.len()));
            }
            items.iter().try_for_each(|item| check_dims(item, rest))
        }
        (Value::Number(_), None) => Ok(()),
        _ => Err("unexpected nesting".into()),
    }
}

impl Checkpoint {
    pub fn parse(bytes: &[u8]) -> Result<Self, NnError> {
        let value: Value = serde_json::from_slice(bytes).map_err(|e| NnError::Malformed(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| NnError::Malformed("missing format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(NnError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| NnError::Malformed(e.to_string()))
    }

    /// Parameters converted to `T`.
    pub fn params<T: Real>(&self) -> Result<Vec<LayerParams<T>>, NnError> {
        if self.weights.len() != self.specs.len() || self.biases.len() != self.specs.len() {
            return Err(NnError::CheckpointShape {
                layer: self.weights.len().min(self.biases.len()),
                reason: format!(
                    "{} weight and {} bias blocks for {} layers",
                    self.weights.len(),
                    self.biases.len(),
                    self.specs.len()
                ),
            });
        }
        let mut params = Vec::with_capacity(self.specs.len());
        for (layer, (spec, (w, b))) in self.specs.iter().zip(self.weights.iter().zip(&self.biases)).enumerate() {
            let shape_err = |reason: String| NnError::CheckpointShape { layer, reason };
            let (w_dims, b_len): (Vec<usize>, usize) = match *spec {
                LayerSpec::Dense {
                    in_units,
                    out_units,
                    ..
                } => (vec![in_units, out_units], out_units),
                LayerSpec::Conv2d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    ..
                } => (vec![out_channels, in_channels, kernel_size, kernel_size], out_channels),
                _ => (vec![0], 0),
            };
            check_dims(w, &w_dims).map_err(shape_err)?;
            check_dims(b, &[b_len]).map_err(shape_err)?;
            let mut wf = Vec::new();
            if w_dims != [0] {
                flatten_numbers(w, w_dims.len(), &mut wf).map_err(shape_err)?;
            }
            let mut bf = Vec::new();
            flatten_numbers(b, 1, &mut bf).map_err(shape_err)?;
            params.push(LayerParams {
                weights: wf.into_iter().map(T::of).collect(),
                biases: bf.into_iter().map(T::of).collect(),
            });
        }
        Ok(params)
    }

    pub fn into_network<T: Real>(self) -> Result<Network<T>, NnError> {
        let params = self.params::<T>()?;
        Network::from_params(&self.specs, self.input_shape, params)
    }
}

/// A network of either precision, as read from a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyNetwork {
    Single(Network<f32>),
    Double(Network<f64>),
}

impl AnyNetwork {
    pub fn from_json(bytes: &[u8]) -> Result<Self, NnError> {
        let ckpt = Checkpoint::parse(bytes)?;
        Ok(match ckpt.precision {
            Precision::Single => AnyNetwork::Single(ckpt.into_network()?),
            Precision::Double => AnyNetwork::Double(ckpt.into_network()?),
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        match self {
            AnyNetwork::Single(n) => to_json(n),
            AnyNetwork::Double(n) => to_json(n),
        }
    }

    pub fn precision(&self) -> Precision {
        match self {
            AnyNetwork::Single(_) => Precision::Single,
            AnyNetwork::Double(_) => Precision::Double,
        }
    }

    pub fn specs(&self) -> &[LayerSpec] {
        match self {
            AnyNetwork::Single(n) => n.specs(),
            AnyNetwork::Double(n) => n.specs(),
        }
    }
}

impl From<Network<f32>> for AnyNetwork {
    fn from(n: Network<f32>) -> Self {
        AnyNetwork::Single(n)
    }
}

impl From<Network<f64>> for AnyNetwork {
    fn from(n: Network<f64>) -> Self {
        AnyNetwork::Double(n)
    }
}

impl Classifier for AnyNetwork {
    fn input_dim(&self) -> usize {
        match self {
            AnyNetwork::Single(n) => n.num_inputs(),
            AnyNetwork::Double(n) => n.num_inputs(),
        }
    }

    fn num_classes(&self) -> usize {
        match self {
            AnyNetwork::Single(n) => n.num_outputs(),
            AnyNetwork::Double(n) => n.num_outputs(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<LabelSet, NnError> {
        match self {
            AnyNetwork::Single(n) => Classifier::predict(n, x),
            AnyNetwork::Double(n) => Classifier::predict(n, x),
        }
    }
}

impl GradientClassifier for AnyNetwork {
    fn loss_input_grad(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>), NnError> {
        match self {
            AnyNetwork::Single(n) => n.loss_input_grad(x, label),
            AnyNetwork::Double(n) => n.loss_input_grad(x, label),
        }
    }
}
