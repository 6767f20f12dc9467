//! Named network architectures, sized from the dataset at build time.

use anyhow::{bail, Result};
use bvol::nn::{Activation, LayerSpec, Network, Real, Shape};
use bvol::volume::NetKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Fully connected ReLU layers of the given widths.
    Fc { hidden: Vec<usize> },
    /// 784→100→10.
    MnistFc,
    /// Three hidden layers of 1024.
    CifarFc,
    /// Conv16 5×5 → pool → Conv32 5×5 → pool → FC100, for 28×28 greyscale.
    MnistConv,
    /// Conv16/32/64 3×3, each followed by a pool, then FC256, for 32×32 RGB.
    CifarConv,
    /// Explicit layer list; the input shape comes from the dataset.
    Custom { layers: Vec<LayerSpec> },
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture::MnistFc
    }
}

fn dense_stack(input: usize, hidden: &[usize], classes: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    let mut width = input;
    for &h in hidden {
        specs.push(LayerSpec::dense(width, h, Activation::Relu));
        width = h;
    }
    specs.push(LayerSpec::dense(width, classes, Activation::Softmax));
    specs
}

fn conv_stack(channels: &[usize], side: usize, kernel: usize, fc: usize, classes: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    let mut side = side;
    for w in channels.windows(2) {
        specs.push(LayerSpec::conv_same(w[0], w[1], kernel, Activation::Relu));
        specs.push(LayerSpec::pool(2, 2));
        side /= 2;
    }
    specs.push(LayerSpec::Flatten);
    let flat = side * side * channels[channels.len() - 1];
    specs.extend(dense_stack(flat, &[fc], classes));
    specs
}

impl Architecture {
    pub fn net_kind(&self) -> NetKind {
        let conv = match self {
            Architecture::MnistConv | Architecture::CifarConv => true,
            Architecture::Custom { layers } => layers.iter().any(|l| matches!(l, LayerSpec::Conv2d { .. })),
            _ => false,
        };
        if conv {
            NetKind::Conv
        } else {
            NetKind::Fc
        }
    }

    /// Layer list and input shape for data of shape `shape` with `classes`
    /// classes.
    pub fn layers(&self, shape: Shape, classes: usize) -> Result<(Vec<LayerSpec>, Shape)> {
        let flat = Shape::Flat(shape.len());
        let image = |c: usize, side: usize| -> Result<Shape> {
            match shape {
                Shape::Image {
                    channels,
                    height,
                    width,
                } if channels == c && height == side && width == side => Ok(shape),
                _ => bail!("architecture {self:?} needs {c}×{side}×{side} images, data has shape {shape:?}"),
            }
        };
        Ok(match self {
            Architecture::Fc { hidden } => (dense_stack(shape.len(), hidden, classes), flat),
            Architecture::MnistFc => {
                if shape.len() != 784 {
                    bail!("mnist_fc needs 784 inputs, data has {}", shape.len());
                }
                (dense_stack(784, &[100], classes), flat)
            }
            Architecture::CifarFc => {
                if shape.len() != 3072 {
                    bail!("cifar_fc needs 3072 inputs, data has {}", shape.len());
                }
                (dense_stack(3072, &[1024, 1024, 1024], classes), flat)
            }
            Architecture::MnistConv => (conv_stack(&[1, 16, 32], 28, 5, 100, classes), image(1, 28)?),
            Architecture::CifarConv => (conv_stack(&[3, 16, 32, 64], 32, 3, 256, classes), image(3, 32)?),
            Architecture::Custom { layers } => {
                let input = if layers.first().is_some_and(|l| matches!(l, LayerSpec::Conv2d { .. })) {
                    shape
                } else {
                    flat
                };
                (layers.clone(), input)
            }
        })
    }

    /// A He-initialised network.
    pub fn build<T: Real>(&self, shape: Shape, classes: usize, seed: u64) -> Result<Network<T>> {
        let (specs, input) = self.layers(shape, classes)?;
        let mut net = Network::build(&specs, input)?;
        net.init_he_normal(seed);
        Ok(net)
    }
}
