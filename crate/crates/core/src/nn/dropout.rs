use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LayerSpec, NnError, Real};

/// How the Bernoulli mask is laid over the final hidden layer's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Every entry of the `in × out` weight matrix is kept or dropped
    /// independently.
    #[default]
    WeightMask,
    /// One draw per hidden unit; the whole weight column feeding that unit
    /// is kept or dropped together.
    UnitMask,
}

/// Dropout on the final hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutConfig {
    pub rate: f64,
    #[serde(default)]
    pub mode: MaskMode,
    /// Scale kept entries by `1 / (1 - rate)` during training.
    #[serde(default)]
    pub rescale: bool,
}

impl Default for DropoutConfig {
    fn default() -> Self {
        DropoutConfig::none()
    }
}

impl DropoutConfig {
    pub fn none() -> Self {
        DropoutConfig {
            rate: 0.0,
            mode: MaskMode::WeightMask,
            rescale: false,
        }
    }

    pub fn rate(rate: f64) -> Self {
        DropoutConfig {
            rate,
            ..DropoutConfig::none()
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(NnError::InvalidConfig(format!("dropout rate {} outside [0, 1)", self.rate)));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0
    }
}

/// One training step's mask over layer `layer`'s weight matrix, rescaling
/// already folded into `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask<T> {
    pub layer: usize,
    pub values: Vec<T>,
}

impl<T: Real> DropoutMask<T> {
    /// Draws a fresh mask for the dense layer `layer` with the given spec.
    pub fn sample<R: Rng + ?Sized>(layer: usize, spec: &LayerSpec, config: &DropoutConfig, rng: &mut R) -> Self {
        let LayerSpec::Dense {
            in_units, out_units, ..
        } = *spec
        else {
            unreachable!("dropout target is always a dense layer")
        };
        let keep = if config.rescale {
            T::of(1.0 / (1.0 - config.rate))
        } else {
            T::one()
        };
        let draw = |rng: &mut R| if rng.random::<f64>() < config.rate { T::zero() } else { keep };
        let values = match config.mode {
            MaskMode::WeightMask => (0..in_units * out_units).map(|_| draw(rng)).collect(),
            MaskMode::UnitMask => {
                let units: Vec<T> = (0..out_units).map(|_| draw(rng)).collect();
                (0..in_units).flat_map(|_| units.iter().copied()).collect()
            }
        };
        DropoutMask { layer, values }
    }

    pub fn apply(&self, weights: &[T]) -> Vec<T> {
        weights.iter().zip(&self.values).map(|(&w, &m)| w * m).collect()
    }
}

/// Index of the final hidden layer: the last dense layer before the output.
pub(crate) fn final_hidden_layer(specs: &[LayerSpec]) -> Option<usize> {
    let last = specs.len().checked_sub(1)?;
    specs[..last]
        .iter()
        .rposition(|s| matches!(s, LayerSpec::Dense { .. }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;

    #[test]
    fn unit_mask_shares_columns() {
        let spec = LayerSpec::dense(4, 3, Activation::Relu);
        let cfg = DropoutConfig {
            rate: 0.5,
            mode: MaskMode::UnitMask,
            rescale: false,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mask = DropoutMask::<f64>::sample(0, &spec, &cfg, &mut rng);
        for row in mask.values.chunks(3) {
            assert_eq!(row, &mask.values[..3]);
        }
    }

    #[test]
    fn rescale_scales_kept_entries() {
        let spec = LayerSpec::dense(10, 10, Activation::Relu);
        let cfg = DropoutConfig {
            rate: 0.5,
            mode: MaskMode::WeightMask,
            rescale: true,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mask = DropoutMask::<f64>::sample(0, &spec, &cfg, &mut rng);
        assert!(mask.values.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(mask.values.contains(&0.0));
    }

    #[test]
    fn final_hidden_is_penultimate_dense() {
        let specs = [
            LayerSpec::conv_same(1, 2, 3, Activation::Relu),
            LayerSpec::Flatten,
            LayerSpec::dense(8, 5, Activation::Relu),
            LayerSpec::dense(5, 2, Activation::Softmax),
        ];
        assert_eq!(final_hidden_layer(&specs), Some(2));
        assert_eq!(final_hidden_layer(&specs[3..]), None);
    }
}
