use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::special::gamma;
use super::GeometryError;

/// A compact `q`-manifold in ℝⁿ described by its curvature invariants
/// `k₀, k₂, …, k_{2⌊q/2⌋}` (`k₀` is the manifold's volume).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub ambient_dim: usize,
    pub manifold_dim: usize,
    pub invariants: Vec<f64>,
}

impl TubeSpec {
    pub fn new(ambient_dim: usize, manifold_dim: usize, invariants: Vec<f64>) -> Result<Self, GeometryError> {
        if ambient_dim == 0 || manifold_dim > ambient_dim {
            return Err(GeometryError::Invalid(format!(
                "manifold dimension {manifold_dim} in ambient dimension {ambient_dim}"
            )));
        }
        let expected = manifold_dim / 2 + 1;
        if invariants.len() != expected {
            return Err(GeometryError::InvariantCount {
                expected,
                got: invariants.len(),
            });
        }
        Ok(TubeSpec {
            ambient_dim,
            manifold_dim,
            invariants,
        })
    }
}

/// Weyl's tube volume
/// `V(ε) = (πε²)^{(n−q)/2} / ((n−q)/2)! · Σᵢ ε^{2i} k_{2i} / ∏_{j=1..i}(n−q+2j)`.
pub fn weyl_tube_volume(spec: &TubeSpec, epsilon: f64) -> Result<f64, GeometryError> {
    if !(epsilon > 0.0) {
        return Err(GeometryError::Invalid(format!("tube radius {epsilon} must be positive")));
    }
    let codim = (spec.ambient_dim - spec.manifold_dim) as f64;
    let lead = (PI * epsilon * epsilon).powf(codim / 2.0) / gamma(codim / 2.0 + 1.0);
    let mut sum = 0.0;
    let mut denom = 1.0;
    let mut eps_pow = 1.0;
    for (i, &k) in spec.invariants.iter().enumerate() {
        if i > 0 {
            denom *= codim + 2.0 * i as f64;
            eps_pow *= epsilon * epsilon;
        }
        sum += eps_pow * k / denom;
    }
    Ok(lead * sum)
}
