//! Classifiers with an analytically known boundary and exact distances.

use serde::{Deserialize, Serialize};

use super::spread::Metric;
use crate::attack::EpsilonGrid;
use crate::classifier::{BoundaryDetector, Classifier, LabelSet, Probe};
use crate::nn::NnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Oracle {
    /// Label 1 iff `x[axis] > offset`.
    Halfspace { dim: usize, axis: usize, offset: f64 },
    /// Label 0 on the closed l₂ ball, 1 outside.
    Sphere { center: Vec<f64>, radius: f64 },
}

impl Oracle {
    pub fn halfspace(dim: usize, axis: usize, offset: f64) -> Self {
        assert!(axis < dim);
        Oracle::Halfspace { dim, axis, offset }
    }

    pub fn sphere(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0 && !center.is_empty());
        Oracle::Sphere { center, radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            Oracle::Halfspace { dim, .. } => *dim,
            Oracle::Sphere { center, .. } => center.len(),
        }
    }

    pub fn label(&self, x: &[f64]) -> usize {
        match self {
            Oracle::Halfspace { axis, offset, .. } => usize::from(x[*axis] > *offset),
            Oracle::Sphere { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                usize::from(d2 > radius * radius)
            }
        }
    }

    /// Exact distance from `x` to the decision boundary.
    pub fn distance(&self, x: &[f64], metric: Metric) -> f64 {
        match self {
            Oracle::Halfspace { axis, offset, .. } => (x[*axis] - offset).abs(),
            Oracle::Sphere { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c).abs()).collect();
                match metric {
                    Metric::L2 => (d.iter().map(|v| v * v).sum::<f64>().sqrt() - radius).abs(),
                    Metric::Linf => sphere_linf_distance(&d, *radius),
                }
            }
        }
    }
}

/// l∞ distance to the sphere of radius `r` from a point with absolute offsets
/// `d` from the centre.
///
/// Inside, the nearest exit is where the far corner of the l∞ box reaches the
/// sphere: `Σ(dᵢ + t)² = r²`. Outside, it is where the box first touches the
/// ball: `Σ max(dᵢ − t, 0)² = r²`, solved piecewise over the sorted offsets.
pub fn sphere_linf_distance(d: &[f64], r: f64) -> f64 {
    let n = d.len() as f64;
    let s1: f64 = d.iter().sum();
    let s2: f64 = d.iter().map(|v| v * v).sum();
    if s2 <= r * r {
        return (-s1 + (s1 * s1 - n * (s2 - r * r)).sqrt()) / n;
    }
    let mut a = d.to_vec();
    a.sort_unstable_by(|x, y| y.total_cmp(x));
    let (mut p1, mut p2) = (0.0, 0.0);
    for k in 0..a.len() {
        p1 += a[k];
        p2 += a[k] * a[k];
        let kf = (k + 1) as f64;
        let disc = (p1 * p1 - kf * (p2 - r * r)).max(0.0);
        let t = (p1 - disc.sqrt()) / kf;
        let next = a.get(k + 1).copied().unwrap_or(0.0);
        if t >= next && t <= a[k] {
            return t;
        }
    }
    unreachable!("piecewise root not bracketed")
}

impl Classifier for Oracle {
    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn predict(&self, x: &[f64]) -> Result<LabelSet, NnError> {
        if x.len() != self.dim() {
            return Err(NnError::InputLength {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(LabelSet::single(self.label(x)))
    }
}

/// Detects a boundary within ε whenever the exact distance is at most ε.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pub oracle: Oracle,
    pub metric: Metric,
}

impl OracleDetector {
    pub fn new(oracle: Oracle, metric: Metric) -> Self {
        OracleDetector { oracle, metric }
    }
}

impl BoundaryDetector for OracleDetector {
    fn input_dim(&self) -> usize {
        self.oracle.dim()
    }

    fn probe(&self, x: &[f64], grid: &EpsilonGrid, _label_hint: Option<usize>) -> Result<Probe, NnError> {
        let d = self.oracle.distance(x, self.metric);
        Ok(Probe {
            min_flip: grid.values().iter().copied().find(|&e| d <= e),
            zero_grad: false,
        })
    }
}
