//! Classifier abstractions shared by networks and analytic oracles.

use crate::attack::EpsilonGrid;
use crate::nn::NnError;

/// The set of labels whose output coordinate is maximal.
///
/// Singleton in the generic case. Labels are 0-based class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet(Vec<usize>);

impl LabelSet {
    /// Builds the tie set of `scores`. Empty input gives an empty set.
    pub fn argmax<T: PartialOrd + Copy>(scores: &[T]) -> Self {
        let mut best: Option<T> = None;
        let mut labels = Vec::new();
        for (j, &s) in scores.iter().enumerate() {
            match best {
                Some(b) if s < b => {}
                Some(b) if s == b => labels.push(j),
                _ => {
                    best = Some(s);
                    labels.clear();
                    labels.push(j);
                }
            }
        }
        LabelSet(labels)
    }

    pub fn single(label: usize) -> Self {
        LabelSet(vec![label])
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn is_tie(&self) -> bool {
        self.0.len() > 1
    }

    pub fn resolved(&self) -> usize {
        self.0[0]
    }

    pub fn contains(&self, label: usize) -> bool {
        self.0.contains(&label)
    }
}

/// Anything that assigns labels to points of ℝⁿ.
pub trait Classifier: Sync {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<LabelSet, NnError>;

    /// Smallest label of the tie set.
    fn predict_label(&self, x: &[f64]) -> Result<usize, NnError> {
        Ok(self.predict(x)?.resolved())
    }
}

/// A classifier trained with cross-entropy that exposes ∇ₓℒ.
pub trait GradientClassifier: Classifier {
    /// Returns `(loss, ∇ₓ loss)` for the given class label.
    fn loss_input_grad(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>), NnError>;
}

/// Result of asking how close a point is to the decision boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    /// Smallest grid radius at which a label change was certified.
    pub min_flip: Option<f64>,
    /// The probe had no usable direction (zero input gradient).
    pub zero_grad: bool,
}

impl Probe {
    pub fn detected_within(&self, epsilon: f64) -> bool {
        self.min_flip.is_some_and(|d| d <= epsilon)
    }
}

/// Distance-to-boundary detector consumed by the volume estimators.
pub trait BoundaryDetector: Sync {
    fn input_dim(&self) -> usize;

    /// `label_hint` carries a ground-truth label when the sampling region knows
    /// one (δ-balls around training points); detectors may ignore it.
    fn probe(
        &self,
        x: &[f64],
        grid: &EpsilonGrid,
        label_hint: Option<usize>,
    ) -> Result<Probe, NnError>;
}
