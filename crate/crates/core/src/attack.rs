//! Distance-to-boundary probes: FGSM, minimal flipping radius on a grid, and
//! midpoint bisection between opposite-class points.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{BoundaryDetector, Classifier, GradientClassifier, Probe};
use crate::data::Dataset;
use crate::nn::NnError;
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error("invalid epsilon grid: {0}")]
    InvalidGrid(String),
    #[error("pair ({left}, {right}) has equal predicted label {label}")]
    InvalidPair { left: usize, right: usize, label: usize },
    #[error("dataset has fewer than two classes")]
    SingleClass,
    #[error("label policy `provided` needs a label for the point")]
    MissingLabel,
    #[error("found {found} of {requested} opposite-label pairs after {attempts} candidates")]
    NoValidPairs {
        found: usize,
        requested: usize,
        attempts: usize,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Strictly increasing positive l∞ radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonGrid(Vec<f64>);

impl EpsilonGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, AttackError> {
        if values.is_empty() {
            return Err(AttackError::InvalidGrid("empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(AttackError::InvalidGrid("radii must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AttackError::InvalidGrid("radii must be strictly increasing".into()));
        }
        Ok(EpsilonGrid(values))
    }

    pub fn single(epsilon: f64) -> Result<Self, AttackError> {
        Self::new(vec![epsilon])
    }

    /// `steps` geometric radii from `target/10` to `target` inclusive.
    pub fn geometric(target: f64, steps: usize) -> Result<Self, AttackError> {
        if steps < 2 {
            return Self::single(target);
        }
        let lo = target / 10.0;
        let ratio = 10f64.powf(1.0 / (steps - 1) as f64);
        let mut v: Vec<f64> = (0..steps).map(|k| lo * ratio.powi(k as i32)).collect();
        v[steps - 1] = target;
        Self::new(v)
    }

    /// The default sweep grid: 20 geometric steps up to `target`.
    pub fn sweep_default(target: f64) -> Result<Self, AttackError> {
        Self::geometric(target, 20)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for EpsilonGrid {
    type Error = AttackError;
    fn try_from(v: Vec<f64>) -> Result<Self, AttackError> {
        Self::new(v)
    }
}

impl From<EpsilonGrid> for Vec<f64> {
    fn from(g: EpsilonGrid) -> Vec<f64> {
        g.0
    }
}

/// Which label enters the FGSM loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPolicy {
    /// The classifier's own prediction at the point (untargeted).
    #[default]
    Predicted,
    /// A label supplied by the caller, e.g. that of a nearby training point.
    Provided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub epsilon_grid: EpsilonGrid,
    #[serde(default)]
    pub label_policy: LabelPolicy,
}

impl AttackConfig {
    pub fn predicted(epsilon_grid: EpsilonGrid) -> Self {
        AttackConfig {
            epsilon_grid,
            label_policy: LabelPolicy::Predicted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub flipped: bool,
    pub min_flip_epsilon: Option<f64>,
    pub adversarial_point: Option<Vec<f64>>,
    pub original_label: usize,
    pub adversarial_label: Option<usize>,
    /// ∇ₓℒ vanished, so no perturbation direction existed.
    pub zero_grad: bool,
}

fn sign(g: f64) -> f64 {
    if g > 0.0 {
        1.0
    } else if g < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn perturb(x: &[f64], signs: &[f64], epsilon: f64) -> Vec<f64> {
    x.iter().zip(signs).map(|(&v, &s)| v + epsilon * s).collect()
}

/// `x + ε·sign(∇ₓℒ(x, label))` with `sign(0) = 0`. No clipping to the cube.
pub fn fgsm_step<C: GradientClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    label: usize,
    epsilon: f64,
) -> Result<Vec<f64>, NnError> {
    let (_, grad) = classifier.loss_input_grad(x, label)?;
    let signs: Vec<f64> = grad.iter().map(|&g| sign(g)).collect();
    Ok(perturb(x, &signs, epsilon))
}

struct Scan {
    original: usize,
    flip: Option<(f64, Vec<f64>, usize)>,
    zero_grad: bool,
}

/// One gradient evaluation, then a forward pass per grid radius in ascending
/// order until the resolved label changes.
fn scan<C: GradientClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    grid: &EpsilonGrid,
    label: Option<usize>,
) -> Result<Scan, NnError> {
    let original = classifier.predict_label(x)?;
    let (_, grad) = classifier.loss_input_grad(x, label.unwrap_or(original))?;
    let signs: Vec<f64> = grad.iter().map(|&g| sign(g)).collect();
    if signs.iter().all(|&s| s == 0.0) {
        return Ok(Scan {
            original,
            flip: None,
            zero_grad: true,
        });
    }
    for &eps in grid.values() {
        let a = perturb(x, &signs, eps);
        let l = classifier.predict_label(&a)?;
        if l != original {
            return Ok(Scan {
                original,
                flip: Some((eps, a, l)),
                zero_grad: false,
            });
        }
    }
    Ok(Scan {
        original,
        flip: None,
        zero_grad: false,
    })
}

fn policy_label(policy: LabelPolicy, provided: Option<usize>) -> Result<Option<usize>, AttackError> {
    match policy {
        LabelPolicy::Predicted => Ok(None),
        LabelPolicy::Provided => provided.map(Some).ok_or(AttackError::MissingLabel),
    }
}

/// Smallest grid radius whose FGSM point changes the predicted label.
///
/// `provided_label` is consulted only under [`LabelPolicy::Provided`].
pub fn min_flip_epsilon<C: GradientClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    config: &AttackConfig,
    provided_label: Option<usize>,
) -> Result<AttackOutcome, AttackError> {
    let label = policy_label(config.label_policy, provided_label)?;
    let s = scan(classifier, x, &config.epsilon_grid, label)?;
    Ok(match s.flip {
        Some((eps, point, l)) => AttackOutcome {
            flipped: true,
            min_flip_epsilon: Some(eps),
            adversarial_point: Some(point),
            original_label: s.original,
            adversarial_label: Some(l),
            zero_grad: false,
        },
        None => AttackOutcome {
            flipped: false,
            min_flip_epsilon: None,
            adversarial_point: None,
            original_label: s.original,
            adversarial_label: None,
            zero_grad: s.zero_grad,
        },
    })
}

/// FGSM as a [`BoundaryDetector`] for the volume estimators.
#[derive(Debug, Clone, Copy)]
pub struct FgsmDetector<'a, C: ?Sized> {
    pub classifier: &'a C,
    pub label_policy: LabelPolicy,
}

impl<'a, C: GradientClassifier + ?Sized> FgsmDetector<'a, C> {
    pub fn new(classifier: &'a C, label_policy: LabelPolicy) -> Self {
        FgsmDetector {
            classifier,
            label_policy,
        }
    }
}

impl<C: GradientClassifier + ?Sized> BoundaryDetector for FgsmDetector<'_, C> {
    fn input_dim(&self) -> usize {
        self.classifier.input_dim()
    }

    fn probe(&self, x: &[f64], grid: &EpsilonGrid, label_hint: Option<usize>) -> Result<Probe, NnError> {
        let label = policy_label(self.label_policy, label_hint)
            .map_err(|e| NnError::InvalidConfig(e.to_string()))?;
        let s = scan(self.classifier, x, grid, label)?;
        Ok(Probe {
            min_flip: s.flip.map(|f| f.0),
            zero_grad: s.zero_grad,
        })
    }
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// The end of the final bracket whose label differs from the first
    /// endpoint's, i.e. an adversarial example for it.
    pub point: Vec<f64>,
    pub source_pair: (usize, usize),
    /// `d∞(x, x′) / 2^α`, the l∞ length of the final bracket.
    pub gap_bound: f64,
    /// Resolved labels of `x` and of `point`.
    pub labels: (usize, usize),
}

/// Midpoint bisection on the segment `[x, x′]` with `alpha` evaluations.
///
/// The bracket `[lo, hi]` in segment parameter always has `label(lo) =
/// label(x)` and `label(hi) ≠ label(x)`; the returned point is `hi`.
pub fn bisect_boundary_point<C: Classifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    x_prime: &[f64],
    alpha: u32,
    source_pair: (usize, usize),
) -> Result<BoundaryPoint, AttackError> {
    let l0 = classifier.predict_label(x)?;
    let l1 = classifier.predict_label(x_prime)?;
    if l0 == l1 {
        return Err(AttackError::InvalidPair {
            left: source_pair.0,
            right: source_pair.1,
            label: l0,
        });
    }
    let at = |t: f64| -> Vec<f64> { x.iter().zip(x_prime).map(|(&a, &b)| a + t * (b - a)).collect() };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut hi_label = l1;
    for _ in 0..alpha {
        let mid = 0.5 * (lo + hi);
        let l = classifier.predict_label(&at(mid))?;
        if l == l0 {
            lo = mid;
        } else {
            hi = mid;
            hi_label = l;
        }
    }
    Ok(BoundaryPoint {
        point: at(hi),
        source_pair,
        gap_bound: linf_distance(x, x_prime) / 2f64.powi(alpha as i32),
        labels: (l0, hi_label),
    })
}

/// Candidate pair number `k` for `seed`: a uniform ordered pair of points with
/// different dataset labels.
pub(crate) fn class_pair(data: &Dataset, seed: u64, k: u64) -> (usize, usize) {
    let mut r = rng::stream(seed, rng::domain::PAIRS, k);
    loop {
        let i = r.random_range(0..data.len());
        let j = r.random_range(0..data.len());
        if data.label(i) != data.label(j) {
            return (i, j);
        }
    }
}

pub(crate) fn check_two_classes(data: &Dataset) -> Result<(), AttackError> {
    if data.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(AttackError::SingleClass);
    }
    Ok(())
}

/// `count` index pairs drawn uniformly from the ordered pairs with different
/// labels.
pub fn sample_class_pairs(data: &Dataset, count: usize, seed: u64) -> Result<Vec<(usize, usize)>, AttackError> {
    check_two_classes(data)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|k| class_pair(data, seed, k))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerParams, LayerSpec, Network, Shape};

    /// Logits (0.5, x₀): label 1 iff x₀ > 0.5, l∞ margin |x₀ − 0.5|.
    fn linear_net() -> Network<f64> {
        let spec = [LayerSpec::dense(2, 2, Activation::Softmax)];
        let params = vec![LayerParams {
            weights: vec![0.0, 1.0, 0.0, 0.0],
            biases: vec![0.5, 0.0],
        }];
        Network::from_params(&spec, Shape::Flat(2), params).unwrap()
    }

    fn constant_net() -> Network<f64> {
        Network::build(&[LayerSpec::dense(3, 4, Activation::Softmax)], Shape::Flat(3)).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(EpsilonGrid::new(vec![]).is_err());
        assert!(EpsilonGrid::new(vec![0.1, 0.1]).is_err());
        assert!(EpsilonGrid::new(vec![0.0, 0.1]).is_err());
        let g = EpsilonGrid::sweep_default(0.1).unwrap();
        assert_eq!(g.values().len(), 20);
        assert!((g.values()[0] - 0.01).abs() < 1e-15);
        assert_eq!(g.max(), 0.1);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<EpsilonGrid>(&json).unwrap(), g);
        assert!(serde_json::from_str::<EpsilonGrid>("[0.2, 0.1]").is_err());
    }

    #[test]
    fn fgsm_zero_epsilon_and_zero_gradient() {
        let net = linear_net();
        let x = [0.6, 0.3];
        assert_eq!(fgsm_step(&net, &x, 1, 0.0).unwrap(), x.to_vec());
        let c = constant_net();
        let y = [0.2, 0.4, 0.9];
        assert_eq!(fgsm_step(&c, &y, 0, 0.3).unwrap(), y.to_vec());
    }

    #[test]
    fn fgsm_coordinates_move_by_epsilon_or_zero() {
        let net = linear_net();
        let a = fgsm_step(&net, &[0.6, 0.3], 1, 0.05).unwrap();
        // Only x₀ influences the loss.
        assert_eq!(a, vec![0.6 - 0.05, 0.3]);
    }

    #[test]
    fn linear_margin_flips_at_margin() {
        let net = linear_net();
        let x = [0.6, 0.3];
        let at = |eps: f64| {
            let a = fgsm_step(&net, &x, 1, eps).unwrap();
            Classifier::predict_label(&net, &a).unwrap()
        };
        assert_eq!(at(0.1), 0);
        assert_eq!(at(0.09), 1);
        let cfg = AttackConfig::predicted(EpsilonGrid::new(vec![0.05, 0.1, 0.2]).unwrap());
        let out = min_flip_epsilon(&net, &x, &cfg, None).unwrap();
        assert!(out.flipped);
        assert_eq!(out.min_flip_epsilon, Some(0.1));
        assert_eq!(out.original_label, 1);
        assert_eq!(out.adversarial_label, Some(0));
        let d = linf_distance(&x, out.adversarial_point.as_ref().unwrap());
        assert!((d - 0.1).abs() < 1e-15);

        let cfg = AttackConfig::predicted(EpsilonGrid::single(0.2).unwrap());
        assert_eq!(min_flip_epsilon(&net, &x, &cfg, None).unwrap().min_flip_epsilon, Some(0.2));
    }

    #[test]
    fn no_flip_and_zero_gradient_outcomes() {
        let net = linear_net();
        let cfg = AttackConfig::predicted(EpsilonGrid::new(vec![0.01, 0.02]).unwrap());
        let out = min_flip_epsilon(&net, &[0.95, 0.5], &cfg, None).unwrap();
        assert!(!out.flipped && out.adversarial_point.is_none() && !out.zero_grad);

        let out = min_flip_epsilon(&constant_net(), &[0.1, 0.2, 0.3], &cfg, None).unwrap();
        assert!(!out.flipped && out.zero_grad);
    }

    #[test]
    fn provided_policy_requires_label() {
        let mut cfg = AttackConfig::predicted(EpsilonGrid::single(0.1).unwrap());
        cfg.label_policy = LabelPolicy::Provided;
        assert!(matches!(
            min_flip_epsilon(&linear_net(), &[0.6, 0.3], &cfg, None),
            Err(AttackError::MissingLabel)
        ));
        // Pushing toward the other class with the wrong label moves away from
        // the boundary.
        let out = min_flip_epsilon(&linear_net(), &[0.6, 0.3], &cfg, Some(0)).unwrap();
        assert!(!out.flipped);
    }

    #[test]
    fn bisection_brackets_the_label_change() {
        let net = linear_net();
        for alpha in [1u32, 5, 10] {
            let b = bisect_boundary_point(&net, &[0.0, 0.0], &[1.0, 1.0], alpha, (0, 1)).unwrap();
            assert_eq!(b.gap_bound, 1.0 / 2f64.powi(alpha as i32));
            assert!(b.point[0] > 0.5 && b.point[0] - 0.5 <= b.gap_bound);
            assert_eq!(b.labels, (0, 1));
        }
        assert!(matches!(
            bisect_boundary_point(&net, &[0.0, 0.0], &[0.1, 1.0], 3, (4, 5)),
            Err(AttackError::InvalidPair { left: 4, right: 5, .. })
        ));
    }

    fn two_class(m: usize) -> Dataset {
        let points = (0..m).map(|i| i as f32 / m as f32).collect();
        let labels = (0..m).map(|i| usize::from(i == 0)).collect();
        Dataset::new("t", Shape::Flat(1), 2, points, labels).unwrap()
    }

    #[test]
    fn class_pairs_have_distinct_labels() {
        let d = two_class(2);
        let p = sample_class_pairs(&d, 1, 0).unwrap();
        assert!(p[0] == (0, 1) || p[0] == (1, 0));

        let d = two_class(30);
        let a = sample_class_pairs(&d, 200, 5).unwrap();
        assert_eq!(a, sample_class_pairs(&d, 200, 5).unwrap());
        assert!(a.iter().all(|&(i, j)| d.label(i) != d.label(j)));

        let single = Dataset::new("s", Shape::Flat(1), 2, vec![0.1, 0.2], vec![1, 1]).unwrap();
        assert!(matches!(sample_class_pairs(&single, 1, 0), Err(AttackError::SingleClass)));
    }
}
