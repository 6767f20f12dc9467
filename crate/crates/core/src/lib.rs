//! Decision-boundary geometry for small classifiers.
//!
//! The crate trains feed-forward and convolutional networks from scratch and
//! estimates the volume of the ε-neighbourhood of their decision boundaries by
//! Monte Carlo sampling combined with one-step adversarial distance probes.
//!
//! - [`nn`]: layers, networks, a hand-derived backward pass, SGD/Adam training
//!   with final-hidden-layer dropout, and JSON checkpoints.
//! - [`attack`]: FGSM perturbations, minimal flipping radius on an ε grid, and
//!   midpoint bisection between opposite-class points.
//! - [`volume`]: sampling regions (unit cube, δ-ball unions), Bernoulli
//!   estimators, confidence intervals, tail bounds, and ε sweeps.
//! - [`geometry`]: closed forms and simulations for high-dimensional geometry
//!   (tube volumes, distance-ratio moments, concentration bounds) plus analytic
//!   oracle classifiers.
//! - [`data`]: IDX / CIFAR-10 loaders and synthetic datasets.
//!
//! Every stochastic routine takes an explicit seed and derives per-item random
//! streams with [`rng::stream`], so results do not depend on the number of
//! worker threads.

pub mod attack;
pub mod classifier;
pub mod data;
pub mod geometry;
pub mod nn;
pub mod rng;
pub mod volume;

pub use classifier::{BoundaryDetector, Classifier, GradientClassifier, LabelSet, Probe};
