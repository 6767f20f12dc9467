use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::nn::Shape;
use crate::rng;

/// Radius of the class boundary of [`SyntheticKind::Annulus`].
pub const ANNULUS_RADIUS: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Two Gaussian blobs centred at `0.5 ∓ separation/2` along the first axis
    /// (all other coordinates centred at 0.5), noise σ = separation/6.
    ///
    /// The first coordinate's deviation from its centre is kept below
    /// `0.4·separation`, so the classes are split by the plane `x₀ = 0.5` with
    /// margin `0.1·separation`.
    Blobs { dim: usize, separation: f64 },
    /// Class 0 uniform inside the radius-0.3 ball about the cube centre,
    /// class 1 uniform over the rest of the cube.
    Annulus { dim: usize },
}

fn gauss<R: Rng>(r: &mut R) -> f64 {
    r.sample(StandardNormal)
}

fn blob_point<R: Rng>(r: &mut R, dim: usize, separation: f64, class: usize) -> Vec<f32> {
    let sigma = separation / 6.0;
    let centre0 = if class == 0 { 0.5 - separation / 2.0 } else { 0.5 + separation / 2.0 };
    let mut x = Vec::with_capacity(dim);
    let d0 = loop {
        let d = sigma * gauss(r);
        if d.abs() < 0.4 * separation {
            break d;
        }
    };
    x.push((centre0 + d0).clamp(0.0, 1.0) as f32);
    for _ in 1..dim {
        x.push((0.5 + sigma * gauss(r)).clamp(0.0, 1.0) as f32);
    }
    x
}

fn annulus_point<R: Rng>(r: &mut R, dim: usize, class: usize) -> Vec<f32> {
    if class == 0 {
        // Uniform in the ball: Gaussian direction, radius R·U^{1/n}.
        let dir: Vec<f64> = (0..dim).map(|_| gauss(r)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = ANNULUS_RADIUS * r.random::<f64>().powf(1.0 / dim as f64);
        dir.iter().map(|v| (0.5 + radius * v / norm) as f32).collect()
    } else {
        loop {
            let x: Vec<f32> = (0..dim).map(|_| r.random::<f32>()).collect();
            let d2: f64 = x.iter().map(|&v| (v as f64 - 0.5).powi(2)).sum();
            if d2 > ANNULUS_RADIUS * ANNULUS_RADIUS {
                break x;
            }
        }
    }
}

/// `m_per_class` points of each of two classes, interleaved `0, 1, 0, 1, …`.
pub fn make_synthetic(kind: SyntheticKind, m_per_class: usize, seed: u64) -> Result<Dataset, DataError> {
    if m_per_class == 0 {
        return Err(DataError::Invalid("need at least one point per class".into()));
    }
    let (dim, name) = match kind {
        SyntheticKind::Blobs { dim, separation } => {
            if !(separation > 0.0 && separation <= 1.0) {
                return Err(DataError::Invalid(format!("blob separation {separation} outside (0, 1]")));
            }
            (dim, "blobs")
        }
        SyntheticKind::Annulus { dim } => (dim, "annulus"),
    };
    if dim == 0 {
        return Err(DataError::Invalid("dimension must be positive".into()));
    }
    let m = 2 * m_per_class;
    let mut points = Vec::with_capacity(m * dim);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let class = i % 2;
        let mut r = rng::stream(seed, rng::domain::SYNTHETIC, i as u64);
        let x = match kind {
            SyntheticKind::Blobs { separation, .. } => blob_point(&mut r, dim, separation, class),
            SyntheticKind::Annulus { .. } => annulus_point(&mut r, dim, class),
        };
        points.extend(x);
        labels.push(class);
    }
    Dataset::new(name, Shape::Flat(dim), 2, points, labels)
}
