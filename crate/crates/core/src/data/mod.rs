//! Datasets with points in `[0, 1]ⁿ` and class labels.

mod cifar;
mod idx;
mod synthetic;

use rand::seq::SliceRandom;

pub use cifar::{load_cifar10, CIFAR_RECORD_BYTES};
pub use idx::{load_idx, load_mnist_dir, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use synthetic::{make_synthetic, SyntheticKind, ANNULUS_RADIUS};

use crate::nn::Shape;
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { path: String, found: u32, expected: u32 },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: file truncated ({reason})")]
    Truncated { path: String, reason: String },
    #[error("{path}: size {size} is not a multiple of {record} byte records")]
    RecordSize { path: String, size: usize, record: usize },
    #[error("requested {requested} points but the dataset holds {available}")]
    Oversubscribed { requested: usize, available: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Points in `[0, 1]ⁿ` with integer class labels.
///
/// Points are stored row-major as `f32`; pixel data divided by 255 is exact
/// in this representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    dim: usize,
    num_classes: usize,
    points: Vec<f32>,
    labels: Vec<usize>,
    shape: Shape,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        shape: Shape,
        num_classes: usize,
        points: Vec<f32>,
        labels: Vec<usize>,
    ) -> Result<Self, DataError> {
        let dim = shape.len();
        if dim == 0 || points.len() != dim * labels.len() {
            return Err(DataError::Invalid(format!(
                "{} values for {} points of dimension {dim}",
                points.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::Invalid(format!("label {bad} with {num_classes} classes")));
        }
        if points.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(DataError::Invalid("point coordinate outside [0, 1]".into()));
        }
        Ok(Dataset {
            name: name.into(),
            dim,
            num_classes,
            points,
            labels,
            shape,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Input shape for networks (flat for vectors, `C × H × W` for images).
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn point(&self, i: usize) -> &[f32] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_f64(&self, i: usize) -> Vec<f64> {
        self.point(i).iter().map(|&v| v as f64).collect()
    }

    pub fn points(&self) -> &[f32] {
        &self.points
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn one_hot(&self, i: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.num_classes];
        y[self.labels[i]] = 1.0;
        y
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Points of one class, row-major.
    pub fn class_points(&self, class: usize) -> Vec<f32> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .flat_map(|(i, _)| self.point(i).iter().copied())
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut points = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            points.extend_from_slice(self.point(i));
        }
        Dataset {
            name: self.name.clone(),
            dim: self.dim,
            num_classes: self.num_classes,
            points,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            shape: self.shape,
        }
    }

    /// The same points viewed as flat vectors.
    pub fn flattened(mut self) -> Dataset {
        self.shape = Shape::Flat(self.dim);
        self
    }

    /// A seeded random permutation of the point indices.
    pub fn permutation(&self, seed: u64, domain: u64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut rng::stream(seed, domain, 0));
        idx
    }
}

/// Disjoint uniformly random subsets of sizes `train` and `test`.
pub fn subset_split(data: &Dataset, train: usize, test: usize, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    let requested = train + test;
    if requested > data.len() {
        return Err(DataError::Oversubscribed {
            requested,
            available: data.len(),
        });
    }
    let idx = data.permutation(seed, rng::domain::SPLIT);
    Ok((data.select(&idx[..train]), data.select(&idx[train..requested])))
}
