use rand::Rng;
use serde::{Deserialize, Serialize};

use super::VolumeError;
use crate::attack::BoundaryPoint;
use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum RegionKind {
    UnitCube,
    BallUnion,
    BoundaryBallUnion { alpha: u32 },
}

/// Sampling domain of a volume estimate.
///
/// Ball unions are sampled as a disjoint union: pick a centre uniformly, then
/// a point uniformly in its l∞ δ-ball. Overlaps are not deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    kind: RegionKind,
    dim: usize,
    centers: Vec<f64>,
    center_labels: Option<Vec<usize>>,
    delta: f64,
    clip_to_cube: bool,
}

impl RegionSpec {
    pub fn unit_cube(dim: usize) -> Self {
        RegionSpec {
            kind: RegionKind::UnitCube,
            dim,
            centers: Vec::new(),
            center_labels: None,
            delta: 0.0,
            clip_to_cube: false,
        }
    }

    /// δ-balls around row-major `centers` of dimension `dim`.
    pub fn ball_union(dim: usize, centers: Vec<f64>, delta: f64) -> Result<Self, VolumeError> {
        if dim == 0 || centers.is_empty() || centers.len() % dim != 0 {
            return Err(VolumeError::Invalid(format!(
                "{} centre values for dimension {dim}",
                centers.len()
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(VolumeError::Invalid(format!("δ = {delta} must be positive")));
        }
        Ok(RegionSpec {
            kind: RegionKind::BallUnion,
            dim,
            centers,
            center_labels: None,
            delta,
            clip_to_cube: false,
        })
    }

    /// δ-balls around the selected training points; their labels become
    /// label hints for the detector.
    pub fn around_points(data: &Dataset, indices: &[usize], delta: f64) -> Result<Self, VolumeError> {
        let mut centers = Vec::with_capacity(indices.len() * data.dim());
        for &i in indices {
            centers.extend(data.point(i).iter().map(|&v| v as f64));
        }
        let mut r = Self::ball_union(data.dim(), centers, delta)?;
        r.center_labels = Some(indices.iter().map(|&i| data.label(i)).collect());
        Ok(r)
    }

    pub fn around_boundary(points: &[BoundaryPoint], delta: f64, alpha: u32) -> Result<Self, VolumeError> {
        let dim = points.first().map_or(0, |p| p.point.len());
        let centers = points.iter().flat_map(|p| p.point.iter().copied()).collect();
        let mut r = Self::ball_union(dim, centers, delta)?;
        r.kind = RegionKind::BoundaryBallUnion { alpha };
        Ok(r)
    }

    pub fn with_clip(mut self, clip_to_cube: bool) -> Self {
        self.clip_to_cube = clip_to_cube;
        self
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// δ for ball unions, `None` for the cube.
    pub fn delta(&self) -> Option<f64> {
        (self.kind != RegionKind::UnitCube).then_some(self.delta)
    }

    pub fn clip_to_cube(&self) -> bool {
        self.clip_to_cube
    }

    /// Number of balls (`|X|` or `|cp(X, Y)|`); zero for the cube.
    pub fn num_centers(&self) -> usize {
        if self.kind == RegionKind::UnitCube {
            0
        } else {
            self.centers.len() / self.dim
        }
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k * self.dim..(k + 1) * self.dim]
    }

    /// Draws one point and the index of the ball it came from.
    pub fn sample_with_center<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Option<usize>) {
        if self.kind == RegionKind::UnitCube {
            return ((0..self.dim).map(|_| rng.random::<f64>()).collect(), None);
        }
        let k = rng.random_range(0..self.num_centers());
        let c = self.center(k);
        let d = self.delta;
        let x = if self.clip_to_cube {
            c.iter()
                .map(|&ci| {
                    let lo = (ci - d).max(0.0);
                    let hi = (ci + d).min(1.0).max(lo);
                    lo + (hi - lo) * rng.random::<f64>()
                })
                .collect()
        } else {
            c.iter().map(|&ci| ci + d * (2.0 * rng.random::<f64>() - 1.0)).collect()
        };
        (x, Some(k))
    }

    /// Draws one point together with the label hint of its ball, if any.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Option<usize>) {
        let (x, k) = self.sample_with_center(rng);
        let hint = k.and_then(|k| self.center_labels.as_ref().map(|l| l[k]));
        (x, hint)
    }
}

/// Free-function form of [`RegionSpec::sample`].
pub fn sample_region<R: Rng + ?Sized>(region: &RegionSpec, rng: &mut R) -> Vec<f64> {
    region.sample(rng).0
}
