//! Streaming pairwise-distance statistics.
//!
//! Distances are computed on the fly; no `m × m` matrix is ever stored.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::rng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    L2,
    Linf,
}

impl Metric {
    pub fn distance(self, a: &[f32], b: &[f32]) -> f64 {
        match self {
            Metric::L2 => sq_l2(a, b).sqrt(),
            Metric::Linf => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0f32, f32::max) as f64,
        }
    }
}

/// Squared l₂ distance with eight independent f32 accumulators.
fn sq_l2(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0.0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            let d = x[k] - y[k];
            acc[k] += d * d;
        }
    }
    let tail: f32 = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
    acc.iter().map(|&v| v as f64).sum::<f64>() + tail as f64
}

fn rows(points: &[f32], dim: usize) -> Result<usize, GeometryError> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(GeometryError::Invalid(format!("{} values for dimension {dim}", points.len())));
    }
    Ok(points.len() / dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum AnchorPolicy {
    All,
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        if values.is_empty() {
            return Histogram {
                edges: vec![0.0; bins + 1],
                counts: vec![0; bins],
            };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            hi = lo + 1.0;
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }

    /// `(bin_left, bin_right, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (self.edges[k], self.edges[k + 1], c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadStats {
    pub points: usize,
    pub metric: Metric,
    pub min_distance: f64,
    pub max_distance: f64,
    /// `(max − min)/min` over all pairs; `None` when two points coincide.
    pub statistic: Option<f64>,
    pub coincident: bool,
    pub anchors: usize,
    /// Anchors with a coincident neighbour, left out of the histogram.
    pub coincident_anchors: usize,
    pub histogram: Histogram,
}

/// `(min, max)` distance from row `a` to every other row.
fn anchor_extremes(points: &[f32], dim: usize, a: usize, metric: Metric) -> (f64, f64) {
    let x = &points[a * dim..(a + 1) * dim];
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (j, y) in points.chunks_exact(dim).enumerate() {
        if j != a {
            let d = metric.distance(x, y);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    (lo, hi)
}

fn all_pair_extremes(points: &[f32], dim: usize, metric: Metric) -> (f64, f64) {
    let m = points.len() / dim;
    (0..m)
        .into_par_iter()
        .map(|i| {
            let x = &points[i * dim..(i + 1) * dim];
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for y in points[(i + 1) * dim..].chunks_exact(dim) {
                let d = metric.distance(x, y);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            (lo, hi)
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)))
}

/// The relative spread `(max − min)/min` of pairwise distances, globally and
/// per anchor (`(max_j d(x, x_j) − min_j d(x, x_j)) / min_j d(x, x_j)`).
pub fn relative_spread(
    points: &[f32],
    dim: usize,
    metric: Metric,
    anchors: AnchorPolicy,
    bins: usize,
) -> Result<SpreadStats, GeometryError> {
    let m = rows(points, dim)?;
    if m < 2 {
        return Err(GeometryError::Invalid("need at least two points".into()));
    }
    let anchor_idx: Vec<usize> = match anchors {
        AnchorPolicy::All => (0..m).collect(),
        AnchorPolicy::Sample { count, seed } => {
            let mut r = rng::stream(seed, rng::domain::ANCHORS, 0);
            let mut v = index::sample(&mut r, m, count.min(m)).into_vec();
            v.sort_unstable();
            v
        }
    };
    let extremes: Vec<(f64, f64)> = anchor_idx
        .par_iter()
        .map(|&a| anchor_extremes(points, dim, a, metric))
        .collect();
    let (min_distance, max_distance) = if anchor_idx.len() == m {
        extremes
            .iter()
            .fold((f64::INFINITY, 0.0f64), |acc, e| (acc.0.min(e.0), acc.1.max(e.1)))
    } else {
        all_pair_extremes(points, dim, metric)
    };
    let values: Vec<f64> = extremes
        .iter()
        .filter(|e| e.0 > 0.0)
        .map(|&(lo, hi)| (hi - lo) / lo)
        .collect();
    let coincident = min_distance == 0.0;
    Ok(SpreadStats {
        points: m,
        metric,
        min_distance,
        max_distance,
        statistic: (!coincident).then(|| (max_distance - min_distance) / min_distance),
        coincident,
        anchors: anchor_idx.len(),
        coincident_anchors: anchor_idx.len() - values.len(),
        histogram: Histogram::build(&values, bins),
    })
}

pub const MIN_DISTANCE_THRESHOLDS: [f64; 3] = [0.2, 0.1, 0.05];

#[derive(Debug, Clone, Copy)]
pub enum PairSets<'a> {
    /// Nearest other point within one set (self-pairs excluded).
    Within(&'a [f32]),
    /// Nearest point of the second set for every point of the first.
    Between(&'a [f32], &'a [f32]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinPairStats {
    pub min: f64,
    pub mean_of_min: f64,
    /// `(threshold, fraction of points whose nearest distance is below it)`.
    pub fraction_below: Vec<(f64, f64)>,
    pub count: usize,
}

pub fn min_pairwise_stats(sets: PairSets<'_>, dim: usize, metric: Metric) -> Result<MinPairStats, GeometryError> {
    let (from, to, within) = match sets {
        PairSets::Within(a) => (a, a, true),
        PairSets::Between(a, b) => (a, b, false),
    };
    let (n_from, n_to) = (rows(from, dim)?, rows(to, dim)?);
    if n_from == 0 || n_to == 0 || (within && n_from < 2) {
        return Err(GeometryError::Invalid("point sets too small".into()));
    }
    let nearest: Vec<f64> = (0..n_from)
        .into_par_iter()
        .map(|i| {
            let x = &from[i * dim..(i + 1) * dim];
            to.chunks_exact(dim)
                .enumerate()
                .filter(|&(j, _)| !(within && j == i))
                .map(|(_, y)| metric.distance(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let count = nearest.len();
    Ok(MinPairStats {
        min: nearest.iter().copied().fold(f64::INFINITY, f64::min),
        mean_of_min: nearest.iter().sum::<f64>() / count as f64,
        fraction_below: MIN_DISTANCE_THRESHOLDS
            .iter()
            .map(|&t| (t, nearest.iter().filter(|&&d| d < t).count() as f64 / count as f64))
            .collect(),
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_have_zero_spread() {
        let s = relative_spread(&[0.0, 0.0, 0.3, 0.4], 2, Metric::L2, AnchorPolicy::All, 10).unwrap();
        assert_eq!(s.statistic, Some(0.0));
        assert!((s.max_distance - 0.5).abs() < 1e-7);
    }

    #[test]
    fn duplicates_are_flagged() {
        let p = [0.1, 0.1, 0.1, 0.1, 0.9, 0.2];
        let s = relative_spread(&p, 2, Metric::L2, AnchorPolicy::All, 5).unwrap();
        assert!(s.coincident && s.statistic.is_none());
        assert_eq!(s.coincident_anchors, 2);
        assert_eq!(s.histogram.counts.iter().sum::<u64>(), 1);
    }

    #[test]
    fn sampled_anchors_keep_global_extremes() {
        let p: Vec<f32> = (0..40).map(|i| ((i * 37) % 41) as f32 / 41.0).collect();
        let all = relative_spread(&p, 2, Metric::Linf, AnchorPolicy::All, 8).unwrap();
        let some = relative_spread(&p, 2, Metric::Linf, AnchorPolicy::Sample { count: 5, seed: 1 }, 8).unwrap();
        assert_eq!(all.statistic, some.statistic);
        assert_eq!(some.anchors, 5);
    }

    #[test]
    fn min_pair_contract() {
        let a = [0.0f32, 0.0, 0.3, 0.0];
        let w = min_pairwise_stats(PairSets::Within(&a), 2, Metric::Linf).unwrap();
        assert!((w.min - 0.3).abs() < 1e-7);
        assert_eq!(w.fraction_below[0], (0.2, 0.0));
        let b = min_pairwise_stats(PairSets::Between(&a, &a), 2, Metric::Linf).unwrap();
        assert_eq!(b.min, 0.0);
    }

    #[test]
    fn histogram_edges() {
        let h = Histogram::build(&[0.0, 0.5, 1.0], 2);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
        assert_eq!(h.counts, vec![1, 2]);
    }
}
