use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;

/// `⌊e^{ε²n/4} · √(ln(1/θ))⌋` vectors that are pairwise ε-orthogonal with
/// probability above θ.
pub fn orthogonality_capacity(epsilon: f64, theta: f64, n: u64) -> u64 {
    assert!(epsilon > 0.0 && theta > 0.0 && theta < 1.0);
    ((epsilon * epsilon * n as f64 / 4.0).exp() * (1.0 / theta).ln().sqrt()).floor() as u64
}

/// Fraction of trials in which `count` uniform vectors of the unit ball in ℝⁿ
/// have all pairwise `|û·v̂| < ε`.
pub fn orthogonality_trial(n: usize, count: usize, epsilon: f64, trials: u64, seed: u64) -> f64 {
    assert!(n >= 1 && trials >= 1);
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut r = rng::stream(seed, rng::domain::ORTHOGONALITY, t);
            // Only directions matter, so the radial part is not drawn.
            let units: Vec<Vec<f64>> = (0..count)
                .map(|_| {
                    let g: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
                    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    g.into_iter().map(|v| v / norm).collect()
                })
                .collect();
            (0..count).all(|i| {
                (i + 1..count).all(|j| {
                    let dot: f64 = units[i].iter().zip(&units[j]).map(|(a, b)| a * b).sum();
                    dot.abs() < epsilon
                })
            })
        })
        .count();
    hits as f64 / trials as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeOverlap {
    /// `m² ζⁿ / 2`.
    pub loose: f64,
    /// `C(m, 2) ζⁿ`.
    pub pairwise: f64,
}

/// Upper bounds on the total pairwise overlap volume of `m` unit-volume cubes
/// whose pairwise intersections have side ratio at most ζ.
pub fn cube_overlap_bound(m: u64, zeta: f64, n: u64) -> CubeOverlap {
    assert!(m >= 2 && (0.0..1.0).contains(&zeta));
    let zn = zeta.powf(n as f64);
    let m = m as f64;
    CubeOverlap {
        loose: m * m * zn / 2.0,
        pairwise: m * (m - 1.0) / 2.0 * zn,
    }
}
