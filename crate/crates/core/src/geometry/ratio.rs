//! Moments of `x̂·𝟙̂` for `x̂` uniform on the non-negative orthant of the unit
//! sphere, i.e. the ratio of l₂ to l∞ distance to a random hyperplane.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::special::ln_gamma_ratio;
use crate::rng;

/// `E = √(n/π) · Γ(n/2) / Γ((n+1)/2)`.
pub fn ratio_expectation(n: u64) -> f64 {
    assert!(n >= 1, "dimension must be positive");
    let n = n as f64;
    (n / PI).sqrt() * ln_gamma_ratio(n / 2.0, (n + 1.0) / 2.0).exp()
}

/// `E[(x̂·𝟙̂)²] = (2/π)(n−1)/n + 1/n`.
pub fn ratio_second_moment(n: u64) -> f64 {
    let n = n as f64;
    2.0 / PI * (n - 1.0) / n + 1.0 / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioMoments {
    pub n: u64,
    pub expectation: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `(π − 2)/n`.
    pub variance_bound: f64,
}

pub fn ratio_moments(n: u64) -> RatioMoments {
    let expectation = ratio_expectation(n);
    let second_moment = ratio_second_moment(n);
    RatioMoments {
        n,
        expectation,
        second_moment,
        // Rounding can leave −1e-17 at n = 1.
        variance: (second_moment - expectation * expectation).max(0.0),
        variance_bound: (PI - 2.0) / n as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSimulation {
    pub n: u64,
    pub trials: u64,
    pub mean: f64,
    pub mean_std_error: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub second_moment: f64,
    pub second_moment_std_error: f64,
}

const SIM_CHUNK: u64 = 1024;

/// Monte Carlo moments of `x̂·𝟙̂` with `x̂` a normalised vector of absolute
/// standard normals.
///
/// Trials are grouped in fixed chunks of 1024, each with its own random
/// stream; chunk sums are combined in index order.
pub fn simulate_ratio(n: u64, trials: u64, seed: u64) -> RatioSimulation {
    assert!(n >= 1 && trials >= 1);
    let chunks = trials.div_ceil(SIM_CHUNK);
    let sqrt_n = (n as f64).sqrt();
    let partial: Vec<[f64; 3]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, rng::domain::RATIO_SIM, c);
            let take = SIM_CHUNK.min(trials - c * SIM_CHUNK);
            let mut acc = [0.0; 3];
            for _ in 0..take {
                let (mut l1, mut l2) = (0.0f64, 0.0f64);
                for _ in 0..n {
                    let g: f64 = r.sample::<f64, _>(StandardNormal).abs();
                    l1 += g;
                    l2 += g * g;
                }
                let v = l1 / (sqrt_n * l2.sqrt());
                let v2 = v * v;
                acc[0] += v;
                acc[1] += v2;
                acc[2] += v2 * v2;
            }
            acc
        })
        .collect();
    let mut s = [0.0; 3];
    for p in &partial {
        for k in 0..3 {
            s[k] += p[k];
        }
    }
    let l = trials as f64;
    let mean = s[0] / l;
    let second = s[1] / l;
    let fourth = s[2] / l;
    let pop_var = (second - mean * mean).max(0.0);
    let variance = if trials > 1 { pop_var * l / (l - 1.0) } else { 0.0 };
    let var_of_square = (fourth - second * second).max(0.0);
    RatioSimulation {
        n,
        trials,
        mean,
        mean_std_error: (variance / l).sqrt(),
        variance,
        second_moment: second,
        second_moment_std_error: (var_of_square / l).sqrt(),
    }
}

/// Chebyshev tail `P(|x̂·𝟙̂ − E| ≥ ε) ≤ (π − 2)/(n ε²)`.
pub fn chebyshev_tail(n: u64, deviation: f64) -> f64 {
    (PI - 2.0) / (n as f64 * deviation * deviation)
}
