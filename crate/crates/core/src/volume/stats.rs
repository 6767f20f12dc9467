use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided standard-normal quantile for `confidence` (0.95 → 1.959964).
pub fn z_quantile(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

/// Wald half-width `z·√(p̂(1−p̂)/l)`. Zero when `successes ∈ {0, l}`.
pub fn clt_halfwidth(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(trials >= 1, "need at least one trial");
    let p = successes as f64 / trials as f64;
    z_quantile(confidence) * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Wilson score interval, well behaved at `p̂ ∈ {0, 1}`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials >= 1, "need at least one trial");
    let z = z_quantile(confidence);
    let l = trials as f64;
    let p = successes as f64 / l;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * l)) / (1.0 + z2 / l);
    let half = z / (1.0 + z2 / l) * (p * (1.0 - p) / l + z2 / (4.0 * l * l)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Hoeffding bound `e^{−2lξ²/vol²}` on `P(|p̂ − p| ≥ ξ)` (one side).
pub fn hoeffding_tail(trials: u64, xi: f64, vol: f64) -> f64 {
    (-2.0 * trials as f64 * xi * xi / (vol * vol)).exp()
}
