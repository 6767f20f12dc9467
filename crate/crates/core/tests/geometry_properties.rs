use std::f64::consts::PI;

use bvol::geometry::{
    gautschi_bounds, ln_gamma, ln_gamma_ratio, min_pairwise_stats, ratio_moments, relative_spread, simulate_ratio,
    trig_integral_closed, weyl_tube_volume, AnchorPolicy, GeometryError, Metric, PairSets, TubeSpec,
};
use bvol::rng;
use proptest::prelude::*;
use rand::Rng;

fn uniform_points(m: usize, n: usize, seed: u64) -> Vec<f32> {
    let mut r = rng::stream(seed, 0x99, n as u64);
    (0..m * n).map(|_| r.random::<f32>()).collect()
}

#[test]
fn relative_spread_shrinks_with_dimension() {
    for seed in 0..3 {
        let stats: Vec<f64> = [10, 100, 1000]
            .iter()
            .map(|&n| {
                let p = uniform_points(100, n, seed);
                relative_spread(&p, n, Metric::L2, AnchorPolicy::All, 20).unwrap().statistic.unwrap()
            })
            .collect();
        assert!(stats[0] > stats[1] && stats[1] > stats[2], "seed {seed}: {stats:?}");
    }
}

#[test]
fn spread_histogram_counts_every_anchor() {
    let p = uniform_points(50, 20, 1);
    let s = relative_spread(&p, 20, Metric::Linf, AnchorPolicy::Sample { count: 30, seed: 2 }, 7).unwrap();
    assert_eq!(s.anchors, 30);
    assert_eq!(s.histogram.counts.iter().sum::<u64>(), 30);
    assert_eq!(s.histogram.edges.len(), 8);
}

#[test]
fn coincident_points_have_no_statistic() {
    let mut p = uniform_points(5, 3, 4);
    let first: Vec<f32> = p[..3].to_vec();
    p[3..6].copy_from_slice(&first);
    let s = relative_spread(&p, 3, Metric::L2, AnchorPolicy::All, 4).unwrap();
    assert!(s.coincident && s.statistic.is_none());
    assert_eq!(s.coincident_anchors, 2);
}

#[test]
fn min_pair_stats_match_brute_force() {
    let (a, b, n) = (uniform_points(40, 6, 1), uniform_points(25, 6, 2), 6);
    let d = |x: &[f32], y: &[f32]| {
        x.iter().zip(y).map(|(p, q)| ((p - q) as f64).abs()).fold(0.0, f64::max)
    };
    let nearest: Vec<f64> = a
        .chunks(n)
        .map(|x| b.chunks(n).map(|y| d(x, y)).fold(f64::INFINITY, f64::min))
        .collect();
    let s = min_pairwise_stats(PairSets::Between(&a, &b), n, Metric::Linf).unwrap();
    assert_eq!(s.count, 40);
    assert!((s.min - nearest.iter().copied().fold(f64::INFINITY, f64::min)).abs() < 1e-12);
    assert!((s.mean_of_min - nearest.iter().sum::<f64>() / 40.0).abs() < 1e-12);
    for &(t, frac) in &s.fraction_below {
        let want = nearest.iter().filter(|&&v| v < t).count() as f64 / 40.0;
        assert_eq!(frac, want);
    }
}

#[test]
fn ln_gamma_agrees_with_statrs() {
    let mut worst = 0.0f64;
    for k in 1..4000 {
        let z = k as f64 * 0.037;
        let (ours, theirs) = (ln_gamma(z), statrs::function::gamma::ln_gamma(z));
        worst = worst.max((ours - theirs).abs() / theirs.abs().max(1.0));
    }
    assert!(worst < 1e-12, "worst {worst:e}");
}

#[test]
fn ln_gamma_ratio_is_stable_for_large_arguments() {
    // Γ(n + 1/2)/Γ(n) ~ √n (1 − 1/(8n)).
    let n = 1e12;
    let r = ln_gamma_ratio(n + 0.5, n).exp();
    assert!(((r / n.sqrt()) - (1.0 - 1.0 / (8.0 * n))).abs() < 1e-9);
}

#[test]
fn gautschi_bounds_hold_two_sided() {
    for n in 2..5000 {
        let (lo, ratio, hi) = gautschi_bounds(n);
        assert!(lo < ratio && ratio < hi, "n = {n}");
    }
}

#[test]
fn simulated_ratio_matches_closed_form() {
    for n in [1, 2, 10, 100, 3000] {
        let sim = simulate_ratio(n, 100_000, 5);
        let m = ratio_moments(n);
        assert!((sim.mean - m.expectation).abs() <= 4.0 * sim.mean_std_error, "n = {n}");
        assert!((sim.second_moment - m.second_moment).abs() <= 4.0 * sim.second_moment_std_error, "n = {n}");
    }
}

#[test]
fn sphere_tube_uses_the_gauss_bonnet_invariant() {
    // k₂ of S² is its total Gauss curvature 4π.
    let s2 = TubeSpec::new(3, 2, vec![4.0 * PI, 4.0 * PI]).unwrap();
    for eps in [0.01, 0.1, 0.5] {
        let v = weyl_tube_volume(&s2, eps).unwrap();
        let shell = 4.0 * PI / 3.0 * ((1.0 + eps).powi(3) - (1.0 - eps).powi(3));
        assert!((v - shell).abs() < 1e-12 * shell);
        assert!((v - (8.0 * PI * eps + 8.0 * PI * eps.powi(3) / 3.0)).abs() < 1e-12 * shell);
    }
}

#[test]
fn tube_rejects_wrong_invariant_count() {
    assert!(matches!(
        TubeSpec::new(4, 2, vec![1.0]),
        Err(GeometryError::InvariantCount { expected: 2, got: 1 })
    ));
}

proptest! {
    #[test]
    fn trig_integral_reduces_by_recursion(a in 2u32..12, b in 0u32..12) {
        // ∫cosᵃ sinᵇ = (a−1)/(a+b) ∫cosᵃ⁻² sinᵇ.
        let lhs = trig_integral_closed(a, b);
        let rhs = (a - 1) as f64 / (a + b) as f64 * trig_integral_closed(a - 2, b);
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_satisfies_the_functional_equation(z in 0.05f64..150.0) {
        prop_assert!((ln_gamma(z + 1.0) - ln_gamma(z) - z.ln()).abs() < 1e-11 * ln_gamma(z + 1.0).abs().max(1.0));
    }
}
