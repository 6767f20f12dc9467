//! The self-contained geometry check suite behind `bvol verify`.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use super::*;
use crate::volume::hoeffding_tail;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    pub simulation_dims: Vec<u64>,
    pub simulation_trials: u64,
    pub orthogonality_trials: u64,
    /// Largest n for the pointwise Γ-ratio checks.
    pub max_dim: u64,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            simulation_dims: vec![2, 10, 100, 3000],
            simulation_trials: 100_000,
            orthogonality_trials: 10_000,
            max_dim: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    /// Allowed `|actual − expected|`, or the bound for one-sided checks.
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<Check>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn near(&mut self, name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            expected,
            actual,
            tolerance,
            passed: (actual - expected).abs() <= tolerance,
            detail: String::new(),
        });
    }

    fn holds(&mut self, name: impl Into<String>, expected: f64, actual: f64, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            expected,
            actual,
            tolerance: 0.0,
            passed,
            detail,
        });
    }
}

fn relative(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn run_diagnostics(config: &DiagnosticsConfig) -> DiagnosticsReport {
    let mut r = DiagnosticsReport::default();
    let sqrt_2_pi = FRAC_2_PI.sqrt();

    r.near("chebyshev_tail(3000, 0.05)", 0.152, chebyshev_tail(3000, 0.05), 0.001);
    r.near("chebyshev_tail(1142, 1)", 1e-3, chebyshev_tail(1142, 1.0), 1e-6);
    let h = hoeffding_tail(100_000, 0.01, 1.0);
    r.near("hoeffding_tail(1e5, 0.01, 1)", 2.06e-9, h, 0.02 * 2.06e-9);

    r.near("ratio_expectation(1)", 1.0, ratio_expectation(1), 1e-15);
    r.near("ratio_expectation(2)", 2.0 * 2f64.sqrt() / PI, ratio_expectation(2), 1e-14);
    let mut prev = f64::INFINITY;
    let mut worst_drop = f64::INFINITY;
    let mut floor_ok = true;
    let mut var_ok = true;
    let mut gautschi_ok = true;
    let mut first_bad = String::new();
    for n in 1..=config.max_dim {
        let m = ratio_moments(n);
        worst_drop = worst_drop.min(prev - m.expectation);
        prev = m.expectation;
        if m.expectation <= sqrt_2_pi {
            floor_ok = false;
        }
        if m.variance > m.variance_bound {
            var_ok = false;
        }
        if n >= 2 {
            let (lo, ratio, hi) = gautschi_bounds(n);
            if !(lo < ratio && ratio < hi) && gautschi_ok {
                gautschi_ok = false;
                first_bad = format!("n = {n}: {lo} < {ratio} < {hi} fails");
            }
        }
    }
    r.holds(
        "ratio_expectation strictly decreasing",
        0.0,
        worst_drop,
        worst_drop > 0.0,
        format!("n = 1..{}", config.max_dim),
    );
    r.holds(
        "ratio_expectation > sqrt(2/pi)",
        sqrt_2_pi,
        ratio_expectation(config.max_dim),
        floor_ok,
        format!("n = 1..{}", config.max_dim),
    );
    r.holds(
        "ratio_expectation(1e4) < 0.7980",
        0.798,
        ratio_expectation(10_000),
        ratio_expectation(10_000) < 0.798,
        String::new(),
    );
    let e6 = ratio_expectation(1_000_000);
    r.holds(
        "ratio_expectation(1e6) in (0.7978846, 0.798)",
        sqrt_2_pi,
        e6,
        e6 > 0.797_884_6 && e6 < 0.798,
        String::new(),
    );
    r.holds(
        "variance <= (pi-2)/n",
        0.0,
        0.0,
        var_ok,
        format!("n = 1..{}", config.max_dim),
    );
    r.holds(
        "gautschi sqrt((n-1)/2) < G((n+1)/2)/G(n/2) < sqrt(n/2)",
        0.0,
        0.0,
        gautschi_ok,
        if gautschi_ok {
            format!("n = 2..{}", config.max_dim)
        } else {
            first_bad
        },
    );

    let mut worst_trig = 0.0f64;
    for a in 0..=5 {
        for b in 0..=5 {
            let d = (trig_integral_simpson(a, b, 2000) - trig_integral_closed(a, b)).abs();
            worst_trig = worst_trig.max(d);
        }
    }
    r.near("trig integral cos^a sin^b, a,b in 0..5", 0.0, worst_trig, 1e-8);

    let mut worst_gamma = 0.0f64;
    for k in 1..=300u32 {
        let z = k as f64 / 2.0;
        let exact = gamma(z);
        if exact.is_finite() {
            worst_gamma = worst_gamma.max(relative(ln_gamma(z).exp(), exact));
        }
    }
    r.near("ln_gamma vs exact recursion (half-integers)", 0.0, worst_gamma, 1e-10);

    let (radius, eps) = (0.7, 0.01);
    let circle = TubeSpec::new(2, 1, vec![2.0 * PI * radius]).expect("valid spec");
    let v = weyl_tube_volume(&circle, eps).expect("positive radius");
    let exact = PI * ((radius + eps).powi(2) - (radius - eps).powi(2));
    r.near("weyl circle vs annulus (relative)", 0.0, relative(v, exact), 1e-12);
    let s2 = TubeSpec::new(3, 2, vec![4.0 * PI, 4.0 * PI]).expect("valid spec");
    let eps = 0.05;
    let v = weyl_tube_volume(&s2, eps).expect("positive radius");
    let exact = 4.0 * PI / 3.0 * ((1.0 + eps).powi(3) - (1.0 - eps).powi(3));
    r.near("weyl S^2 vs shell (relative)", 0.0, relative(v, exact), 1e-12);
    let flat = TubeSpec::new(3, 2, vec![2.5, 0.0]).expect("valid spec");
    let v = weyl_tube_volume(&flat, eps).expect("positive radius");
    r.near("weyl flat patch vs 2*eps*k0 (relative)", 0.0, relative(v, 2.0 * eps * 2.5), 1e-12);

    r.near("cube_overlap_bound(100, 0.9, 200)", 3.53e-6, cube_overlap_bound(100, 0.9, 200).loose, 0.005e-6);
    r.near(
        "orthogonality_capacity(0.1, 0.95, 1000)",
        2.0,
        orthogonality_capacity(0.1, 0.95, 1000) as f64,
        0.0,
    );
    let freq = orthogonality_trial(1000, 2, 0.1, config.orthogonality_trials, config.seed);
    r.holds(
        "orthogonality_trial(n=1000, N=2, eps=0.1) > 0.95",
        0.95,
        freq,
        freq > 0.95,
        format!("{} trials", config.orthogonality_trials),
    );

    for &n in &config.simulation_dims {
        let sim = simulate_ratio(n, config.simulation_trials, config.seed);
        let m = ratio_moments(n);
        r.near(format!("simulate_ratio({n}) mean (4 SE)"), m.expectation, sim.mean, 4.0 * sim.mean_std_error);
        r.near(
            format!("simulate_ratio({n}) second moment (4 SE)"),
            m.second_moment,
            sim.second_moment,
            4.0 * sim.second_moment_std_error,
        );
        r.holds(
            format!("simulate_ratio({n}) variance <= (pi-2)/n"),
            m.variance_bound,
            sim.variance,
            sim.variance <= m.variance_bound,
            format!("{} trials", config.simulation_trials),
        );
    }
    r
}
