//! Log-Γ and the Γ identities used by the ratio and tube formulas.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// The Lanczos series `A(z)` with `Γ(z) = √(2π) t^{z−½} e^{−t} A(z)`,
/// `t = z + g − ½`, valid for `z ≥ ½`.
fn series(z: f64) -> f64 {
    let x = z - 1.0;
    LANCZOS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS[0], |a, (i, &c)| a + c / (x + (i + 1) as f64))
}

/// `ln Γ(z)` for `z > 0` (Lanczos, g = 7, nine terms; reflection below ½).
pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0, "ln_gamma needs a positive argument, got {z}");
    if z < 0.5 {
        return (PI / (PI * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let t = z + LANCZOS_G - 0.5;
    0.5 * (2.0 * PI).ln() + (z - 0.5) * t.ln() - t + series(z).ln()
}

/// `ln Γ(a) − ln Γ(b)` for `a, b ≥ ½` without forming the two large logs.
pub fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    if a < 0.5 || b < 0.5 {
        return ln_gamma(a) - ln_gamma(b);
    }
    let (ta, tb) = (a + LANCZOS_G - 0.5, b + LANCZOS_G - 0.5);
    let d = a - b;
    (a - 0.5) * (d / tb).ln_1p() + d * tb.ln() - (ta - tb) + (series(a) / series(b)).ln()
}

/// `Γ(z)`. Integers and half-integers up to 171 use the exact recursion
/// from `Γ(1) = 1` / `Γ(½) = √π`; everything else goes through [`ln_gamma`].
pub fn gamma(z: f64) -> f64 {
    let twice = 2.0 * z;
    if z > 0.0 && z <= 171.0 && twice == twice.round() {
        let (mut g, mut k) = if twice as u64 % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
        while k < z {
            g *= k;
            k += 1.0;
        }
        return g;
    }
    ln_gamma(z).exp()
}

/// `Γ((n+1)/2) / Γ(n/2)`.
pub fn half_gamma_ratio(n: u64) -> f64 {
    ln_gamma_ratio((n as f64 + 1.0) / 2.0, n as f64 / 2.0).exp()
}

/// Gautschi's inequality at `x = (n−1)/2`:
/// `√((n−1)/2) < Γ((n+1)/2)/Γ(n/2) < √(n/2)`.
///
/// Returns `(lower, ratio, upper)`.
pub fn gautschi_bounds(n: u64) -> (f64, f64, f64) {
    let n = n as f64;
    (((n - 1.0) / 2.0).sqrt(), half_gamma_ratio(n as u64), (n / 2.0).sqrt())
}

/// `∫₀^{π/2} cosᵃθ sinᵇθ dθ = Γ((a+1)/2) Γ((b+1)/2) / (2 Γ((a+b)/2 + 1))`.
pub fn trig_integral_closed(a: u32, b: u32) -> f64 {
    let (a, b) = (a as f64, b as f64);
    gamma((a + 1.0) / 2.0) * gamma((b + 1.0) / 2.0) / (2.0 * gamma((a + b) / 2.0 + 1.0))
}

/// Composite Simpson rule for the same integral with `intervals` (even) panels.
pub fn trig_integral_simpson(a: u32, b: u32, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = PI / 2.0 / n as f64;
    let f = |t: f64| t.cos().powi(a as i32) * t.sin().powi(b as i32);
    let inner: f64 = (1..n).map(|k| f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(0.0) + inner + f(PI / 2.0))
}
