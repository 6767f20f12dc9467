//! Acceptance criteria, one PASS/FAIL/SKIP line each.
//!
//! Dataset-dependent criteria read `BVOL_MNIST_DIR` (IDX files) and
//! `BVOL_CIFAR_DIR` (binary batches) and are skipped when those are unset.
//! Every tolerance is pinned here.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bvol::attack::{bisect_boundary_point, EpsilonGrid, FgsmDetector, LabelPolicy};
use bvol::data::{load_cifar10, load_mnist_dir, make_synthetic, SyntheticKind};
use bvol::geometry::{
    chebyshev_tail, gautschi_bounds, min_pairwise_stats, ratio_expectation, ratio_second_moment, ratio_moments,
    relative_spread, simulate_ratio, trig_integral_closed, weyl_tube_volume, AnchorPolicy, Metric, Oracle,
    OracleDetector, PairSets, TubeSpec,
};
use bvol::nn::{Activation, DropoutConfig, LayerSpec, Network, Optimizer, Padding, Shape, TrainConfig};
use bvol::rng;
use bvol::volume::{convergence_study, epsilon_sweep, estimate_bvol, hoeffding_tail, train_region, MeasureParams, RegionSpec};
use bvol_cli::Cli;
use clap::Parser;
use rand::Rng;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail: detail.into(),
    }
}

fn skip(detail: impl Into<String>) -> Outcome {
    Outcome {
        status: Status::Skip,
        detail: detail.into(),
    }
}

fn data_dir(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from).filter(|p| p.is_dir())
}

fn cli(args: &[&str]) -> anyhow::Result<()> {
    let mut full = vec!["bvol"];
    full.extend_from_slice(args);
    bvol_cli::run(&Cli::try_parse_from(full)?)
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).expect("csv");
    let i = r.headers().unwrap().iter().position(|h| h == name).expect("column");
    r.records().map(|rec| rec.unwrap()[i].to_string()).collect()
}

fn csv_f64(path: &Path, name: &str) -> Vec<f64> {
    csv_column(path, name).iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect()
}

// 1. Chebyshev tail at n = 3000, ε = 0.05.
fn c01() -> Outcome {
    let v = chebyshev_tail(3000, 0.05);
    verdict((v - 0.152).abs() <= 0.001, format!("{v:.6} vs 0.152 ± 0.001"))
}

// 2. Hoeffding bound for l = 10⁵, ξ = 0.01.
fn c02() -> Outcome {
    let v = hoeffding_tail(100_000, 0.01, 1.0);
    let rel = (v / 2.06e-9 - 1.0).abs();
    verdict(rel <= 0.02, format!("{v:.4e} vs 2.06e-9 (rel {rel:.2e} ≤ 0.02)"))
}

// 3. CIFAR-10 training-set relative spread.
fn c03() -> Outcome {
    let Some(dir) = data_dir("BVOL_CIFAR_DIR") else {
        return skip("BVOL_CIFAR_DIR not set");
    };
    let files: Vec<PathBuf> = (1..=5).map(|k| dir.join(format!("data_batch_{k}.bin"))).collect();
    let data = match load_cifar10(&files) {
        Ok(d) => d,
        Err(e) => return verdict(false, format!("loading CIFAR-10: {e}")),
    };
    let s = relative_spread(data.points(), data.dim(), Metric::L2, AnchorPolicy::Sample { count: 100, seed: 0 }, 50)
        .expect("spread");
    let stat = s.statistic.unwrap_or(f64::NAN);
    let diameter = 3072f64.sqrt();
    verdict(
        data.len() == 50_000 && (stat - 10.056).abs() <= 0.05 && s.max_distance <= diameter && (diameter - 55.426).abs() < 5e-4,
        format!(
            "{} points, statistic {stat:.4} vs 10.056 ± 0.05, max distance {:.3} ≤ √3072 = {diameter:.3}",
            data.len(),
            s.max_distance
        ),
    )
}

// 4. MNIST minimal l∞ distance between classes 1 and 7.
fn c04() -> Outcome {
    let Some(dir) = data_dir("BVOL_MNIST_DIR") else {
        return skip("BVOL_MNIST_DIR not set");
    };
    let data = match load_mnist_dir(&dir, true) {
        Ok(d) => d,
        Err(e) => return verdict(false, format!("loading MNIST: {e}")),
    };
    let (a, b) = (data.class_points(1), data.class_points(7));
    let s = min_pairwise_stats(PairSets::Between(&a, &b), data.dim(), Metric::Linf).expect("pairs");
    verdict((s.min - 0.737).abs() <= 0.005, format!("min d∞(1, 7) = {:.4} vs 0.737 ± 0.005", s.min))
}

// 5. Closed-form E[x̂·𝟙̂]: value at n = 1, monotone decrease, limit from above.
fn c05() -> Outcome {
    let floor = (2.0 / PI).sqrt();
    let e1 = ratio_expectation(1);
    let mut prev = f64::INFINITY;
    let mut worst_oracle = 0.0f64;
    let mut failures = Vec::new();
    for n in 1..=10_000u64 {
        let e = ratio_expectation(n);
        if !(e < prev) {
            failures.push(format!("not decreasing at n = {n}"));
        }
        if !(e > floor) {
            failures.push(format!("≤ √(2/π) at n = {n}"));
        }
        let nf = n as f64;
        let lg = statrs::function::gamma::ln_gamma;
        let oracle = (nf / PI).sqrt() * (lg(nf / 2.0) - lg((nf + 1.0) / 2.0)).exp();
        worst_oracle = worst_oracle.max((e - oracle).abs() / oracle);
        prev = e;
    }
    let e4 = ratio_expectation(10_000);
    if e1 != 1.0 {
        failures.push(format!("E(1) = {e1}"));
    }
    if !(e4 < 0.7980) {
        failures.push(format!("E(1e4) = {e4}"));
    }
    if worst_oracle > 1e-9 {
        failures.push(format!("statrs oracle off by {worst_oracle:.1e}"));
    }
    verdict(
        failures.is_empty(),
        format!("E(1) = {e1}, E(1e4) = {e4:.7} < 0.7980, floor {floor:.7}, oracle rel {worst_oracle:.1e} {failures:?}"),
    )
}

// 6. Simulation at n = 3000 with 10⁶ trials.
fn c06() -> Outcome {
    let sim = simulate_ratio(3000, 1_000_000, 6);
    let m = ratio_moments(3000);
    let z = (sim.mean - m.expectation).abs() / sim.mean_std_error;
    verdict(
        z <= 4.0 && sim.variance <= m.variance_bound,
        format!(
            "mean {:.7} vs {:.7} ({z:.2} SE ≤ 4), variance {:.3e} ≤ (π−2)/3000 = {:.3e}",
            sim.mean, m.expectation, sim.variance, m.variance_bound
        ),
    )
}

// 7. Second moment against (2/π)(n−1)/n + 1/n.
fn c07() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for n in [2u64, 10, 100, 3000] {
        let sim = simulate_ratio(n, 200_000, 7);
        let nf = n as f64;
        let oracle = 2.0 / PI * (nf - 1.0) / nf + 1.0 / nf;
        let z = (sim.second_moment - oracle).abs() / sim.second_moment_std_error;
        ok &= z <= 4.0 && (ratio_second_moment(n) - oracle).abs() < 1e-15;
        write!(detail, "n={n}: {z:.2} SE; ").unwrap();
    }
    verdict(ok, detail + "limit 4 SE")
}

// 8. Halfspace oracle: the 95% CI covers 2ε in ≥ 90% of 200 repetitions.
fn c08() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for n in [2usize, 784] {
        let det = OracleDetector::new(Oracle::halfspace(n, 0, 0.5), Metric::Linf);
        let region = RegionSpec::unit_cube(n);
        let covered = (0..200u64)
            .filter(|&s| estimate_bvol(&det, &region, 0.05, 100_000, None, 8_000 + s).unwrap().covers(0.1))
            .count();
        ok &= covered >= 180;
        write!(detail, "n={n}: {covered}/200 cover 0.100; ").unwrap();
    }
    verdict(ok, detail + "need ≥ 180")
}

// 9. Circle oracle in the plane: the ε-band is an annulus.
fn c09() -> Outcome {
    let (r, eps, l) = (0.3, 0.01, 100_000u64);
    let det = OracleDetector::new(Oracle::sphere(vec![0.5, 0.5], r), Metric::L2);
    let e = estimate_bvol(&det, &RegionSpec::unit_cube(2), eps, l, None, 9).unwrap();
    let area = PI * ((r + eps).powi(2) - (r - eps).powi(2));
    let sigma = (area * (1.0 - area) / l as f64).sqrt();
    let z = (e.p_hat - area).abs() / sigma;
    verdict(z <= 3.0, format!("p̂ {:.5} vs {area:.5} ({z:.2}σ ≤ 3)", e.p_hat))
}

// 10. Weyl tube polynomial on exact cases.
fn c10() -> Outcome {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let (radius, eps) = (0.7, 0.01);
    let circle = weyl_tube_volume(&TubeSpec::new(2, 1, vec![2.0 * PI * radius]).unwrap(), eps).unwrap();
    let c = rel(circle, PI * ((radius + eps).powi(2) - (radius - eps).powi(2)));
    let eps = 0.05;
    let s2 = weyl_tube_volume(&TubeSpec::new(3, 2, vec![4.0 * PI, 4.0 * PI]).unwrap(), eps).unwrap();
    let s = rel(s2, 4.0 * PI / 3.0 * ((1.0 + eps).powi(3) - (1.0 - eps).powi(3)));
    let flat = weyl_tube_volume(&TubeSpec::new(3, 2, vec![2.5, 0.0]).unwrap(), eps).unwrap();
    let f = rel(flat, 2.0 * eps * 2.5);
    verdict(
        c <= 1e-12 && s <= 1e-12 && f <= 1e-12,
        format!("relative errors circle {c:.1e}, S² {s:.1e}, flat {f:.1e} (≤ 1e-12)"),
    )
}

fn random_net(seed: u64) -> Network<f64> {
    let mut r = rng::stream(seed, 0x5eed, 0);
    let classes = r.random_range(2..5);
    let act = if r.random_bool(0.5) { Activation::Relu } else { Activation::Tanh };
    let (specs, input) = if seed % 2 == 0 {
        let n = r.random_range(1..8);
        let h = r.random_range(2..10);
        let h2 = r.random_range(2..6);
        (
            vec![
                LayerSpec::dense(n, h, act),
                LayerSpec::dense(h, h2, act),
                LayerSpec::dense(h2, classes, Activation::Softmax),
            ],
            Shape::Flat(n),
        )
    } else {
        let c = r.random_range(1..3);
        let side: usize = r.random_range(4..8);
        let oc = r.random_range(1..4);
        let k = r.random_range(1..4);
        let stride = r.random_range(1..3);
        let padding = if r.random_bool(0.5) { Padding::Same } else { Padding::Valid };
        let o = match padding {
            Padding::Same => side.div_ceil(stride),
            Padding::Valid => (side - k) / stride + 1,
        };
        let mut specs = vec![LayerSpec::Conv2d {
            in_channels: c,
            out_channels: oc,
            kernel_size: k,
            stride,
            padding,
            activation: act,
        }];
        let mut flat = o * o * oc;
        if o >= 2 {
            specs.push(LayerSpec::pool(2, 2));
            let p = (o - 2) / 2 + 1;
            flat = p * p * oc;
        }
        specs.push(LayerSpec::Flatten);
        specs.push(LayerSpec::dense(flat, classes, Activation::Softmax));
        (
            specs,
            Shape::Image {
                channels: c,
                height: side,
                width: side,
            },
        )
    };
    let mut net = Network::<f64>::build(&specs, input).unwrap();
    net.init_he_normal(seed);
    for p in net.params_mut() {
        for b in &mut p.biases {
            *b = r.random_range(-0.2..0.2);
        }
    }
    net
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    diff / a.iter().chain(b).map(|v| v.abs()).fold(1e-12, f64::max)
}

// 11. Analytic gradients against central differences.
fn c11() -> Outcome {
    const H: f64 = 1e-6;
    let (mut worst_in, mut worst_par) = (0.0f64, 0.0f64);
    let nets = 120u64;
    for seed in 0..nets {
        let net = random_net(seed);
        let mut r = rng::stream(seed, 0xfd, 1);
        let x: Vec<f64> = (0..net.num_inputs()).map(|_| r.random()).collect();
        let label = seed as usize % net.num_outputs();
        let loss = |n: &Network<f64>, x: &[f64]| n.loss_and_input_grad(x, label).unwrap().loss;
        let g = net.loss_and_input_grad(&x, label).unwrap().grad;
        let fd: Vec<f64> = (0..x.len())
            .map(|i| {
                let (mut p, mut m) = (x.clone(), x.clone());
                p[i] += H;
                m[i] -= H;
                (loss(&net, &p) - loss(&net, &m)) / (2.0 * H)
            })
            .collect();
        worst_in = worst_in.max(rel_err(&g, &fd));

        let (_, grads) = net.loss_and_param_grads(&x, label).unwrap();
        let (mut an, mut nu) = (Vec::new(), Vec::new());
        for layer in 0..net.params().len() {
            let nw = net.params()[layer].weights.len();
            for k in 0..nw + net.params()[layer].biases.len() {
                let shifted = |d: f64| {
                    let mut n = net.clone();
                    let p = &mut n.params_mut()[layer];
                    if k < nw {
                        p.weights[k] += d;
                    } else {
                        p.biases[k - nw] += d;
                    }
                    loss(&n, &x)
                };
                nu.push((shifted(H) - shifted(-H)) / (2.0 * H));
                let gl = &grads.0[layer];
                an.push(if k < nw { gl.weights[k] } else { gl.biases[k - nw] });
            }
        }
        worst_par = worst_par.max(rel_err(&an, &nu));
    }
    verdict(
        worst_in <= 1e-5 && worst_par <= 1e-5,
        format!("{nets} nets (half conv): worst relative error input {worst_in:.1e}, params {worst_par:.1e} (≤ 1e-5)"),
    )
}

// 12. Bisection against the halfspace oracle.
fn c12() -> Outcome {
    let oracle = Oracle::halfspace(10, 3, 0.37);
    let mut r = rng::stream(12, 0, 0);
    let mut worst = [0.0f64; 3];
    let mut ok = true;
    for _ in 0..200 {
        let mut a: Vec<f64> = (0..10).map(|_| r.random()).collect();
        let mut b: Vec<f64> = (0..10).map(|_| r.random()).collect();
        a[3] = r.random_range(0.0..0.37);
        b[3] = r.random_range(0.37..1.0);
        for (k, alpha) in [1u32, 5, 10].into_iter().enumerate() {
            let p = bisect_boundary_point(&oracle, &a, &b, alpha, (0, 1)).unwrap();
            let gap = (p.point[3] - 0.37).abs();
            worst[k] = worst[k].max(gap);
            ok &= gap <= 2f64.powi(-(alpha as i32));
        }
    }
    verdict(
        ok,
        format!(
            "200 segments: worst plane distance α=1 {:.3e} (≤ 0.5), α=5 {:.3e} (≤ 3.1e-2), α=10 {:.3e} (≤ 9.8e-4)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn train_small(kind: SyntheticKind, seed: u64) -> (Network<f32>, bvol::data::Dataset) {
    let data = make_synthetic(kind, 300, seed).unwrap();
    let dim = data.dim();
    let specs = [
        LayerSpec::dense(dim, 32, Activation::Relu),
        LayerSpec::dense(32, 2, Activation::Softmax),
    ];
    let mut net = Network::<f32>::build(&specs, Shape::Flat(dim)).unwrap();
    net.init_he_normal(seed);
    let cfg = TrainConfig {
        optimizer: Optimizer::adam(0.01),
        batch_size: 32,
        epochs: 30,
        seed,
    };
    let (net, _) = bvol::nn::train(net, &data, &cfg, &DropoutConfig::none()).unwrap();
    (net, data)
}

// 13. Swept p̂ is non-decreasing; CI half-widths shrink like 1/√l.
fn c13() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    let kinds = [
        SyntheticKind::Annulus { dim: 2 },
        SyntheticKind::Blobs { dim: 10, separation: 0.4 },
        SyntheticKind::Annulus { dim: 5 },
    ];
    for (k, kind) in kinds.into_iter().enumerate() {
        let (net, data) = train_small(kind, k as u64);
        let det = FgsmDetector::new(&net, LabelPolicy::Predicted);
        let params = MeasureParams {
            train_subset: 300,
            seed: 13,
            ..MeasureParams::default()
        };
        let region = train_region(&data, &params).unwrap();
        let eps = EpsilonGrid::sweep_default(0.1).unwrap().values().to_vec();
        let sweep = epsilon_sweep(&det, &region, &eps, 20_000, 13).unwrap();
        let monotone = sweep.windows(2).all(|w| w[0].p_hat <= w[1].p_hat);
        ok &= monotone;

        let conv = convergence_study(&det, &region, 0.05, &[1_000, 10_000, 100_000], 13).unwrap();
        let scaled: Vec<f64> = conv.iter().map(|e| e.clt_halfwidth * (e.trials as f64).sqrt()).collect();
        let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let shrinking = conv.windows(2).all(|w| w[1].clt_halfwidth < w[0].clt_halfwidth);
        ok &= shrinking && spread <= 1.25;
        write!(detail, "net {k}: monotone {monotone}, hw·√l max/min {spread:.3}; ").unwrap();
    }
    verdict(ok, detail + "need hw·√l max/min ≤ 1.25")
}

// 14. Byte-identical CSVs across 1, 4 and 8 worker threads.
fn c14() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let root = tmp.path();
    let data = r#"{"source": "synthetic", "synthetic": {"kind": "blobs", "dim": 6, "separation": 0.3}, "per_class": 300}"#;
    let train = format!(
        r#"{{"data": {data}, "architecture": {{"fc": {{"hidden": [24]}}}}, "optimizer": {{"learning_rate": 0.01}}, "epochs": 8, "dropout": {{"rate": 0.2}}}}"#
    );
    let measure = format!(
        r#"{{"data": {data}, "measures": [{{"measure": "bvol", "epsilons": [0.01, 0.05]}}, {{"measure": "train_bvol", "epsilons": [0.02]}}, {{"measure": "ladv_bvol", "epsilons": [0.02]}}],
            "volume": {{"trials": 20000, "train_subset": 300, "boundary_points": 300}}}}"#
    );
    fs::write(root.join("train.json"), train).unwrap();
    fs::write(root.join("measure.json"), measure).unwrap();
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    let mut outputs = Vec::new();
    for threads in ["1", "4", "8"] {
        let t = root.join(format!("t{threads}"));
        let m = root.join(format!("m{threads}"));
        let run = cli(&["train", "--config", &s(root.join("train.json")), "--out", &s(t.clone()), "--threads", threads])
            .and_then(|_| {
                cli(&[
                    "measure",
                    "--config",
                    &s(root.join("measure.json")),
                    "--model",
                    &s(t.join("model.json")),
                    "--out",
                    &s(m.clone()),
                    "--threads",
                    threads,
                ])
            });
        if let Err(e) = run {
            return verdict(false, format!("{threads} threads: {e:#}"));
        }
        let files: Vec<Vec<u8>> = [t.join("history.csv"), t.join("model.json"), m.join("measurements.csv")]
            .iter()
            .map(|p| fs::read(p).unwrap())
            .collect();
        outputs.push(files);
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    let rows = outputs[0][2].iter().filter(|&&b| b == b'\n').count() - 1;
    verdict(same, format!("history, checkpoint and {rows} measurement rows identical across 1/4/8 threads: {same}"))
}

// 15. Trigonometric integrals and the Gautschi bounds.
fn c15() -> Outcome {
    // Composite Simpson oracle, independent of the library's quadrature.
    let simpson = |a: u32, b: u32| {
        let m = 4000;
        let h = PI / 2.0 / m as f64;
        let f = |t: f64| t.cos().powi(a as i32) * t.sin().powi(b as i32);
        let mut s = f(0.0) + f(PI / 2.0);
        for k in 1..m {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let mut worst_trig = 0.0f64;
    for a in 0..=8 {
        for b in 0..=8 {
            worst_trig = worst_trig.max((trig_integral_closed(a, b) - simpson(a, b)).abs());
        }
    }
    let mut bad = None;
    for n in 2..=10_000u64 {
        let (lo, ratio, hi) = gautschi_bounds(n);
        let nf = n as f64;
        let lg = statrs::function::gamma::ln_gamma;
        let oracle = (lg((nf + 1.0) / 2.0) - lg(nf / 2.0)).exp();
        let consistent = (ratio - oracle).abs() <= 1e-9 * oracle;
        let bounds = (((nf - 1.0) / 2.0).sqrt() - lo).abs() < 1e-12 && ((nf / 2.0).sqrt() - hi).abs() < 1e-12;
        if !(lo < ratio && ratio < hi && consistent && bounds) && bad.is_none() {
            bad = Some(n);
        }
    }
    verdict(
        worst_trig <= 1e-10 && bad.is_none(),
        format!(
            "trig a,b ∈ 0..=8 worst {worst_trig:.1e} (≤ 1e-10); √((n−1)/2) < Γ((n+1)/2)/Γ(n/2) < √(n/2) for n = 2..=10⁴: {}",
            bad.map_or("holds".into(), |n| format!("fails at n = {n}"))
        ),
    )
}

/// Runs the 3 × 3 dropout sweep and checks the aggregated CSV.
fn sweep_smoke(root: &Path, data: &str, arch: &str, epochs: usize, trials: u64, points: usize) -> Result<String, String> {
    let cfg = format!(
        r#"{{"data": {data}, "architecture": {arch}, "rates": [0.0, 0.25, 0.5], "seeds": [0, 1, 2],
            "epochs": {{"base": {epochs}, "increment": 1}}, "optimizer": {{"learning_rate": 0.005}},
            "train_bvol_epsilon": 0.003, "ladv_bvol_epsilon": 0.001,
            "volume": {{"trials": {trials}, "train_subset": {points}, "boundary_points": {points}}}}}"#
    );
    let path = root.join("sweep.json");
    fs::write(&path, cfg).unwrap();
    let out = root.join("sweep");
    cli(&["dropout-sweep", "--config", &path.to_string_lossy(), "--out", &out.to_string_lossy()])
        .map_err(|e| format!("{e:#}"))?;
    let summary = out.join("summary.csv");
    let stats = [
        "test_accuracy_mean",
        "test_accuracy_std",
        "train_bvol_mean",
        "train_bvol_std",
        "ladv_bvol_mean",
        "ladv_bvol_std",
    ];
    let rates = csv_f64(&summary, "rate");
    if rates != [0.0, 0.25, 0.5] {
        return Err(format!("rates column {rates:?}"));
    }
    for s in stats {
        let v = csv_f64(&summary, s);
        if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
            return Err(format!("column {s} = {v:?}"));
        }
    }
    let failed: f64 = csv_f64(&summary, "failed").iter().sum();
    Ok(format!("sweep 3 rates × 3 seeds, 6 statistic columns finite, {failed} failed cells"))
}

// 16. Desk-scale MNIST pipeline and the dropout-sweep smoke.
fn c16() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let root = tmp.path();
    let synth = r#"{"source": "synthetic", "synthetic": {"kind": "annulus", "dim": 2}, "per_class": 200}"#;
    let smoke = match sweep_smoke(root, synth, r#"{"fc": {"hidden": [16]}}"#, 10, 5_000, 100) {
        Ok(s) => format!("synthetic {s}"),
        Err(e) => return verdict(false, format!("synthetic dropout sweep: {e}")),
    };
    let Some(dir) = data_dir("BVOL_MNIST_DIR") else {
        return skip(format!("BVOL_MNIST_DIR not set; {smoke}"));
    };
    let d = dir.to_string_lossy();
    let train = r#"{"data": {"source": "mnist", "train_size": 10000}, "architecture": "mnist_fc",
        "optimizer": {"algorithm": "adam", "learning_rate": 1e-4}, "batch_size": 32, "epochs": 20}"#;
    let measure = r#"{"data": {"source": "mnist", "train_size": 10000},
        "measures": [{"measure": "train_bvol", "epsilons": [0.003]}, {"measure": "ladv_bvol", "epsilons": [0.001]}],
        "volume": {"delta": 0.2, "trials": 100000, "train_subset": 10000, "boundary_points": 10000}}"#;
    fs::write(root.join("train.json"), train).unwrap();
    fs::write(root.join("measure.json"), measure).unwrap();
    let p = |n: &str| root.join(n).to_string_lossy().into_owned();
    if let Err(e) = cli(&["train", "--config", &p("train.json"), "--data", &d, "--out", &p("mnist")]) {
        return verdict(false, format!("training: {e:#}"));
    }
    let acc = csv_f64(&root.join("mnist/summary.csv"), "test_accuracy")[0];
    if let Err(e) = cli(&[
        "measure",
        "--config",
        &p("measure.json"),
        "--data",
        &d,
        "--model",
        &p("mnist/model.json"),
        "--out",
        &p("mnist_measure"),
    ]) {
        return verdict(false, format!("test accuracy {acc:.4}; measuring: {e:#}"));
    }
    let m = root.join("mnist_measure/measurements.csv");
    let (names, p_hat, hw) = (csv_column(&m, "measure"), csv_f64(&m, "p_hat"), csv_f64(&m, "clt_halfwidth_95"));
    let mnist_small = format!(r#"{{"source": "mnist", "dir": {:?}, "train_size": 2000, "test_size": 2000}}"#, d);
    fs::create_dir_all(root.join("ms")).unwrap();
    let mnist_sweep = sweep_smoke(&root.join("ms"), &mnist_small, r#""mnist_fc""#, 3, 10_000, 500);
    let ok = acc >= 0.90 && names == ["train_bvol", "ladv_bvol"] && hw.iter().all(|&h| h <= 0.01) && mnist_sweep.is_ok();
    verdict(
        ok,
        format!(
            "test accuracy {acc:.4} (≥ 0.90); {} p̂ {:.4} ± {:.4}, {} p̂ {:.4} ± {:.4} (half-width ≤ 0.01); MNIST {:?}; {smoke}",
            names[0], p_hat[0], hw[0], names[1], p_hat[1], hw[1], mnist_sweep
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 16] = [
        (1, "chebyshev tail", c01),
        (2, "hoeffding bound", c02),
        (3, "CIFAR-10 relative spread", c03),
        (4, "MNIST class 1/7 distance", c04),
        (5, "ratio expectation", c05),
        (6, "ratio simulation n=3000", c06),
        (7, "ratio second moment", c07),
        (8, "halfspace volume coverage", c08),
        (9, "circle band volume", c09),
        (10, "weyl tube identities", c10),
        (11, "gradient finite differences", c11),
        (12, "bisection accuracy", c12),
        (13, "sweep monotonicity and convergence", c13),
        (14, "thread determinism", c14),
        (15, "trig integrals and gautschi", c15),
        (16, "desk-scale pipeline", c16),
    ];
    let (mut pass, mut fail, mut skipped) = (0, 0, 0);
    for (id, name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = match outcome.status {
            Status::Pass => {
                pass += 1;
                "PASS"
            }
            Status::Fail => {
                fail += 1;
                "FAIL"
            }
            Status::Skip => {
                skipped += 1;
                "SKIP"
            }
        };
        println!("criterion {id:2} {tag} {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), outcome.detail);
    }
    println!("acceptance: {pass} passed, {fail} failed, {skipped} skipped");
    if fail > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
