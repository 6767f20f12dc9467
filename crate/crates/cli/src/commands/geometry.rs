use anyhow::{bail, Result};
use bvol::geometry::{
    cube_overlap_bound, min_pairwise_stats, relative_spread, run_diagnostics, DiagnosticsConfig, DiagnosticsReport,
    Metric, MinPairStats, PairSets, SpreadStats,
};
use serde::Serialize;

use crate::config::{DiagnoseCommand, Split, VerifyCommand};
use crate::datasets::load_splits;
use crate::output::RunDir;

#[derive(Debug, Serialize)]
struct CheckRow<'a> {
    run_id: &'a str,
    name: &'a str,
    expected: f64,
    actual: f64,
    tolerance: f64,
    passed: bool,
    detail: &'a str,
}

#[derive(Debug, Serialize)]
struct OverlapRow<'a> {
    run_id: &'a str,
    zeta: f64,
    n: u64,
    cubes: u64,
    loose: f64,
    pairwise: f64,
}

/// Runs the geometry check suite. The report is returned even when checks
/// fail; the caller decides the exit status.
pub fn cmd_verify(cfg: &VerifyCommand) -> Result<DiagnosticsReport> {
    let run = RunDir::create(&cfg.out, cfg)?;
    let report = run_diagnostics(&DiagnosticsConfig {
        simulation_dims: cfg.simulation_dims.clone(),
        simulation_trials: cfg.simulation_trials,
        orthogonality_trials: cfg.orthogonality_trials,
        max_dim: cfg.max_dim,
        seed: cfg.seed,
    });
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow {
            run_id: &run.run_id,
            name: &c.name,
            expected: c.expected,
            actual: c.actual,
            tolerance: c.tolerance,
            passed: c.passed,
            detail: &c.detail,
        })
        .collect();
    run.write_csv("diagnostics.csv", &rows)?;
    std::fs::write(run.path("diagnostics.json"), serde_json::to_string_pretty(&report)? + "\n")?;

    if cfg.overlap_cubes >= 2 {
        let mut overlap = Vec::new();
        for &zeta in &cfg.overlap_zetas {
            for n in 1..=cfg.overlap_max_dim {
                let b = cube_overlap_bound(cfg.overlap_cubes, zeta, n);
                overlap.push(OverlapRow {
                    run_id: &run.run_id,
                    zeta,
                    n,
                    cubes: cfg.overlap_cubes,
                    loose: b.loose,
                    pairwise: b.pairwise,
                });
            }
        }
        run.write_csv("cube_overlap.csv", &overlap)?;
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
struct SpreadRow<'a> {
    run_id: &'a str,
    dataset: &'a str,
    points: usize,
    dim: usize,
    metric: Metric,
    min_distance: f64,
    max_distance: f64,
    statistic: Option<f64>,
    coincident: bool,
    anchors: usize,
    coincident_anchors: usize,
}

#[derive(Debug, Serialize)]
struct BinRow {
    bin_left: f64,
    bin_right: f64,
    count: u64,
}

#[derive(Debug, Serialize)]
struct MinDistanceRow<'a> {
    run_id: &'a str,
    dataset: &'a str,
    class_a: usize,
    class_b: usize,
    metric: Metric,
    count: usize,
    min: f64,
    mean_of_min: f64,
    below_0_2: f64,
    below_0_1: f64,
    below_0_05: f64,
}

pub struct DiagnoseOutcome {
    pub spread: Option<SpreadStats>,
    pub min_distances: Vec<((usize, usize), MinPairStats)>,
}

/// Pairwise-distance geometry of a dataset split.
pub fn cmd_diagnose(cfg: &DiagnoseCommand) -> Result<DiagnoseOutcome> {
    let (train, test) = load_splits(&cfg.data)?;
    let data = match cfg.split {
        Split::Train => train,
        Split::Test => test,
    };
    let run = RunDir::create(&cfg.out, cfg)?;
    let mut outcome = DiagnoseOutcome {
        spread: None,
        min_distances: Vec::new(),
    };
    if cfg.spread {
        let s = relative_spread(data.points(), data.dim(), cfg.metric, cfg.anchor_policy(), cfg.bins)?;
        run.write_csv(
            "spread.csv",
            &[SpreadRow {
                run_id: &run.run_id,
                dataset: data.name(),
                points: s.points,
                dim: data.dim(),
                metric: s.metric,
                min_distance: s.min_distance,
                max_distance: s.max_distance,
                statistic: s.statistic,
                coincident: s.coincident,
                anchors: s.anchors,
                coincident_anchors: s.coincident_anchors,
            }],
        )?;
        let bins: Vec<BinRow> = s
            .histogram
            .rows()
            .map(|(bin_left, bin_right, count)| BinRow {
                bin_left,
                bin_right,
                count,
            })
            .collect();
        run.write_csv("spread_histogram.csv", &bins)?;
        outcome.spread = Some(s);
    }

    let mut rows = Vec::new();
    for &(a, b) in &cfg.class_pairs {
        let (pa, pb) = (data.class_points(a), data.class_points(b));
        if pa.is_empty() || pb.is_empty() {
            bail!("class pair ({a}, {b}): a class has no points in {}", data.name());
        }
        let s = min_pairwise_stats(PairSets::Between(&pa, &pb), data.dim(), Metric::Linf)?;
        let frac = |t: f64| s.fraction_below.iter().find(|f| f.0 == t).map_or(f64::NAN, |f| f.1);
        rows.push(MinDistanceRow {
            run_id: &run.run_id,
            dataset: data.name(),
            class_a: a,
            class_b: b,
            metric: Metric::Linf,
            count: s.count,
            min: s.min,
            mean_of_min: s.mean_of_min,
            below_0_2: frac(0.2),
            below_0_1: frac(0.1),
            below_0_05: frac(0.05),
        });
        outcome.min_distances.push(((a, b), s));
    }
    if !rows.is_empty() {
        run.write_csv("min_distances.csv", &rows)?;
    }
    Ok(outcome)
}
