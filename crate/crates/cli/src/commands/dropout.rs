use std::fs;

use anyhow::{bail, Result};
use bvol::attack::FgsmDetector;
use bvol::data::Dataset;
use bvol::nn::{AnyNetwork, DropoutConfig};
use bvol::volume::{estimate_bvol, Measure, VolumePreset};
use serde::Serialize;

use super::measure::{measure_params, preset_epsilon, region_for, resolve_preset};
use super::train::{fit, FitSpec};
use crate::config::DropoutSweepCommand;
use crate::datasets::load_splits;
use crate::output::{sha256_hex, RunDir};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CellRow {
    pub run_id: String,
    pub rate: f64,
    pub seed: u64,
    pub epochs: usize,
    pub status: &'static str,
    pub error: String,
    pub test_accuracy: Option<f64>,
    pub train_bvol: Option<f64>,
    pub train_bvol_halfwidth: Option<f64>,
    pub ladv_bvol: Option<f64>,
    pub ladv_bvol_halfwidth: Option<f64>,
    pub train_bvol_epsilon: f64,
    pub ladv_bvol_epsilon: f64,
    pub delta: f64,
    pub alpha: u32,
    pub trials: u64,
    pub model_hash: String,
}

/// Mean and population standard deviation over the cells of one rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub run_id: String,
    pub rate: f64,
    pub epochs: usize,
    pub cells: usize,
    pub failed: usize,
    pub test_accuracy_mean: Option<f64>,
    pub test_accuracy_std: Option<f64>,
    pub train_bvol_mean: Option<f64>,
    pub train_bvol_std: Option<f64>,
    pub ladv_bvol_mean: Option<f64>,
    pub ladv_bvol_std: Option<f64>,
    pub train_bvol_epsilon: f64,
    pub ladv_bvol_epsilon: f64,
    pub delta: f64,
    pub alpha: u32,
    pub trials: u64,
}

fn mean_std(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

pub struct DropoutOutcome {
    pub cells: Vec<CellRow>,
    pub rates: Vec<RateRow>,
}

struct Cell<'a> {
    cfg: &'a DropoutSweepCommand,
    train_set: &'a Dataset,
    test_set: &'a Dataset,
    eps: (f64, f64),
    preset: Option<VolumePreset>,
}

impl Cell<'_> {
    /// Fills `row` as far as the cell gets; the first error stops the cell.
    fn run(&self, rate: f64, seed: u64, row: &mut CellRow, dir: &std::path::Path) -> Result<()> {
        let cfg = self.cfg;
        let spec = FitSpec {
            architecture: &cfg.architecture,
            precision: cfg.precision,
            optimizer: &cfg.optimizer,
            batch_size: cfg.batch_size,
            epochs: row.epochs,
            dropout: DropoutConfig {
                rate,
                mode: cfg.dropout_mode,
                rescale: cfg.rescale,
            },
            seed,
        };
        let fitted = fit(&spec, self.train_set, self.test_set)?;
        row.model_hash = sha256_hex(&fitted.checkpoint);
        row.test_accuracy = fitted.test.map(|t| t.accuracy);
        fs::write(dir.join(format!("rate{rate}_seed{}.json", row.seed)), &fitted.checkpoint)?;
        let net = AnyNetwork::from_json(&fitted.checkpoint)?;
        for (measure, eps) in [(Measure::TrainBvol, self.eps.0), (Measure::LadvBvol, self.eps.1)] {
            let params = measure_params(&cfg.volume, self.preset, eps, seed);
            let (region, policy) = region_for(measure, &net, Some(self.train_set), &params, cfg.volume.label_policy)?;
            let e = estimate_bvol(&FgsmDetector::new(&net, policy), &region, eps, params.trials, None, seed)?;
            match measure {
                Measure::TrainBvol => {
                    row.train_bvol = Some(e.p_hat);
                    row.train_bvol_halfwidth = Some(e.clt_halfwidth);
                }
                _ => {
                    row.ladv_bvol = Some(e.p_hat);
                    row.ladv_bvol_halfwidth = Some(e.clt_halfwidth);
                }
            }
        }
        Ok(())
    }
}

/// Trains and measures every (rate, seed) cell. A failing cell is recorded
/// in `cells.csv` and the sweep moves on.
pub fn cmd_dropout_sweep(cfg: &DropoutSweepCommand) -> Result<DropoutOutcome> {
    if cfg.rates.is_empty() || cfg.seeds.is_empty() {
        bail!("dropout sweep needs at least one rate and one seed");
    }
    let (train_set, test_set) = load_splits(&cfg.data)?;
    let run = RunDir::create(&cfg.out, cfg)?;
    let models = run.path("cells");
    fs::create_dir_all(&models)?;
    let preset = resolve_preset(cfg.preset, &cfg.data, cfg.architecture.net_kind());
    let eps = (
        cfg.train_bvol_epsilon.map_or_else(|| preset_epsilon(Measure::TrainBvol, preset), Ok)?,
        cfg.ladv_bvol_epsilon.map_or_else(|| preset_epsilon(Measure::LadvBvol, preset), Ok)?,
    );
    let delta = measure_params(&cfg.volume, preset, eps.0, 0).delta;
    let cell = Cell {
        cfg,
        train_set: &train_set,
        test_set: &test_set,
        eps,
        preset,
    };

    let mut cells = Vec::new();
    let mut rates = Vec::new();
    for &rate in &cfg.rates {
        let epochs = cfg.epochs.epochs(rate);
        let first = cells.len();
        for &s in &cfg.seeds {
            let mut row = CellRow {
                run_id: run.run_id.clone(),
                rate,
                seed: s,
                epochs,
                status: "ok",
                train_bvol_epsilon: eps.0,
                ladv_bvol_epsilon: eps.1,
                delta,
                alpha: cfg.volume.alpha,
                trials: cfg.volume.trials,
                ..CellRow::default()
            };
            if let Err(e) = cell.run(rate, cfg.seed.wrapping_add(s), &mut row, &models) {
                row.status = "failed";
                row.error = format!("{e:#}");
                eprintln!("cell rate {rate} seed {s} failed: {e:#}");
            }
            cells.push(row);
        }
        let group = &cells[first..];
        let (test_accuracy_mean, test_accuracy_std) = mean_std(group.iter().map(|c| c.test_accuracy));
        let (train_bvol_mean, train_bvol_std) = mean_std(group.iter().map(|c| c.train_bvol));
        let (ladv_bvol_mean, ladv_bvol_std) = mean_std(group.iter().map(|c| c.ladv_bvol));
        rates.push(RateRow {
            run_id: run.run_id.clone(),
            rate,
            epochs,
            cells: group.len(),
            failed: group.iter().filter(|c| c.status != "ok").count(),
            test_accuracy_mean,
            test_accuracy_std,
            train_bvol_mean,
            train_bvol_std,
            ladv_bvol_mean,
            ladv_bvol_std,
            train_bvol_epsilon: eps.0,
            ladv_bvol_epsilon: eps.1,
            delta,
            alpha: cfg.volume.alpha,
            trials: cfg.volume.trials,
        });
    }
    run.write_csv("cells.csv", &cells)?;
    run.write_csv("summary.csv", &rates)?;
    if cells.iter().all(|c| c.status != "ok") {
        bail!("every cell of the dropout sweep failed; see {}", run.path("cells.csv").display());
    }
    Ok(DropoutOutcome { cells, rates })
}
