use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use bvol::data::Dataset;
use bvol::nn::{checkpoint_json, evaluate, train, DropoutConfig, Evaluation, History, Precision, Real, TrainConfig};
use serde::Serialize;

use crate::arch::Architecture;
use crate::config::{OptimizerConfig, TrainCommand};
use crate::datasets::load_splits;
use crate::output::{sha256_hex, write_csv_with_header, RunDir};

/// Everything needed to train one model.
pub struct FitSpec<'a> {
    pub architecture: &'a Architecture,
    pub precision: Precision,
    pub optimizer: &'a OptimizerConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: DropoutConfig,
    pub seed: u64,
}

pub struct Fitted {
    pub checkpoint: Vec<u8>,
    pub history: History,
    pub train: Evaluation,
    /// Absent when the test split is empty.
    pub test: Option<Evaluation>,
}

fn fit_as<T: Real>(spec: &FitSpec, train_set: &Dataset, test_set: &Dataset) -> Result<Fitted> {
    let classes = train_set.num_classes().max(test_set.num_classes());
    let net = spec.architecture.build::<T>(train_set.shape(), classes, spec.seed)?;
    let config = TrainConfig {
        optimizer: spec.optimizer.build(),
        batch_size: spec.batch_size,
        epochs: spec.epochs,
        seed: spec.seed,
    };
    let (net, history) = train(net, train_set, &config, &spec.dropout)?;
    let test = if test_set.is_empty() {
        None
    } else {
        Some(evaluate(&net, test_set)?)
    };
    Ok(Fitted {
        checkpoint: checkpoint_json(&net),
        history,
        train: evaluate(&net, train_set)?,
        test,
    })
}

/// Initialises from `spec.seed` and trains.
pub fn fit(spec: &FitSpec, train_set: &Dataset, test_set: &Dataset) -> Result<Fitted> {
    match spec.precision {
        Precision::Single => fit_as::<f32>(spec, train_set, test_set),
        Precision::Double => fit_as::<f64>(spec, train_set, test_set),
    }
}

const HISTORY_HEADER: [&str; 5] = ["run_id", "seed", "epoch", "loss", "accuracy"];

#[derive(Debug, Serialize)]
struct HistoryRow<'a> {
    run_id: &'a str,
    seed: u64,
    epoch: usize,
    loss: f64,
    accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub run_id: String,
    pub seed: u64,
    pub epochs: usize,
    pub train_points: usize,
    pub test_points: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub model_hash: String,
}

pub struct TrainOutcome {
    pub model: PathBuf,
    pub summary: TrainSummary,
    pub history: History,
}

pub fn cmd_train(cfg: &TrainCommand) -> Result<TrainOutcome> {
    let (train_set, test_set) = load_splits(&cfg.data)?;
    let run = RunDir::create(&cfg.out, cfg)?;
    let spec = FitSpec {
        architecture: &cfg.architecture,
        precision: cfg.precision,
        optimizer: &cfg.optimizer,
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        dropout: cfg.dropout,
        seed: cfg.seed,
    };
    let fitted = fit(&spec, &train_set, &test_set)?;
    let model = cfg.model.clone().unwrap_or_else(|| run.path("model.json"));
    fs::write(&model, &fitted.checkpoint).with_context(|| format!("writing {}", model.display()))?;

    let rows: Vec<HistoryRow> = fitted
        .history
        .epochs
        .iter()
        .map(|e| HistoryRow {
            run_id: &run.run_id,
            seed: cfg.seed,
            epoch: e.epoch,
            loss: e.loss,
            accuracy: e.accuracy,
        })
        .collect();
    write_csv_with_header(&run.path("history.csv"), &HISTORY_HEADER, &rows)?;
    let summary = TrainSummary {
        run_id: run.run_id.clone(),
        seed: cfg.seed,
        epochs: cfg.epochs,
        train_points: train_set.len(),
        test_points: test_set.len(),
        train_loss: fitted.train.loss,
        train_accuracy: fitted.train.accuracy,
        test_loss: fitted.test.map(|t| t.loss),
        test_accuracy: fitted.test.map(|t| t.accuracy),
        model_hash: sha256_hex(&fitted.checkpoint),
    };
    run.write_csv("summary.csv", std::slice::from_ref(&summary))?;
    Ok(TrainOutcome {
        model,
        summary,
        history: fitted.history,
    })
}
