use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bvol::attack::{EpsilonGrid, FgsmDetector, LabelPolicy};
use bvol::data::Dataset;
use bvol::nn::{AnyNetwork, LayerSpec};
use bvol::volume::{
    convergence_study, epsilon_sweep, ladv_region, train_region, volume_preset, Measure, MeasureParams, NetKind,
    RegionSpec, VolumeEstimate, VolumePreset,
};

use crate::config::{DataConfig, MeasureCommand, PresetRef, SweepCommand, VolumeConfig};
use crate::datasets::load_splits;
use crate::output::{sha256_hex, MeasurementRow, RunDir};

pub struct LoadedModel {
    pub net: AnyNetwork,
    pub hash: String,
}

impl LoadedModel {
    pub fn net_kind(&self) -> NetKind {
        if self.net.specs().iter().any(|l| matches!(l, LayerSpec::Conv2d { .. })) {
            NetKind::Conv
        } else {
            NetKind::Fc
        }
    }
}

pub fn load_model(path: Option<&Path>) -> Result<LoadedModel> {
    let path = path.ok_or_else(|| anyhow!("no checkpoint given (set `model` or pass --model)"))?;
    let bytes = fs::read(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    let net = AnyNetwork::from_json(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))?;
    Ok(LoadedModel {
        net,
        hash: sha256_hex(&bytes),
    })
}

/// The explicit preset, else the one implied by the data source.
pub fn resolve_preset(explicit: Option<PresetRef>, data: &DataConfig, kind: NetKind) -> Option<VolumePreset> {
    match explicit {
        Some(p) => Some(volume_preset(p.family, p.net)),
        None => data.family().map(|f| volume_preset(f, kind)),
    }
}

pub fn preset_epsilon(measure: Measure, preset: Option<VolumePreset>) -> Result<f64> {
    let p = preset.ok_or_else(|| {
        anyhow!(
            "no ε for {}: give explicit epsilons or a preset",
            measure.as_str()
        )
    })?;
    Ok(match measure {
        Measure::Bvol => p.bvol_epsilon,
        Measure::TrainBvol => p.train_bvol_epsilon,
        Measure::LadvBvol => p.ladv_bvol_epsilon,
    })
}

pub fn measure_params(vol: &VolumeConfig, preset: Option<VolumePreset>, epsilon: f64, seed: u64) -> MeasureParams {
    MeasureParams {
        epsilon,
        delta: vol.delta.or(preset.map(|p| p.delta)).unwrap_or(0.2),
        trials: vol.trials,
        alpha: vol.alpha,
        train_subset: vol.train_subset,
        boundary_points: vol.boundary_points,
        clip_to_cube: vol.clip_to_cube,
        seed,
    }
}

/// The sampling region of `measure` and the label policy its probes use.
pub fn region_for(
    measure: Measure,
    net: &AnyNetwork,
    data: Option<&Dataset>,
    params: &MeasureParams,
    policy: LabelPolicy,
) -> Result<(RegionSpec, LabelPolicy)> {
    let need = || data.ok_or_else(|| anyhow!("{} needs a dataset", measure.as_str()));
    Ok(match measure {
        Measure::Bvol => (RegionSpec::unit_cube(bvol::Classifier::input_dim(net)), LabelPolicy::Predicted),
        Measure::TrainBvol => (train_region(need()?, params)?, policy),
        Measure::LadvBvol => (ladv_region(net, need()?, params)?.0, LabelPolicy::Predicted),
    })
}

fn check_epsilons(measure: Measure, eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        bail!("empty ε list for {}", measure.as_str());
    }
    if eps.windows(2).any(|w| w[0] >= w[1]) || eps.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
        bail!("ε list for {} must be finite, non-negative and increasing", measure.as_str());
    }
    Ok(())
}

fn sweep_rows(
    measure: Measure,
    model: &LoadedModel,
    data: Option<&Dataset>,
    params: &MeasureParams,
    vol: &VolumeConfig,
    epsilons: &[f64],
    run_id: &str,
) -> Result<Vec<MeasurementRow>> {
    check_epsilons(measure, epsilons)?;
    let (region, policy) = region_for(measure, &model.net, data, params, vol.label_policy)?;
    let detector = FgsmDetector::new(&model.net, policy);
    let estimates = epsilon_sweep(&detector, &region, epsilons, params.trials, params.seed)?;
    Ok(rows(estimates, vol, run_id, &model.hash))
}

fn rows(estimates: Vec<VolumeEstimate>, vol: &VolumeConfig, run_id: &str, hash: &str) -> Vec<MeasurementRow> {
    estimates
        .into_iter()
        .map(|e| MeasurementRow::new(run_id, &e.with_hoeffding(vol.hoeffding_xi), hash))
        .collect()
}

fn training_data(needed: bool, data: &DataConfig) -> Result<Option<Dataset>> {
    Ok(if needed { Some(load_splits(data)?.0) } else { None })
}

/// One CSV row per requested (measure, ε).
pub fn cmd_measure(cfg: &MeasureCommand) -> Result<Vec<MeasurementRow>> {
    if cfg.measures.is_empty() {
        bail!("no measures requested");
    }
    let model = load_model(cfg.model.as_deref())?;
    let data = training_data(cfg.measures.iter().any(|m| m.measure != Measure::Bvol), &cfg.data)?;
    let run = RunDir::create(&cfg.out, cfg)?;
    let preset = resolve_preset(cfg.preset, &cfg.data, model.net_kind());
    let mut out = Vec::new();
    for req in &cfg.measures {
        let eps = match &req.epsilons {
            Some(e) => e.clone(),
            None => vec![preset_epsilon(req.measure, preset)?],
        };
        let params = measure_params(&cfg.volume, preset, eps[eps.len() - 1], cfg.seed);
        let rows = sweep_rows(req.measure, &model, data.as_ref(), &params, &cfg.volume, &eps, &run.run_id)
            .with_context(|| format!("measuring {}", req.measure.as_str()))?;
        out.extend(rows);
    }
    run.write_csv("measurements.csv", &out)?;
    Ok(out)
}

pub struct SweepOutcome {
    pub sweep: Vec<MeasurementRow>,
    pub convergence: Vec<MeasurementRow>,
}

/// An ε-sweep over one shared sample set, plus an optional convergence table.
pub fn cmd_sweep(cfg: &SweepCommand) -> Result<SweepOutcome> {
    let model = load_model(cfg.model.as_deref())?;
    let data = training_data(cfg.measure != Measure::Bvol, &cfg.data)?;
    let run = RunDir::create(&cfg.out, cfg)?;
    let preset = resolve_preset(None, &cfg.data, model.net_kind());
    let eps = match &cfg.epsilons {
        Some(e) => e.clone(),
        None => EpsilonGrid::sweep_default(cfg.sweep_max)?.values().to_vec(),
    };
    check_epsilons(cfg.measure, &eps)?;
    let params = measure_params(&cfg.volume, preset, eps[eps.len() - 1], cfg.seed);
    let (region, policy) = region_for(cfg.measure, &model.net, data.as_ref(), &params, cfg.volume.label_policy)?;
    let detector = FgsmDetector::new(&model.net, policy);
    let est = epsilon_sweep(&detector, &region, &eps, params.trials, params.seed)?;
    let sweep = rows(est, &cfg.volume, &run.run_id, &model.hash);
    run.write_csv("sweep.csv", &sweep)?;

    let mut convergence = Vec::new();
    if !cfg.convergence_sizes.is_empty() {
        let epsilon = cfg.convergence_epsilon.unwrap_or(cfg.sweep_max);
        let est = convergence_study(&detector, &region, epsilon, &cfg.convergence_sizes, cfg.seed)?;
        convergence = rows(est, &cfg.volume, &run.run_id, &model.hash);
        run.write_csv("convergence.csv", &convergence)?;
    }
    Ok(SweepOutcome { sweep, convergence })
}
