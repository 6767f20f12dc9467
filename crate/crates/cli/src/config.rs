//! JSON run configurations, one per command.
//!
//! Every field has a default, so `{}` is a valid config for each command.
//! Command-line flags are applied to the parsed JSON document before it is
//! typed, which keeps one code path for file values and overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bvol::attack::LabelPolicy;
use bvol::data::SyntheticKind;
use bvol::geometry::{AnchorPolicy, Metric};
use bvol::nn::{AdamParams, DropoutConfig, MaskMode, Optimizer, OptimizerKind, Precision};
use bvol::volume::{DataFamily, Measure, NetKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::arch::Architecture;

/// Values given on the command line that override config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

/// Reads `path` (or starts from `{}`), applies the overrides and parses the
/// result as `T`.
pub fn load<T: DeserializeOwned>(path: Option<&Path>, overrides: &Overrides) -> Result<T> {
    let mut doc = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => Value::Object(Map::new()),
    };
    let Value::Object(obj) = &mut doc else {
        bail!("config must be a JSON object");
    };
    if let Some(seed) = overrides.seed {
        obj.insert("seed".into(), seed.into());
    }
    if let Some(out) = &overrides.out {
        obj.insert("out".into(), path_value(out));
    }
    if let Some(model) = &overrides.model {
        obj.insert("model".into(), path_value(model));
    }
    if let Some(dir) = &overrides.data {
        let data = obj.entry("data").or_insert_with(|| Value::Object(Map::new()));
        match data {
            Value::Object(d) => {
                d.insert("dir".into(), path_value(dir));
            }
            _ => bail!("config field `data` must be an object"),
        }
    }
    serde_json::from_value(doc).context("invalid config")
}

fn path_value(p: &Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Mnist,
    FashionMnist,
    Cifar10,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: Source,
    /// Directory holding the IDX or CIFAR binary files.
    pub dir: Option<PathBuf>,
    /// Random training subset size; the whole training split when absent.
    pub train_size: Option<usize>,
    pub test_size: Option<usize>,
    /// Seed for subset selection and synthetic generation. Kept apart from
    /// the run seed so every run of a sweep sees the same data.
    pub seed: u64,
    pub synthetic: SyntheticKind,
    /// Points per class for synthetic data, split 80/20 into train and test
    /// unless sizes are given.
    pub per_class: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: Source::Mnist,
            dir: None,
            train_size: None,
            test_size: None,
            seed: 0,
            synthetic: SyntheticKind::Annulus { dim: 2 },
            per_class: 500,
        }
    }
}

impl DataConfig {
    pub fn family(&self) -> Option<DataFamily> {
        match self.source {
            Source::Mnist => Some(DataFamily::Mnist),
            Source::FashionMnist => Some(DataFamily::FashionMnist),
            Source::Cifar10 => Some(DataFamily::Cifar10),
            Source::Synthetic => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let adam = AdamParams::default();
        OptimizerConfig {
            algorithm: Algorithm::Adam,
            learning_rate: 1e-4,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
        }
    }
}

impl OptimizerConfig {
    pub fn build(&self) -> Optimizer {
        let kind = match self.algorithm {
            Algorithm::Sgd => OptimizerKind::Sgd,
            Algorithm::Adam => OptimizerKind::Adam(AdamParams {
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            }),
        };
        Optimizer {
            kind,
            learning_rate: self.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCommand {
    pub seed: u64,
    pub out: PathBuf,
    /// Checkpoint path; `<out>/model.json` when absent.
    pub model: Option<PathBuf>,
    pub data: DataConfig,
    pub architecture: Architecture,
    pub precision: Precision,
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: DropoutConfig,
}

impl Default for TrainCommand {
    fn default() -> Self {
        TrainCommand {
            seed: 0,
            out: PathBuf::from("runs/train"),
            model: None,
            data: DataConfig {
                train_size: Some(10_000),
                ..DataConfig::default()
            },
            architecture: Architecture::default(),
            precision: Precision::Single,
            optimizer: OptimizerConfig::default(),
            batch_size: 32,
            epochs: 20,
            dropout: DropoutConfig::none(),
        }
    }
}

/// Selects the published ε/δ for a dataset and architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub family: DataFamily,
    pub net: NetKind,
}

/// Sampling parameters shared by the measurement commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumeConfig {
    /// Overrides the preset δ; 0.2 without a preset.
    pub delta: Option<f64>,
    pub trials: u64,
    pub alpha: u32,
    pub train_subset: usize,
    pub boundary_points: usize,
    pub clip_to_cube: bool,
    /// Label entering the FGSM loss for TrainBvol samples. Bvol and LAdvBvol
    /// always use the predicted label.
    pub label_policy: LabelPolicy,
    /// Deviation ξ for the reported Hoeffding bound.
    pub hoeffding_xi: f64,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        VolumeConfig {
            delta: None,
            trials: 100_000,
            alpha: 10,
            train_subset: 10_000,
            boundary_points: 10_000,
            clip_to_cube: false,
            label_policy: LabelPolicy::Predicted,
            hoeffding_xi: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureRequest {
    pub measure: Measure,
    /// Preset ε for the measure when absent.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureCommand {
    pub seed: u64,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub data: DataConfig,
    pub preset: Option<PresetRef>,
    pub measures: Vec<MeasureRequest>,
    pub volume: VolumeConfig,
}

impl Default for MeasureCommand {
    fn default() -> Self {
        MeasureCommand {
            seed: 0,
            out: PathBuf::from("runs/measure"),
            model: None,
            data: DataConfig {
                train_size: Some(10_000),
                ..DataConfig::default()
            },
            preset: None,
            measures: [Measure::Bvol, Measure::TrainBvol, Measure::LadvBvol]
                .into_iter()
                .map(|measure| MeasureRequest { measure, epsilons: None })
                .collect(),
            volume: VolumeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepCommand {
    pub seed: u64,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub data: DataConfig,
    pub measure: Measure,
    /// Increasing ε values sharing one sample set. Defaults to 20 geometric
    /// steps up to `sweep_max`.
    pub epsilons: Option<Vec<f64>>,
    pub sweep_max: f64,
    /// Increasing sample sizes for the convergence table, at ε = `sweep_max`
    /// unless `convergence_epsilon` is set. Empty skips it.
    pub convergence_sizes: Vec<u64>,
    pub convergence_epsilon: Option<f64>,
    pub volume: VolumeConfig,
}

impl Default for SweepCommand {
    fn default() -> Self {
        SweepCommand {
            seed: 0,
            out: PathBuf::from("runs/sweep"),
            model: None,
            data: DataConfig {
                train_size: Some(10_000),
                ..DataConfig::default()
            },
            measure: Measure::Bvol,
            epsilons: None,
            sweep_max: 0.01,
            convergence_sizes: Vec::new(),
            convergence_epsilon: None,
            volume: VolumeConfig::default(),
        }
    }
}

/// `epochs(rate) = base + increment · round(rate / step)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpochSchedule {
    pub base: usize,
    pub increment: usize,
    pub step: f64,
}

impl Default for EpochSchedule {
    fn default() -> Self {
        EpochSchedule {
            base: 20,
            increment: 0,
            step: 0.1,
        }
    }
}

impl EpochSchedule {
    pub fn epochs(&self, rate: f64) -> usize {
        self.base + self.increment * (rate / self.step).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropoutSweepCommand {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub architecture: Architecture,
    pub precision: Precision,
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub rates: Vec<f64>,
    /// Training seeds; each offsets the run seed.
    pub seeds: Vec<u64>,
    pub epochs: EpochSchedule,
    pub dropout_mode: MaskMode,
    pub rescale: bool,
    pub preset: Option<PresetRef>,
    pub train_bvol_epsilon: Option<f64>,
    pub ladv_bvol_epsilon: Option<f64>,
    pub volume: VolumeConfig,
}

impl Default for DropoutSweepCommand {
    fn default() -> Self {
        DropoutSweepCommand {
            seed: 0,
            out: PathBuf::from("runs/dropout"),
            data: DataConfig {
                train_size: Some(10_000),
                ..DataConfig::default()
            },
            architecture: Architecture::default(),
            precision: Precision::Single,
            optimizer: OptimizerConfig::default(),
            batch_size: 32,
            rates: vec![0.0, 0.25, 0.5],
            seeds: vec![0, 1, 2],
            epochs: EpochSchedule::default(),
            dropout_mode: MaskMode::WeightMask,
            rescale: false,
            preset: None,
            train_bvol_epsilon: None,
            ladv_bvol_epsilon: None,
            volume: VolumeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyCommand {
    pub seed: u64,
    pub out: PathBuf,
    pub simulation_dims: Vec<u64>,
    pub simulation_trials: u64,
    pub orthogonality_trials: u64,
    pub max_dim: u64,
    /// ζ values for the cube-overlap table.
    pub overlap_zetas: Vec<f64>,
    pub overlap_cubes: u64,
    pub overlap_max_dim: u64,
}

impl Default for VerifyCommand {
    fn default() -> Self {
        let d = bvol::geometry::DiagnosticsConfig::default();
        VerifyCommand {
            seed: d.seed,
            out: PathBuf::from("runs/verify"),
            simulation_dims: d.simulation_dims,
            simulation_trials: d.simulation_trials,
            orthogonality_trials: d.orthogonality_trials,
            max_dim: d.max_dim,
            overlap_zetas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            overlap_cubes: 100,
            overlap_max_dim: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseCommand {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub split: Split,
    /// Metric for the relative-spread statistic.
    pub metric: Metric,
    /// Anchor count for the per-point spread histogram; all points when
    /// absent.
    pub anchors: Option<usize>,
    pub bins: usize,
    /// Class pairs for the nearest-distance table, always in l∞.
    pub class_pairs: Vec<(usize, usize)>,
    pub spread: bool,
}

impl Default for DiagnoseCommand {
    fn default() -> Self {
        DiagnoseCommand {
            seed: 0,
            out: PathBuf::from("runs/diagnose"),
            data: DataConfig::default(),
            split: Split::Train,
            metric: Metric::L2,
            anchors: None,
            bins: 50,
            class_pairs: vec![(1, 7)],
            spread: true,
        }
    }
}

impl DiagnoseCommand {
    pub fn anchor_policy(&self) -> AnchorPolicy {
        match self.anchors {
            None => AnchorPolicy::All,
            Some(count) => AnchorPolicy::Sample { count, seed: self.seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotCommand {
    pub csv: PathBuf,
    pub out: PathBuf,
    pub x: String,
    pub y: String,
    /// Column holding error-bar half-widths.
    pub err: Option<String>,
    /// Column whose distinct values split rows into separate curves.
    pub series: Option<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: Option<String>,
}

impl Default for PlotCommand {
    fn default() -> Self {
        PlotCommand {
            csv: PathBuf::new(),
            out: PathBuf::from("plot.svg"),
            x: "epsilon".into(),
            y: "p_hat".into(),
            err: Some("clt_halfwidth_95".into()),
            series: None,
            log_x: false,
            log_y: false,
            title: None,
        }
    }
}
