//! Monte Carlo estimates of ε-neighbourhood boundary volume.
//!
//! The volume of the sampling region is normalised to 1, so an estimate is
//! the Bernoulli mean of "the detector certifies a boundary within ε of the
//! sample".

mod presets;
mod region;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use presets::{volume_preset, DataFamily, NetKind, VolumePreset};
pub use region::{sample_region, RegionKind, RegionSpec};
pub use stats::{clt_halfwidth, hoeffding_tail, wilson_interval, z_quantile};

use crate::attack::{bisect_boundary_point, check_two_classes, class_pair, AttackError, BoundaryPoint, EpsilonGrid};
use crate::classifier::{BoundaryDetector, Classifier, Probe};
use crate::data::Dataset;
use crate::nn::NnError;
use crate::rng;

pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, thiserror::Error)]
pub enum VolumeError {
    #[error("invalid volume parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Bvol,
    TrainBvol,
    LadvBvol,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Bvol => "bvol",
            Measure::TrainBvol => "train_bvol",
            Measure::LadvBvol => "ladv_bvol",
        }
    }

    fn of(kind: RegionKind) -> Self {
        match kind {
            RegionKind::UnitCube => Measure::Bvol,
            RegionKind::BallUnion => Measure::TrainBvol,
            RegionKind::BoundaryBallUnion { .. } => Measure::LadvBvol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub measure: Measure,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub alpha: Option<u32>,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    /// 95% Wald half-width.
    pub clt_halfwidth: f64,
    /// 95% Wilson interval; the one to read when `degenerate`.
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// `successes ∈ {0, trials}`: the Wald interval has collapsed.
    pub degenerate: bool,
    pub hoeffding_xi: Option<f64>,
    pub hoeffding_bound: Option<f64>,
    pub zero_grad_count: u64,
    /// Number of balls in the region (`|X|` or `|cp(X, Y)|`), 0 for the cube.
    pub region_size: usize,
    pub clip_to_cube: bool,
    pub seed: u64,
}

impl VolumeEstimate {
    fn from_counts(region: &RegionSpec, epsilon: f64, trials: u64, successes: u64, zero_grad: u64, seed: u64) -> Self {
        let (wilson_low, wilson_high) = wilson_interval(successes, trials, CONFIDENCE);
        VolumeEstimate {
            measure: Measure::of(region.kind()),
            epsilon,
            delta: region.delta(),
            alpha: match region.kind() {
                RegionKind::BoundaryBallUnion { alpha } => Some(alpha),
                _ => None,
            },
            trials,
            successes,
            p_hat: successes as f64 / trials as f64,
            clt_halfwidth: clt_halfwidth(successes, trials, CONFIDENCE),
            wilson_low,
            wilson_high,
            degenerate: successes == 0 || successes == trials,
            hoeffding_xi: None,
            hoeffding_bound: None,
            zero_grad_count: zero_grad,
            region_size: region.num_centers(),
            clip_to_cube: region.clip_to_cube(),
            seed,
        }
    }

    /// Attaches `P(|p̂ − p| ≥ ξ) ≤ e^{−2lξ²}`.
    pub fn with_hoeffding(mut self, xi: f64) -> Self {
        self.hoeffding_xi = Some(xi);
        self.hoeffding_bound = Some(hoeffding_tail(self.trials, xi, 1.0));
        self
    }

    /// Whether the 95% Wald interval contains `value`.
    pub fn covers(&self, value: f64) -> bool {
        (self.p_hat - value).abs() <= self.clt_halfwidth
    }
}

/// Probes `trials` samples of `region`. Sample `i` is drawn from its own
/// counter-based stream, so the result does not depend on scheduling.
pub fn probe_region<D: BoundaryDetector + ?Sized>(
    detector: &D,
    region: &RegionSpec,
    grid: &EpsilonGrid,
    trials: u64,
    seed: u64,
) -> Result<Vec<Probe>, VolumeError> {
    if trials == 0 {
        return Err(VolumeError::Invalid("need at least one trial".into()));
    }
    if detector.input_dim() != region.dim() {
        return Err(VolumeError::Invalid(format!(
            "detector takes {} inputs, region has dimension {}",
            detector.input_dim(),
            region.dim()
        )));
    }
    let probes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, rng::domain::REGION_SAMPLE, i);
            let (x, hint) = region.sample(&mut r);
            detector.probe(&x, grid, hint)
        })
        .collect::<Result<Vec<_>, NnError>>()?;
    Ok(probes)
}

fn count(probes: &[Probe], epsilon: f64) -> (u64, u64) {
    let hits = probes.iter().filter(|p| p.detected_within(epsilon)).count() as u64;
    let zero = probes.iter().filter(|p| p.zero_grad).count() as u64;
    (hits, zero)
}

/// `p̂ = #{samples with a certified flip within ε} / l`.
///
/// The detector scans `grid` (default: the single radius ε). ε = 0 detects
/// nothing and skips probing.
pub fn estimate_bvol<D: BoundaryDetector + ?Sized>(
    detector: &D,
    region: &RegionSpec,
    epsilon: f64,
    trials: u64,
    grid: Option<&EpsilonGrid>,
    seed: u64,
) -> Result<VolumeEstimate, VolumeError> {
    if trials == 0 {
        return Err(VolumeError::Invalid("need at least one trial".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(VolumeError::Invalid(format!("ε = {epsilon} must be non-negative")));
    }
    if epsilon == 0.0 {
        return Ok(VolumeEstimate::from_counts(region, 0.0, trials, 0, 0, seed));
    }
    let single;
    let grid = match grid {
        Some(g) => g,
        None => {
            single = EpsilonGrid::single(epsilon)?;
            &single
        }
    };
    let probes = probe_region(detector, region, grid, trials, seed)?;
    let (hits, zero) = count(&probes, epsilon);
    Ok(VolumeEstimate::from_counts(region, epsilon, trials, hits, zero, seed))
}

/// One estimate per ε from a single shared sample set. The detector scans
/// the whole ε list, so the curve is non-decreasing by construction.
///
/// A leading ε = 0 is allowed and yields p̂ = 0.
pub fn epsilon_sweep<D: BoundaryDetector + ?Sized>(
    detector: &D,
    region: &RegionSpec,
    epsilons: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<VolumeEstimate>, VolumeError> {
    let positive: Vec<f64> = epsilons.iter().copied().filter(|&e| e != 0.0).collect();
    if positive.len() + 1 < epsilons.len() || (positive.len() < epsilons.len() && epsilons[0] != 0.0) {
        return Err(VolumeError::Invalid("ε = 0 may only appear first".into()));
    }
    if positive.is_empty() {
        return epsilons
            .iter()
            .map(|&e| estimate_bvol(detector, region, e, trials, None, seed))
            .collect();
    }
    let grid = EpsilonGrid::new(positive)?;
    let probes = probe_region(detector, region, &grid, trials, seed)?;
    Ok(epsilons
        .iter()
        .map(|&e| {
            let (hits, zero) = count(&probes, e);
            VolumeEstimate::from_counts(region, e, trials, hits, zero, seed)
        })
        .collect())
}

/// Estimates at increasing sample sizes from nested prefixes of one sample
/// sequence.
pub fn convergence_study<D: BoundaryDetector + ?Sized>(
    detector: &D,
    region: &RegionSpec,
    epsilon: f64,
    sizes: &[u64],
    seed: u64,
) -> Result<Vec<VolumeEstimate>, VolumeError> {
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VolumeError::Invalid("sample sizes must be positive and increasing".into()));
    }
    let grid = EpsilonGrid::single(epsilon)?;
    let probes = probe_region(detector, region, &grid, sizes[sizes.len() - 1], seed)?;
    Ok(sizes
        .iter()
        .map(|&l| {
            let (hits, zero) = count(&probes[..l as usize], epsilon);
            VolumeEstimate::from_counts(region, epsilon, l, hits, zero, seed)
        })
        .collect())
}

/// Parameters shared by the three measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureParams {
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub alpha: u32,
    /// Training points whose δ-balls form the TrainBvol region.
    pub train_subset: usize,
    /// Linear adversarial points whose δ-balls form the LAdvBvol region.
    pub boundary_points: usize,
    pub clip_to_cube: bool,
    pub seed: u64,
}

impl Default for MeasureParams {
    fn default() -> Self {
        MeasureParams {
            epsilon: 0.001,
            delta: 0.2,
            trials: 100_000,
            alpha: 10,
            train_subset: 10_000,
            boundary_points: 10_000,
            clip_to_cube: false,
            seed: 0,
        }
    }
}

/// Bvol over the unit cube.
pub fn run_bvol<D: BoundaryDetector + ?Sized>(detector: &D, params: &MeasureParams) -> Result<VolumeEstimate, VolumeError> {
    let region = RegionSpec::unit_cube(detector.input_dim());
    estimate_bvol(detector, &region, params.epsilon, params.trials, None, params.seed)
}

/// The TrainBvol region: δ-balls around a seeded subset of the data.
pub fn train_region(data: &Dataset, params: &MeasureParams) -> Result<RegionSpec, VolumeError> {
    let perm = data.permutation(params.seed, rng::domain::SUBSET);
    let take = params.train_subset.min(data.len());
    Ok(RegionSpec::around_points(data, &perm[..take], params.delta)?.with_clip(params.clip_to_cube))
}

pub fn run_train_bvol<D: BoundaryDetector + ?Sized>(
    detector: &D,
    data: &Dataset,
    params: &MeasureParams,
) -> Result<VolumeEstimate, VolumeError> {
    let region = train_region(data, params)?;
    estimate_bvol(detector, &region, params.epsilon, params.trials, None, params.seed)
}

/// Linear adversarial points: bisection on pairs of points with different
/// dataset labels whose predicted labels also differ.
///
/// Candidate pairs whose endpoints tie or share a predicted label are
/// skipped. At most `50·count + 1000` candidates are tried.
pub fn linear_adversarial_points<C: Classifier + ?Sized>(
    classifier: &C,
    data: &Dataset,
    count: usize,
    alpha: u32,
    seed: u64,
) -> Result<Vec<BoundaryPoint>, VolumeError> {
    check_two_classes(data)?;
    let budget = 50 * count + 1000;
    let block = 1024.max(count / 4);
    let mut found = Vec::with_capacity(count);
    let mut next = 0usize;
    while found.len() < count && next < budget {
        let end = (next + block).min(budget);
        let batch = (next..end)
            .into_par_iter()
            .map(|k| -> Result<Option<BoundaryPoint>, VolumeError> {
                let (i, j) = class_pair(data, seed, k as u64);
                let (xi, xj) = (data.point_f64(i), data.point_f64(j));
                let (li, lj) = (classifier.predict(&xi)?, classifier.predict(&xj)?);
                if li.is_tie() || lj.is_tie() || li.resolved() == lj.resolved() {
                    return Ok(None);
                }
                Ok(Some(bisect_boundary_point(classifier, &xi, &xj, alpha, (i, j))?))
            })
            .collect::<Result<Vec<_>, _>>()?;
        found.extend(batch.into_iter().flatten().take(count - found.len()));
        next = end;
    }
    if found.len() < count {
        return Err(AttackError::NoValidPairs {
            found: found.len(),
            requested: count,
            attempts: next,
        }
        .into());
    }
    Ok(found)
}

pub fn ladv_region<C: Classifier + ?Sized>(
    classifier: &C,
    data: &Dataset,
    params: &MeasureParams,
) -> Result<(RegionSpec, Vec<BoundaryPoint>), VolumeError> {
    let points = linear_adversarial_points(classifier, data, params.boundary_points, params.alpha, params.seed)?;
    let region = RegionSpec::around_boundary(&points, params.delta, params.alpha)?.with_clip(params.clip_to_cube);
    Ok((region, points))
}

/// LAdvBvol. `classifier` locates boundary points, `detector` probes samples.
pub fn run_ladv_bvol<C: Classifier + ?Sized, D: BoundaryDetector + ?Sized>(
    classifier: &C,
    detector: &D,
    data: &Dataset,
    params: &MeasureParams,
) -> Result<VolumeEstimate, VolumeError> {
    let (region, _) = ladv_region(classifier, data, params)?;
    estimate_bvol(detector, &region, params.epsilon, params.trials, None, params.seed)
}
