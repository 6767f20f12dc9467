//! Output directories, provenance and CSV rows.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bvol::volume::VolumeEstimate;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An output directory holding a copy of the resolved config.
pub struct RunDir {
    pub dir: PathBuf,
    /// Hash of the resolved config without its `out` and `model` paths, so
    /// the same run written to two places has one id. Checkpoint contents are
    /// tracked separately through `model_hash`.
    pub run_id: String,
}

impl RunDir {
    pub fn create<C: Serialize>(out: &Path, config: &C) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut doc = serde_json::to_value(config)?;
        let mut pretty = serde_json::to_string_pretty(&doc)?;
        pretty.push('\n');
        fs::write(out.join("config.json"), pretty)?;
        if let Some(obj) = doc.as_object_mut() {
            obj.remove("out");
            obj.remove("model");
        }
        let run_id = sha256_hex(&serde_json::to_vec(&doc)?)[..16].to_string();
        Ok(RunDir {
            dir: out.to_path_buf(),
            run_id,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let path = self.path(name);
        write_csv(&path, rows)?;
        Ok(path)
    }
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Like [`write_csv`], but with a fixed header so an empty table still has
/// one. `header` must match the field order of `R`.
pub fn write_csv_with_header<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One measurement with its full provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRow {
    pub run_id: String,
    pub measure: &'static str,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub alpha: Option<u32>,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub clt_halfwidth_95: f64,
    pub zero_grad_count: u64,
    pub seed: u64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub degenerate: bool,
    pub hoeffding_xi: Option<f64>,
    pub hoeffding_bound: Option<f64>,
    pub region_size: usize,
    pub clip_to_cube: bool,
    pub model_hash: String,
}

impl MeasurementRow {
    pub fn new(run_id: &str, e: &VolumeEstimate, model_hash: &str) -> Self {
        MeasurementRow {
            run_id: run_id.to_string(),
            measure: e.measure.as_str(),
            epsilon: e.epsilon,
            delta: e.delta,
            alpha: e.alpha,
            trials: e.trials,
            successes: e.successes,
            p_hat: e.p_hat,
            clt_halfwidth_95: e.clt_halfwidth,
            zero_grad_count: e.zero_grad_count,
            seed: e.seed,
            wilson_low: e.wilson_low,
            wilson_high: e.wilson_high,
            degenerate: e.degenerate,
            hoeffding_xi: e.hoeffding_xi,
            hoeffding_bound: e.hoeffding_bound,
            region_size: e.region_size,
            clip_to_cube: e.clip_to_cube,
            model_hash: model_hash.to_string(),
        }
    }
}
