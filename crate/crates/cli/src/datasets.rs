use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bvol::data::{load_cifar10, load_mnist_dir, make_synthetic, subset_split, Dataset};

use crate::config::{DataConfig, Source};

fn require_dir(cfg: &DataConfig) -> Result<&Path> {
    let Some(dir) = cfg.dir.as_deref() else {
        bail!("data source {:?} needs a directory (set `data.dir` or pass --data)", cfg.source);
    };
    if !dir.is_dir() {
        bail!("data directory {} does not exist", dir.display());
    }
    Ok(dir)
}

fn take(data: Dataset, size: Option<usize>, seed: u64) -> Result<Dataset> {
    match size {
        Some(n) if n < data.len() => Ok(subset_split(&data, n, 0, seed)?.0),
        Some(n) if n > data.len() => bail!("requested {n} points from {} ({} available)", data.name(), data.len()),
        _ => Ok(data),
    }
}

fn cifar_files(dir: &Path) -> Result<(Vec<PathBuf>, PathBuf)> {
    let train: Vec<PathBuf> = (1..=5).map(|k| dir.join(format!("data_batch_{k}.bin"))).collect();
    let test = dir.join("test_batch.bin");
    for f in train.iter().chain(std::iter::once(&test)) {
        if !f.is_file() {
            bail!("missing CIFAR-10 batch file {}", f.display());
        }
    }
    Ok((train, test))
}

/// Loads the train and test splits described by `cfg`.
pub fn load_splits(cfg: &DataConfig) -> Result<(Dataset, Dataset)> {
    let (train, test) = match cfg.source {
        Source::Mnist | Source::FashionMnist => {
            let dir = require_dir(cfg)?;
            let train = load_mnist_dir(dir, true).with_context(|| format!("loading training set from {}", dir.display()))?;
            let test = load_mnist_dir(dir, false).with_context(|| format!("loading test set from {}", dir.display()))?;
            (train, test)
        }
        Source::Cifar10 => {
            let (train, test) = cifar_files(require_dir(cfg)?)?;
            (load_cifar10(&train)?, load_cifar10(&[test])?)
        }
        Source::Synthetic => {
            let all = make_synthetic(cfg.synthetic, cfg.per_class, cfg.seed)?;
            let n_train = cfg.train_size.unwrap_or(all.len() * 4 / 5);
            let n_test = cfg.test_size.unwrap_or(all.len() - n_train.min(all.len()));
            let (train, test) = subset_split(&all, n_train, n_test, cfg.seed)?;
            return Ok((train, test));
        }
    };
    Ok((take(train, cfg.train_size, cfg.seed)?, take(test, cfg.test_size, cfg.seed)?))
}
