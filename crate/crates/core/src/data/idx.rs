use std::fs;
use std::path::{Path, PathBuf};

use super::{DataError, Dataset};
use crate::nn::Shape;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32, DataError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DataError::Truncated {
            path: path.display().to_string(),
            reason: "header".into(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<(), DataError> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(DataError::BadMagic {
            path: path.display().to_string(),
            found,
            expected,
        });
    }
    Ok(())
}

/// Parses an IDX image file and its label file (uncompressed).
///
/// Pixels are divided by 255; images keep their `1 × rows × cols` shape.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let (images, labels) = (images.as_ref(), labels.as_ref());
    let img = read(images)?;
    check_magic(&img, IDX_IMAGES_MAGIC, images)?;
    let count = be_u32(&img, 4, images)? as usize;
    let rows = be_u32(&img, 8, images)? as usize;
    let cols = be_u32(&img, 12, images)? as usize;
    let need = 16 + count * rows * cols;
    if img.len() < need {
        return Err(DataError::Truncated {
            path: images.display().to_string(),
            reason: format!("{} bytes, header announces {need}", img.len()),
        });
    }

    let lab = read(labels)?;
    check_magic(&lab, IDX_LABELS_MAGIC, labels)?;
    let label_count = be_u32(&lab, 4, labels)? as usize;
    if label_count != count {
        return Err(DataError::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    if lab.len() < 8 + count {
        return Err(DataError::Truncated {
            path: labels.display().to_string(),
            reason: format!("{} bytes, header announces {}", lab.len(), 8 + count),
        });
    }

    let points = img[16..need].iter().map(|&b| b as f32 / 255.0).collect();
    let label_vec: Vec<usize> = lab[8..8 + count].iter().map(|&b| b as usize).collect();
    let num_classes = label_vec.iter().max().map_or(0, |m| m + 1);
    let name = images
        .file_name()
        .map_or_else(|| "idx".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(
        name,
        Shape::Image {
            channels: 1,
            height: rows,
            width: cols,
        },
        num_classes,
        points,
        label_vec,
    )
}

fn find(dir: &Path, candidates: &[&str]) -> PathBuf {
    candidates
        .iter()
        .map(|c| dir.join(c))
        .find(|p| p.exists())
        .unwrap_or_else(|| dir.join(candidates[0]))
}

/// Loads `train-*` or `t10k-*` MNIST-style files from a directory.
pub fn load_mnist_dir(dir: impl AsRef<Path>, train: bool) -> Result<Dataset, DataError> {
    let dir = dir.as_ref();
    let prefix = if train { "train" } else { "t10k" };
    let images = find(
        dir,
        &[
            &format!("{prefix}-images-idx3-ubyte"),
            &format!("{prefix}-images.idx3-ubyte"),
        ],
    );
    let labels = find(
        dir,
        &[
            &format!("{prefix}-labels-idx1-ubyte"),
            &format!("{prefix}-labels.idx1-ubyte"),
        ],
    );
    load_idx(images, labels)
}
