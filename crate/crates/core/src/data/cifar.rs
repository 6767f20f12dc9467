use std::fs;
use std::path::Path;

use super::{DataError, Dataset};
use crate::nn::Shape;

/// One label byte followed by 3 × 32 × 32 channel-planar pixels.
pub const CIFAR_RECORD_BYTES: usize = 3073;

/// Loads CIFAR-10 binary batches. Points keep the stored R, G, B plane order.
pub fn load_cifar10<P: AsRef<Path>>(batches: &[P]) -> Result<Dataset, DataError> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for path in batches {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if bytes.is_empty() || bytes.len() % CIFAR_RECORD_BYTES != 0 {
            return Err(DataError::RecordSize {
                path: path.display().to_string(),
                size: bytes.len(),
                record: CIFAR_RECORD_BYTES,
            });
        }
        points.reserve(bytes.len());
        for rec in bytes.chunks_exact(CIFAR_RECORD_BYTES) {
            labels.push(rec[0] as usize);
            points.extend(rec[1..].iter().map(|&b| b as f32 / 255.0));
        }
    }
    Dataset::new(
        "cifar10",
        Shape::Image {
            channels: 3,
            height: 32,
            width: 32,
        },
        10,
        points,
        labels,
    )
}
