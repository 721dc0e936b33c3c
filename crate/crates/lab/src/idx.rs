//! Reader for the big-endian IDX files MNIST ships in.

use std::path::Path;

use crate::error::{LabError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| LabError::format(path, format!("truncated header at offset {offset}")))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| LabError::io(path, e))
}

/// Images as rows of `rows · cols` bytes, at most `limit` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<u8>>,
}

pub fn parse_images(bytes: &[u8], limit: usize, path: &Path) -> Result<IdxImages> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(LabError::format(
            path,
            format!("bad magic 0x{magic:08X} at offset 0, expected 0x{IMAGES_MAGIC:08X}"),
        ));
    }
    let count = read_u32(bytes, 4, path)? as usize;
    let rows = read_u32(bytes, 8, path)? as usize;
    let cols = read_u32(bytes, 12, path)? as usize;
    let size = rows * cols;
    let take = count.min(limit);
    let mut pixels = Vec::with_capacity(take);
    for i in 0..take {
        let start = 16 + i * size;
        let record = bytes.get(start..start + size).ok_or_else(|| {
            LabError::format(path, format!("truncated image {i} at offset {start} (file has {} bytes)", bytes.len()))
        })?;
        pixels.push(record.to_vec());
    }
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_labels(bytes: &[u8], limit: usize, path: &Path) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(LabError::format(
            path,
            format!("bad magic 0x{magic:08X} at offset 0, expected 0x{LABELS_MAGIC:08X}"),
        ));
    }
    let count = read_u32(bytes, 4, path)? as usize;
    let take = count.min(limit);
    bytes
        .get(8..8 + take)
        .map(<[u8]>::to_vec)
        .ok_or_else(|| {
            LabError::format(
                path,
                format!("truncated label data at offset {} (need {take} labels from offset 8)", bytes.len()),
            )
        })
}

pub fn read_images(path: &Path, limit: usize) -> Result<IdxImages> {
    parse_images(&read_file(path)?, limit, path)
}

pub fn read_labels(path: &Path, limit: usize) -> Result<Vec<u8>> {
    parse_labels(&read_file(path)?, limit, path)
}
