//! Loader for IDX-format image files (the MNIST container): a big-endian
//! header of magic `0x00000803`, image count, rows, and columns, followed by
//! one byte per pixel, row-major. Pixels scale to `[0, 1]` as `byte / 255`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Magic for "unsigned byte, 3 dimensions".
pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    rows: usize,
    cols: usize,
    /// `count * rows * cols` values in `[0, 1]`, image-major.
    pixels: Vec<f64>,
}

impl ImageSet {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Pixels per image.
    pub fn pixel_dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn count(&self) -> usize {
        self.pixels.len() / self.pixel_dim()
    }

    pub fn image(&self, index: usize) -> &[f64] {
        let d = self.pixel_dim();
        &self.pixels[index * d..(index + 1) * d]
    }
}

/// Reads an IDX image file, keeping at most `limit` images when given.
///
/// The file must be exactly as long as its header promises even when only a
/// prefix is kept; a truncated or padded file is rejected.
pub fn load_idx_images(path: &Path, limit: Option<usize>) -> Result<ImageSet> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let fail = |reason: String| Error::Format {
        path: path.into(),
        reason,
    };

    if bytes.len() < 16 {
        return Err(fail(format!(
            "header needs 16 bytes, file has {}",
            bytes.len()
        )));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
    let magic = word(0);
    if magic != IDX_IMAGE_MAGIC {
        return Err(fail(format!(
            "bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"
        )));
    }
    let count = word(4) as usize;
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    if rows == 0 || cols == 0 {
        return Err(fail(format!("zero image dimensions {rows}x{cols}")));
    }
    let expected = 16 + (count as u64) * (rows as u64) * (cols as u64);
    if bytes.len() as u64 != expected {
        return Err(fail(format!(
            "expected {expected} bytes for {count} images of {rows}x{cols}, got {}",
            bytes.len()
        )));
    }

    let keep = match limit {
        Some(l) => l.min(count),
        None => count,
    };
    let pixels = bytes[16..16 + keep * rows * cols]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Ok(ImageSet { rows, cols, pixels })
}
