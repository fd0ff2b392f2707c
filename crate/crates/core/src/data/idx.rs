use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::nn::Dataset;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1F, 0x8B]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn ingest(path: &str, field: &'static str, offset: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        path: path.to_string(),
        field,
        offset,
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &str, field: &'static str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| ingest(path, field, offset, "truncated header"))
}

fn check_magic(bytes: &[u8], expected: u32, path: &str) -> Result<()> {
    let magic = read_u32(bytes, 0, path, "magic")?;
    if magic != expected {
        return Err(ingest(
            path,
            "magic",
            0,
            format!("bad magic 0x{magic:08X}, expected 0x{expected:08X}"),
        ));
    }
    Ok(())
}

/// Parses an IDX image file into `(count, rows, cols, pixels / 255)`.
pub fn parse_idx_images(bytes: &[u8], path: &str) -> Result<(usize, usize, usize, Vec<f64>)> {
    check_magic(bytes, IMAGE_MAGIC, path)?;
    let count = read_u32(bytes, 4, path, "count")? as usize;
    let rows = read_u32(bytes, 8, path, "rows")? as usize;
    let cols = read_u32(bytes, 12, path, "cols")? as usize;
    let need = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() < need {
        return Err(ingest(
            path,
            "pixels",
            bytes.len(),
            format!("payload holds {} bytes, header promises {need}", payload.len()),
        ));
    }
    let pixels = payload[..need].iter().map(|&p| p as f64 / 255.0).collect();
    Ok((count, rows, cols, pixels))
}

/// Parses an IDX label file.
pub fn parse_idx_labels(bytes: &[u8], path: &str) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC, path)?;
    let count = read_u32(bytes, 4, path, "count")? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(ingest(
            path,
            "labels",
            bytes.len(),
            format!("payload holds {} bytes, header promises {count}", payload.len()),
        ));
    }
    Ok(payload[..count].to_vec())
}

/// Loads an IDX image/label pair (plain or gzip-compressed).
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (is, ls) = (ip.display().to_string(), lp.display().to_string());
    let (count, rows, cols, pixels) = parse_idx_images(&read_file(ip)?, &is)?;
    let labels = parse_idx_labels(&read_file(lp)?, &ls)?;
    if labels.len() != count {
        return Err(ingest(
            &ls,
            "count",
            4,
            format!("{} labels for {count} images in {is}", labels.len()),
        ));
    }
    let dim = rows * cols;
    if dim == 0 {
        return Err(ingest(&is, "rows", 8, "zero-sized images"));
    }
    let classes = labels.iter().copied().max().map_or(1, |m| m as usize + 1);
    Dataset::new(pixels, labels.into_iter().map(usize::from).collect(), dim, classes)
}
