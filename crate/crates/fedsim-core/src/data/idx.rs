//! IDX file ingestion and export.
//!
//! Wire format, bit-exact: a 4-byte big-endian magic (`0x00000803` for
//! images, `0x00000801` for labels), big-endian `u32` dimension sizes, then
//! raw unsigned bytes. Pixels are scaled by `1/255` on load and quantised
//! back to bytes on write.

use std::path::Path;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, offset: 0 }
    }

    fn read_u32(&mut self, what: &str) -> Result<u32> {
        let end = self.offset + 4;
        if end > self.bytes.len() {
            return Err(Error::format(
                self.offset as u64,
                format!("file truncated while reading {what}"),
            ));
        }
        let value = u32::from_be_bytes(self.bytes[self.offset..end].try_into().unwrap());
        self.offset = end;
        Ok(value)
    }

    fn read_bytes(&mut self, count: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.offset + count;
        if end > self.bytes.len() {
            return Err(Error::format(
                self.bytes.len() as u64,
                format!(
                    "file truncated: expected {count} bytes of {what} at offset {}",
                    self.offset
                ),
            ));
        }
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image/label IDX pair into a dataset.
///
/// The class count is the highest label seen plus one; widen it with
/// [`Dataset::with_classes`] when a subset may miss top classes.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let image_bytes = read_file(images_path)?;
    let mut r = Reader::new(&image_bytes);
    let magic = r.read_u32("image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(
            0,
            format!("bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        ));
    }
    let count = r.read_u32("image count")? as usize;
    let rows = r.read_u32("image rows")? as usize;
    let cols = r.read_u32("image cols")? as usize;
    let features = rows * cols;
    let pixels = r.read_bytes(count * features, "pixel data")?;

    let label_bytes = read_file(labels_path)?;
    let mut r = Reader::new(&label_bytes);
    let magic = r.read_u32("label magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(
            0,
            format!("bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        ));
    }
    let label_count = r.read_u32("label count")? as usize;
    if label_count != count {
        return Err(Error::format(
            4,
            format!("image count {count} does not match label count {label_count}"),
        ));
    }
    let raw_labels = r.read_bytes(label_count, "label data")?;

    let inputs = Array2::from_shape_vec(
        (count, features),
        pixels.iter().map(|&b| f64::from(b) / 255.0).collect(),
    )
    .expect("length checked against shape");
    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let classes = labels.iter().max().map_or(1, |&m| m + 1);
    Dataset::new(inputs, labels, classes)
}

/// Writes a dataset as an IDX image/label pair.
///
/// Pixels are quantised with `round(v * 255)`; images are stored as
/// `count x 1 x features`. Labels must fit in a byte.
pub fn write_idx(data: &Dataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    if let Some(&bad) = data.labels().iter().find(|&&l| l > u8::MAX as usize) {
        return Err(Error::domain(format!(
            "label {bad} does not fit in the byte-valued IDX label format"
        )));
    }

    let mut image_bytes =
        Vec::with_capacity(16 + data.len() * data.features());
    image_bytes.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    image_bytes.extend_from_slice(&(data.len() as u32).to_be_bytes());
    image_bytes.extend_from_slice(&1u32.to_be_bytes());
    image_bytes.extend_from_slice(&(data.features() as u32).to_be_bytes());
    image_bytes.extend(data.inputs().iter().map(|&v| (v * 255.0).round() as u8));
    std::fs::write(images_path, image_bytes).map_err(|e| Error::io(images_path, e))?;

    let mut label_bytes = Vec::with_capacity(8 + data.len());
    label_bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    label_bytes.extend_from_slice(&(data.len() as u32).to_be_bytes());
    label_bytes.extend(data.labels().iter().map(|&l| l as u8));
    std::fs::write(labels_path, label_bytes).map_err(|e| Error::io(labels_path, e))?;
    Ok(())
}
