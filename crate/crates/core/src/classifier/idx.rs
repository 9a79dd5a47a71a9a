//! IDX (MNIST) file format.

use std::path::Path;

use ndarray::Array2;

use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const N_CLASSES: usize = 10;

/// Images as rows of pixels in `[0, 1]` with labels in `0..10`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: Array2<f64>,
    pub labels: Vec<u8>,
}

impl LabeledImages {
    pub fn new(images: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if images.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} images but {} labels",
                images.nrows(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= N_CLASSES) {
            return Err(Error::InvalidInput(format!("label {l} outside 0..{N_CLASSES}")));
        }
        if images.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("pixel values must lie in [0, 1]".into()));
        }
        Ok(LabeledImages { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.images.ncols()
    }

    pub fn select(&self, indices: &[usize]) -> LabeledImages {
        LabeledImages {
            images: self.images.select(ndarray::Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// FNV-1a over the raw label bytes and quantized pixels.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for &l in &self.labels {
            eat(l);
        }
        for &v in self.images.iter() {
            eat((v * 255.0).round() as u8);
        }
        h
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Length {
            path: path.into(),
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::Format {
            path: path.into(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Reads an image file: returns the pixel matrix (one image per row) and the
/// image shape `(rows, cols)`.
pub fn read_idx_images(path: &Path) -> Result<(Array2<f64>, (usize, usize))> {
    let bytes = read_bytes(path)?;
    check_magic(&bytes, IMAGE_MAGIC, path)?;
    let n = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let expected = 16 + n * rows * cols;
    if bytes.len() != expected {
        return Err(Error::Length {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    let pixels: Vec<f64> = bytes[16..].iter().map(|&b| b as f64 / 255.0).collect();
    let images = Array2::from_shape_vec((n, rows * cols), pixels).expect("length checked above");
    Ok((images, (rows, cols)))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_bytes(path)?;
    check_magic(&bytes, LABEL_MAGIC, path)?;
    let n = be_u32(&bytes, 4, path)? as usize;
    let expected = 8 + n;
    if bytes.len() != expected {
        return Err(Error::Length {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..].to_vec())
}

/// Loads a matching pair of IDX image and label files.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledImages> {
    let (images, _) = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    LabeledImages::new(images, labels)
}

/// Writes `data` as IDX files with images of shape `rows × cols`.
///
/// Pixels are stored as `round(255 v)`, so values that are multiples of
/// 1/255 round-trip exactly.
pub fn write_idx(data: &LabeledImages, shape: (usize, usize), images_path: &Path, labels_path: &Path) -> Result<()> {
    let (rows, cols) = shape;
    if rows * cols != data.input_dim() {
        return Err(Error::Shape(format!(
            "image shape {rows}x{cols} does not match {} pixels",
            data.input_dim()
        )));
    }
    let n = data.len() as u32;
    let mut img = Vec::with_capacity(16 + data.images.len());
    for v in [IMAGE_MAGIC, n, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend(data.images.iter().map(|&v| (v * 255.0).round() as u8));
    std::fs::write(images_path, img).map_err(|e| Error::io(images_path, e))?;

    let mut lab = Vec::with_capacity(8 + data.len());
    lab.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lab.extend_from_slice(&n.to_be_bytes());
    lab.extend_from_slice(&data.labels);
    std::fs::write(labels_path, lab).map_err(|e| Error::io(labels_path, e))
}
