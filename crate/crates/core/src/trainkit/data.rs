//! MNIST in the IDX format (big-endian headers, optionally gzip-compressed).

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::scalar::Scalar;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Flattened images (one row per sample) and class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub images: Matrix<T>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(images: Matrix<T>, labels: Vec<usize>) -> Result<Self> {
        if images.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} images but {} labels",
                images.rows(),
                labels.len()
            )));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> usize {
        self.images.cols()
    }

    /// The first `n` samples (or all, if fewer).
    pub fn head(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            images: self.images.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mnist<T> {
    pub train: Dataset<T>,
    pub test: Dataset<T>,
}

/// Loads the four standard files from `dir`. Each may also be stored with a
/// `.gz` suffix. Pixels are scaled to `[0, 1]`.
pub fn load_mnist<T: Scalar>(dir: impl AsRef<Path>) -> Result<Mnist<T>> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::format(dir, "dataset directory does not exist"));
    }
    let split = |images: &str, labels: &str| -> Result<Dataset<T>> {
        let (ipath, ibytes) = read_maybe_gz(dir, images)?;
        let (lpath, lbytes) = read_maybe_gz(dir, labels)?;
        let images = parse_idx_images(&ibytes).map_err(|r| Error::format(&ipath, r))?;
        let labels = parse_idx_labels(&lbytes).map_err(|r| Error::format(&lpath, r))?;
        Dataset::new(images, labels).map_err(|e| Error::format(dir, e.to_string()))
    };
    Ok(Mnist {
        train: split("train-images-idx3-ubyte", "train-labels-idx1-ubyte")?,
        test: split("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?,
    })
}

fn read_maybe_gz(dir: &Path, stem: &str) -> Result<(PathBuf, Vec<u8>)> {
    let plain = dir.join(stem);
    if plain.is_file() {
        let bytes = fs::read(&plain).map_err(|e| Error::io(&plain, e))?;
        return Ok((plain, bytes));
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.is_file() {
        let file = fs::File::open(&gz).map_err(|e| Error::io(&gz, e))?;
        let mut bytes = Vec::new();
        GzDecoder::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::format(&gz, format!("gzip: {e}")))?;
        return Ok((gz, bytes));
    }
    Err(Error::format(plain, "missing IDX file (also tried .gz)"))
}

fn header(bytes: &[u8], magic: u32, ndims: usize) -> std::result::Result<Vec<usize>, String> {
    let need = 4 + 4 * ndims;
    if bytes.len() < need {
        return Err(format!("truncated header: {} bytes", bytes.len()));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let found = word(0);
    if found != magic {
        return Err(format!(
            "bad magic number {found:#010x}, expected {magic:#010x}"
        ));
    }
    Ok((1..=ndims).map(|i| word(i) as usize).collect())
}

/// Parses an IDX3 image file into an `n × (rows·cols)` matrix in `[0, 1]`.
pub fn parse_idx_images<T: Scalar>(bytes: &[u8]) -> std::result::Result<Matrix<T>, String> {
    let dims = header(bytes, IMAGES_MAGIC, 3)?;
    let (n, pixels) = (dims[0], dims[1] * dims[2]);
    let body = &bytes[16..];
    if body.len() != n * pixels {
        return Err(format!(
            "expected {} pixel bytes for {n} images, found {}",
            n * pixels,
            body.len()
        ));
    }
    let table: Vec<T> = (0..=255u32).map(|p| T::lit(p as f64 / 255.0)).collect();
    let data = body.iter().map(|&p| table[p as usize]).collect();
    Matrix::from_vec(n, pixels, data).map_err(|e| e.to_string())
}

pub fn parse_idx_labels(bytes: &[u8]) -> std::result::Result<Vec<usize>, String> {
    let dims = header(bytes, LABELS_MAGIC, 1)?;
    let body = &bytes[8..];
    if body.len() != dims[0] {
        return Err(format!("expected {} labels, found {}", dims[0], body.len()));
    }
    Ok(body.iter().map(|&b| b as usize).collect())
}
