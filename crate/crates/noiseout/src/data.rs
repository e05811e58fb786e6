//! Dataset loading and generation: MNIST in its original IDX containers, a
//! jittered XOR task for the tiny correlation experiments, seeded splits and
//! seeded minibatch iteration.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use std::path::Path;

const IMAGES_MAGIC: u32 = 2051;
const LABELS_MAGIC: u32 = 2049;

/// Features in [0,1], one row per sample; targets one-hot (or a single 0/1
/// column for binary tasks).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
    pub name: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }
}

/// Parse the MNIST image/label file pair.
///
/// IDX layout: big-endian u32 magic (2051 for a rank-3 image tensor, 2049 for
/// a rank-1 label vector), big-endian u32 dimension sizes, then the payload
/// as unsigned bytes. Pixels land in [0,1] by dividing by 255; labels become
/// one-hot rows of width 10.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;

    let (n_images, pixels) = parse_images(&images, images_path)?;
    let (n_labels, raw_labels) = parse_labels(&labels, labels_path)?;
    if n_images != n_labels {
        return Err(Error::RowCountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }

    let width = pixels.len() / n_images.max(1);
    let x = Matrix::from_vec(
        n_images,
        width,
        pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )?;
    let mut y = Matrix::zeros(n_labels, 10);
    for (row, &label) in raw_labels.iter().enumerate() {
        if label > 9 {
            return Err(Error::InvalidLabel { row, value: label });
        }
        y.set(row, usize::from(label), 1.0);
    }
    Ok(Dataset {
        x,
        y,
        name: "mnist".into(),
    })
}

fn parse_images<'a>(bytes: &'a [u8], path: &Path) -> Result<(usize, &'a [u8])> {
    let header = read_header(bytes, path, IMAGES_MAGIC, 3)?;
    let (n, rows, cols) = (header[0], header[1], header[2]);
    let expected = n * rows * cols;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            found: payload.len(),
        });
    }
    Ok((n, payload))
}

fn parse_labels<'a>(bytes: &'a [u8], path: &Path) -> Result<(usize, &'a [u8])> {
    let header = read_header(bytes, path, LABELS_MAGIC, 1)?;
    let n = header[0];
    let payload = &bytes[8..];
    if payload.len() != n {
        return Err(Error::PayloadSize {
            expected: n,
            found: payload.len(),
        });
    }
    Ok((n, payload))
}

/// Magic word plus `dims` big-endian u32 sizes.
fn read_header(bytes: &[u8], path: &Path, magic: u32, dims: usize) -> Result<Vec<usize>> {
    let header_len = 4 * (1 + dims);
    if bytes.len() < header_len {
        return Err(Error::PayloadSize {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes"));
    if word(0) != magic {
        return Err(Error::IdxMagic {
            path: path.to_path_buf(),
            expected: magic,
            found: word(0),
        });
    }
    Ok((1..=dims).map(|i| word(i) as usize).collect())
}

/// Two-input XOR with Gaussian jitter around the four corners, labels in
/// {0,1}. Points cycle through the corners, so classes stay balanced.
pub fn synthetic_xor(n: usize, jitter_sd: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::TooFewRows {
            required: 4,
            got: n,
        });
    }
    if !jitter_sd.is_finite() || jitter_sd < 0.0 {
        return Err(Error::InvalidParam(format!(
            "jitter_sd {jitter_sd} must be finite and non-negative"
        )));
    }
    const CORNERS: [(f64, f64); 4] = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let jitter = if jitter_sd > 0.0 {
        Some(Normal::new(0.0, jitter_sd).expect("validated above"))
    } else {
        None
    };
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy) = CORNERS[i % 4];
        let (dx, dy) = match &jitter {
            Some(d) => (d.sample(&mut rng), d.sample(&mut rng)),
            None => (0.0, 0.0),
        };
        x.push((cx + dx).clamp(0.0, 1.0));
        x.push((cy + dy).clamp(0.0, 1.0));
        y.push(if cx != cy { 1.0 } else { 0.0 });
    }
    Ok(Dataset {
        x: Matrix::from_vec(n, 2, x)?,
        y: Matrix::from_vec(n, 1, y)?,
        name: "xor".into(),
    })
}

/// Seeded shuffle then a contiguous cut. Every row lands in exactly one side.
pub fn split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidParam(format!(
            "train_frac {train_frac} must be strictly between 0 and 1"
        )));
    }
    let n = ds.len();
    if n < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let cut = ((n as f64 * train_frac).floor() as usize).clamp(1, n - 1);
    let take = |idx: &[usize]| -> Result<Dataset> {
        Ok(Dataset {
            x: ds.x.select_rows(idx)?,
            y: ds.y.select_rows(idx)?,
            name: ds.name.clone(),
        })
    };
    Ok((take(&order[..cut])?, take(&order[cut..])?))
}

/// The row order used for epoch number `epoch`: a full shuffle seeded by
/// `seed ^ epoch`.
pub(crate) fn shuffled_indices(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed ^ epoch));
    order
}

/// Minibatches for one epoch: a seeded shuffle chunked into `batch_size`
/// rows, the last batch possibly short. Batches are materialized lazily.
pub fn batches(
    ds: &Dataset,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> impl Iterator<Item = (Matrix, Matrix)> + '_ {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let order = shuffled_indices(ds.len(), seed, epoch);
    (0..ds.len().div_ceil(batch_size)).map(move |b| {
        let chunk = &order[b * batch_size..ds.len().min((b + 1) * batch_size)];
        (
            ds.x.select_rows(chunk).expect("indices in range"),
            ds.y.select_rows(chunk).expect("indices in range"),
        )
    })
}
