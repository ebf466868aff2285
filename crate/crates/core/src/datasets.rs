// SPDX-License-Identifier: Apache-2.0

//! Dataset ingestion and preprocessing: CSV tables, IDX image files, HOG
//! features, voltage-domain normalization and stratified splits.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::elm::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Default normalization limit (V).
pub const DEFAULT_LIMIT: f64 = 0.45;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const HOG_IMAGE_SIZE: usize = 28;
pub const HOG_CELL: usize = 4;
pub const HOG_BINS: usize = 9;
pub const HOG_LEN: usize = (HOG_IMAGE_SIZE / HOG_CELL) * (HOG_IMAGE_SIZE / HOG_CELL) * HOG_BINS;

/// Numeric records with 0-based class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Original label values, indexed by encoded label.
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn subset(&self, idx: &[usize]) -> RawDataset {
        RawDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvSchema {
    pub label: LabelColumn,
    /// `None` detects a header: the first row is a header when none of its
    /// cells parses as a number.
    pub has_header: Option<bool>,
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let has_header = schema
        .has_header
        .unwrap_or_else(|| records[0].iter().all(|c| parse_cell(c).is_none()));
    let header = if has_header { Some(records.remove(0)) } else { None };
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let width = header.as_ref().map_or(records[0].len(), Vec::len);
    if width < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "need at least one feature column and a label column".into(),
        });
    }
    let label_col = match &schema.label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: format!("label column {i} out of range for {width} columns"),
            })
        }
        LabelColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                message: format!("no column named '{name}'"),
            })?,
    };

    // Row numbers in errors are 1-based file lines.
    let first_line = if has_header { 2 } else { 1 };
    let mut features = Vec::with_capacity(records.len());
    let mut raw_labels = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        let row = r + first_line;
        if rec.len() != width {
            return Err(Error::Arity {
                path: path.to_path_buf(),
                row,
                expected: width,
                actual: rec.len(),
            });
        }
        let mut f = Vec::with_capacity(width - 1);
        for (c, cell) in rec.iter().enumerate() {
            if c == label_col {
                continue;
            }
            f.push(parse_cell(cell).ok_or_else(|| Error::NonNumeric {
                path: path.to_path_buf(),
                row,
                column: c,
                cell: cell.clone(),
            })?);
        }
        features.push(f);
        raw_labels.push(rec[label_col].clone());
    }

    let class_names = sorted_labels(&raw_labels);
    let labels = raw_labels
        .iter()
        .map(|l| class_names.iter().position(|c| c == l).expect("label in class set"))
        .collect();
    let feature_names = match header {
        Some(h) => h
            .into_iter()
            .enumerate()
            .filter(|&(c, _)| c != label_col)
            .map(|(_, n)| n)
            .collect(),
        None => (0..width)
            .filter(|&c| c != label_col)
            .map(|c| format!("f{c}"))
            .collect(),
    };
    Ok(RawDataset {
        features,
        labels,
        class_names,
        feature_names,
    })
}

/// Distinct labels, numerically ordered when every label is a number.
fn sorted_labels(raw: &[String]) -> Vec<String> {
    let unique: BTreeSet<&String> = raw.iter().collect();
    let mut out: Vec<String> = unique.into_iter().cloned().collect();
    if out.iter().all(|l| parse_cell(l).is_some()) {
        out.sort_by(|a, b| parse_cell(a).unwrap().total_cmp(&parse_cell(b).unwrap()));
    }
    out
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn idx_payload<'a>(
    path: &Path,
    bytes: &'a [u8],
    field: &'static str,
    magic: u32,
    header_len: usize,
) -> Result<&'a [u8]> {
    if bytes.len() < header_len {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: header_len,
            found: bytes.len(),
        });
    }
    let found = be_u32(bytes, 0);
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            field,
            expected: magic,
            found,
        });
    }
    Ok(&bytes[header_len..])
}

/// Images and labels read from an IDX pair.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxDataset {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
    /// Bytes consumed from the (decompressed) image file.
    pub image_bytes: usize,
}

impl IdxDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Pixel values as features, labels as classes `0..=max`.
    pub fn to_raw(&self) -> RawDataset {
        let k = self.labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        RawDataset {
            features: self
                .images
                .iter()
                .map(|im| im.iter().map(|&p| p as f64).collect())
                .collect(),
            labels: self.labels.iter().map(|&l| l as usize).collect(),
            class_names: (0..k).map(|c| c.to_string()).collect(),
            feature_names: (0..self.rows * self.cols).map(|p| format!("px{p}")).collect(),
        }
    }
}

/// Reads an IDX image/label pair; either file may be gzip-compressed.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<IdxDataset> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let ibytes = read_maybe_gz(ip)?;
    let lbytes = read_maybe_gz(lp)?;

    let ipay = idx_payload(ip, &ibytes, "images", IDX_IMAGES_MAGIC, 16)?;
    let (count, rows, cols) = (
        be_u32(&ibytes, 4) as usize,
        be_u32(&ibytes, 8) as usize,
        be_u32(&ibytes, 12) as usize,
    );
    let expected = count * rows * cols;
    if ipay.len() != expected {
        return Err(Error::Truncated {
            path: ip.to_path_buf(),
            expected: 16 + expected,
            found: ibytes.len(),
        });
    }

    let lpay = idx_payload(lp, &lbytes, "labels", IDX_LABELS_MAGIC, 8)?;
    let lcount = be_u32(&lbytes, 4) as usize;
    if lpay.len() != lcount {
        return Err(Error::Truncated {
            path: lp.to_path_buf(),
            expected: 8 + lcount,
            found: lbytes.len(),
        });
    }
    if lcount != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: lcount,
        });
    }
    let px = rows * cols;
    Ok(IdxDataset {
        rows,
        cols,
        images: (0..count).map(|i| ipay[i * px..(i + 1) * px].to_vec()).collect(),
        labels: lpay.to_vec(),
        image_bytes: 16 + expected,
    })
}

/// Histogram of oriented gradients for a 28x28 grayscale image (row-major).
///
/// Gradients are centered differences with clamped borders; orientations are
/// unsigned over [0, 180) and hard-assigned to 20-degree bins weighted by
/// magnitude. Each 4x4 cell histogram is L2-normalized (all-zero cells stay
/// zero). Output layout is cell-row, cell-column, bin.
pub fn hog(image: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows != HOG_IMAGE_SIZE || cols != HOG_IMAGE_SIZE || image.len() != rows * cols {
        return Err(Error::ImageSize {
            expected_rows: HOG_IMAGE_SIZE,
            expected_cols: HOG_IMAGE_SIZE,
            rows,
            cols: if image.len() == rows * cols {
                cols
            } else {
                image.len() / rows.max(1)
            },
        });
    }
    let at = |y: usize, x: usize| image[y * cols + x];
    let cells = rows / HOG_CELL;
    let mut out = vec![0.0; HOG_LEN];
    for y in 0..rows {
        for x in 0..cols {
            let gx = at(y, (x + 1).min(cols - 1)) - at(y, x.saturating_sub(1));
            let gy = at((y + 1).min(rows - 1), x) - at(y.saturating_sub(1), x);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut deg = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            if deg >= 180.0 {
                deg = 0.0;
            }
            let bin = ((deg / (180.0 / HOG_BINS as f64)) as usize).min(HOG_BINS - 1);
            let cell = (y / HOG_CELL) * cells + x / HOG_CELL;
            out[cell * HOG_BINS + bin] += mag;
        }
    }
    for h in out.chunks_mut(HOG_BINS) {
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            h.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(out)
}

/// HOG features for every image.
pub fn hog_dataset(idx: &IdxDataset) -> Result<RawDataset> {
    use rayon::prelude::*;
    let features = idx
        .images
        .par_iter()
        .map(|im| {
            let px: Vec<f64> = im.iter().map(|&p| p as f64).collect();
            hog(&px, idx.rows, idx.cols)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut raw = idx.to_raw();
    raw.features = features;
    raw.feature_names = (0..HOG_LEN).map(|i| format!("hog{i}")).collect();
    Ok(raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Train-split `[min, max]` onto `[-limit, +limit]`.
    #[default]
    MinMax,
    /// Train-split mean onto 0, largest absolute deviation onto `limit`.
    /// Suits sparse features (HOG), where min-max leaves every feature
    /// offset to one side.
    MeanCentered,
}

/// Per-feature affine map fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub kind: Normalization,
    pub limit: f64,
    center: Vec<f64>,
    half_range: Vec<f64>,
    /// Features that were constant on the fitting data; they map to 0 V.
    pub constant_features: Vec<usize>,
}

impl Normalizer {
    pub fn fit(features: &[Vec<f64>], kind: Normalization, limit: f64) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(limit > 0.0 && limit.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "normalization limit must be positive, got {limit}"
            )));
        }
        let n = features[0].len();
        let mut center = vec![0.0; n];
        let mut half_range = vec![0.0; n];
        let mut constant_features = Vec::new();
        for f in 0..n {
            let col = features.iter().map(|r| r[f]);
            let (lo, hi) = col
                .clone()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let (c, h) = match kind {
                Normalization::MinMax => ((lo + hi) / 2.0, (hi - lo) / 2.0),
                Normalization::MeanCentered => {
                    let mean = col.sum::<f64>() / features.len() as f64;
                    (mean, (hi - mean).max(mean - lo))
                }
            };
            if !(h > 0.0) {
                constant_features.push(f);
            }
            center[f] = c;
            half_range[f] = h;
        }
        Ok(Normalizer {
            kind,
            limit,
            center,
            half_range,
            constant_features,
        })
    }

    pub fn n_features(&self) -> usize {
        self.center.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.center.len() {
            return Err(Error::LengthMismatch {
                expected: self.center.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.center.iter().zip(&self.half_range))
            .map(|(&v, (&c, &h))| {
                if h > 0.0 {
                    ((v - c) / h * self.limit).clamp(-self.limit, self.limit)
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn transform_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.iter().map(|x| self.transform(x)).collect()
    }
}

/// Normalized train features, test features, and the fitted normalizer.
pub type Normalized = (Vec<Vec<f64>>, Vec<Vec<f64>>, Normalizer);

/// Min-max normalization of a train/test pair with train statistics.
pub fn normalize(train: &[Vec<f64>], test: &[Vec<f64>], limit: f64) -> Result<Normalized> {
    let norm = Normalizer::fit(train, Normalization::MinMax, limit)?;
    Ok((norm.transform_all(train)?, norm.transform_all(test)?, norm))
}

/// Per-class seeded shuffle, first `round(fraction * class_size)` of each
/// class to train. Returned index lists are sorted.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie in [0, 1], got {train_fraction}"
        )));
    }
    let mut rng = seed::rng(seed, Stream::Split);
    let k = labels.iter().max().unwrap() + 1;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..k {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        let n = (idx.len() as f64 * train_fraction).round() as usize;
        train.extend_from_slice(&idx[..n]);
        test.extend_from_slice(&idx[n..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// A normalized train/test pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedSplit {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub normalizer: Normalizer,
}

/// Normalizes a train/test pair with statistics from `train`.
pub fn prepare(train: &RawDataset, test: &RawDataset, kind: Normalization, limit: f64) -> Result<PreparedSplit> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = train.class_count().max(test.class_count());
    let normalizer = Normalizer::fit(&train.features, kind, limit)?;
    let build = |raw: &RawDataset| -> Result<LabeledDataset> {
        LabeledDataset::new(normalizer.transform_all(&raw.features)?, raw.labels.clone(), k)
    };
    Ok(PreparedSplit {
        train: build(train)?,
        test: build(test)?,
        normalizer,
    })
}

/// Stratified split followed by [`prepare`].
pub fn split_and_prepare(
    raw: &RawDataset,
    train_fraction: f64,
    seed: u64,
    kind: Normalization,
    limit: f64,
) -> Result<PreparedSplit> {
    let (tr, te) = stratified_split(&raw.labels, train_fraction, seed)?;
    prepare(&raw.subset(&tr), &raw.subset(&te), kind, limit)
}

/// Isotropic Gaussian clusters, `per_class` points around each center.
pub fn gaussian_blobs(centers: &[Vec<f64>], sigma: f64, per_class: usize, seed: u64) -> Result<RawDataset> {
    if centers.is_empty() || per_class == 0 {
        return Err(Error::EmptyDataset);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = seed::rng(seed, Stream::Synthetic);
    let dim = centers[0].len();
    let mut features = Vec::with_capacity(centers.len() * per_class);
    let mut labels = Vec::with_capacity(centers.len() * per_class);
    for (c, center) in centers.iter().enumerate() {
        if center.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: center.len(),
            });
        }
        for _ in 0..per_class {
            features.push(center.iter().map(|&m| m + normal.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    Ok(RawDataset {
        features,
        labels,
        class_names: (0..centers.len()).map(|c| c.to_string()).collect(),
        feature_names: (0..dim).map(|d| format!("x{d}")).collect(),
    })
}
