// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

use crate::crossbar::DeviceArray;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite current {0} A")]
    NonFiniteCurrent(f64),

    #[error("invalid integration step: dt = {dt} s, duration = {duration} s")]
    InvalidTimeStep { dt: f64, duration: f64 },

    #[error("index ({row}, {col}) out of range for a {rows}x{cols} layer")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("input {index} is {value} V, above the {limit} V input limit")]
    InputAboveLimit { index: usize, value: f64, limit: f64 },

    #[error("weight {value} at ({row}, {col}) is not representable; achievable range is [{min}, {max}]")]
    Unrepresentable {
        row: usize,
        col: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("layer has no trainable devices")]
    NothingToTrain,

    #[error("training current {i_train} A does not cross the device threshold {i_off} A")]
    SubThresholdTraining { i_train: f64, i_off: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: row {row} has {actual} columns, expected {expected}")]
    Arity {
        path: PathBuf,
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("{path}: row {row}, column {column}: '{cell}' is not numeric")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: bad IDX magic number in {field}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: PathBuf,
        field: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated IDX payload: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("image must be {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ImageSize {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("perturbed device at {array:?} index {index} has LRS {lrs} >= HRS {hrs}")]
    InvalidPerturbation {
        array: DeviceArray,
        index: usize,
        lrs: f64,
        hrs: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
