// SPDX-License-Identifier: Apache-2.0

//! Per-dataset defaults for the bundled benchmarks.
//!
//! The sign rule moves every output weight by a fixed step per sample, so the
//! step size (`alpha`), hidden-layer gain and hidden feedback resistance are
//! what separate a working classifier from one pinned at the majority class.
//! Large fan-in (HOG features) needs a small hidden `R_f` to keep hidden
//! pre-activations off the rails.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::crossbar::Topology;
use crate::datasets::{self, CsvSchema, Normalization, PreparedSplit};
use crate::elm::{ElmConfig, FitConfig, SIGNAL_SWING};
use crate::error::{Error, Result};
use crate::learning::TrainingConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// One CSV table, split 70/30 per seed.
    Csv { file: String },
    /// Fixed IDX train/test pairs, HOG features.
    Mnist {
        train_images: String,
        train_labels: String,
        test_images: String,
        test_labels: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPreset {
    pub name: String,
    pub source: Source,
    pub eta: usize,
    pub hidden_r_f: f64,
    /// Logistic gain of the hidden activation.
    pub gain: f64,
    pub alpha: f64,
    pub alpha_decay: f64,
    pub epochs: usize,
    pub patience: usize,
    pub normalization: Normalization,
    pub balance_columns: bool,
    pub train_fraction: f64,
    pub input_limit: f64,
}

pub const NAMES: [&str; 4] = ["iris", "diabetes", "australian", "mnist"];

fn uci(name: &str, eta: usize, alpha: f64) -> DatasetPreset {
    DatasetPreset {
        name: name.into(),
        source: Source::Csv {
            file: format!("{name}.csv"),
        },
        eta,
        hidden_r_f: 500e3,
        gain: 6.0,
        alpha,
        alpha_decay: 1.0,
        epochs: 300,
        patience: 50,
        normalization: Normalization::MinMax,
        balance_columns: true,
        train_fraction: 0.7,
        input_limit: SIGNAL_SWING,
    }
}

pub fn preset(name: &str) -> Option<DatasetPreset> {
    Some(match name {
        "iris" => uci("iris", 20, 0.003),
        "diabetes" => uci("diabetes", 65, 0.002),
        "australian" => uci("australian", 40, 0.002),
        "mnist" => DatasetPreset {
            name: "mnist".into(),
            source: Source::Mnist {
                train_images: "mnist-train-10k-images-idx3-ubyte.gz".into(),
                train_labels: "mnist-train-10k-labels-idx1-ubyte.gz".into(),
                test_images: "mnist-test-2k-images-idx3-ubyte.gz".into(),
                test_labels: "mnist-test-2k-labels-idx1-ubyte.gz".into(),
            },
            eta: 180,
            hidden_r_f: 20e3,
            gain: 20.0,
            alpha: 1e-4,
            alpha_decay: 0.95,
            epochs: 40,
            patience: 50,
            normalization: Normalization::MeanCentered,
            balance_columns: true,
            train_fraction: 1.0,
            input_limit: SIGNAL_SWING,
        },
        _ => return None,
    })
}

impl DatasetPreset {
    /// Files this preset reads, resolved under `data_dir`.
    pub fn files(&self, data_dir: &Path) -> Vec<PathBuf> {
        match &self.source {
            Source::Csv { file } => vec![data_dir.join(file)],
            Source::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => [train_images, train_labels, test_images, test_labels]
                .iter()
                .map(|f| data_dir.join(f))
                .collect(),
        }
    }

    /// Network configuration for this preset; everything not tuned per
    /// dataset keeps its default.
    pub fn elm_config(&self, topology: Topology) -> ElmConfig {
        let mut cfg = ElmConfig {
            eta: self.eta,
            topology,
            ..ElmConfig::default()
        };
        cfg.hidden_crossbar.r_f = self.hidden_r_f;
        cfg.activation.gain = self.gain;
        cfg
    }

    pub fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            epochs: self.epochs,
            patience: Some(self.patience),
            training: TrainingConfig {
                alpha: Some(self.alpha),
                balance_columns: self.balance_columns,
                ..TrainingConfig::default()
            },
            alpha_decay: self.alpha_decay,
            seed,
        }
    }

    /// Loads and normalizes the data. CSV sources are split with
    /// `split_seed`; MNIST uses its fixed train/test files.
    pub fn load(&self, data_dir: &Path, split_seed: u64) -> Result<PreparedSplit> {
        for f in self.files(data_dir) {
            if !f.exists() {
                return Err(Error::io(
                    &f,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
                ));
            }
        }
        match &self.source {
            Source::Csv { .. } => {
                let raw = datasets::load_csv(&self.files(data_dir)[0], &CsvSchema::default())?;
                datasets::split_and_prepare(
                    &raw,
                    self.train_fraction,
                    split_seed,
                    self.normalization,
                    self.input_limit,
                )
            }
            Source::Mnist { .. } => {
                let f = self.files(data_dir);
                let train = datasets::hog_dataset(&datasets::load_idx(&f[0], &f[1])?)?;
                let test = datasets::hog_dataset(&datasets::load_idx(&f[2], &f[3])?)?;
                datasets::prepare(&train, &test, self.normalization, self.input_limit)
            }
        }
    }
}
