// SPDX-License-Identifier: Apache-2.0

//! Behavioral simulation of threshold-current memristive crossbar layers
//! trained in situ with a sign-based delta rule.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Crossbar loops index rows and columns of several arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod crossbar;
pub mod datasets;
pub mod device;
pub mod elm;
pub mod error;
pub mod learning;
pub mod presets;
pub mod seed;

pub use crossbar::{CrossbarConfig, CrossbarLayer, DeviceArray, Topology};
pub use datasets::{LabelColumn, Normalization, RawDataset};
pub use device::{DeviceConfig, MemristorDevice, MemristorParams};
pub use elm::{ElmConfig, ElmNetwork, FitConfig, LabeledDataset};
pub use error::{Error, Result};
pub use learning::{TrainingConfig, TrainingEngine};
