// SPDX-License-Identifier: Apache-2.0

//! Extreme learning machine on two crossbar layers.
//!
//! The hidden layer is programmed once with uniform random weights and then
//! frozen; only the output layer is trained, in situ, with the sign rule.
//! Both layers carry one extra input row held at the bias voltage.

use nalgebra::DMatrix;
use rand::distributions::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossbar::{CrossbarConfig, CrossbarLayer, LayerSnapshot, Topology};
use crate::device::{DeviceConfig, MemristorParams};
use crate::error::{Error, Result};
use crate::learning::{EpochReport, TrainingConfig, TrainingEngine};
use crate::seed::{self, Stream};

/// Class-labelled feature vectors already mapped into volts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_count: usize,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        if class_count == 0 {
            return Err(Error::InvalidConfig("class count must be at least 1".into()));
        }
        if let Some(first) = features.first() {
            if let Some(bad) = features.iter().find(|f| f.len() != first.len()) {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    actual: bad.len(),
                });
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidConfig(format!(
                "label {l} is not below the class count {class_count}"
            )));
        }
        Ok(LabeledDataset {
            features,
            labels,
            class_count,
        })
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Same features with replaced labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        LabeledDataset::new(self.features.clone(), labels, self.class_count)
    }
}

/// `f(v) = swing * (2 / (1 + exp(-gain * v)) - 1)`: a logistic rescaled to
/// `(-swing, swing)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub swing: f64,
    pub gain: f64,
}

impl Activation {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        self.swing * (2.0 / (1.0 + (-self.gain * v).exp()) - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElmConfig {
    pub eta: usize,
    pub topology: Topology,
    /// Hidden-layer topology; defaults to `topology`.
    pub hidden_topology: Option<Topology>,
    pub hidden_crossbar: CrossbarConfig,
    pub output_crossbar: CrossbarConfig,
    pub device: DeviceConfig,
    /// Voltage on the bias row of both layers.
    pub bias_v: f64,
    pub activation: Activation,
    /// Magnitude of one-hot targets (V).
    pub target_v: f64,
}

/// Largest signal amplitude that keeps every device under the 3 uA read
/// ceiling even when LRS drops 10% (3 uA * 90 kOhm).
pub const SIGNAL_SWING: f64 = 0.27;

impl Default for ElmConfig {
    fn default() -> Self {
        ElmConfig {
            eta: 20,
            topology: Topology::OneCrossbarSemi,
            hidden_topology: None,
            hidden_crossbar: CrossbarConfig::default(),
            output_crossbar: CrossbarConfig::default(),
            device: DeviceConfig::default(),
            bias_v: SIGNAL_SWING,
            activation: Activation {
                swing: SIGNAL_SWING,
                gain: 6.0,
            },
            target_v: 0.3,
        }
    }
}

impl ElmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta == 0 {
            return Err(Error::InvalidConfig("eta must be at least 1".into()));
        }
        self.hidden_crossbar.validate()?;
        self.output_crossbar.validate()?;
        for (name, v, limit) in [
            (
                "bias_v",
                self.bias_v,
                self.hidden_crossbar.input_limit.min(self.output_crossbar.input_limit),
            ),
            (
                "activation swing",
                self.activation.swing,
                self.output_crossbar.input_limit,
            ),
        ] {
            if !(v > 0.0 && v <= limit) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must lie in (0, {limit}]")));
            }
        }
        if !(self.activation.gain > 0.0 && self.activation.gain.is_finite()) {
            return Err(Error::InvalidConfig("activation gain must be positive".into()));
        }
        if !(self.target_v > 0.0) {
            return Err(Error::InvalidConfig("target_v must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub epochs: usize,
    /// Stop after this many epochs without a new best training accuracy and
    /// restore the best output layer. `None` runs every epoch.
    pub patience: Option<usize>,
    pub training: TrainingConfig,
    /// Per-epoch multiplier on `training.alpha`.
    pub alpha_decay: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 500,
            patience: Some(50),
            training: TrainingConfig::default(),
            alpha_decay: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_accuracy: f64,
    pub mean_abs_error: f64,
    pub cycles: u64,
    pub pulses: u64,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_train_accuracy: f64,
    #[serde(skip)]
    pub reports: Vec<EpochReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElmNetwork {
    config: ElmConfig,
    n_inputs: usize,
    classes: usize,
    seed: u64,
    hidden: CrossbarLayer,
    output: CrossbarLayer,
}

/// One-hot targets: `+target_v` for the labelled class, `-target_v`
/// elsewhere.
pub fn one_hot_targets(labels: &[usize], k: usize, target_v: f64) -> Vec<Vec<f64>> {
    labels
        .iter()
        .map(|&l| (0..k).map(|j| if j == l { target_v } else { -target_v }).collect())
        .collect()
}

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) },
        )
        .0
}

impl ElmNetwork {
    /// Default configuration with the given dimensions and topology.
    pub fn init_random(seed: u64, n: usize, eta: usize, k: usize, topology: Topology) -> Result<Self> {
        let config = ElmConfig {
            eta,
            topology,
            ..ElmConfig::default()
        };
        ElmNetwork::new(&config, n, k, seed)
    }

    pub fn new(config: &ElmConfig, n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidConfig(format!(
                "network needs at least one input and one class, got n = {n}, k = {k}"
            )));
        }
        config.validate()?;
        let params = MemristorParams::calibrated(&config.device)?;
        let eta = config.eta;
        let mut hidden = CrossbarLayer::new(
            n + 1,
            eta,
            config.hidden_topology.unwrap_or(config.topology),
            config.hidden_crossbar,
            params,
        )?;
        let mut rng = seed::rng(seed, Stream::HiddenInit);
        let unit = Uniform::new_inclusive(0.0, 1.0);
        let mut beta = Vec::with_capacity((n + 1) * eta);
        for i in 0..=n {
            for j in 0..eta {
                let (lo, hi) = hidden.weight_range(i, j)?;
                beta.push(lo + (hi - lo) * unit.sample(&mut rng));
            }
        }
        hidden.program_weights(&beta)?;
        hidden.freeze();

        let output = CrossbarLayer::new(eta + 1, k, config.topology, config.output_crossbar, params)?;
        Ok(ElmNetwork {
            config: *config,
            n_inputs: n,
            classes: k,
            seed,
            hidden,
            output,
        })
    }

    pub fn config(&self) -> &ElmConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn eta(&self) -> usize {
        self.config.eta
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn hidden(&self) -> &CrossbarLayer {
        &self.hidden
    }

    pub fn output(&self) -> &CrossbarLayer {
        &self.output
    }

    /// Mutable layers, for device-level experiments (variation studies).
    pub fn layers_mut(&mut self) -> (&mut CrossbarLayer, &mut CrossbarLayer) {
        (&mut self.hidden, &mut self.output)
    }

    /// `h = f(read(hidden, x ++ [bias])) ++ [bias]`: the output-layer input.
    pub fn hidden_activations(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs {
            return Err(Error::LengthMismatch {
                expected: self.n_inputs,
                actual: x.len(),
            });
        }
        let mut input = Vec::with_capacity(x.len() + 1);
        input.extend_from_slice(x);
        input.push(self.config.bias_v);
        let pre = self.hidden.read(&input)?.output;
        let mut h: Vec<f64> = pre.into_iter().map(|v| self.config.activation.apply(v)).collect();
        h.push(self.config.bias_v);
        Ok(h)
    }

    /// Returns (hidden activations without the bias entry, analog outputs).
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut h = self.hidden_activations(x)?;
        let t = self.output.read(&h)?.output;
        h.pop();
        Ok((h, t))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?.1))
    }

    /// Output-layer inputs for every sample (hidden layer is fixed, so these
    /// are computed once per fit).
    pub fn hidden_matrix(&self, data: &LabeledDataset) -> Result<Vec<Vec<f64>>> {
        data.features.par_iter().map(|x| self.hidden_activations(x)).collect()
    }

    fn accuracy_on(&self, h: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let correct = h
            .par_iter()
            .zip(labels)
            .map(|(hi, &l)| Ok((argmax(&self.output.read(hi)?.output) == l) as usize))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        Ok(correct as f64 / labels.len() as f64)
    }

    fn check_dataset(&self, data: &LabeledDataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.n_features() != self.n_inputs {
            return Err(Error::LengthMismatch {
                expected: self.n_inputs,
                actual: data.n_features(),
            });
        }
        if data.class_count > self.classes {
            return Err(Error::InvalidConfig(format!(
                "dataset has {} classes, network has {}",
                data.class_count, self.classes
            )));
        }
        Ok(())
    }

    /// Fraction of samples whose largest output matches the label.
    pub fn evaluate(&self, data: &LabeledDataset) -> Result<f64> {
        self.check_dataset(data)?;
        let h = self.hidden_matrix(data)?;
        self.accuracy_on(&h, &data.labels)
    }

    /// Trains the output layer in situ. The hidden layer is never touched.
    pub fn fit(&mut self, data: &LabeledDataset, cfg: &FitConfig) -> Result<FitHistory> {
        if cfg.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(cfg.alpha_decay > 0.0 && cfg.alpha_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_decay must lie in (0, 1], got {}",
                cfg.alpha_decay
            )));
        }
        self.check_dataset(data)?;
        cfg.training.validate(&self.output.plus(0, 0).params)?;

        let h = self.hidden_matrix(data)?;
        let targets = one_hot_targets(&data.labels, self.classes, self.config.target_v);
        let mut engine = TrainingEngine::new(cfg.training, cfg.seed);

        let mut history = FitHistory {
            epochs: Vec::new(),
            best_epoch: 0,
            best_train_accuracy: f64::NEG_INFINITY,
            reports: Vec::new(),
        };
        let mut best_output = self.output.clone();
        let mut alpha = cfg.training.alpha;
        for epoch in 0..cfg.epochs {
            engine.set_alpha(alpha);
            let report = engine.train_epoch(&mut self.output, &h, &targets)?;
            let acc = self.accuracy_on(&h, &data.labels)?;
            history.epochs.push(EpochRecord {
                epoch,
                train_accuracy: acc,
                mean_abs_error: report.mean_abs_error(),
                cycles: report.cycles,
                pulses: report.pulses,
                alpha,
            });
            history.reports.push(report);
            if acc > history.best_train_accuracy {
                history.best_train_accuracy = acc;
                history.best_epoch = epoch;
                best_output = self.output.clone();
            }
            if let Some(p) = cfg.patience {
                if epoch - history.best_epoch >= p {
                    break;
                }
            }
            alpha = alpha.map(|a| a * cfg.alpha_decay);
        }
        if cfg.patience.is_some() {
            self.output = best_output;
        }
        Ok(history)
    }

    /// Network whose hidden neuron `j` is this network's neuron `perm[j]`.
    pub fn permute_hidden(&self, perm: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        out.hidden = self.hidden.permute_columns(perm)?;
        let mut rows: Vec<usize> = perm.to_vec();
        rows.push(self.config.eta); // bias row stays last
        out.output = self.output.permute_rows(&rows)?;
        Ok(out)
    }

    pub fn to_snapshot(&self) -> ElmSnapshot {
        ElmSnapshot {
            seed: self.seed,
            n_inputs: self.n_inputs,
            eta: self.config.eta,
            classes: self.classes,
            bias_v: self.config.bias_v,
            target_v: self.config.target_v,
            hidden_activation: ActivationTag {
                kind: "scaled-logistic".into(),
                swing: self.config.activation.swing,
                gain: self.config.activation.gain,
            },
            output_activation: "identity-train-argmax-classify".into(),
            device: self.config.device,
            hidden: self.hidden.to_snapshot(),
            output: self.output.to_snapshot(),
        }
    }

    pub fn from_snapshot(s: &ElmSnapshot) -> Result<Self> {
        let hidden = CrossbarLayer::from_snapshot(&s.hidden)?;
        let output = CrossbarLayer::from_snapshot(&s.output)?;
        if hidden.rows() != s.n_inputs + 1
            || hidden.cols() != s.eta
            || output.rows() != s.eta + 1
            || output.cols() != s.classes
        {
            return Err(Error::InvalidConfig(
                "snapshot layer shapes disagree with metadata".into(),
            ));
        }
        let config = ElmConfig {
            eta: s.eta,
            topology: output.topology(),
            hidden_topology: (hidden.topology() != output.topology()).then(|| hidden.topology()),
            hidden_crossbar: *hidden.config(),
            output_crossbar: *output.config(),
            device: s.device,
            bias_v: s.bias_v,
            activation: Activation {
                swing: s.hidden_activation.swing,
                gain: s.hidden_activation.gain,
            },
            target_v: s.target_v,
        };
        config.validate()?;
        Ok(ElmNetwork {
            config,
            n_inputs: s.n_inputs,
            classes: s.classes,
            seed: s.seed,
            hidden,
            output,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_snapshot())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        ElmNetwork::from_snapshot(&serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTag {
    pub kind: String,
    pub swing: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmSnapshot {
    pub seed: u64,
    pub n_inputs: usize,
    pub eta: usize,
    pub classes: usize,
    pub bias_v: f64,
    pub target_v: f64,
    pub hidden_activation: ActivationTag,
    pub output_activation: String,
    pub device: DeviceConfig,
    pub hidden: LayerSnapshot,
    pub output: LayerSnapshot,
}

/// Least-squares output weights `beta = pinv(H) T`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// `eta x k`, row-major rows.
    pub beta: Vec<Vec<f64>>,
    pub rank: usize,
    /// Set when `H` lacks full column rank; `beta` is then the minimum-norm
    /// solution.
    pub rank_deficient: bool,
}

impl OracleSolution {
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let k = self.beta.first().map_or(0, Vec::len);
        (0..k)
            .map(|j| h.iter().zip(&self.beta).map(|(hi, row)| hi * row[j]).sum())
            .collect()
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::LengthMismatch {
            expected: c,
            actual: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Software reference for the output weights, through the SVD.
pub fn normal_equation_oracle(h: &[Vec<f64>], t: &[Vec<f64>]) -> Result<OracleSolution> {
    let hm = to_matrix(h)?;
    let tm = to_matrix(t)?;
    if hm.nrows() != tm.nrows() {
        return Err(Error::LengthMismatch {
            expected: hm.nrows(),
            actual: tm.nrows(),
        });
    }
    let svd = hm.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = f64::EPSILON * hm.nrows().max(hm.ncols()) as f64 * smax;
    let rank = svd.rank(eps);
    let beta = svd
        .solve(&tm, eps)
        .map_err(|e| Error::InvalidConfig(format!("pseudo-inverse failed: {e}")))?;
    Ok(OracleSolution {
        beta: (0..beta.nrows())
            .map(|i| beta.row(i).iter().copied().collect())
            .collect(),
        rank,
        rank_deficient: rank < hm.ncols(),
    })
}
