// SPDX-License-Identifier: Apache-2.0

//! Flat experiment configuration.
//!
//! Resolution order, later wins: built-in defaults, the dataset preset, the
//! `--config` file, command-line flags. The merged object is deserialized
//! with unknown keys rejected, then validated before any work starts.

use std::path::{Path, PathBuf};

use memxbar::analysis::{DigitalPowerTable, VariationConfig};
use memxbar::crossbar::{CrossbarConfig, Topology};
use memxbar::datasets::Normalization;
use memxbar::device::{DeviceConfig, MemristorParams};
use memxbar::elm::{Activation, ElmConfig, FitConfig};
use memxbar::learning::TrainingConfig;
use memxbar::presets::{self, DatasetPreset, Source};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: u64,
    pub out: PathBuf,
    pub data_dir: PathBuf,
    /// Preset name or path to a CSV file (label in the last column).
    pub dataset: String,
    /// Model snapshot for `eval`; defaults to `<out>/model.json`.
    pub model: Option<PathBuf>,
    pub topology: Topology,
    pub hidden_topology: Option<Topology>,

    // device
    pub lrs_ohms: f64,
    pub hrs_ohms: f64,
    pub i_off_ua: f64,
    pub i_on_ua: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    pub pulse_step_fraction: f64,

    // crossbar
    pub hidden_r_f_ohms: f64,
    pub r_f_ohms: f64,
    pub r_x_ohms: f64,
    pub v_dd: f64,
    pub v_ss: f64,
    pub input_limit_v: f64,
    pub read_current_limit_ua: f64,
    pub reference_ohms: Option<f64>,

    // network
    pub eta: usize,
    pub bias_v: f64,
    pub activation_swing_v: f64,
    pub activation_gain: f64,
    pub target_v: f64,

    // data
    pub normalization: Normalization,
    pub signal_limit_v: f64,
    pub train_fraction: f64,

    // training
    pub epochs: usize,
    /// 0 disables early stopping.
    pub patience: usize,
    pub alpha: f64,
    pub alpha_decay: f64,
    pub balance_columns: bool,
    pub i_train_ua: f64,
    pub pulse_duration_ns: f64,
    pub mirror_ripple: f64,
    pub substeps: usize,

    // power
    pub power_inputs: usize,
    pub power_neurons: usize,
    pub power_v_in: f64,
    pub digital_uw: DigitalPowerTable,

    // sweep
    pub runs: usize,
    pub iterations: usize,
    pub spread: f64,
    pub reseed_runs: bool,

    // scaling
    pub scaling_max: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let device = DeviceConfig::default();
        let xbar = CrossbarConfig::default();
        let elm = ElmConfig::default();
        let training = TrainingConfig::default();
        let variation = VariationConfig::default();
        Settings {
            seed: 0,
            out: PathBuf::from("out"),
            data_dir: PathBuf::from("data"),
            dataset: "iris".into(),
            model: None,
            topology: elm.topology,
            hidden_topology: None,
            lrs_ohms: device.lrs_ohms,
            hrs_ohms: device.hrs_ohms,
            i_off_ua: device.i_off_ua,
            i_on_ua: device.i_on_ua,
            alpha_on: device.alpha_on,
            alpha_off: device.alpha_off,
            pulse_step_fraction: device.pulse_step_fraction,
            hidden_r_f_ohms: xbar.r_f,
            r_f_ohms: xbar.r_f,
            r_x_ohms: xbar.r_x,
            v_dd: xbar.v_dd,
            v_ss: xbar.v_ss,
            input_limit_v: xbar.input_limit,
            read_current_limit_ua: xbar.read_current_limit * 1e6,
            reference_ohms: xbar.reference_ohms,
            eta: elm.eta,
            bias_v: elm.bias_v,
            activation_swing_v: elm.activation.swing,
            activation_gain: elm.activation.gain,
            target_v: elm.target_v,
            normalization: Normalization::MinMax,
            signal_limit_v: elm.activation.swing,
            train_fraction: 0.7,
            epochs: 300,
            patience: 50,
            alpha: 0.003,
            alpha_decay: 1.0,
            balance_columns: true,
            i_train_ua: training.i_train * 1e6,
            pulse_duration_ns: training.pulse_duration * 1e9,
            mirror_ripple: training.mirror_ripple,
            substeps: training.substeps,
            power_inputs: 2,
            power_neurons: 4,
            power_v_in: 0.5,
            digital_uw: DigitalPowerTable::default(),
            runs: variation.runs,
            iterations: variation.iterations,
            spread: variation.spread,
            reseed_runs: variation.reseed_runs,
            scaling_max: 128,
        }
    }
}

fn preset_overrides(p: &DatasetPreset) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_owned(), v);
    };
    put("eta", p.eta.into());
    put("hidden_r_f_ohms", p.hidden_r_f.into());
    put("activation_gain", p.gain.into());
    put("alpha", p.alpha.into());
    put("alpha_decay", p.alpha_decay.into());
    put("epochs", p.epochs.into());
    put("patience", p.patience.into());
    put("balance_columns", p.balance_columns.into());
    put("train_fraction", p.train_fraction.into());
    put("signal_limit_v", p.input_limit.into());
    put(
        "normalization",
        serde_json::to_value(p.normalization).expect("enum serializes"),
    );
    m
}

/// Merges defaults, preset, file and flag overrides.
pub fn resolve(file: Option<&Path>, flags: Map<String, Value>) -> Result<Settings, CliError> {
    let file_map = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("config file {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => {
                    return Err(CliError::Validation(format!(
                        "config file {} must hold a JSON object",
                        path.display()
                    )))
                }
                Err(e) => return Err(CliError::Validation(format!("config file {}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };

    let mut merged = match serde_json::to_value(Settings::default()).expect("settings serialize") {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    let dataset = flags
        .get("dataset")
        .or_else(|| file_map.get("dataset"))
        .and_then(Value::as_str)
        .unwrap_or("iris")
        .to_owned();
    if let Some(p) = presets::preset(&dataset) {
        merged.extend(preset_overrides(&p));
    }
    merged.extend(file_map);
    merged.extend(flags);
    let settings: Settings =
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(settings)
}

impl Settings {
    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut s = self.clone();
        s.out = PathBuf::new();
        let json = serde_json::to_string(&s).expect("settings serialize");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn device(&self) -> DeviceConfig {
        DeviceConfig {
            lrs_ohms: self.lrs_ohms,
            hrs_ohms: self.hrs_ohms,
            i_off_ua: self.i_off_ua,
            i_on_ua: self.i_on_ua,
            alpha_on: self.alpha_on,
            alpha_off: self.alpha_off,
            pulse_step_fraction: self.pulse_step_fraction,
        }
    }

    pub fn crossbar(&self, r_f: f64) -> CrossbarConfig {
        CrossbarConfig {
            r_f,
            r_x: self.r_x_ohms,
            v_dd: self.v_dd,
            v_ss: self.v_ss,
            input_limit: self.input_limit_v,
            read_current_limit: self.read_current_limit_ua * 1e-6,
            reference_ohms: self.reference_ohms,
        }
    }

    pub fn elm(&self, topology: Topology) -> ElmConfig {
        ElmConfig {
            eta: self.eta,
            topology,
            hidden_topology: self.hidden_topology,
            hidden_crossbar: self.crossbar(self.hidden_r_f_ohms),
            output_crossbar: self.crossbar(self.r_f_ohms),
            device: self.device(),
            bias_v: self.bias_v,
            activation: Activation {
                swing: self.activation_swing_v,
                gain: self.activation_gain,
            },
            target_v: self.target_v,
        }
    }

    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            i_train: self.i_train_ua * 1e-6,
            pulse_duration: self.pulse_duration_ns * 1e-9,
            mirror_ripple: self.mirror_ripple,
            alpha: Some(self.alpha),
            balance_columns: self.balance_columns,
            substeps: self.substeps,
            read_disturb: true,
        }
    }

    pub fn fit(&self, seed: u64) -> FitConfig {
        FitConfig {
            epochs: self.epochs,
            patience: (self.patience > 0).then_some(self.patience),
            training: self.training(),
            alpha_decay: self.alpha_decay,
            seed,
        }
    }

    pub fn variation(&self) -> VariationConfig {
        VariationConfig {
            runs: self.runs,
            iterations: self.iterations,
            spread: self.spread,
            seed: self.seed,
            reseed_runs: self.reseed_runs,
        }
    }

    /// The dataset description: a preset, or a CSV path with the current
    /// settings.
    pub fn dataset_spec(&self) -> DatasetPreset {
        let source = match presets::preset(&self.dataset) {
            Some(p) => p.source,
            // paths are taken relative to the working directory, not data_dir
            None => Source::Csv {
                file: std::path::absolute(&self.dataset)
                    .map_or_else(|_| self.dataset.clone(), |p| p.to_string_lossy().into_owned()),
            },
        };
        DatasetPreset {
            name: self.dataset.clone(),
            source,
            eta: self.eta,
            hidden_r_f: self.hidden_r_f_ohms,
            gain: self.activation_gain,
            alpha: self.alpha,
            alpha_decay: self.alpha_decay,
            epochs: self.epochs,
            patience: self.patience,
            normalization: self.normalization,
            balance_columns: self.balance_columns,
            train_fraction: self.train_fraction,
            input_limit: self.signal_limit_v,
        }
    }

    /// Checks every module precondition that can be checked without data.
    pub fn validate(&self) -> Result<(), CliError> {
        let v = |e: memxbar::Error| CliError::Validation(e.to_string());
        let params = MemristorParams::calibrated(&self.device()).map_err(v)?;
        for t in [Some(self.topology), self.hidden_topology].into_iter().flatten() {
            self.elm(t).validate().map_err(v)?;
        }
        self.training().validate(&params).map_err(v)?;
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(CliError::Validation(msg)) };
        check(self.epochs >= 1, "epochs must be at least 1".into())?;
        check(
            self.alpha_decay > 0.0 && self.alpha_decay <= 1.0,
            format!("alpha_decay must lie in (0, 1], got {}", self.alpha_decay),
        )?;
        check(
            self.train_fraction > 0.0 && self.train_fraction <= 1.0,
            format!("train_fraction must lie in (0, 1], got {}", self.train_fraction),
        )?;
        check(
            self.signal_limit_v > 0.0 && self.signal_limit_v <= self.input_limit_v,
            format!(
                "signal_limit_v = {} must lie in (0, input_limit_v = {}]",
                self.signal_limit_v, self.input_limit_v
            ),
        )?;
        check(
            self.power_inputs >= 1 && self.power_neurons >= 1,
            "power_inputs and power_neurons must be at least 1".into(),
        )?;
        check(self.power_v_in.is_finite(), "power_v_in must be finite".into())?;
        check(
            self.runs >= 1 && self.iterations >= 1,
            "runs and iterations must be at least 1".into(),
        )?;
        check(
            (0.0..1.0).contains(&self.spread),
            format!("spread must lie in [0, 1), got {}", self.spread),
        )?;
        check(self.scaling_max >= 2, "scaling_max must be at least 2".into())?;
        Ok(())
    }

    /// Verifies the dataset files exist.
    pub fn validate_dataset(&self) -> Result<DatasetPreset, CliError> {
        let spec = self.dataset_spec();
        for f in spec.files(&self.data_dir) {
            if !f.is_file() {
                return Err(CliError::Validation(format!("dataset file not found: {}", f.display())));
            }
        }
        Ok(spec)
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out.join("model.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let s = resolve(None, Map::new()).unwrap();
        assert_eq!(s.eta, 20);
        let mut flags = Map::new();
        flags.insert("dataset".into(), "diabetes".into());
        let s = resolve(None, flags.clone()).unwrap();
        assert_eq!(s.eta, 65);
        flags.insert("eta".into(), 7.into());
        assert_eq!(resolve(None, flags).unwrap().eta, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut flags = Map::new();
        flags.insert("etaa".into(), 7.into());
        assert!(matches!(resolve(None, flags), Err(CliError::Validation(_))));
    }

    #[test]
    fn hash_ignores_out_only() {
        let a = Settings::default();
        let mut b = a.clone();
        b.out = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
