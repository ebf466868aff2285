// SPDX-License-Identifier: Apache-2.0

//! Power estimates, transistor counts and Monte Carlo device variation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossbar::{CrossbarLayer, DeviceArray, Topology};
use crate::device::MemristorDevice;
use crate::elm::{ElmNetwork, FitConfig, LabeledDataset};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerScenario {
    /// Every device at its LRS, every input at full amplitude.
    WorstCase,
    /// Mean over all sign patterns of full-amplitude inputs, at the
    /// programmed resistances.
    InputAveraged,
}

/// Digital (controller) power per topology, in uW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DigitalPowerTable {
    pub two_crossbar_full: f64,
    pub two_crossbar_semi: f64,
    pub one_crossbar_full: f64,
    pub one_crossbar_semi: f64,
}

impl Default for DigitalPowerTable {
    fn default() -> Self {
        DigitalPowerTable {
            two_crossbar_full: 1.45,
            two_crossbar_semi: 1.22,
            one_crossbar_full: 1.52,
            one_crossbar_semi: 1.15,
        }
    }
}

impl DigitalPowerTable {
    pub fn get(&self, topology: Topology) -> f64 {
        match topology {
            Topology::TwoCrossbarFull => self.two_crossbar_full,
            Topology::TwoCrossbarSemi => self.two_crossbar_semi,
            Topology::OneCrossbarFull => self.one_crossbar_full,
            Topology::OneCrossbarSemi => self.one_crossbar_semi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub topology: Topology,
    pub scenario: PowerScenario,
    pub v_in: f64,
    pub devices: usize,
    pub crossbar_uw: f64,
    pub digital_uw: f64,
    pub total_uw: f64,
}

fn devices(layer: &CrossbarLayer) -> impl Iterator<Item = &MemristorDevice> {
    layer.plus_devices().iter().chain(layer.minus_devices())
}

/// Static read power of the crossbar devices (op-amps excluded). Bit-lines
/// are virtual grounds, so every device carries the full input voltage;
/// power is therefore independent of input signs and the sign-pattern mean
/// equals a single full-amplitude evaluation.
pub fn estimate_power(
    layer: &CrossbarLayer,
    scenario: PowerScenario,
    v_in: f64,
    digital: &DigitalPowerTable,
) -> Result<PowerReport> {
    if !v_in.is_finite() {
        return Err(Error::InvalidConfig(format!("v_in must be finite, got {v_in}")));
    }
    let v2 = v_in * v_in;
    let watts: f64 = match scenario {
        PowerScenario::WorstCase => devices(layer).map(|d| v2 / d.params.r_on).sum(),
        PowerScenario::InputAveraged => devices(layer).map(|d| v2 / d.resistance()).sum(),
    };
    let crossbar_uw = watts * 1e6;
    let digital_uw = digital.get(layer.topology());
    Ok(PowerReport {
        topology: layer.topology(),
        scenario,
        v_in,
        devices: layer.device_count(),
        crossbar_uw,
        digital_uw,
        total_uw: crossbar_uw + digital_uw,
    })
}

// Transistor budget. Each device has one access transistor. The H-bridge
// splits into a +Tr half per trained row (2 transistors) and a -Tr half per
// driven column (2 transistors plus the 2-transistor current mirror). The
// local controllers are small fixed gate groups: the row controller is an
// XNOR of the input sign and the latched error bit gated by Polar (one XNOR
// and one AND, 12 transistors); the column controller is the ColEn/TrEn AND
// plus one error-bit register stage (4 + 18). The three-state global
// controller with its column counter is a fixed block.
pub const ROW_DRIVER: u64 = 2;
pub const COLUMN_DRIVER: u64 = 2 + 2;
pub const ROW_CONTROLLER: u64 = 12;
pub const COLUMN_CONTROLLER: u64 = 4 + 18;
pub const GLOBAL_CONTROLLER: u64 = 150;

/// Transistors in one `n x k` layer (n inputs, k neurons):
/// `devices + (ROW_DRIVER + ROW_CONTROLLER) * trained_rows
///  + (COLUMN_DRIVER + COLUMN_CONTROLLER) * driven_columns + GLOBAL_CONTROLLER`.
///
/// Semi variants train only the `M+` rows; full variants also drive the
/// `M-` rows (complemented rows or the second array), and the full
/// two-crossbar layer has a second set of columns.
pub fn transistor_count(n: usize, k: usize, topology: Topology) -> u64 {
    let (n, k) = (n as u64, k as u64);
    let devices = n * k + topology.minus_count(n as usize, k as usize) as u64;
    let trained_rows = if topology.is_semi() { n } else { 2 * n };
    let driven_columns = if topology == Topology::TwoCrossbarFull {
        2 * k
    } else {
        k
    };
    devices
        + (ROW_DRIVER + ROW_CONTROLLER) * trained_rows
        + (COLUMN_DRIVER + COLUMN_CONTROLLER) * driven_columns
        + GLOBAL_CONTROLLER
}

/// Scales every device's LRS and HRS by independent factors
/// `1 + spread * u`, `u ~ U[-1, 1]`, keeping its state variable.
pub fn perturb_layer<R: Rng>(layer: &mut CrossbarLayer, spread: f64, rng: &mut R) -> Result<()> {
    if !(0.0..1.0).contains(&spread) {
        return Err(Error::InvalidConfig(format!("spread must lie in [0, 1), got {spread}")));
    }
    if spread == 0.0 {
        return Ok(());
    }
    perturb_devices(DeviceArray::Plus, layer.plus_devices_mut(), spread, rng)?;
    perturb_devices(DeviceArray::Minus, layer.minus_devices_mut(), spread, rng)
}

fn perturb_devices<R: Rng>(
    array: DeviceArray,
    devices: &mut [MemristorDevice],
    spread: f64,
    rng: &mut R,
) -> Result<()> {
    for (index, d) in devices.iter_mut().enumerate() {
        let lrs = d.params.r_on * (1.0 + spread * rng.gen_range(-1.0..=1.0));
        let hrs = d.params.r_off * (1.0 + spread * rng.gen_range(-1.0..=1.0));
        if !(lrs < hrs) {
            return Err(Error::InvalidPerturbation { array, index, lrs, hrs });
        }
        let w = d.state();
        d.params.r_on = lrs;
        d.params.r_off = hrs;
        d.set_state(w);
    }
    Ok(())
}

/// Applies [`perturb_layer`] to both layers of a network.
pub fn perturb_network<R: Rng>(net: &mut ElmNetwork, spread: f64, rng: &mut R) -> Result<()> {
    let (hidden, output) = net.layers_mut();
    perturb_layer(hidden, spread, rng)?;
    perturb_layer(output, spread, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationConfig {
    pub runs: usize,
    pub iterations: usize,
    /// Relative LRS/HRS spread (0.1 = +-10%).
    pub spread: f64,
    pub seed: u64,
    /// Give every run its own network/split seed. When false, runs within
    /// an iteration differ only in their device perturbation.
    pub reseed_runs: bool,
}

impl Default for VariationConfig {
    fn default() -> Self {
        VariationConfig {
            runs: 10,
            iterations: 5,
            spread: 0.1,
            seed: 0,
            reseed_runs: true,
        }
    }
}

/// What a variation trial needs: a freshly built network, its data and its
/// fit settings.
pub struct Trial {
    pub network: ElmNetwork,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub spread: f64,
    pub iterations: Vec<IterationStats>,
    pub mean: f64,
    pub std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    // shifted by the first sample so identical values give exactly zero spread
    let x0 = xs.first().copied().unwrap_or(0.0);
    let d = xs.iter().map(|x| x - x0).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - x0 - d) * (x - x0 - d)).sum::<f64>() / n;
    (x0 + d, var.sqrt())
}

/// For each iteration and run: build a trial from its seed, perturb every
/// device, retrain, and record test accuracy. Runs execute in parallel;
/// results are gathered in index order, so the report is reproducible.
pub fn variation_study<F>(factory: F, cfg: &VariationConfig) -> Result<VariationReport>
where
    F: Fn(u64) -> Result<Trial> + Sync,
{
    if cfg.runs == 0 || cfg.iterations == 0 {
        return Err(Error::InvalidConfig("runs and iterations must be at least 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.iterations)
        .flat_map(|i| (0..cfg.runs).map(move |r| (i, r)))
        .collect();
    let accuracies = jobs
        .par_iter()
        .map(|&(i, r)| {
            let iter_seed = seed::fold(cfg.seed, i as u64);
            let run_seed = seed::fold(iter_seed, r as u64);
            let trial_seed = if cfg.reseed_runs { run_seed } else { iter_seed };
            let mut trial = factory(trial_seed)?;
            let mut rng = seed::rng(run_seed, Stream::Variation);
            perturb_network(&mut trial.network, cfg.spread, &mut rng)?;
            trial.network.fit(&trial.train, &trial.fit)?;
            trial.network.evaluate(&trial.test)
        })
        .collect::<Result<Vec<f64>>>()?;

    let iterations = accuracies
        .chunks(cfg.runs)
        .enumerate()
        .map(|(iteration, accs)| {
            let (mean, std) = mean_std(accs);
            IterationStats {
                iteration,
                mean,
                std,
                accuracies: accs.to_vec(),
            }
        })
        .collect();
    let (mean, std) = mean_std(&accuracies);
    Ok(VariationReport {
        spread: cfg.spread,
        iterations,
        mean,
        std,
    })
}
