// SPDX-License-Identifier: Apache-2.0

//! In-situ training of a crossbar layer.
//!
//! The update is the sign-simplified delta rule applied in the descent
//! direction, `delta beta_ij = -alpha * S(h_i) * S(t*_j - t_j)`, realized by
//! one fixed-width current pulse per device per sample. A global controller
//! walks through one read cycle followed by two training cycles per column:
//! `TrainC1` (`Polar = 0`) applies every increment in the active column and
//! `TrainC2` (`Polar = 1`) every decrement.
//!
//! Increasing a weight lowers `M+` (negative device current); the fully
//! trained variants move the paired `M-` the opposite way in the same cycle.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crossbar::{CrossbarLayer, DeviceArray};
use crate::device::{MemristorParams, CLOCK_PERIOD, DEFAULT_SUBSTEPS};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// `+1` for strictly positive values, `-1` otherwise (zero included).
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Comparator outputs latched at read time: bit `j` is set when
/// `t*_j > t_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBits {
    pub bits: Vec<bool>,
}

impl ErrorBits {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `S(t*_j - t_j)` as seen through the comparator.
    pub fn sign(&self, j: usize) -> f64 {
        if self.bits[j] {
            1.0
        } else {
            -1.0
        }
    }
}

pub fn compute_error(t_star: &[f64], t_target: &[f64]) -> Result<ErrorBits> {
    if t_star.len() != t_target.len() {
        return Err(Error::LengthMismatch {
            expected: t_star.len(),
            actual: t_target.len(),
        });
    }
    Ok(ErrorBits {
        bits: t_star.iter().zip(t_target).map(|(a, b)| a > b).collect(),
    })
}

/// Target `M+` after one ideal sign-rule step of size `alpha` (in weight
/// units), obtained by inverting `beta = R_f/M+ - R_f/M-` with `M-` fixed.
/// Clamped to the device's resistance bounds.
pub fn ideal_weight_update(
    m_old_plus: f64,
    r_f: f64,
    alpha: f64,
    s_input: f64,
    s_err: f64,
    params: &MemristorParams,
) -> f64 {
    let delta_beta = -alpha * sign(s_input) * sign(s_err);
    if delta_beta == 0.0 {
        return m_old_plus;
    }
    let conductance_term = r_f / m_old_plus + delta_beta;
    if conductance_term <= 0.0 {
        return params.r_off;
    }
    (r_f / conductance_term).clamp(params.r_on, params.r_off)
}

/// Whether the sign rule asks for a weight increase at a cell with input
/// sign `s_input` and latched error bit `err_bit`.
#[inline]
pub fn wants_increment(s_input: f64, err_bit: bool) -> bool {
    // descent: delta = -S(h) * S(err) > 0  <=>  S(h) and S(err) differ
    (sign(s_input) > 0.0) != err_bit
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Read,
    TrainC1,
    TrainC2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ControllerState {
    pub phase: Phase,
    pub active_column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlSignals {
    pub col_en: Vec<bool>,
    pub polar: bool,
    pub tr_en: bool,
}

/// Three-state controller: `Read -> (TrainC1 -> TrainC2) x k -> Read`.
#[derive(Debug, Clone)]
pub struct GlobalController {
    cols: usize,
    state: ControllerState,
}

impl GlobalController {
    pub fn new(cols: usize) -> Self {
        GlobalController {
            cols,
            state: ControllerState {
                phase: Phase::Read,
                active_column: 0,
            },
        }
    }

    pub fn state(&self) -> ControllerState {
        self.state
    }

    pub fn signals(&self) -> ControlSignals {
        let mut col_en = vec![false; self.cols];
        let (polar, tr_en) = match self.state.phase {
            Phase::Read => (false, false),
            Phase::TrainC1 => (false, true),
            Phase::TrainC2 => (true, true),
        };
        if tr_en {
            col_en[self.state.active_column] = true;
        }
        ControlSignals { col_en, polar, tr_en }
    }

    /// Advances one clock cycle.
    pub fn tick(&mut self) {
        let s = &mut self.state;
        match s.phase {
            Phase::Read => {
                s.phase = Phase::TrainC1;
                s.active_column = 0;
            }
            Phase::TrainC1 => s.phase = Phase::TrainC2,
            Phase::TrainC2 => {
                if s.active_column + 1 < self.cols {
                    s.active_column += 1;
                    s.phase = Phase::TrainC1;
                } else {
                    s.phase = Phase::Read;
                    s.active_column = 0;
                }
            }
        }
    }
}

/// Row controller: enables the row driver when the cell's required direction
/// matches the current half-cycle.
#[inline]
pub fn row_enable(s_input: f64, err_bit: bool, polar: bool) -> bool {
    wants_increment(s_input, err_bit) != polar
}

/// Column controller: the column is pulsed only while selected and enabled.
#[inline]
pub fn column_enable(signals: &ControlSignals, column: usize) -> bool {
    signals.tr_en && signals.col_en[column]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Mirror-limited training current (A).
    pub i_train: f64,
    /// Length of one controller clock (s).
    pub pulse_duration: f64,
    /// Multiplicative current ripple bound; each pulse draws
    /// `i_train * (1 + ripple * u)` with `u ~ U[-1, 1]`.
    pub mirror_ripple: f64,
    /// Nominal state change per pulse, as a fraction of the full state span.
    /// Realized by the pulse width; must not exceed what one full clock at
    /// `i_train` achieves. `None` uses the whole clock.
    pub alpha: Option<f64>,
    /// Shortens pulses in columns whose target is negative by the ratio of
    /// positive to negative targets in the sample, so one-hot targets pull
    /// both ways equally.
    pub balance_columns: bool,
    /// Euler sub-steps per pulse.
    pub substeps: usize,
    /// Drive every device with its read current for one clock during the
    /// read phase (a no-op below threshold, which the read limits enforce).
    pub read_disturb: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            i_train: 4e-6,
            pulse_duration: CLOCK_PERIOD,
            mirror_ripple: 0.0,
            alpha: None,
            balance_columns: false,
            substeps: DEFAULT_SUBSTEPS,
            read_disturb: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self, params: &MemristorParams) -> Result<()> {
        if !(self.i_train.is_finite() && self.i_train > params.i_off && -self.i_train < params.i_on) {
            return Err(Error::SubThresholdTraining {
                i_train: self.i_train,
                i_off: params.i_off,
            });
        }
        if !(self.mirror_ripple >= 0.0 && self.mirror_ripple < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mirror_ripple must lie in [0, 1), got {}",
                self.mirror_ripple
            )));
        }
        // ripple must not push any pulse back under the threshold
        let i_min = self.i_train * (1.0 - self.mirror_ripple);
        if params.is_sub_threshold(i_min) || params.is_sub_threshold(-i_min) {
            return Err(Error::SubThresholdTraining {
                i_train: i_min,
                i_off: params.i_off,
            });
        }
        if !(self.pulse_duration > 0.0 && self.pulse_duration.is_finite()) {
            return Err(Error::InvalidConfig("pulse_duration must be positive".into()));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be at least 1".into()));
        }
        if let Some(a) = self.alpha {
            let full = self.full_clock_step(params);
            if !(a >= 0.0 && a <= full * (1.0 + 1e-12)) {
                return Err(Error::InvalidConfig(format!(
                    "alpha {a} outside [0, {full}] (one full clock at {} A)",
                    self.i_train
                )));
            }
        }
        Ok(())
    }

    fn full_clock_step(&self, params: &MemristorParams) -> f64 {
        params.interior_step(self.i_train, self.pulse_duration) / (params.w_max - params.w_min)
    }

    /// Pulse width that realizes `alpha`.
    pub fn pulse_width(&self, params: &MemristorParams) -> f64 {
        match self.alpha {
            Some(a) => (self.pulse_duration * a / self.full_clock_step(params)).min(self.pulse_duration),
            None => self.pulse_duration,
        }
    }
}

/// One device pulse, as recorded by [`TrainingEngine::train_sample_traced`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseEvent {
    pub cycle: u64,
    pub phase: Phase,
    pub array: DeviceArray,
    pub row: usize,
    pub column: usize,
    pub current: f64,
    pub duration: f64,
    pub r_before: f64,
    pub r_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub cycles: u64,
    pub pulses: u64,
    pub t_star: Vec<f64>,
    pub error_bits: ErrorBits,
    pub mean_abs_error: f64,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleLog {
    pub epoch: usize,
    pub sample: usize,
    pub cycles: u64,
    pub mean_abs_error: f64,
    pub pulses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub cycles: u64,
    pub pulses: u64,
    pub samples: Vec<SampleLog>,
}

impl EpochReport {
    pub fn mean_abs_error(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.mean_abs_error).sum::<f64>() / self.samples.len() as f64
    }
}

/// Writes epoch reports as CSV: `epoch,sample,cycles,mean_abs_error,pulses`.
pub fn write_training_log<W: Write>(writer: W, reports: &[EpochReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| Error::InvalidConfig(format!("writing training log: {e}"));
    for report in reports {
        for row in &report.samples {
            w.serialize(row).map_err(map)?;
        }
    }
    w.flush().map_err(|e| Error::io("training log", e))?;
    Ok(())
}

/// Drives a layer through read / train cycles.
#[derive(Debug, Clone)]
pub struct TrainingEngine {
    config: TrainingConfig,
    shuffle_rng: ChaCha8Rng,
    ripple_rng: ChaCha8Rng,
    epochs_run: usize,
    cycles: u64,
}

impl TrainingEngine {
    pub fn new(config: TrainingConfig, seed: u64) -> Self {
        TrainingEngine {
            config,
            shuffle_rng: seed::rng(seed, Stream::Shuffle),
            ripple_rng: seed::rng(seed, Stream::Ripple),
            epochs_run: 0,
            cycles: 0,
        }
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    /// Changes the step size between epochs (annealing).
    pub fn set_alpha(&mut self, alpha: Option<f64>) {
        self.config.alpha = alpha;
    }

    /// Controller cycles consumed since construction.
    pub fn total_cycles(&self) -> u64 {
        self.cycles
    }

    pub fn train_sample(&mut self, layer: &mut CrossbarLayer, x: &[f64], t: &[f64]) -> Result<SampleReport> {
        self.run_sample(layer, x, t, None)
    }

    /// Like [`train_sample`](Self::train_sample), also returning every pulse.
    pub fn train_sample_traced(
        &mut self,
        layer: &mut CrossbarLayer,
        x: &[f64],
        t: &[f64],
    ) -> Result<(SampleReport, Vec<PulseEvent>)> {
        let mut trace = Vec::new();
        let report = self.run_sample(layer, x, t, Some(&mut trace))?;
        Ok((report, trace))
    }

    fn run_sample(
        &mut self,
        layer: &mut CrossbarLayer,
        x: &[f64],
        t: &[f64],
        mut trace: Option<&mut Vec<PulseEvent>>,
    ) -> Result<SampleReport> {
        if !layer.is_trainable(DeviceArray::Plus) {
            return Err(Error::NothingToTrain);
        }
        let params = layer.plus(0, 0).params;
        self.config.validate(&params)?;
        let (rows, cols) = (layer.rows(), layer.cols());
        if t.len() != cols {
            return Err(Error::LengthMismatch {
                expected: cols,
                actual: t.len(),
            });
        }

        let mut controller = GlobalController::new(cols);
        let mut cycles = 0u64;
        let mut pulses = 0u64;

        // Read: latch t* and the comparator bits.
        debug_assert_eq!(controller.state().phase, Phase::Read);
        let t_star = layer.read(x)?.output;
        let error_bits = compute_error(&t_star, t)?;
        let mean_abs_error = t_star.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>() / cols as f64;
        if self.config.read_disturb {
            self.read_disturb(layer, x)?;
        }
        controller.tick();
        cycles += 1;

        let minus_trainable = layer.is_trainable(DeviceArray::Minus);
        let width = self.config.pulse_width(&params);
        let dt = self.config.pulse_duration / self.config.substeps as f64;
        let negative_scale = if self.config.balance_columns {
            let pos = t.iter().filter(|&&v| v > 0.0).count();
            let neg = cols - pos;
            if pos > 0 && neg > pos {
                pos as f64 / neg as f64
            } else {
                1.0
            }
        } else {
            1.0
        };
        let input_signs: Vec<f64> = x.iter().map(|&v| sign(v)).collect();
        let cols_stride = cols;

        for _ in 0..2 * cols {
            let signals = controller.signals();
            let state = controller.state();
            let j = state.active_column;
            if column_enable(&signals, j) {
                let duration = if t[j] > 0.0 { width } else { width * negative_scale };
                let err = error_bits.bits[j];
                for i in 0..rows {
                    if !row_enable(input_signs[i], err, signals.polar) {
                        continue;
                    }
                    // Polar = 0 increments: drive M+ with negative current.
                    let magnitude = self.pulse_current();
                    let i_plus = if signals.polar { magnitude } else { -magnitude };
                    let idx = i * cols_stride + j;
                    let before = layer.plus_devices()[idx].resistance();
                    layer.plus_devices_mut()[idx].apply_pulse(i_plus, duration, dt)?;
                    pulses += 1;
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(PulseEvent {
                            cycle: cycles,
                            phase: state.phase,
                            array: DeviceArray::Plus,
                            row: i,
                            column: j,
                            current: i_plus,
                            duration,
                            r_before: before,
                            r_after: layer.plus_devices()[idx].resistance(),
                        });
                    }
                    if minus_trainable {
                        let m = layer.minus_index(i, j);
                        let before = layer.minus_devices()[m].resistance();
                        layer.minus_devices_mut()[m].apply_pulse(-i_plus, duration, dt)?;
                        pulses += 1;
                        if let Some(tr) = trace.as_deref_mut() {
                            tr.push(PulseEvent {
                                cycle: cycles,
                                phase: state.phase,
                                array: DeviceArray::Minus,
                                row: i,
                                column: j,
                                current: -i_plus,
                                duration,
                                r_before: before,
                                r_after: layer.minus_devices()[m].resistance(),
                            });
                        }
                    }
                }
            }
            controller.tick();
            cycles += 1;
        }
        debug_assert_eq!(controller.state().phase, Phase::Read);
        self.cycles += cycles;

        Ok(SampleReport {
            cycles,
            pulses,
            t_star,
            error_bits,
            mean_abs_error,
        })
    }

    fn pulse_current(&mut self) -> f64 {
        let ripple = self.config.mirror_ripple;
        if ripple > 0.0 {
            let u: f64 = self.ripple_rng.gen_range(-1.0..=1.0);
            self.config.i_train * (1.0 + ripple * u)
        } else {
            self.config.i_train
        }
    }

    /// Applies each device's read current for one clock. Devices in the
    /// one-crossbar `M-` array see the complemented input.
    fn read_disturb(&self, layer: &mut CrossbarLayer, x: &[f64]) -> Result<()> {
        let duration = self.config.pulse_duration;
        let dt = duration / self.config.substeps as f64;
        let cols = layer.cols();
        let complement = !layer.topology().is_two_crossbar();
        for (idx, d) in layer.plus_devices_mut().iter_mut().enumerate() {
            let i = x[idx / cols] / d.resistance();
            d.apply_pulse(i, duration, dt)?;
        }
        let semi_two = layer.topology() == crate::crossbar::Topology::TwoCrossbarSemi;
        for (idx, d) in layer.minus_devices_mut().iter_mut().enumerate() {
            let row = if semi_two { idx } else { idx / cols };
            let v = if complement { -x[row] } else { x[row] };
            d.apply_pulse(v / d.resistance(), duration, dt)?;
        }
        Ok(())
    }

    /// One pass over `(inputs, targets)` in a seeded shuffled order.
    pub fn train_epoch(
        &mut self,
        layer: &mut CrossbarLayer,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
    ) -> Result<EpochReport> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                actual: targets.len(),
            });
        }
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.shuffle(&mut self.shuffle_rng);
        let epoch = self.epochs_run;
        let mut report = EpochReport {
            epoch,
            cycles: 0,
            pulses: 0,
            samples: Vec::with_capacity(order.len()),
        };
        for &s in &order {
            let r = self.train_sample(layer, &inputs[s], &targets[s])?;
            report.cycles += r.cycles;
            report.pulses += r.pulses;
            report.samples.push(SampleLog {
                epoch,
                sample: s,
                cycles: r.cycles,
                mean_abs_error: r.mean_abs_error,
                pulses: r.pulses,
            });
        }
        self.epochs_run += 1;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossbar::{CrossbarConfig, Topology};

    fn layer(rows: usize, cols: usize, topology: Topology) -> CrossbarLayer {
        CrossbarLayer::new(
            rows,
            cols,
            topology,
            CrossbarConfig::default(),
            MemristorParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn sign_examples() {
        assert_eq!(sign(0.7), 1.0);
        assert_eq!(sign(-0.2), -1.0);
        assert_eq!(sign(0.0), -1.0);
    }

    #[test]
    fn error_bit_examples() {
        assert_eq!(compute_error(&[0.4], &[0.1]).unwrap().bits, vec![true]);
        assert_eq!(compute_error(&[0.0], &[0.0]).unwrap().bits, vec![false]);
        assert_eq!(compute_error(&[0.1, 0.5], &[0.3, 0.2]).unwrap().bits, vec![false, true]);
        assert!(compute_error(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn ideal_update_examples() {
        let p = MemristorParams::default();
        assert!(ideal_weight_update(175e3, 500e3, 0.05, 1.0, 1.0, &p) > 175e3);
        assert!(ideal_weight_update(175e3, 500e3, 0.05, -1.0, 1.0, &p) < 175e3);
        assert_eq!(ideal_weight_update(175e3, 500e3, 0.0, 1.0, 1.0, &p), 175e3);
        assert_eq!(ideal_weight_update(250e3, 500e3, 0.05, 1.0, 1.0, &p), 250e3);
        assert_eq!(ideal_weight_update(100e3, 500e3, 0.05, -1.0, 1.0, &p), 100e3);
    }

    #[test]
    fn controller_schedule() {
        let mut c = GlobalController::new(3);
        let mut seen = Vec::new();
        for _ in 0..7 {
            let s = c.state();
            let sig = c.signals();
            assert!(sig.col_en.iter().filter(|&&b| b).count() <= 1);
            match s.phase {
                Phase::Read => assert!(!sig.tr_en),
                Phase::TrainC1 => assert!(!sig.polar && sig.col_en[s.active_column]),
                Phase::TrainC2 => assert!(sig.polar && sig.col_en[s.active_column]),
            }
            seen.push((s.phase, s.active_column));
            c.tick();
        }
        assert_eq!(c.state().phase, Phase::Read);
        assert_eq!(
            seen,
            vec![
                (Phase::Read, 0),
                (Phase::TrainC1, 0),
                (Phase::TrainC2, 0),
                (Phase::TrainC1, 1),
                (Phase::TrainC2, 1),
                (Phase::TrainC1, 2),
                (Phase::TrainC2, 2),
            ]
        );
    }

    #[test]
    fn cycles_and_pulses_per_sample() {
        let mut l = layer(3, 4, Topology::OneCrossbarSemi);
        let mut e = TrainingEngine::new(TrainingConfig::default(), 1);
        let r = e.train_sample(&mut l, &[0.1, -0.1, 0.0], &[0.0; 4]).unwrap();
        assert_eq!(r.cycles, 9);
        // S never returns zero, so every M+ gets exactly one pulse
        assert_eq!(r.pulses, 12);
    }

    #[test]
    fn full_variant_moves_both_devices_oppositely() {
        let mut l = layer(1, 1, Topology::OneCrossbarFull);
        let mut e = TrainingEngine::new(TrainingConfig::default(), 1);
        // t* = 0 < t: err bit 0, positive input => increment
        let (_, trace) = e.train_sample_traced(&mut l, &[0.2], &[0.3]).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].phase, Phase::TrainC1);
        assert!(trace[0].r_after < trace[0].r_before);
        assert!(trace[1].r_after > trace[1].r_before);
        assert!(l.weight(0, 0).unwrap() > 0.0);
    }

    #[test]
    fn frozen_layer_rejected() {
        let mut l = layer(1, 1, Topology::OneCrossbarSemi);
        l.freeze();
        let mut e = TrainingEngine::new(TrainingConfig::default(), 1);
        assert!(matches!(
            e.train_sample(&mut l, &[0.1], &[0.0]),
            Err(Error::NothingToTrain)
        ));
    }

    #[test]
    fn sub_threshold_current_rejected() {
        let mut l = layer(1, 1, Topology::OneCrossbarSemi);
        let cfg = TrainingConfig {
            i_train: 3e-6,
            ..TrainingConfig::default()
        };
        let mut e = TrainingEngine::new(cfg, 1);
        assert!(matches!(
            e.train_sample(&mut l, &[0.1], &[0.0]),
            Err(Error::SubThresholdTraining { .. })
        ));
    }

    #[test]
    fn alpha_sets_pulse_width() {
        let p = MemristorParams::default();
        let cfg = TrainingConfig {
            alpha: Some(0.002),
            ..TrainingConfig::default()
        };
        assert!((cfg.pulse_width(&p) - 2e-9).abs() < 1e-21);
        let too_big = TrainingConfig {
            alpha: Some(0.02),
            ..TrainingConfig::default()
        };
        assert!(too_big.validate(&p).is_err());
    }

    #[test]
    fn empty_epoch_rejected() {
        let mut l = layer(1, 1, Topology::OneCrossbarSemi);
        let mut e = TrainingEngine::new(TrainingConfig::default(), 1);
        assert!(matches!(e.train_epoch(&mut l, &[], &[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn log_columns() {
        let report = EpochReport {
            epoch: 0,
            cycles: 9,
            pulses: 4,
            samples: vec![SampleLog {
                epoch: 0,
                sample: 3,
                cycles: 9,
                mean_abs_error: 0.25,
                pulses: 4,
            }],
        };
        let mut buf = Vec::new();
        write_training_log(&mut buf, &[report]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "epoch,sample,cycles,mean_abs_error,pulses\n0,3,9,0.25,4\n");
    }
}
