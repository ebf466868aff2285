// SPDX-License-Identifier: Apache-2.0

//! Analog crossbar layers.
//!
//! A layer maps `rows` word-line inputs onto `cols` neurons. Each synaptic
//! weight is the difference of two conductance paths,
//! `beta = R_f / M+ - R_f / M-`, realized in one of four topologies:
//!
//! * two crossbars: an `M+` array feeds the output summing amplifier and an
//!   `M-` array feeds a first-stage amplifier whose output `V_x` is summed
//!   back through `R_x`. `V_x` is rail-limited, which is what corrupts
//!   results when the `M-` sum gets large.
//! * one crossbar: `M+` and `M-` share a column and see `x` and `~x`, so a
//!   single amplifier forms the whole sum and only per-term limits apply.
//!
//! The semi-trained variants fix the `M-` devices: a single reference
//! column shared by all neurons (two-crossbar) or every `M-` cell
//! (one-crossbar).
//!
//! Outputs are reported with the polarity `T = X * beta`; the summing stage
//! itself is inverting, so the simulator negates the stage voltage before
//! applying the rail clamp.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::{MemristorDevice, MemristorParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    TwoCrossbarFull,
    TwoCrossbarSemi,
    OneCrossbarFull,
    OneCrossbarSemi,
}

impl Topology {
    pub const ALL: [Topology; 4] = [
        Topology::TwoCrossbarFull,
        Topology::TwoCrossbarSemi,
        Topology::OneCrossbarFull,
        Topology::OneCrossbarSemi,
    ];

    pub fn is_semi(self) -> bool {
        matches!(self, Topology::TwoCrossbarSemi | Topology::OneCrossbarSemi)
    }

    pub fn is_two_crossbar(self) -> bool {
        matches!(self, Topology::TwoCrossbarFull | Topology::TwoCrossbarSemi)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Topology::TwoCrossbarFull => "two-crossbar-full",
            Topology::TwoCrossbarSemi => "two-crossbar-semi",
            Topology::OneCrossbarFull => "one-crossbar-full",
            Topology::OneCrossbarSemi => "one-crossbar-semi",
        }
    }

    /// Number of `M-` devices for an `rows x cols` layer.
    pub fn minus_count(self, rows: usize, cols: usize) -> usize {
        match self {
            Topology::TwoCrossbarSemi => rows,
            _ => rows * cols,
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Topology::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown topology '{s}' (expected one of: two-crossbar-full, two-crossbar-semi, one-crossbar-full, one-crossbar-semi)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceArray {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossbarConfig {
    pub r_f: f64,
    pub r_x: f64,
    pub v_dd: f64,
    pub v_ss: f64,
    /// Largest admissible |input| (V).
    pub input_limit: f64,
    /// Largest admissible device current during reads (A).
    pub read_current_limit: f64,
    /// Fixed `M-` resistance; `None` selects the harmonic mean of LRS and
    /// HRS, which centers the representable weight range on zero.
    pub reference_ohms: Option<f64>,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        CrossbarConfig {
            r_f: 500e3,
            r_x: 500e3,
            v_dd: 1.0,
            v_ss: -1.0,
            input_limit: 0.5,
            read_current_limit: 3e-6,
            reference_ohms: None,
        }
    }
}

impl CrossbarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_ss < 0.0 && 0.0 < self.v_dd) {
            return Err(Error::InvalidConfig(format!(
                "rails must satisfy v_ss < 0 < v_dd, got v_ss = {}, v_dd = {}",
                self.v_ss, self.v_dd
            )));
        }
        if !(self.r_f > 0.0 && self.r_x > 0.0) {
            return Err(Error::InvalidConfig("r_f and r_x must be positive".into()));
        }
        if !(self.input_limit > 0.0) {
            return Err(Error::InvalidConfig("input_limit must be positive".into()));
        }
        if !(self.read_current_limit > 0.0) {
            return Err(Error::InvalidConfig("read_current_limit must be positive".into()));
        }
        if let Some(r) = self.reference_ohms {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig("reference_ohms must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn reference_resistance(&self, params: &MemristorParams) -> f64 {
        self.reference_ohms
            .unwrap_or(2.0 * params.r_on * params.r_off / (params.r_on + params.r_off))
    }

    /// Representable weight interval for a cell whose `M-` is `m_minus`.
    pub fn weight_range(&self, params: &MemristorParams, m_minus: f64) -> (f64, f64) {
        (
            self.r_f / params.r_off - self.r_f / m_minus,
            self.r_f / params.r_on - self.r_f / m_minus,
        )
    }
}

/// Result of a crossbar read.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadOut {
    /// Rail-limited neuron outputs.
    pub output: Vec<f64>,
    /// Outputs with every stage left unclipped.
    pub ideal: Vec<f64>,
    /// Unclipped first-stage voltages (two-crossbar topologies only; a
    /// single shared node for the semi variant).
    pub vx_ideal: Vec<f64>,
    pub vx_clipped: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// Magnitude-sum bound on the first-stage node.
    VxSum {
        column: Option<usize>,
        sum: f64,
        limit: f64,
    },
    /// The first-stage node left the rails and was clipped.
    VxRail { column: Option<usize>, ideal: f64 },
    /// Per-term bound of the single-amplifier neuron.
    TermLimit {
        row: usize,
        column: usize,
        term: f64,
        limit: f64,
    },
    /// The neuron output left the rails and was clipped.
    OutputRail { column: usize, ideal: f64 },
    /// A device carries more than the inference current ceiling.
    ReadCurrent {
        array: DeviceArray,
        row: usize,
        column: usize,
        current: f64,
        limit: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn clips(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::VxRail { .. } | Violation::OutputRail { .. }))
    }

    pub fn count(&self, pred: impl Fn(&Violation) -> bool) -> usize {
        self.violations.iter().filter(|v| pred(v)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarLayer {
    rows: usize,
    cols: usize,
    topology: Topology,
    config: CrossbarConfig,
    plus: Vec<MemristorDevice>,
    minus: Vec<MemristorDevice>,
    frozen: bool,
}

impl CrossbarLayer {
    /// A layer with every weight at zero: all devices sit at the reference
    /// resistance.
    pub fn new(
        rows: usize,
        cols: usize,
        topology: Topology,
        config: CrossbarConfig,
        params: MemristorParams,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(format!(
                "layer dimensions must be at least 1, got {rows}x{cols}"
            )));
        }
        config.validate()?;
        params.validate()?;
        let reference = config.reference_resistance(&params);
        if !(params.r_on <= reference && reference <= params.r_off) {
            return Err(Error::InvalidConfig(format!(
                "reference resistance {reference} lies outside [{}, {}]",
                params.r_on, params.r_off
            )));
        }
        let device = MemristorDevice::with_resistance(params, reference);
        Ok(CrossbarLayer {
            rows,
            cols,
            topology,
            config,
            plus: vec![device; rows * cols],
            minus: vec![device; topology.minus_count(rows, cols)],
            frozen: false,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn config(&self) -> &CrossbarConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: CrossbarConfig) -> Result<()> {
        config.validate()?;
        self.config = config;
        Ok(())
    }

    pub fn plus_devices(&self) -> &[MemristorDevice] {
        &self.plus
    }

    pub fn minus_devices(&self) -> &[MemristorDevice] {
        &self.minus
    }

    pub(crate) fn plus_devices_mut(&mut self) -> &mut [MemristorDevice] {
        &mut self.plus
    }

    pub(crate) fn minus_devices_mut(&mut self) -> &mut [MemristorDevice] {
        &mut self.minus
    }

    pub fn device_count(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    /// Marks every device as fixed.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn is_trainable(&self, array: DeviceArray) -> bool {
        !self.frozen && (array == DeviceArray::Plus || !self.topology.is_semi())
    }

    /// Per-device trainability for the `M+` and `M-` arrays.
    pub fn trainable_mask(&self) -> (Vec<bool>, Vec<bool>) {
        (
            vec![self.is_trainable(DeviceArray::Plus); self.plus.len()],
            vec![self.is_trainable(DeviceArray::Minus); self.minus.len()],
        )
    }

    #[inline]
    pub(crate) fn minus_index(&self, row: usize, col: usize) -> usize {
        match self.topology {
            Topology::TwoCrossbarSemi => row,
            _ => row * self.cols + col,
        }
    }

    fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    pub fn plus(&self, row: usize, col: usize) -> &MemristorDevice {
        &self.plus[row * self.cols + col]
    }

    /// The `M-` device paired with cell `(row, col)`.
    pub fn minus(&self, row: usize, col: usize) -> &MemristorDevice {
        &self.minus[self.minus_index(row, col)]
    }

    pub fn weight(&self, row: usize, col: usize) -> Result<f64> {
        self.check_index(row, col)?;
        Ok(self.weight_unchecked(row, col))
    }

    #[inline]
    fn weight_unchecked(&self, row: usize, col: usize) -> f64 {
        let r_f = self.config.r_f;
        r_f / self.plus(row, col).resistance() - r_f / self.minus(row, col).resistance()
    }

    /// Row-major `rows x cols` weight matrix.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| self.weight_unchecked(i, j))
            .collect()
    }

    /// Weights reachable by reprogramming `M+` of cell `(row, col)` with its
    /// `M-` held at the present value.
    pub fn weight_range(&self, row: usize, col: usize) -> Result<(f64, f64)> {
        self.check_index(row, col)?;
        let plus = self.plus(row, col);
        Ok(self
            .config
            .weight_range(&plus.params, self.minus(row, col).resistance()))
    }

    /// Sets every `M+` so that `weight(i, j) == beta[i * cols + j]`, leaving
    /// `M-` untouched. Validates the whole matrix before writing.
    pub fn program_weights(&mut self, beta: &[f64]) -> Result<()> {
        let expected = self.rows * self.cols;
        if beta.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: beta.len(),
            });
        }
        let r_f = self.config.r_f;
        let mut targets = Vec::with_capacity(expected);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let b = beta[i * self.cols + j];
                let (min, max) = self.weight_range(i, j)?;
                let tol = 1e-12 * (max - min).abs().max(1.0);
                if !(b.is_finite() && b >= min - tol && b <= max + tol) {
                    return Err(Error::Unrepresentable {
                        row: i,
                        col: j,
                        value: b,
                        min,
                        max,
                    });
                }
                let conductance = b / r_f + 1.0 / self.minus(i, j).resistance();
                targets.push(1.0 / conductance);
            }
        }
        for (device, r) in self.plus.iter_mut().zip(targets) {
            device.set_resistance(r);
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                actual: x.len(),
            });
        }
        let limit = self.config.input_limit;
        for (index, &value) in x.iter().enumerate() {
            if !value.is_finite() || value.abs() > limit {
                return Err(Error::InputAboveLimit { index, value, limit });
            }
        }
        Ok(())
    }

    fn clip(&self, v: f64) -> f64 {
        v.clamp(self.config.v_ss, self.config.v_dd)
    }

    /// First-stage node voltages `V_x = sum_i x_i * (-R_x / M-_i)`.
    fn vx_ideal(&self, x: &[f64]) -> Vec<f64> {
        let r_x = self.config.r_x;
        match self.topology {
            Topology::TwoCrossbarSemi => {
                vec![x
                    .iter()
                    .zip(&self.minus)
                    .map(|(xi, m)| xi * (-r_x / m.resistance()))
                    .sum()]
            }
            Topology::TwoCrossbarFull => (0..self.cols)
                .map(|j| {
                    (0..self.rows)
                        .map(|i| x[i] * (-r_x / self.minus(i, j).resistance()))
                        .sum()
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn read(&self, x: &[f64]) -> Result<ReadOut> {
        self.check_input(x)?;
        let r_f = self.config.r_f;
        let mut output = Vec::with_capacity(self.cols);
        let mut ideal = Vec::with_capacity(self.cols);
        let vx_ideal = self.vx_ideal(x);
        let vx_clipped: Vec<f64> = vx_ideal.iter().map(|&v| self.clip(v)).collect();

        // Accumulate the M+ path once per column.
        let mut plus_sum = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            let row = &self.plus[i * self.cols..(i + 1) * self.cols];
            for (acc, m) in plus_sum.iter_mut().zip(row) {
                *acc += xi * (-r_f / m.resistance());
            }
        }

        for (j, plus_j) in plus_sum.iter().enumerate() {
            let (stage_ideal, stage) = match self.topology {
                Topology::TwoCrossbarFull | Topology::TwoCrossbarSemi => {
                    let node = if self.topology == Topology::TwoCrossbarSemi {
                        0
                    } else {
                        j
                    };
                    let gain = -r_f / self.config.r_x;
                    (plus_j + vx_ideal[node] * gain, plus_j + vx_clipped[node] * gain)
                }
                Topology::OneCrossbarFull | Topology::OneCrossbarSemi => {
                    let minus_j: f64 = (0..self.rows)
                        .map(|i| x[i] * (r_f / self.minus(i, j).resistance()))
                        .sum();
                    let v = plus_j + minus_j;
                    (v, v)
                }
            };
            ideal.push(-stage_ideal);
            output.push(self.clip(-stage));
        }
        Ok(ReadOut {
            output,
            ideal,
            vx_ideal,
            vx_clipped,
        })
    }

    /// Device currents during a read with input `x`, as `(array, row, col,
    /// |I|)`. Bit-lines and first-stage nodes are virtual grounds, so each
    /// device sees the full input voltage.
    pub fn read_currents(&self, x: &[f64]) -> Result<Vec<(DeviceArray, usize, usize, f64)>> {
        if x.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                actual: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.device_count());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push((DeviceArray::Plus, i, j, x[i].abs() / self.plus(i, j).resistance()));
            }
        }
        match self.topology {
            Topology::TwoCrossbarSemi => {
                for (i, m) in self.minus.iter().enumerate() {
                    out.push((DeviceArray::Minus, i, 0, x[i].abs() / m.resistance()));
                }
            }
            _ => {
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        out.push((DeviceArray::Minus, i, j, x[i].abs() / self.minus(i, j).resistance()));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest |input| for which no device exceeds the read-current ceiling.
    pub fn safe_read_amplitude(&self) -> f64 {
        let r_min = self
            .plus
            .iter()
            .chain(&self.minus)
            .map(|d| d.resistance())
            .fold(f64::INFINITY, f64::min);
        (self.config.read_current_limit * r_min).min(self.config.input_limit)
    }

    pub fn check_constraints(&self, x: &[f64]) -> Result<ViolationReport> {
        let read = self.read(x)?;
        let span = self.config.v_dd - self.config.v_ss;
        let mut violations = Vec::new();
        let node_column = |node: usize| match self.topology {
            Topology::TwoCrossbarSemi => None,
            _ => Some(node),
        };

        if self.topology.is_two_crossbar() {
            for (node, &v) in read.vx_ideal.iter().enumerate() {
                if v.abs() > span {
                    violations.push(Violation::VxSum {
                        column: node_column(node),
                        sum: v.abs(),
                        limit: span,
                    });
                }
                if v > self.config.v_dd || v < self.config.v_ss {
                    violations.push(Violation::VxRail {
                        column: node_column(node),
                        ideal: v,
                    });
                }
            }
        } else {
            let r_f = self.config.r_f;
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let term = (x[i] * r_f / self.minus(i, j).resistance()).abs();
                    if term > span {
                        violations.push(Violation::TermLimit {
                            row: i,
                            column: j,
                            term,
                            limit: span,
                        });
                    }
                }
            }
        }

        for (column, &v) in read.ideal.iter().enumerate() {
            if v > self.config.v_dd || v < self.config.v_ss {
                violations.push(Violation::OutputRail { column, ideal: v });
            }
        }

        let limit = self.config.read_current_limit;
        for (array, row, column, current) in self.read_currents(x)? {
            if current > limit {
                violations.push(Violation::ReadCurrent {
                    array,
                    row,
                    column,
                    current,
                    limit,
                });
            }
        }
        Ok(ViolationReport { violations })
    }

    /// Returns a copy whose column `j` is this layer's column `perm[j]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.cols)?;
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, &src) in perm.iter().enumerate() {
                out.plus[i * self.cols + j] = self.plus[i * self.cols + src];
                if self.topology != Topology::TwoCrossbarSemi {
                    out.minus[i * self.cols + j] = self.minus[i * self.cols + src];
                }
            }
        }
        Ok(out)
    }

    /// Returns a copy whose row `i` is this layer's row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rows)?;
        let mut out = self.clone();
        for (i, &src) in perm.iter().enumerate() {
            let (dst, from) = (i * self.cols, src * self.cols);
            out.plus[dst..dst + self.cols].copy_from_slice(&self.plus[from..from + self.cols]);
            match self.topology {
                Topology::TwoCrossbarSemi => out.minus[i] = self.minus[src],
                _ => out.minus[dst..dst + self.cols].copy_from_slice(&self.minus[from..from + self.cols]),
            }
        }
        Ok(out)
    }

    pub fn to_snapshot(&self) -> LayerSnapshot {
        LayerSnapshot {
            topology: self.topology,
            rows: self.rows,
            cols: self.cols,
            r_f_ohms: self.config.r_f,
            r_x_ohms: self.config.r_x,
            v_dd: self.config.v_dd,
            v_ss: self.config.v_ss,
            input_limit_v: self.config.input_limit,
            read_current_limit_a: self.config.read_current_limit,
            reference_ohms: self.config.reference_ohms,
            frozen: self.frozen,
            plus: ArraySnapshot::capture(&self.plus),
            minus: ArraySnapshot::capture(&self.minus),
        }
    }

    pub fn from_snapshot(snap: &LayerSnapshot) -> Result<Self> {
        let config = CrossbarConfig {
            r_f: snap.r_f_ohms,
            r_x: snap.r_x_ohms,
            v_dd: snap.v_dd,
            v_ss: snap.v_ss,
            input_limit: snap.input_limit_v,
            read_current_limit: snap.read_current_limit_a,
            reference_ohms: snap.reference_ohms,
        };
        config.validate()?;
        if snap.rows == 0 || snap.cols == 0 {
            return Err(Error::InvalidConfig("snapshot has a zero dimension".into()));
        }
        let plus = snap.plus.restore(snap.rows * snap.cols)?;
        let minus = snap.minus.restore(snap.topology.minus_count(snap.rows, snap.cols))?;
        Ok(CrossbarLayer {
            rows: snap.rows,
            cols: snap.cols,
            topology: snap.topology,
            config,
            plus,
            minus,
            frozen: snap.frozen,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_snapshot())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        CrossbarLayer::from_snapshot(&serde_json::from_str(s)?)
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: perm.len(),
        });
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidConfig(format!("not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// JSON form of a layer. Resistances are row-major ohms; `state`, `lrs_ohms`
/// and `hrs_ohms` carry what is needed to restore each device exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSnapshot {
    pub topology: Topology,
    pub rows: usize,
    pub cols: usize,
    pub r_f_ohms: f64,
    pub r_x_ohms: f64,
    pub v_dd: f64,
    pub v_ss: f64,
    pub input_limit_v: f64,
    pub read_current_limit_a: f64,
    pub reference_ohms: Option<f64>,
    pub frozen: bool,
    pub plus: ArraySnapshot,
    pub minus: ArraySnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySnapshot {
    pub params: MemristorParams,
    pub resistance_ohms: Vec<f64>,
    pub state: Vec<f64>,
    pub lrs_ohms: Vec<f64>,
    pub hrs_ohms: Vec<f64>,
}

impl ArraySnapshot {
    fn capture(devices: &[MemristorDevice]) -> Self {
        ArraySnapshot {
            params: devices[0].params,
            resistance_ohms: devices.iter().map(|d| d.resistance()).collect(),
            state: devices.iter().map(|d| d.state()).collect(),
            lrs_ohms: devices.iter().map(|d| d.params.r_on).collect(),
            hrs_ohms: devices.iter().map(|d| d.params.r_off).collect(),
        }
    }

    fn restore(&self, expected: usize) -> Result<Vec<MemristorDevice>> {
        for len in [
            self.resistance_ohms.len(),
            self.state.len(),
            self.lrs_ohms.len(),
            self.hrs_ohms.len(),
        ] {
            if len != expected {
                return Err(Error::LengthMismatch { expected, actual: len });
            }
        }
        (0..expected)
            .map(|k| {
                let params = MemristorParams {
                    r_on: self.lrs_ohms[k],
                    r_off: self.hrs_ohms[k],
                    ..self.params
                };
                params.validate()?;
                Ok(MemristorDevice::new(params, self.state[k]))
            })
            .collect()
    }
}
