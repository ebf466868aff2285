// SPDX-License-Identifier: Apache-2.0

//! Threshold-current memristor (TEAM) with pulse-driven state updates.
//!
//! The state variable is normalized to `[0, 1]` and maps linearly onto
//! `[r_on, r_off]`. Positive current above `i_off` drives the state towards
//! `w_max` (higher resistance); negative current below `i_on` drives it
//! towards `w_min`. Between the two thresholds the device is a fixed resistor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference training current used to calibrate the switching rates (A).
pub const CALIBRATION_CURRENT: f64 = 4e-6;
/// Controller clock period at 100 MHz (s).
pub const CLOCK_PERIOD: f64 = 10e-9;
/// Default forward-Euler substeps per pulse.
pub const DEFAULT_SUBSTEPS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// `f = 1` in the interior, `0` at the bound the motion approaches.
    #[default]
    HardBounds,
}

/// Device-level keys of the global configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub lrs_ohms: f64,
    pub hrs_ohms: f64,
    pub i_off_ua: f64,
    /// Signed; negative.
    pub i_on_ua: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    /// Fraction of the state span moved by one 4 uA pulse lasting one clock.
    pub pulse_step_fraction: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            lrs_ohms: 100e3,
            hrs_ohms: 250e3,
            i_off_ua: 3.2,
            i_on_ua: -3.2,
            alpha_on: 1.0,
            alpha_off: 1.0,
            pulse_step_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemristorParams {
    /// Negative: rate towards `w_min`.
    pub k_on: f64,
    pub k_off: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    pub i_on: f64,
    pub i_off: f64,
    pub r_on: f64,
    pub r_off: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub window: Window,
}

impl Default for MemristorParams {
    fn default() -> Self {
        MemristorParams::calibrated(&DeviceConfig::default()).expect("default device configuration is valid")
    }
}

impl MemristorParams {
    /// Builds parameters whose switching rates are calibrated so that a
    /// `CALIBRATION_CURRENT` pulse of one `CLOCK_PERIOD` moves the state by
    /// `pulse_step_fraction` of its span, symmetrically in both directions.
    pub fn calibrated(cfg: &DeviceConfig) -> Result<Self> {
        let i_off = cfg.i_off_ua * 1e-6;
        let i_on = cfg.i_on_ua * 1e-6;
        if !(cfg.pulse_step_fraction > 0.0 && cfg.pulse_step_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "pulse_step_fraction must be in (0, 1], got {}",
                cfg.pulse_step_fraction
            )));
        }
        if !(cfg.alpha_on > 0.0 && cfg.alpha_off > 0.0) {
            return Err(Error::InvalidParams("alpha_on and alpha_off must be positive".into()));
        }
        if !(CALIBRATION_CURRENT > i_off && -CALIBRATION_CURRENT < i_on) {
            return Err(Error::InvalidParams(format!(
                "thresholds must lie inside the {} uA calibration current",
                CALIBRATION_CURRENT * 1e6
            )));
        }
        let (w_min, w_max) = (0.0, 1.0);
        let step = cfg.pulse_step_fraction * (w_max - w_min) / CLOCK_PERIOD;
        let k_off = step / (CALIBRATION_CURRENT / i_off - 1.0).powf(cfg.alpha_off);
        let k_on = -step / (-CALIBRATION_CURRENT / i_on - 1.0).powf(cfg.alpha_on);
        let params = MemristorParams {
            k_on,
            k_off,
            alpha_on: cfg.alpha_on,
            alpha_off: cfg.alpha_off,
            i_on,
            i_off,
            r_on: cfg.lrs_ohms,
            r_off: cfg.hrs_ohms,
            w_min,
            w_max,
            window: Window::HardBounds,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.k_on,
            self.k_off,
            self.alpha_on,
            self.alpha_off,
            self.i_on,
            self.i_off,
            self.r_on,
            self.r_off,
            self.w_min,
            self.w_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if !(self.i_on < 0.0 && 0.0 < self.i_off) {
            return Err(Error::InvalidParams(format!(
                "need i_on < 0 < i_off, got i_on = {}, i_off = {}",
                self.i_on, self.i_off
            )));
        }
        if !(0.0 < self.r_on && self.r_on < self.r_off) {
            return Err(Error::InvalidParams(format!(
                "need 0 < r_on < r_off, got r_on = {}, r_off = {}",
                self.r_on, self.r_off
            )));
        }
        if !(self.w_min < self.w_max) {
            return Err(Error::InvalidParams("need w_min < w_max".into()));
        }
        if !(self.k_off >= 0.0 && self.k_on <= 0.0) {
            return Err(Error::InvalidParams("need k_off >= 0 and k_on <= 0".into()));
        }
        Ok(())
    }

    /// Whether `current` lies in the closed dead zone `[i_on, i_off]`.
    #[inline]
    pub fn is_sub_threshold(&self, current: f64) -> bool {
        self.i_on <= current && current <= self.i_off
    }

    /// State change produced by one pulse of `current` lasting `duration`
    /// from an interior state, ignoring the window.
    pub fn interior_step(&self, current: f64, duration: f64) -> f64 {
        self.rate(current) * duration
    }

    #[inline]
    fn rate(&self, current: f64) -> f64 {
        if current > self.i_off {
            self.k_off * pow(current / self.i_off - 1.0, self.alpha_off)
        } else if current < self.i_on {
            self.k_on * pow(current / self.i_on - 1.0, self.alpha_on)
        } else {
            0.0
        }
    }
}

#[inline]
fn pow(base: f64, exponent: f64) -> f64 {
    if exponent == 1.0 {
        base
    } else {
        base.powf(exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemristorDevice {
    pub params: MemristorParams,
    w: f64,
}

impl MemristorDevice {
    /// A device at state `w`, clamped into `[w_min, w_max]`.
    pub fn new(params: MemristorParams, w: f64) -> Self {
        MemristorDevice {
            params,
            w: w.clamp(params.w_min, params.w_max),
        }
    }

    /// A device whose resistance is `r` (clamped into `[r_on, r_off]`).
    pub fn with_resistance(params: MemristorParams, r: f64) -> Self {
        let mut d = MemristorDevice::new(params, params.w_min);
        d.set_resistance(r);
        d
    }

    #[inline]
    pub fn state(&self) -> f64 {
        self.w
    }

    pub fn set_state(&mut self, w: f64) {
        self.w = w.clamp(self.params.w_min, self.params.w_max);
    }

    pub fn set_resistance(&mut self, r: f64) {
        let p = &self.params;
        let w = p.w_min + (r - p.r_on) / (p.r_off - p.r_on) * (p.w_max - p.w_min);
        self.set_state(w);
    }

    #[inline]
    pub fn resistance(&self) -> f64 {
        let p = &self.params;
        p.r_on + (self.w - p.w_min) / (p.w_max - p.w_min) * (p.r_off - p.r_on)
    }

    #[inline]
    pub fn conductance(&self) -> f64 {
        1.0 / self.resistance()
    }

    pub fn state_derivative(&self, current: f64) -> f64 {
        let p = &self.params;
        let rate = p.rate(current);
        let window = if rate > 0.0 {
            (self.w < p.w_max) as u8 as f64
        } else if rate < 0.0 {
            (self.w > p.w_min) as u8 as f64
        } else {
            0.0
        };
        rate * window
    }

    /// Forward-Euler integration of a constant-current pulse.
    pub fn apply_pulse(&mut self, current: f64, duration: f64, dt: f64) -> Result<()> {
        if !current.is_finite() {
            return Err(Error::NonFiniteCurrent(current));
        }
        if !(dt > 0.0 && dt.is_finite() && duration >= 0.0 && duration.is_finite()) {
            return Err(Error::InvalidTimeStep { dt, duration });
        }
        if self.params.is_sub_threshold(current) || duration == 0.0 {
            return Ok(());
        }
        let ratio = duration / dt;
        let steps = ((ratio - 1e-9).ceil() as usize).max(1);
        let h = duration / steps as f64;
        let (lo, hi) = (self.params.w_min, self.params.w_max);
        for _ in 0..steps {
            let dw = self.state_derivative(current);
            if dw == 0.0 {
                break;
            }
            self.w = (self.w + dw * h).clamp(lo, hi);
        }
        Ok(())
    }

    /// Applies a pulse using `DEFAULT_SUBSTEPS` Euler steps.
    pub fn pulse(&mut self, current: f64, duration: f64) -> Result<()> {
        self.apply_pulse(
            current,
            duration,
            duration.max(f64::MIN_POSITIVE) / DEFAULT_SUBSTEPS as f64,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn device(w: f64) -> MemristorDevice {
        MemristorDevice::new(MemristorParams::default(), w)
    }

    #[test]
    fn resistance_endpoints() {
        assert_eq!(device(0.0).resistance(), 100e3);
        assert_eq!(device(1.0).resistance(), 250e3);
        assert_eq!(device(0.5).resistance(), 175e3);
    }

    #[test]
    fn calibration_matches_one_percent_per_clock() {
        let p = MemristorParams::default();
        // k_off = 0.01 / (10 ns * (4 / 3.2 - 1)) = 4e6 per second
        assert!((p.k_off - 4e6).abs() / 4e6 < 1e-12);
        assert!((p.k_on + 4e6).abs() / 4e6 < 1e-12);
        let mut d = device(0.5);
        d.pulse(4e-6, CLOCK_PERIOD).unwrap();
        assert!((d.state() - 0.51).abs() < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let d = device(0.5);
        assert_eq!(d.state_derivative(3.0e-6), 0.0);
        assert_eq!(d.state_derivative(3.2e-6), 0.0);
        assert_eq!(d.state_derivative(-3.2e-6), 0.0);
        // k_off * (4/3.2 - 1)^1 = 4e6 * 0.25
        let v = d.state_derivative(4e-6);
        assert!((v - 1e6).abs() < 1e-3, "{v}");
        assert!(d.state_derivative(-4e-6) < 0.0);
    }

    #[test]
    fn window_stops_motion_at_bounds() {
        assert_eq!(device(1.0).state_derivative(4e-6), 0.0);
        assert_eq!(device(0.0).state_derivative(-4e-6), 0.0);
        assert!(device(1.0).state_derivative(-4e-6) < 0.0);
    }

    #[test]
    fn pulse_examples() {
        let mut d = device(0.4);
        d.apply_pulse(0.0, 1e-6, 1e-9).unwrap();
        assert_eq!(d.state(), 0.4);

        let before = d.resistance();
        d.pulse(4e-6, CLOCK_PERIOD).unwrap();
        assert!(d.resistance() > before);

        // +4 uA then -4 uA of equal width from a deep-interior state
        let mut d = device(0.5);
        let start = d.state();
        d.pulse(4e-6, CLOCK_PERIOD).unwrap();
        let one = d.state() - start;
        d.pulse(-4e-6, CLOCK_PERIOD).unwrap();
        assert!((d.state() - start).abs() < 0.01 * one.abs());
    }

    #[test]
    fn pulse_rejects_bad_arguments() {
        let mut d = device(0.5);
        assert!(matches!(
            d.apply_pulse(f64::NAN, 1e-9, 1e-10),
            Err(Error::NonFiniteCurrent(_))
        ));
        assert!(matches!(
            d.apply_pulse(4e-6, 1e-9, 0.0),
            Err(Error::InvalidTimeStep { .. })
        ));
        assert!(matches!(
            d.apply_pulse(4e-6, -1e-9, 1e-10),
            Err(Error::InvalidTimeStep { .. })
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = DeviceConfig {
            lrs_ohms: 300e3,
            ..DeviceConfig::default()
        };
        assert!(MemristorParams::calibrated(&bad).is_err());
        let bad = DeviceConfig {
            i_on_ua: 3.2,
            ..DeviceConfig::default()
        };
        assert!(MemristorParams::calibrated(&bad).is_err());
        let bad = DeviceConfig {
            i_off_ua: 5.0,
            ..DeviceConfig::default()
        };
        assert!(MemristorParams::calibrated(&bad).is_err());
    }

    proptest! {
        #[test]
        fn sub_threshold_current_is_inert(w in 0.0f64..=1.0, i in -3.2e-6f64..=3.2e-6, dur in 0.0f64..1e-6) {
            let mut d = device(w);
            let before = d;
            d.pulse(i, dur).unwrap();
            prop_assert_eq!(d.state().to_bits(), before.state().to_bits());
        }

        #[test]
        fn state_stays_bounded_and_monotone(
            w in 0.0f64..=1.0,
            pulses in proptest::collection::vec((-20e-6f64..20e-6, 0.0f64..1e-7), 1..40),
        ) {
            let mut d = device(w);
            for (i, dur) in pulses {
                let before = d.state();
                d.pulse(i, dur).unwrap();
                prop_assert!((0.0..=1.0).contains(&d.state()));
                if i > 3.2e-6 { prop_assert!(d.state() >= before); }
                if i < -3.2e-6 { prop_assert!(d.state() <= before); }
            }
        }
    }
}
