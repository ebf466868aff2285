// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use memxbar::learning::{ideal_weight_update, Phase};
use memxbar::{
    CrossbarConfig, CrossbarLayer, DeviceArray, DeviceConfig, MemristorDevice, MemristorParams, Topology,
    TrainingConfig, TrainingEngine,
};
use proptest::prelude::*;

fn params() -> MemristorParams {
    MemristorParams::calibrated(&DeviceConfig::default()).unwrap()
}

/// A layer with `M+` programmed to `fractions` of each cell's weight range.
fn programmed(topology: Topology, n: usize, k: usize, fractions: &[f64]) -> CrossbarLayer {
    let mut layer = CrossbarLayer::new(n, k, topology, CrossbarConfig::default(), params()).unwrap();
    let beta: Vec<f64> = (0..n * k)
        .map(|c| {
            let (lo, hi) = layer.weight_range(c / k, c % k).unwrap();
            lo + (hi - lo) * fractions[c % fractions.len()]
        })
        .collect();
    layer.program_weights(&beta).unwrap();
    layer
}

fn layer_case() -> impl Strategy<Value = (Topology, usize, usize, Vec<f64>, Vec<f64>)> {
    (0usize..4, 1usize..7, 1usize..5).prop_flat_map(|(t, n, k)| {
        (
            Just(Topology::ALL[t]),
            Just(n),
            Just(k),
            proptest::collection::vec(0.05f64..0.95, n * k),
            proptest::collection::vec(-1.0f64..1.0, n),
        )
    })
}

fn states(devices: &[MemristorDevice]) -> Vec<u64> {
    devices.iter().map(|d| d.state().to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unclipped_read_is_the_matrix_product((topology, n, k, fr, u) in layer_case()) {
        let layer = programmed(topology, n, k, &fr);
        let x: Vec<f64> = u.iter().map(|v| 0.45 * v).collect();
        let read = layer.read(&x).unwrap();
        let r_f = layer.config().r_f;
        for j in 0..k {
            let (mut dot, mut scale) = (0.0, 1e-12);
            for (i, xi) in x.iter().enumerate() {
                let b = r_f / layer.plus(i, j).resistance() - r_f / layer.minus(i, j).resistance();
                dot += xi * b;
                scale += (xi * b).abs();
            }
            prop_assert!((read.ideal[j] - dot).abs() <= 1e-9 * scale, "{} vs {}", read.ideal[j], dot);
        }
    }

    #[test]
    fn one_crossbar_output_is_exact_without_violations((topology, n, k, fr, u) in layer_case()) {
        let topology = if topology.is_semi() { Topology::OneCrossbarSemi } else { Topology::OneCrossbarFull };
        let layer = programmed(topology, n, k, &fr);
        let x: Vec<f64> = u.iter().map(|v| 0.1 * v).collect();
        let report = layer.check_constraints(&x).unwrap();
        let read = layer.read(&x).unwrap();
        if report.is_empty() {
            for j in 0..k {
                prop_assert!((read.output[j] - read.ideal[j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn programming_inverts_weight((topology, n, k, fr, _u) in layer_case()) {
        let mut layer = CrossbarLayer::new(n, k, topology, CrossbarConfig::default(), params()).unwrap();
        let beta: Vec<f64> = (0..n * k)
            .map(|c| {
                let (lo, hi) = layer.weight_range(c / k, c % k).unwrap();
                lo + (hi - lo) * fr[c]
            })
            .collect();
        let minus_before = states(layer.minus_devices());
        layer.program_weights(&beta).unwrap();
        for (got, want) in layer.weights().iter().zip(&beta) {
            prop_assert!((got - want).abs() <= 1e-9);
        }
        prop_assert_eq!(states(layer.minus_devices()), minus_before);
    }

    #[test]
    fn semi_weight_range_follows_the_reference(reference in 100e3f64..250e3, r_f in 10e3f64..1e6) {
        let cfg = CrossbarConfig { r_f, reference_ohms: Some(reference), ..CrossbarConfig::default() };
        let layer = CrossbarLayer::new(2, 3, Topology::OneCrossbarSemi, cfg, params()).unwrap();
        let (lo, hi) = layer.weight_range(1, 2).unwrap();
        prop_assert!((lo - (r_f / 250e3 - r_f / reference)).abs() <= 1e-12 * r_f / 100e3);
        prop_assert!((hi - (r_f / 100e3 - r_f / reference)).abs() <= 1e-12 * r_f / 100e3);
    }

    /// Only pulsed devices change (reads at a safe amplitude are inert); each
    /// pulse lands in its column's clock cycles, increments only in the first
    /// training phase and decrements only in the second.
    #[test]
    fn sample_pulses_are_isolated_and_phase_pure(
        (topology, n, k, fr, u) in layer_case(),
        targets in proptest::collection::vec(-0.3f64..0.3, 4),
        alpha in 0.001f64..0.01,
    ) {
        let mut layer = programmed(topology, n, k, &fr);
        let amp = 0.99 * layer.safe_read_amplitude();
        let x: Vec<f64> = u.iter().map(|v| amp * v).collect();
        let t = &targets[..k];
        let plus_before = layer.plus_devices().to_vec();
        let minus_before = layer.minus_devices().to_vec();
        let cfg = TrainingConfig { alpha: Some(alpha), ..TrainingConfig::default() };
        let mut engine = TrainingEngine::new(cfg, 0);
        let (report, trace) = engine.train_sample_traced(&mut layer, &x, t).unwrap();
        prop_assert_eq!(report.pulses as usize, trace.len());

        let mut pulsed = HashSet::new();
        let r_f = layer.config().r_f;
        let span = layer.plus(0, 0).params.r_off - layer.plus(0, 0).params.r_on;
        for e in &trace {
            prop_assert_eq!(e.column as u64, (e.cycle - 1) / 2);
            let first = (e.cycle - 1) % 2 == 0;
            prop_assert_eq!(e.phase, if first { Phase::TrainC1 } else { Phase::TrainC2 });
            let raises_beta = match e.array {
                DeviceArray::Plus => e.current < 0.0,
                DeviceArray::Minus => e.current > 0.0,
            };
            prop_assert_eq!(raises_beta, first);
            let idx = match (e.array, topology) {
                (DeviceArray::Minus, Topology::TwoCrossbarSemi) => e.row,
                _ => e.row * k + e.column,
            };
            pulsed.insert((e.array, idx));

            if e.array == DeviceArray::Plus {
                let s_err = if report.error_bits.bits[e.column] { 1.0 } else { -1.0 };
                let ideal = ideal_weight_update(e.r_before, r_f, 0.01, x[e.row], s_err, &layer.plus(0, 0).params);
                prop_assert_eq!((ideal - e.r_before).signum(), (e.r_after - e.r_before).signum());
                let interior = |r: f64| r > 100e3 && r < 250e3;
                if interior(e.r_before) && interior(e.r_after) {
                    let step = (e.r_after - e.r_before).abs() / span;
                    prop_assert!((step - alpha).abs() <= 1e-9 * alpha, "step {} alpha {}", step, alpha);
                }
            }
        }
        for (idx, (a, b)) in plus_before.iter().zip(layer.plus_devices()).enumerate() {
            if !pulsed.contains(&(DeviceArray::Plus, idx)) {
                prop_assert_eq!(a.state().to_bits(), b.state().to_bits());
            }
        }
        for (idx, (a, b)) in minus_before.iter().zip(layer.minus_devices()).enumerate() {
            if !pulsed.contains(&(DeviceArray::Minus, idx)) {
                prop_assert_eq!(a.state().to_bits(), b.state().to_bits());
            }
        }
        if topology.is_semi() {
            prop_assert!(trace.iter().all(|e| e.array == DeviceArray::Plus));
        }
    }

    #[test]
    fn calibrated_pulse_moves_the_configured_fraction(
        lrs in 20e3f64..200e3,
        ratio in 1.2f64..10.0,
        fraction in 0.001f64..0.05,
        w in 0.1f64..0.9,
    ) {
        let cfg = DeviceConfig { lrs_ohms: lrs, hrs_ohms: lrs * ratio, pulse_step_fraction: fraction, ..DeviceConfig::default() };
        let p = MemristorParams::calibrated(&cfg).unwrap();
        let mut up = MemristorDevice::new(p, w);
        up.pulse(4e-6, 10e-9).unwrap();
        prop_assert!((up.state() - w - fraction).abs() <= 1e-9 * fraction);
        let mut down = MemristorDevice::new(p, w);
        down.pulse(-4e-6, 10e-9).unwrap();
        prop_assert!((w - down.state() - fraction).abs() <= 1e-9 * fraction);
    }
}

fn epoch_data(samples: usize, n: usize, k: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let inputs = (0..samples)
        .map(|s| {
            (0..n)
                .map(|i| 0.25 * (((s * 7 + i * 3) % 11) as f64 / 5.0 - 1.0))
                .collect()
        })
        .collect();
    let targets = (0..samples)
        .map(|s| (0..k).map(|j| if s % k == j { 0.3 } else { -0.3 }).collect())
        .collect();
    (inputs, targets)
}

#[test]
fn epoch_cycle_accounting() {
    let (inputs, targets) = epoch_data(100, 5, 4);
    let mut layer = programmed(Topology::OneCrossbarSemi, 5, 4, &[0.5]);
    let mut engine = TrainingEngine::new(TrainingConfig::default(), 3);
    let report = engine.train_epoch(&mut layer, &inputs, &targets).unwrap();
    assert_eq!(report.cycles, 900);
    assert_eq!(engine.total_cycles(), 900);
    let mut seen: Vec<usize> = report.samples.iter().map(|s| s.sample).collect();
    assert_ne!(seen, (0..100).collect::<Vec<_>>(), "order is shuffled");
    seen.sort_unstable();
    assert_eq!(seen, (0..100).collect::<Vec<_>>());
    assert_eq!(report.pulses, report.samples.iter().map(|s| s.pulses).sum::<u64>());
}

#[test]
fn epochs_are_deterministic_per_seed() {
    let (inputs, targets) = epoch_data(40, 3, 2);
    let run = |seed| {
        let mut layer = programmed(Topology::OneCrossbarFull, 3, 2, &[0.3, 0.6]);
        let mut engine = TrainingEngine::new(
            TrainingConfig {
                mirror_ripple: 0.05,
                ..TrainingConfig::default()
            },
            seed,
        );
        for _ in 0..3 {
            engine.train_epoch(&mut layer, &inputs, &targets).unwrap();
        }
        layer
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1).weights(), run(2).weights());
}

#[test]
fn empty_or_mismatched_epochs_are_rejected() {
    let mut layer = programmed(Topology::OneCrossbarSemi, 2, 2, &[0.5]);
    let mut engine = TrainingEngine::new(TrainingConfig::default(), 0);
    assert!(engine.train_epoch(&mut layer, &[], &[]).is_err());
    assert!(engine.train_epoch(&mut layer, &[vec![0.1, 0.1]], &[]).is_err());
    assert!(engine.train_sample(&mut layer, &[0.1, 0.1], &[0.3]).is_err());
}

#[test]
fn snapshot_round_trip_is_bit_exact() {
    for topology in Topology::ALL {
        let mut layer = programmed(topology, 4, 3, &[0.13, 0.71, 0.377, 0.9]);
        if topology == Topology::TwoCrossbarFull {
            layer.freeze();
        }
        let back = CrossbarLayer::from_json(&layer.to_json().unwrap()).unwrap();
        assert_eq!(back, layer);
        assert_eq!(states(back.plus_devices()), states(layer.plus_devices()));
        assert_eq!(states(back.minus_devices()), states(layer.minus_devices()));
        let w: Vec<u64> = layer.weights().iter().map(|v| v.to_bits()).collect();
        assert_eq!(back.weights().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), w);
    }
}
