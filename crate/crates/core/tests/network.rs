// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use memxbar::analysis::{self, PowerScenario, Trial, VariationConfig};
use memxbar::datasets::{self, Normalization, Normalizer, HOG_BINS, HOG_LEN};
use memxbar::elm::{self, normal_equation_oracle};
use memxbar::seed::{self, Stream};
use memxbar::{
    CrossbarConfig, CrossbarLayer, DeviceConfig, ElmConfig, ElmNetwork, FitConfig, LabeledDataset, MemristorParams,
    Topology, TrainingConfig,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn blobs(centers: &[Vec<f64>], sigma: f64, per_class: usize, seed: u64) -> LabeledDataset {
    let raw = datasets::gaussian_blobs(centers, sigma, per_class, seed).unwrap();
    datasets::prepare(&raw, &raw, Normalization::MinMax, elm::SIGNAL_SWING)
        .unwrap()
        .train
}

fn three_blobs(per_class: usize, sigma: f64, seed: u64) -> LabeledDataset {
    blobs(
        &[vec![-3.0, 0.0], vec![3.0, 0.0], vec![0.0, 3.0]],
        sigma,
        per_class,
        seed,
    )
}

fn fit_config(epochs: usize, seed: u64) -> FitConfig {
    FitConfig {
        epochs,
        patience: Some(50),
        training: TrainingConfig {
            alpha: Some(0.003),
            balance_columns: true,
            ..TrainingConfig::default()
        },
        alpha_decay: 1.0,
        seed,
    }
}

#[test]
fn separable_blobs_are_learned_and_hidden_layer_is_untouched() {
    let data = three_blobs(40, 0.3, 1);
    let mut net = ElmNetwork::init_random(1, 2, 20, 3, Topology::OneCrossbarSemi).unwrap();
    let hidden = net.hidden().clone();
    let reference = net.output().minus_devices().to_vec();
    let history = net.fit(&data, &fit_config(200, 1)).unwrap();
    assert_eq!(history.best_train_accuracy, 1.0);
    assert_eq!(net.evaluate(&data).unwrap(), 1.0);
    assert_eq!(net.hidden(), &hidden);
    assert_eq!(net.output().minus_devices(), &reference[..]);
    assert!(history.epochs.len() <= 200);
    assert_eq!(history.epochs[0].cycles, 120 * 7);
}

#[test]
fn fit_is_reproducible() {
    let data = three_blobs(20, 0.8, 2);
    let run = || {
        let mut net = ElmNetwork::init_random(5, 2, 10, 3, Topology::OneCrossbarFull).unwrap();
        let h = net.fit(&data, &fit_config(15, 9)).unwrap();
        (net, h.epochs)
    };
    assert_eq!(run(), run());
}

#[test]
fn hidden_permutation_preserves_outputs() {
    let data = three_blobs(30, 0.8, 3);
    let mut net = ElmNetwork::init_random(3, 2, 12, 3, Topology::OneCrossbarSemi).unwrap();
    net.fit(&data, &fit_config(20, 3)).unwrap();
    let mut perm: Vec<usize> = (0..12).collect();
    perm.shuffle(&mut seed::rng(4, Stream::Shuffle));
    let permuted = net.permute_hidden(&perm).unwrap();
    for x in data.features() {
        let (h, t) = net.forward(x).unwrap();
        let (hp, tp) = permuted.forward(x).unwrap();
        for (j, &p) in perm.iter().enumerate() {
            assert_eq!(hp[j].to_bits(), h[p].to_bits());
        }
        for (a, b) in t.iter().zip(&tp) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(net.predict(x).unwrap(), permuted.predict(x).unwrap());
    }
}

#[test]
fn random_labels_generalize_at_chance() {
    let all = three_blobs(200, 1.0, 5);
    let mut rng = seed::rng(5, Stream::Synthetic);
    let labels: Vec<usize> = (0..all.len()).map(|_| rng.gen_range(0..3)).collect();
    let shuffled = all.with_labels(labels).unwrap();
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..all.len()).partition(|i| i % 2 == 0);
    let pick = |idx: &[usize]| {
        LabeledDataset::new(
            idx.iter().map(|&i| shuffled.features()[i].clone()).collect(),
            idx.iter().map(|&i| shuffled.labels()[i]).collect(),
            3,
        )
        .unwrap()
    };
    let (train, test) = (pick(&train_idx), pick(&test_idx));
    assert_eq!(test.len(), 300);
    let mut net = ElmNetwork::init_random(5, 2, 20, 3, Topology::OneCrossbarSemi).unwrap();
    net.fit(&train, &fit_config(50, 5)).unwrap();
    let acc = net.evaluate(&test).unwrap();
    assert!((acc - 1.0 / 3.0).abs() <= 0.1, "accuracy {acc}");
}

#[test]
fn network_snapshot_round_trip_is_bit_exact() {
    let data = three_blobs(10, 0.5, 6);
    let mut net = ElmNetwork::init_random(6, 2, 8, 3, Topology::TwoCrossbarSemi).unwrap();
    net.fit(&data, &fit_config(5, 6)).unwrap();
    let back = ElmNetwork::from_json(&net.to_json().unwrap()).unwrap();
    assert_eq!(back, net);
    for x in data.features() {
        let (a, b) = (net.forward(x).unwrap().1, back.forward(x).unwrap().1);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn fit_rejects_bad_inputs() {
    let data = three_blobs(5, 0.5, 7);
    let mut net = ElmNetwork::init_random(7, 3, 8, 3, Topology::OneCrossbarSemi).unwrap();
    assert!(net.fit(&data, &fit_config(5, 0)).is_err(), "feature count mismatch");
    let mut net = ElmNetwork::init_random(7, 2, 8, 2, Topology::OneCrossbarSemi).unwrap();
    assert!(net.fit(&data, &fit_config(5, 0)).is_err(), "too many classes");
    let empty = LabeledDataset::new(vec![], vec![], 2).unwrap();
    assert!(net.evaluate(&empty).is_err());
    assert!(net.fit(&empty, &fit_config(5, 0)).is_err());
    assert!(LabeledDataset::new(vec![vec![0.0]], vec![2], 2).is_err());
}

fn matmul(h: &[Vec<f64>], beta: &[Vec<f64>]) -> Vec<Vec<f64>> {
    h.iter()
        .map(|row| {
            (0..beta[0].len())
                .map(|j| row.iter().zip(beta).map(|(a, b)| a * b[j]).sum())
                .collect()
        })
        .collect()
}

#[test]
fn oracle_solves_square_systems() {
    let mut rng = seed::rng(8, Stream::Synthetic);
    let h: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let t: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..2).map(|_| rng.gen_range(-0.3..0.3)).collect())
        .collect();
    let sol = normal_equation_oracle(&h, &t).unwrap();
    assert_eq!(sol.rank, 5);
    assert!(!sol.rank_deficient);
    for (got, want) in matmul(&h, &sol.beta).iter().flatten().zip(t.iter().flatten()) {
        assert!((got - want).abs() <= 1e-9);
    }
}

#[test]
fn oracle_handles_rank_deficiency() {
    let mut rng = seed::rng(9, Stream::Synthetic);
    // third column duplicates the first
    let h: Vec<Vec<f64>> = (0..12)
        .map(|_| {
            let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            vec![a, b, a]
        })
        .collect();
    let t: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.gen_range(-0.3..0.3)]).collect();
    let sol = normal_equation_oracle(&h, &t).unwrap();
    assert_eq!(sol.rank, 2);
    assert!(sol.rank_deficient);
    // residual orthogonal to the column space
    let fitted = matmul(&h, &sol.beta);
    for c in 0..3 {
        let g: f64 = h
            .iter()
            .zip(&fitted)
            .zip(&t)
            .map(|((row, f), tt)| row[c] * (f[0] - tt[0]))
            .sum();
        assert!(g.abs() <= 1e-9, "column {c}: {g}");
    }
    // minimum norm splits the duplicated direction evenly
    assert!((sol.beta[0][0] - sol.beta[2][0]).abs() <= 1e-9);
}

fn mirror(image: &[f64]) -> Vec<f64> {
    (0..28 * 28).map(|p| image[(p / 28) * 28 + 27 - p % 28]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hog_mirror_reverses_cells_and_orientations(image in proptest::collection::vec(0.0f64..255.0, 28 * 28)) {
        let a = datasets::hog(&image, 28, 28).unwrap();
        let b = datasets::hog(&mirror(&image), 28, 28).unwrap();
        prop_assert_eq!(a.len(), HOG_LEN);
        for r in 0..7 {
            for c in 0..7 {
                for bin in 0..HOG_BINS {
                    let x = a[(r * 7 + c) * HOG_BINS + bin];
                    let y = b[(r * 7 + 6 - c) * HOG_BINS + HOG_BINS - 1 - bin];
                    prop_assert!((x - y).abs() <= 1e-9, "cell ({}, {}) bin {}: {} vs {}", r, c, bin, x, y);
                }
            }
        }
    }

    #[test]
    fn hog_shifts_with_the_image(patch in proptest::collection::vec(0.0f64..255.0, 20 * 16)) {
        // content in rows 4..24, columns 4..20, then moved one cell right
        let mut a = vec![0.0; 28 * 28];
        let mut b = vec![0.0; 28 * 28];
        for (p, v) in patch.iter().enumerate() {
            let (y, x) = (4 + p / 16, 4 + p % 16);
            a[y * 28 + x] = *v;
            b[y * 28 + x + 4] = *v;
        }
        let (ha, hb) = (datasets::hog(&a, 28, 28).unwrap(), datasets::hog(&b, 28, 28).unwrap());
        for r in 0..7 {
            for bin in 0..HOG_BINS {
                prop_assert_eq!(hb[(r * 7) * HOG_BINS + bin], 0.0);
            }
            for c in 0..6 {
                for bin in 0..HOG_BINS {
                    prop_assert_eq!(ha[(r * 7 + c) * HOG_BINS + bin], hb[(r * 7 + c + 1) * HOG_BINS + bin]);
                }
            }
        }
    }

    #[test]
    fn normalized_features_stay_within_the_limit(
        rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 4), 2..30),
        limit in 0.05f64..0.5,
        centered in any::<bool>(),
    ) {
        let kind = if centered { Normalization::MeanCentered } else { Normalization::MinMax };
        let norm = Normalizer::fit(&rows, kind, limit).unwrap();
        let out = norm.transform_all(&rows).unwrap();
        for f in 0..4 {
            let col: Vec<f64> = out.iter().map(|r| r[f]).collect();
            prop_assert!(col.iter().all(|v| v.abs() <= limit * (1.0 + 1e-12)));
            if norm.constant_features.contains(&f) {
                prop_assert!(col.iter().all(|&v| v == 0.0));
            } else if !centered {
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!((lo + limit).abs() <= 1e-12 && (hi - limit).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn stratified_split_partitions_each_class(
        labels in proptest::collection::vec(0usize..4, 1..120),
        frac in 0.1f64..0.9,
        seed in any::<u64>(),
    ) {
        let (train, test) = datasets::stratified_split(&labels, frac, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for class in 0..4 {
            let total = labels.iter().filter(|&&l| l == class).count();
            let in_train = train.iter().filter(|&&i| labels[i] == class).count();
            prop_assert_eq!(in_train, (frac * total as f64).round() as usize);
        }
        prop_assert_eq!(datasets::stratified_split(&labels, frac, seed).unwrap(), (train, test));
    }
}

#[test]
fn idx_files_have_exact_sizes_and_feed_hog() {
    let dir = tempfile::tempdir().unwrap();
    let count = 5u32;
    let mut rng = seed::rng(10, Stream::Synthetic);
    let mut images = Vec::new();
    for v in [datasets::IDX_IMAGES_MAGIC, count, 28, 28] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend((0..count as usize * 784).map(|_| rng.gen::<u8>()));
    let mut labels = Vec::new();
    for v in [datasets::IDX_LABELS_MAGIC, count] {
        labels.extend_from_slice(&v.to_be_bytes());
    }
    labels.extend([3u8, 1, 4, 1, 5]);
    assert_eq!(images.len(), 16 + 784 * count as usize);

    let im = dir.path().join("images.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&im).unwrap(), flate2::Compression::fast());
    enc.write_all(&images).unwrap();
    enc.finish().unwrap();
    let lb = dir.path().join("labels");
    std::fs::write(&lb, &labels).unwrap();

    let idx = datasets::load_idx(&im, &lb).unwrap();
    assert_eq!(idx.image_bytes, images.len());
    assert_eq!(idx.images[4], images[16 + 4 * 784..].to_vec());
    let raw = datasets::hog_dataset(&idx).unwrap();
    assert_eq!((raw.len(), raw.n_features()), (5, HOG_LEN));
    // digit labels keep their values
    assert_eq!(raw.labels, vec![3, 1, 4, 1, 5]);
}

fn params() -> MemristorParams {
    MemristorParams::calibrated(&DeviceConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn input_averaged_power_matches_sign_enumeration(
        t in 0usize..4,
        n in 1usize..7,
        k in 1usize..4,
        fr in proptest::collection::vec(0.0f64..=1.0, 18),
        v_in in 0.05f64..0.5,
    ) {
        let topology = Topology::ALL[t];
        let mut layer = CrossbarLayer::new(n, k, topology, CrossbarConfig::default(), params()).unwrap();
        let beta: Vec<f64> = (0..n * k)
            .map(|c| {
                let (lo, hi) = layer.weight_range(c / k, c % k).unwrap();
                lo + (hi - lo) * fr[c]
            })
            .collect();
        layer.program_weights(&beta).unwrap();
        let mut total = 0.0;
        for pattern in 0..1u32 << n {
            let x: Vec<f64> = (0..n).map(|i| if pattern >> i & 1 == 1 { v_in } else { -v_in }).collect();
            total += layer.read_currents(&x).unwrap().iter().map(|c| c.3 * v_in).sum::<f64>();
        }
        let oracle_uw = 1e6 * total / f64::from(1u32 << n);
        let table = analysis::DigitalPowerTable::default();
        let avg = analysis::estimate_power(&layer, PowerScenario::InputAveraged, v_in, &table).unwrap();
        let worst = analysis::estimate_power(&layer, PowerScenario::WorstCase, v_in, &table).unwrap();
        prop_assert!((avg.crossbar_uw - oracle_uw).abs() <= 1e-9 * oracle_uw);
        prop_assert!(avg.crossbar_uw <= worst.crossbar_uw * (1.0 + 1e-12));
        prop_assert_eq!(worst.devices, layer.device_count());
        prop_assert!((worst.total_uw - worst.crossbar_uw - table.get(topology)).abs() <= 1e-12);
    }

    #[test]
    fn transistor_count_grows_with_size(n in 1usize..200, k in 1usize..200) {
        for topology in Topology::ALL {
            let base = analysis::transistor_count(n, k, topology);
            prop_assert!(analysis::transistor_count(n + 1, k, topology) > base);
            prop_assert!(analysis::transistor_count(n, k + 1, topology) > base);
        }
        prop_assert!(
            analysis::transistor_count(n, k, Topology::OneCrossbarSemi)
                < analysis::transistor_count(n, k, Topology::OneCrossbarFull)
        );
    }

    #[test]
    fn perturbation_stays_within_spread(spread in 0.0f64..0.3, seed in any::<u64>()) {
        let mut layer = CrossbarLayer::new(3, 2, Topology::OneCrossbarFull, CrossbarConfig::default(), params()).unwrap();
        layer.program_weights(&[0.3, -0.2, 1.0, 0.0, -1.1, 0.7]).unwrap();
        let before = layer.clone();
        analysis::perturb_layer(&mut layer, spread, &mut seed::rng(seed, Stream::Variation)).unwrap();
        let pairs = before.plus_devices().iter().chain(before.minus_devices())
            .zip(layer.plus_devices().iter().chain(layer.minus_devices()));
        for (a, b) in pairs {
            prop_assert_eq!(a.state().to_bits(), b.state().to_bits());
            prop_assert!((b.params.r_on / a.params.r_on - 1.0).abs() <= spread * (1.0 + 1e-12));
            prop_assert!((b.params.r_off / a.params.r_off - 1.0).abs() <= spread * (1.0 + 1e-12));
        }
        if spread == 0.0 {
            prop_assert_eq!(&layer, &before);
        }
    }
}

fn blob_trial(seed: u64) -> memxbar::Result<Trial> {
    let raw = datasets::gaussian_blobs(&[vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.5]], 0.8, 30, seed)?;
    let split = datasets::split_and_prepare(&raw, 0.7, seed, Normalization::MinMax, elm::SIGNAL_SWING)?;
    let network = ElmNetwork::new(
        &ElmConfig {
            eta: 10,
            ..ElmConfig::default()
        },
        2,
        3,
        seed,
    )?;
    Ok(Trial {
        network,
        train: split.train,
        test: split.test,
        fit: fit_config(10, seed),
    })
}

#[test]
fn variation_without_spread_or_reseeding_is_constant_per_iteration() {
    let cfg = VariationConfig {
        runs: 4,
        iterations: 3,
        spread: 0.0,
        seed: 12,
        reseed_runs: false,
    };
    let report = analysis::variation_study(blob_trial, &cfg).unwrap();
    assert_eq!(report.iterations.len(), 3);
    for it in &report.iterations {
        assert_eq!(it.std, 0.0);
        assert_eq!(it.accuracies.len(), 4);
    }
}

#[test]
fn variation_study_is_reproducible() {
    let cfg = VariationConfig {
        runs: 3,
        iterations: 2,
        spread: 0.1,
        seed: 13,
        reseed_runs: true,
    };
    let a = analysis::variation_study(blob_trial, &cfg).unwrap();
    assert_eq!(a, analysis::variation_study(blob_trial, &cfg).unwrap());
    assert!(analysis::variation_study(blob_trial, &VariationConfig { spread: 1.0, ..cfg }).is_err());
}
