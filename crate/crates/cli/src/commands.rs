// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use memxbar::analysis::{self, PowerReport, PowerScenario, Trial};
use memxbar::crossbar::{CrossbarConfig, CrossbarLayer, Topology, Violation};
use memxbar::device::MemristorParams;
use memxbar::elm::{ElmNetwork, ElmSnapshot};
use memxbar::learning::write_training_log;
use memxbar::seed;
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::CliError;

/// Console summary line. Write errors (e.g. a closed pipe) are ignored: the
/// artifacts on disk are the command's real output.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn out_dir(s: &Settings) -> Result<&Path, CliError> {
    fs::create_dir_all(&s.out).map_err(|e| runtime(format!("{}: {e}", s.out.display())))?;
    Ok(&s.out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    fs::write(path, text + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

fn uw(v: f64) -> String {
    format!("{v:.2}")
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    config_hash: String,
    settings: Settings,
    network: ElmSnapshot,
}

#[derive(Serialize)]
struct HistoryRow {
    epoch: usize,
    train_accuracy: f64,
    mean_abs_error: f64,
    cycles: u64,
    pulses: u64,
    alpha: Option<f64>,
}

pub fn train(s: &Settings) -> Result<(), CliError> {
    let spec = s.validate_dataset()?;
    let hash = s.hash();
    let split = spec.load(&s.data_dir, s.seed)?;
    let mut net = ElmNetwork::new(
        &s.elm(s.topology),
        split.train.n_features(),
        split.train.class_count(),
        s.seed,
    )?;
    let history = net.fit(&split.train, &s.fit(s.seed))?;
    let train_accuracy = net.evaluate(&split.train)?;
    let test_accuracy = if split.test.is_empty() {
        None
    } else {
        Some(net.evaluate(&split.test)?)
    };

    let dir = out_dir(s)?;
    write_json(
        &dir.join("model.json"),
        &ModelFile {
            config_hash: hash.clone(),
            settings: s.clone(),
            network: net.to_snapshot(),
        },
    )?;
    let rows: Vec<HistoryRow> = history
        .epochs
        .iter()
        .map(|e| HistoryRow {
            epoch: e.epoch,
            train_accuracy: e.train_accuracy,
            mean_abs_error: e.mean_abs_error,
            cycles: e.cycles,
            pulses: e.pulses,
            alpha: e.alpha,
        })
        .collect();
    write_rows(&dir.join("history.csv"), &rows)?;
    let log = fs::File::create(dir.join("training_log.csv")).map_err(runtime)?;
    write_training_log(std::io::BufWriter::new(log), &history.reports)?;
    write_json(
        &dir.join("accuracy.json"),
        &serde_json::json!({
            "config_hash": hash,
            "dataset": s.dataset,
            "topology": s.topology,
            "seed": s.seed,
            "eta": s.eta,
            "train_samples": split.train.len(),
            "test_samples": split.test.len(),
            "epochs_run": history.epochs.len(),
            "best_epoch": history.best_epoch,
            "train_accuracy": train_accuracy,
            "test_accuracy": test_accuracy,
        }),
    )?;
    say!(
        "{} {} eta={} epochs={} train={:.4} test={}",
        s.dataset,
        s.topology,
        s.eta,
        history.epochs.len(),
        train_accuracy,
        test_accuracy.map_or("n/a".into(), |a| format!("{a:.4}"))
    );
    Ok(())
}

pub fn eval(s: &Settings) -> Result<(), CliError> {
    let path = s.model_path();
    let text =
        fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("model file {}: {e}", path.display())))?;
    let spec = s.validate_dataset()?;
    let model: ModelFile = serde_json::from_str(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let net = ElmNetwork::from_snapshot(&model.network)?;
    let split = spec.load(&s.data_dir, s.seed)?;
    let train_accuracy = net.evaluate(&split.train)?;
    let test_accuracy = if split.test.is_empty() {
        None
    } else {
        Some(net.evaluate(&split.test)?)
    };
    let dir = out_dir(s)?;
    write_json(
        &dir.join("eval.json"),
        &serde_json::json!({
            "config_hash": s.hash(),
            "model_config_hash": model.config_hash,
            "model": path,
            "dataset": s.dataset,
            "train_accuracy": train_accuracy,
            "test_accuracy": test_accuracy,
        }),
    )?;
    say!(
        "{} train={:.4} test={}",
        s.dataset,
        train_accuracy,
        test_accuracy.map_or("n/a".into(), |a| format!("{a:.4}"))
    );
    Ok(())
}

/// Layers of the same logical shape holding the same random weights, for
/// like-for-like power comparisons.
fn power_layers(s: &Settings) -> Result<Vec<CrossbarLayer>, CliError> {
    let params = MemristorParams::calibrated(&s.device())?;
    let (n, k) = (s.power_inputs, s.power_neurons);
    let mut layers = Topology::ALL
        .iter()
        .map(|&t| CrossbarLayer::new(n, k, t, s.crossbar(s.r_f_ohms), params))
        .collect::<memxbar::Result<Vec<_>>>()?;
    let limit = (0..n)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| layers[0].weight_range(i, j).map(|(lo, hi)| lo.abs().min(hi.abs())))
        .collect::<memxbar::Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    use rand::Rng;
    let mut rng = seed::rng(s.seed, seed::Stream::HiddenInit);
    let beta: Vec<f64> = (0..n * k).map(|_| 0.9 * limit * rng.gen_range(-1.0..=1.0)).collect();
    for l in &mut layers {
        l.program_weights(&beta)?;
    }
    Ok(layers)
}

fn power_reports(s: &Settings) -> Result<Vec<PowerReport>, CliError> {
    let mut out = Vec::new();
    for layer in power_layers(s)? {
        for scenario in [PowerScenario::WorstCase, PowerScenario::InputAveraged] {
            out.push(analysis::estimate_power(&layer, scenario, s.power_v_in, &s.digital_uw)?);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct PowerRow {
    topology: Topology,
    scenario: PowerScenario,
    inputs: usize,
    neurons: usize,
    devices: usize,
    v_in: f64,
    crossbar_uw: String,
    digital_uw: String,
    total_uw: String,
}

pub fn power(s: &Settings) -> Result<(), CliError> {
    let reports = power_reports(s)?;
    let rows: Vec<PowerRow> = reports
        .iter()
        .map(|r| PowerRow {
            topology: r.topology,
            scenario: r.scenario,
            inputs: s.power_inputs,
            neurons: s.power_neurons,
            devices: r.devices,
            v_in: r.v_in,
            crossbar_uw: uw(r.crossbar_uw),
            digital_uw: uw(r.digital_uw),
            total_uw: uw(r.total_uw),
        })
        .collect();
    let dir = out_dir(s)?;
    write_rows(&dir.join("power.csv"), &rows)?;
    write_json(
        &dir.join("power.json"),
        &serde_json::json!({ "config_hash": s.hash(), "reports": reports }),
    )?;
    say!("topology            scenario        devices  crossbar_uW  digital_uW  total_uW");
    for r in &rows {
        say!(
            "{:<19} {:<15} {:>7}  {:>11}  {:>10}  {:>8}",
            r.topology.tag(),
            serde_json::to_value(r.scenario)
                .map_err(runtime)?
                .as_str()
                .unwrap_or(""),
            r.devices,
            r.crossbar_uw,
            r.digital_uw,
            r.total_uw
        );
    }
    Ok(())
}

pub fn scaling(s: &Settings) -> Result<(), CliError> {
    let dir = out_dir(s)?;
    let mut w = csv_writer(&dir.join("scaling.csv"))?;
    let mut header = vec!["size".to_owned()];
    header.extend(Topology::ALL.iter().map(|t| t.tag().to_owned()));
    w.write_record(&header).map_err(runtime)?;
    say!("{}", header.join(","));
    let mut size = 2;
    while size <= s.scaling_max {
        let mut rec = vec![size.to_string()];
        rec.extend(
            Topology::ALL
                .iter()
                .map(|&t| analysis::transistor_count(size, size, t).to_string()),
        );
        w.write_record(&rec).map_err(runtime)?;
        say!("{}", rec.join(","));
        size *= 2;
    }
    w.flush().map_err(runtime)
}

fn trial(
    s: &Settings,
    spec: &memxbar::presets::DatasetPreset,
    topology: Topology,
    seed: u64,
) -> memxbar::Result<Trial> {
    let split = spec.load(&s.data_dir, seed)?;
    let network = ElmNetwork::new(
        &s.elm(topology),
        split.train.n_features(),
        split.train.class_count(),
        seed,
    )?;
    Ok(Trial {
        network,
        train: split.train,
        test: split.test,
        fit: s.fit(seed),
    })
}

#[derive(Serialize)]
struct RunRow {
    iteration: usize,
    run: usize,
    accuracy: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    iteration: usize,
    mean: f64,
    std: f64,
}

pub fn sweep(s: &Settings) -> Result<(), CliError> {
    let spec = s.validate_dataset()?;
    let report = analysis::variation_study(|seed| trial(s, &spec, s.topology, seed), &s.variation())?;
    let dir = out_dir(s)?;
    let runs: Vec<RunRow> = report
        .iterations
        .iter()
        .flat_map(|it| {
            it.accuracies.iter().enumerate().map(move |(run, &accuracy)| RunRow {
                iteration: it.iteration,
                run,
                accuracy,
            })
        })
        .collect();
    write_rows(&dir.join("sweep.csv"), &runs)?;
    let summary: Vec<SummaryRow> = report
        .iterations
        .iter()
        .map(|it| SummaryRow {
            iteration: it.iteration,
            mean: it.mean,
            std: it.std,
        })
        .collect();
    write_rows(&dir.join("sweep_summary.csv"), &summary)?;
    write_json(
        &dir.join("sweep.json"),
        &serde_json::json!({
            "config_hash": s.hash(),
            "dataset": s.dataset,
            "topology": s.topology,
            "report": report,
        }),
    )?;
    for it in &summary {
        say!("iteration {} mean={:.4} std={:.4}", it.iteration, it.mean, it.std);
    }
    say!("spread={} mean={:.4} std={:.4}", report.spread, report.mean, report.std);
    Ok(())
}

#[derive(Serialize)]
struct BalanceCheck {
    output_v: f64,
    ideal_v: f64,
    vx_v: Option<f64>,
    violations: Vec<Violation>,
    correct: bool,
}

/// Two 0.3 V inputs into one neuron with every device at 250 kOhm: the
/// ideal output is 0 V.
fn balance_check(s: &Settings, topology: Topology) -> Result<BalanceCheck, CliError> {
    let cfg = CrossbarConfig {
        reference_ohms: Some(250e3),
        ..s.crossbar(500e3)
    };
    let mut layer = CrossbarLayer::new(2, 1, topology, cfg, MemristorParams::calibrated(&s.device())?)?;
    layer.program_weights(&[0.0, 0.0])?;
    let x = [0.3, 0.3];
    let read = layer.read(&x)?;
    let report = layer.check_constraints(&x)?;
    Ok(BalanceCheck {
        output_v: read.output[0],
        ideal_v: read.ideal[0],
        vx_v: read.vx_ideal.first().copied(),
        correct: (read.output[0] - read.ideal[0]).abs() <= 1e-9,
        violations: report.violations,
    })
}

#[derive(Serialize)]
struct ComparisonRow {
    topology: Topology,
    balance_output_v: f64,
    balance_correct: bool,
    balance_violations: usize,
    test_accuracy: f64,
    hidden_clip_fraction: f64,
    output_clip_fraction: f64,
    read_current_violations: usize,
    devices: usize,
    worst_case_uw: String,
    input_averaged_uw: String,
    digital_uw: String,
    total_uw: String,
}

pub fn compare_topologies(s: &Settings) -> Result<(), CliError> {
    let spec = s.validate_dataset()?;
    let power = power_reports(s)?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for &topology in &Topology::ALL {
        let f5 = balance_check(s, topology)?;
        let mut t = trial(s, &spec, topology, s.seed)?;
        t.network.fit(&t.train, &t.fit)?;
        let net = &t.network;
        let accuracy = net.evaluate(&t.test)?;

        let (mut hidden_clips, mut output_clips, mut current) = (0usize, 0usize, 0usize);
        let is_current = |v: &Violation| matches!(v, Violation::ReadCurrent { .. });
        for x in t.test.features() {
            let mut input = x.clone();
            input.push(s.bias_v);
            let hr = net.hidden().check_constraints(&input)?;
            let h = net.hidden_activations(x)?;
            let or = net.output().check_constraints(&h)?;
            hidden_clips += hr.clips() as usize;
            output_clips += or.clips() as usize;
            current += hr.count(is_current) + or.count(is_current);
        }
        let n = t.test.len().max(1) as f64;
        let pick = |sc: PowerScenario| {
            power
                .iter()
                .find(|r| r.topology == topology && r.scenario == sc)
                .expect("report per topology and scenario")
        };
        let (wc, avg) = (pick(PowerScenario::WorstCase), pick(PowerScenario::InputAveraged));
        rows.push(ComparisonRow {
            topology,
            balance_output_v: f5.output_v,
            balance_correct: f5.correct,
            balance_violations: f5.violations.len(),
            test_accuracy: accuracy,
            hidden_clip_fraction: hidden_clips as f64 / n,
            output_clip_fraction: output_clips as f64 / n,
            read_current_violations: current,
            devices: avg.devices,
            worst_case_uw: uw(wc.crossbar_uw),
            input_averaged_uw: uw(avg.crossbar_uw),
            digital_uw: uw(avg.digital_uw),
            total_uw: uw(avg.total_uw),
        });
        details.push(serde_json::json!({ "topology": topology, "balance": f5 }));
    }

    let dir = out_dir(s)?;
    write_rows(&dir.join("comparison.csv"), &rows)?;
    write_json(
        &dir.join("comparison.json"),
        &serde_json::json!({
            "config_hash": s.hash(),
            "dataset": s.dataset,
            "power": power,
            "balance": details,
        }),
    )?;
    say!("topology            bal_out   bal_ok   test_acc  hid_clip  out_clip  avg_uW  total_uW");
    for r in &rows {
        say!(
            "{:<19} {:>8.4}  {:>7}  {:>8.4}  {:>8.3}  {:>8.3}  {:>6}  {:>8}",
            r.topology.tag(),
            r.balance_output_v,
            r.balance_correct,
            r.test_accuracy,
            r.hidden_clip_fraction,
            r.output_clip_fraction,
            r.input_averaged_uw,
            r.total_uw
        );
    }
    Ok(())
}
