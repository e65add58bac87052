//! Acceptance gate. Every criterion prints one PASS/FAIL line to stderr
//! (bypassing the test harness capture) and the test fails if any line is
//! FAIL. Criteria run one after another so their runtimes are not inflated
//! by each other.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use pulsenet::augment::{augment_one, effective_snr_db, AugmentSpec, DelayMode};
use pulsenet::metrics::{absolute_error, outcome_scatter, subset_error, MetricsReport};
use pulsenet::nn::gradcheck::{grad_check_all, Precision};
use pulsenet::nn::{complex_conv1d, real_conv1d_2ch, ComplexKernel, ComplexTensor, Mode, Tensor3};
use pulsenet::resnet::{Arithmetic, Model, ModelConfig, SUPPORTED_DEPTHS};
use pulsenet::rng::{derive_seed, rng_from};
use pulsenet::train::{evaluate, train, TrainConfig};
use pulsenet::waveform::{generate_dataset, generate_pulse, standard_family, Dataset, DatasetManifest};
use rand::Rng;
use serde_json::Value;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn line(name: &str, o: &Outcome, secs: f64) {
    let tag = if o.passed { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "{tag}  {name:<28} {}  [{secs:.1} s]", o.detail).unwrap();
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pulsenet")).args(args).output().expect("binary runs")
}

fn cli_ok(args: &[&str]) -> Result<(), String> {
    let o = cli(args);
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("`pulsenet {}` failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr)))
    }
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

// ---------------------------------------------------------------- gradients

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = Vec::new();
    let mut passed = true;
    for p in [Precision::Single, Precision::Double] {
        let reports = grad_check_all(p, 100, 0).unwrap();
        passed &= reports.iter().all(|r| r.passed);
        let w = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
        worst.push(format!("{p:?} max {w:.1e} (tol {:.0e})", p.tolerance()));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(passed && secs < 120.0, format!("11 layers x 100 shapes; {}; {secs:.0} s < 120 s", worst.join(", ")))
}

// ---------------------------------------------------------------- complex conv oracle

fn random_tensor(rng: &mut impl Rng, shape: [usize; 3]) -> Tensor3<f64> {
    let n = shape.iter().product();
    Tensor3::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Independent complex-arithmetic cross-correlation.
fn naive_conv(x: &ComplexTensor<f64>, k: &ComplexKernel<f64>, stride: usize, pad: usize) -> Vec<Complex64> {
    let [b, c, l] = x.shape();
    let [o, _, m] = k.re.shape();
    let lout = (l + 2 * pad - m) / stride + 1;
    let mut y = Vec::with_capacity(b * o * lout);
    for bi in 0..b {
        for oi in 0..o {
            for t in 0..lout {
                let mut acc = Complex64::new(0.0, 0.0);
                for ci in 0..c {
                    for mi in 0..m {
                        let pos = (t * stride + mi) as isize - pad as isize;
                        if (0..l as isize).contains(&pos) {
                            let p = pos as usize;
                            acc += Complex64::new(k.re.at(oi, ci, mi), k.im.at(oi, ci, mi))
                                * Complex64::new(x.re.at(bi, ci, p), x.im.at(bi, ci, p));
                        }
                    }
                }
                y.push(acc);
            }
        }
    }
    y
}

fn rel_err(got: &ComplexTensor<f64>, want: &[Complex64]) -> f64 {
    let scale = want.iter().map(|v| v.norm()).fold(1e-300, f64::max);
    let got = got.re.data().iter().zip(got.im.data()).map(|(&r, &i)| Complex64::new(r, i));
    got.zip(want).map(|(g, w)| (g - w).norm()).fold(0.0, f64::max) / scale
}

fn eq1_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from(1, &[]);
    let (mut naive, mut tied) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (b, c, o) = (rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(1..=4));
        let m = rng.random_range(1..=7);
        let (stride, pad) = (rng.random_range(1..=3), rng.random_range(0..=m / 2));
        let l = rng.random_range(m.max(2)..=24);
        let x = ComplexTensor::new(random_tensor(&mut rng, [b, c, l]), random_tensor(&mut rng, [b, c, l])).unwrap();
        let k = ComplexKernel::new(random_tensor(&mut rng, [o, c, m]), random_tensor(&mut rng, [o, c, m])).unwrap();
        let want = naive_conv(&x, &k, stride, pad);
        naive = naive.max(rel_err(&complex_conv1d(&x, &k, stride, pad).unwrap(), &want));
        tied = tied.max(rel_err(&real_conv1d_2ch(&x, &k.tied_real(), stride, pad).unwrap(), &want));
    }

    let cfg = ModelConfig { input_length: 512, ..ModelConfig::default() };
    let mut complex = Model::<f32>::build(&cfg, 3).unwrap();
    let mut twin = complex.tied_iq_twin().unwrap();
    let x = ComplexTensor::new(random_tensor(&mut rng, [4, 1, 512]), random_tensor(&mut rng, [4, 1, 512]))
        .unwrap()
        .cast::<f32>();
    let mut net = 0.0f64;
    for mode in [Mode::Eval, Mode::Train] {
        let (a, b) = (complex.forward(&x, mode).unwrap(), twin.forward(&x, mode).unwrap());
        let scale = a.data.iter().fold(1e-30f32, |s, v| s.max(v.abs())) as f64;
        let diff = a.data.iter().zip(&b.data).fold(0.0f64, |s, (p, q)| s.max((p - q).abs() as f64));
        net = net.max(diff / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        naive <= 1e-6 && tied <= 1e-6 && net <= 1e-4 && secs < 60.0,
        format!("1000 instances: naive {naive:.1e}, tied {tied:.1e} (<= 1e-6); depth-30 net {net:.1e} (<= 1e-4)"),
    )
}

// ---------------------------------------------------------------- parameters

fn parameter_accounting() -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut configs = 0;
    let mut per_tap_ok = true;
    for arithmetic in Arithmetic::ALL {
        for depth in SUPPORTED_DEPTHS {
            for base_width in [4, 8, 16] {
                let cfg = ModelConfig { arithmetic, depth, base_width, input_length: 64, ..ModelConfig::default() };
                let model = Model::<f32>::build(&cfg, 0).unwrap();
                configs += 1;
                if model.count_parameters() != cfg.closed_form_parameter_count().unwrap() {
                    mismatches += 1;
                }
                if arithmetic == Arithmetic::Complex {
                    let real = ModelConfig { arithmetic: Arithmetic::Real1ch, ..cfg.clone() };
                    let real = Model::<f32>::build(&real, 0).unwrap().summary();
                    for (c, r) in model.summary().layers.iter().zip(&real.layers) {
                        per_tap_ok &= !c.kind.contains("conv") || c.parameters == 2 * r.parameters;
                    }
                }
            }
        }
    }
    let mut rng = rng_from(2, &[]);
    let mut half_ok = true;
    for _ in 0..50 {
        let shape = [rng.random_range(1..9), rng.random_range(1..9), rng.random_range(1..10)];
        let k = ComplexKernel::new(Tensor3::<f32>::zeros(shape), Tensor3::zeros(shape)).unwrap();
        half_ok &= k.parameter_count() == 2 * shape.iter().product::<usize>()
            && 2 * k.parameter_count() == k.tied_real().data().len();
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && per_tap_ok && half_ok && secs < 10.0,
        format!(
            "{configs} configs, {mismatches} mismatches; 2M reals per complex tap: {per_tap_ok}; half of untied: {half_ok}"
        ),
    )
}

// ---------------------------------------------------------------- SNR law

fn window_snr(n: usize, d: usize, snr_db: f64, trials: usize) -> f64 {
    let family = standard_family(17).unwrap();
    let s2 = 10f64.powf(-snr_db / 10.0);
    let spec = AugmentSpec::new(d, DelayMode::Asynchronous);
    let mut power = 0.0;
    for t in 0..trials {
        let seed = derive_seed(5, &[n as u64, d as u64, t as u64]);
        let p = generate_pulse(&family[t % 17], n, snr_db, seed).unwrap();
        let (x, _) = augment_one(&p, &spec, derive_seed(seed, &[1])).unwrap();
        power += x.iter().map(|c| c.norm_sqr() as f64).sum::<f64>() / d as f64;
    }
    let mean = power / trials as f64;
    10.0 * ((mean - s2) / s2).log10()
}

fn snr_law() -> Outcome {
    let start = Instant::now();
    let grid = [(2261, 5000, 10.8), (500, 1024, 0.0), (300, 3317, 6.0), (2000, 1024, -3.0), (1000, 11000, 12.0)];
    let mut worst = 0.0f64;
    let mut fig1 = 0.0;
    for (n, d, snr) in grid {
        let got = window_snr(n, d, snr, 10_000 * 1024 / d.max(1024));
        let want = effective_snr_db(snr, n, d);
        if n == 2261 {
            fig1 = got;
        }
        worst = worst.max((got - want).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 0.2 && (fig1 - 7.35f64).abs() <= 0.2 && secs < 60.0,
        format!(
            "max |measured - predicted| {worst:.3} dB over {} cells; N=2261 D=5000 10.8 dB -> {fig1:.2} dB",
            grid.len()
        ),
    )
}

// ---------------------------------------------------------------- learnability

fn smoke() -> Outcome {
    let start = Instant::now();
    let ds = generate_dataset(&DatasetManifest {
        classes: 4,
        per_class: 100,
        snr_range_db: [12.0, 12.0],
        pulse_width_range: [100, 2000],
        ..DatasetManifest::default()
    })
    .unwrap();
    let mcfg = ModelConfig { depth: 22, base_width: 8, input_length: 512, num_classes: 4, ..ModelConfig::default() };
    let tcfg = TrainConfig { batch_size: 32, max_epochs: 20, patience: 5, ..TrainConfig::default() };
    let aug = AugmentSpec::new(512, DelayMode::Asynchronous);
    let mut model = Model::<f32>::build(&mcfg, tcfg.init_seed()).unwrap();
    let h = train(&mut model, &ds.train, &ds.test, &aug, &tcfg).unwrap();
    let e = evaluate(&mut model, &ds.test, &aug, 10, 1).unwrap().top1_error.unwrap();
    outcome(
        e <= 0.05 && h.stopped_epoch <= 20,
        format!(
            "4 classes, +12 dB, D=512, CResNet-22 w8: error {:.2}% after {} epochs (best {}) in {:.0} s",
            100.0 * e,
            h.stopped_epoch,
            h.best_epoch,
            start.elapsed().as_secs_f64()
        ),
    )
}

/// Desk-scale configuration shared by the learnability run and the trends.
const DESK_SEED: &str = "1";
const DESK_DATA: &[&str] = &["--classes", "17", "--per-class", "200", "--nmin", "100", "--nmax", "2000"];
const DESK_TRAIN: &[&str] = &[
    "--arithmetic",
    "complex",
    "--depth",
    "30",
    "--width",
    "4",
    "--input-len",
    "1024",
    "--batch-size",
    "32",
    "--lr",
    "0.003",
    "--epochs",
    "40",
    "--patience",
    "5",
    "--seed",
    "1",
    "--eval-repeats",
    "100",
];
const DESK_ARTIFACTS: [&str; 7] =
    ["ckpt.bin", "history.json", "report.json", "outcomes.csv", "scatter.json", "run_config.json", "timing.json"];

fn desk_run(root: &Path) -> Outcome {
    let start = Instant::now();
    let data = root.join("desk-data");
    let out = root.join("desk-run");
    let mut gen = vec!["gen", "--seed", DESK_SEED, "--out", data.to_str().unwrap()];
    gen.extend_from_slice(DESK_DATA);
    let mut tr = vec!["train", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()];
    tr.extend_from_slice(DESK_TRAIN);
    if let Err(e) = cli_ok(&gen).and_then(|_| cli_ok(&tr)) {
        return outcome(false, e);
    }
    let missing: Vec<&str> = DESK_ARTIFACTS.iter().copied().filter(|f| !out.join(f).is_file()).collect();
    let history = read_json(&out.join("history.json"))["history"].clone();
    let report = read_json(&out.join("report.json"));
    let secs = start.elapsed().as_secs_f64();
    let completed = history["early_stopped"].as_bool() == Some(true) || history["stopped_epoch"] == 40;
    outcome(
        missing.is_empty() && completed && secs <= 1800.0,
        format!(
            "17 classes, 200/class, [-12, 12] dB, D=1024, CResNet-30 w4: error {:.2}% (100 repeats), stopped {} best {}, early stop {}, missing artifacts {:?}",
            100.0 * report["report"]["top1_error"].as_f64().unwrap_or(f64::NAN),
            history["stopped_epoch"],
            history["best_epoch"],
            history["early_stopped"],
            missing
        ),
    )
}

// ---------------------------------------------------------------- trends

/// (a) on a held-out set from the same generator with a different seed,
/// large enough to populate every width-decile x 2 dB cell.
fn trend_scatter(root: &Path) -> Outcome {
    let ckpt = root.join("desk-run/ckpt.bin");
    if !ckpt.is_file() {
        return outcome(false, "desk run produced no checkpoint");
    }
    let data = root.join("scatter-data");
    let report_path = root.join("scatter-report.json");
    let mut gen = vec!["gen", "--seed", "77", "--out", data.to_str().unwrap(), "--split", "0.2"];
    gen.extend_from_slice(&["--classes", "17", "--per-class", "1000", "--nmin", "100", "--nmax", "2000"]);
    let ev = [
        "eval",
        "--ckpt",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--repeats",
        "5",
        "--report",
        report_path.to_str().unwrap(),
    ];
    if let Err(e) = cli_ok(&gen).and_then(|_| cli_ok(&ev)) {
        return outcome(false, e);
    }
    let report: MetricsReport = serde_json::from_value(read_json(&report_path)["report"].clone()).unwrap();
    let scatter = outcome_scatter(&report).unwrap();
    let corner = scatter.bins.iter().find(|b| b.width_bin == 0 && b.snr_bin == 0);
    let worst = scatter.bins.iter().max_by(|a, b| a.error_rate.total_cmp(&b.error_rate)).unwrap();
    match corner {
        Some(c) => outcome(
            c.error_rate >= worst.error_rate,
            format!(
                "(a) corner bin N {:?}, SNR {:?} dB: error {:.3}; worst of {} bins: {:.3} at width bin {}, SNR bin {} ({} pulses x 5 repeats)",
                c.width_range,
                c.snr_range_db,
                c.error_rate,
                scatter.bins.len(),
                worst.error_rate,
                worst.width_bin,
                worst.snr_bin,
                report.count / 5
            ),
        ),
        None => outcome(false, "(a) corner bin is empty"),
    }
}

/// (b) complex width 7 vs real-1ch width 10 at depth 30 (1.0% budget gap),
/// three seeds each, on the desk dataset.
fn trend_complex_vs_real(root: &Path) -> Outcome {
    let ds = match Dataset::load(&root.join("desk-data")) {
        Ok(ds) => ds,
        Err(e) => return outcome(false, format!("desk data: {e}")),
    };
    let aug = AugmentSpec::new(1024, DelayMode::Asynchronous);
    let mut errors = [Vec::new(), Vec::new()];
    let mut params = [0, 0];
    let mut per_seed = Vec::new();
    for seed in [1u64, 2, 3] {
        for (slot, (arithmetic, width)) in [(Arithmetic::Complex, 7), (Arithmetic::Real1ch, 10)].into_iter().enumerate()
        {
            let cfg =
                ModelConfig { arithmetic, depth: 30, base_width: width, input_length: 1024, ..ModelConfig::default() };
            let tcfg = TrainConfig {
                batch_size: 32,
                learning_rate: 0.003,
                max_epochs: 8,
                patience: 3,
                seed,
                ..TrainConfig::default()
            };
            let mut model = Model::<f32>::build(&cfg, tcfg.init_seed()).unwrap();
            params[slot] = model.count_parameters();
            train(&mut model, &ds.train, &ds.test, &aug, &tcfg).unwrap();
            let e = evaluate(&mut model, &ds.test, &aug, 20, 11).unwrap().top1_error.unwrap();
            per_seed.push(format!("{}{}:{:.3}", if slot == 0 { "c" } else { "r" }, seed, e));
            errors[slot].push(e);
        }
    }
    let (c, r) = (median(&mut errors[0]), median(&mut errors[1]));
    outcome(
        c <= r,
        format!(
            "(b) median error complex w7 ({} params) {c:.3} vs real-1ch w10 ({} params) {r:.3}; seeds 1-3 [{}]",
            params[0],
            params[1],
            per_seed.join(" ")
        ),
    )
}

/// (c) D sweep on the desk dataset; its pulses reach 2000 samples, far
/// beyond the shortest window.
fn trend_sweep(root: &Path) -> Outcome {
    let data = root.join("desk-data");
    let out = root.join("sweep");
    let args = [
        "sweep-d",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--d-values",
        "128,256,512,1024",
        "--depth",
        "30",
        "--width",
        "4",
        "--batch-size",
        "32",
        "--lr",
        "0.003",
        "--epochs",
        "10",
        "--patience",
        "3",
        "--seed",
        "1",
        "--eval-repeats",
        "10",
    ];
    if let Err(e) = cli_ok(&args) {
        return outcome(false, e);
    }
    let rows: Vec<(usize, f64)> = read_json(&out.join("sweep_d.json"))["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["D"].as_u64().unwrap() as usize, r["test_error"].as_f64().unwrap_or(f64::NAN)))
        .collect();
    let shortest = rows[0].1;
    let strictly_worst = rows[1..].iter().all(|&(_, e)| shortest > e);
    let max_width = Dataset::load(&data)
        .map(|d| d.test.iter().chain(&d.train).map(|p| p.pulse_width()).max().unwrap_or(0))
        .unwrap_or(0);
    let table: Vec<String> = rows.iter().map(|(d, e)| format!("D={d}:{e:.3}")).collect();
    outcome(strictly_worst && max_width >= 8 * rows[0].0, format!("(c) {}; longest pulse {max_width}", table.join(" ")))
}

// ---------------------------------------------------------------- multi-label

fn multilabel_math(root: &Path) -> Outcome {
    let start = Instant::now();
    let k = 17;
    let mut worst = 0.0f64;
    for (i, e) in [0.001, 0.01, 0.05].into_iter().enumerate() {
        let mut rng = rng_from(40 + i as u64, &[]);
        let mut preds = Vec::with_capacity(100_000);
        let mut labels = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let label: Vec<u8> = (0..k).map(|_| u8::from(rng.random_bool(0.2))).collect();
            preds.push(label.iter().map(|&b| if rng.random_bool(e) { 1 - b } else { b }).collect::<Vec<u8>>());
            labels.push(label);
        }
        let formula = 1.0 - (1.0 - e).powi(k);
        worst = worst.max((subset_error(&preds, &labels).unwrap() - formula).abs() / formula);
    }
    let math_secs = start.elapsed().as_secs_f64();

    // Bounds on real evaluations: a small multi-label network at L = 1..4.
    let out = root.join("multipulse");
    let args = [
        "multipulse",
        "--out",
        out.to_str().unwrap(),
        "--depth",
        "22",
        "--width",
        "4",
        "--input-len",
        "256",
        "--epochs",
        "4",
        "--patience",
        "2",
        "--batch-size",
        "32",
        "--train-scenes",
        "512",
        "--test-scenes",
        "128",
        "--eval-scenes",
        "300",
        "--lr",
        "0.003",
    ];
    if let Err(e) = cli_ok(&args) {
        return outcome(false, e);
    }
    let rows = read_json(&out.join("multipulse.json"))["rows"].as_array().unwrap().clone();
    let bounds = rows.iter().all(|r| {
        let (ea, es) = (r["e_abs"].as_f64().unwrap(), r["e_sub"].as_f64().unwrap());
        es >= ea && es <= (k as f64 * ea).min(1.0) + 1e-12
    });
    // Same bounds on a synthetic evaluation with known structure.
    let preds = vec![vec![1u8, 0, 0], vec![0, 0, 0], vec![1, 1, 1]];
    let labels = vec![vec![1u8, 0, 0], vec![1, 1, 0], vec![0, 1, 1]];
    let (ea, es) = (absolute_error(&preds, &labels).unwrap(), subset_error(&preds, &labels).unwrap());
    let synthetic = es >= ea && es <= (3.0 * ea).min(1.0);
    let curve: Vec<String> = rows
        .iter()
        .map(|r| format!("L={}:{:.3}/{:.3}", r["L"], r["e_abs"].as_f64().unwrap(), r["e_sub"].as_f64().unwrap()))
        .collect();
    outcome(
        worst <= 0.05 && bounds && synthetic && math_secs < 60.0,
        format!(
            "max rel dev of E_sub from 1-(1-e)^17: {:.2}% (1e5 vectors, {math_secs:.1} s); bounds on E_abs/E_sub [{}]",
            100.0 * worst,
            curve.join(" ")
        ),
    )
}

// ---------------------------------------------------------------- determinism

fn determinism(root: &Path) -> Outcome {
    let run = |tag: &str| -> Result<Vec<Vec<u8>>, String> {
        let data = root.join(format!("det-data-{tag}"));
        let out = root.join(format!("det-run-{tag}"));
        cli_ok(&[
            "gen",
            "--classes",
            "5",
            "--per-class",
            "20",
            "--nmin",
            "100",
            "--nmax",
            "1500",
            "--seed",
            "9",
            "--out",
            data.to_str().unwrap(),
        ])?;
        cli_ok(&[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--depth",
            "22",
            "--width",
            "4",
            "--input-len",
            "256",
            "--epochs",
            "3",
            "--patience",
            "2",
            "--batch-size",
            "16",
            "--seed",
            "4",
            "--eval-repeats",
            "3",
        ])?;
        let files = [
            data.join("manifest.json"),
            data.join("train.bin"),
            data.join("test.bin"),
            out.join("ckpt.bin"),
            out.join("history.json"),
            out.join("report.json"),
            out.join("outcomes.csv"),
        ];
        files.iter().map(|f| std::fs::read(f).map_err(|e| e.to_string())).collect()
    };
    match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => {
            let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
            outcome(
                same == a.len(),
                format!("{same}/{} artifacts byte-identical across two runs (dataset + training)", a.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("gradient suite", Box::new(gradient_suite)),
        ("complex conv oracle", Box::new(eq1_oracle)),
        ("parameter accounting", Box::new(parameter_accounting)),
        ("SNR scaling law", Box::new(snr_law)),
        ("learnability: smoke", Box::new(smoke)),
        ("learnability: desk run", Box::new(|| desk_run(root))),
        ("trend: outcome scatter", Box::new(|| trend_scatter(root))),
        ("trend: complex vs real", Box::new(|| trend_complex_vs_real(root))),
        ("trend: input length sweep", Box::new(|| trend_sweep(root))),
        ("multi-label math", Box::new(|| multilabel_math(root))),
        ("determinism", Box::new(|| determinism(root))),
    ];
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        let start = Instant::now();
        let o = run();
        line(name, &o, start.elapsed().as_secs_f64());
        if !o.passed {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
