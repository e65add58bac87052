use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use pulsenet::augment::DelayMode;
use pulsenet::metrics::{multipulse_curve, multipulse_rows, outcome_scatter};
use pulsenet::nn::gradcheck::{grad_check_all, Precision};
use pulsenet::nn::Checkpoint;
use pulsenet::resnet::{Model, ModelConfig};
use pulsenet::rng::derive_seed;
use pulsenet::train::{
    evaluate, evaluate_multipulse, sweep_csv, sweep_input_length, train_multipulse, train_observed, EpochRecord,
    MultiPulseConfig, TrainHistory,
};
use pulsenet::waveform::{build_dataset, standard_family, Dataset, SceneSpec};
use serde_json::{json, Value};

use crate::artifacts::{ensure_dir, write_artifact, write_csv, write_json};
use crate::config::{merge, usage, RunConfig};
use crate::{CliError, EvalArgs, GenArgs, GradcheckArgs, ModelFlags, MultiPulseArgs, PrecisionArg, SummaryArgs};
use crate::{SweepArgs, TrainArgs, TrainFlags};

type CmdResult = Result<(), CliError>;

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_model(cfg: &mut ModelConfig, f: &ModelFlags) {
    set(&mut cfg.arithmetic, f.arithmetic);
    set(&mut cfg.depth, f.depth);
    set(&mut cfg.base_width, f.width);
    set(&mut cfg.first_kernel, f.kernel);
    set(&mut cfg.input_length, f.input_len);
}

fn apply_train(cfg: &mut RunConfig, f: &TrainFlags) {
    if f.sync {
        cfg.augment.mode = DelayMode::Synchronous;
    }
    if f.async_mode {
        cfg.augment.mode = DelayMode::Asynchronous;
    }
    if f.fixed_augmentation {
        cfg.augment.rerandomize = false;
    }
    set(&mut cfg.train.batch_size, f.batch_size);
    set(&mut cfg.train.learning_rate, f.lr);
    set(&mut cfg.train.max_epochs, f.epochs);
    set(&mut cfg.train.patience, f.patience);
    set(&mut cfg.train.seed, f.seed);
    set(&mut cfg.eval.repeats, f.eval_repeats);
    set(&mut cfg.eval.seed, f.eval_seed);
}

fn load_dataset(dir: &Path) -> Result<Dataset, CliError> {
    if !dir.join(pulsenet::waveform::MANIFEST_FILE).is_file() {
        return Err(CliError::Runtime(anyhow::anyhow!("dataset not found: {} has no manifest", dir.display())));
    }
    Ok(Dataset::load(dir).with_context(|| format!("loading dataset {}", dir.display()))?)
}

fn log_epoch(r: &EpochRecord) {
    eprintln!(
        "epoch {:3}  train_loss {:.4}  test_loss {:.4}  test_error {:.4}",
        r.epoch, r.train_loss, r.test_loss, r.test_error
    );
}

fn write_history(out: &Path, run: &Value, history: &TrainHistory) -> anyhow::Result<()> {
    write_artifact(&out.join("history.json"), run, "history", history)?;
    // Wall time lives apart so every other artifact stays byte-reproducible.
    write_json(&out.join("timing.json"), &json!({ "version": pulsenet::VERSION, "wall_time_s": history.wall_time_s }))
}

pub fn gen(a: GenArgs) -> CmdResult {
    let mut cfg = RunConfig::load("gen", a.config.as_deref())?;
    let d = &mut cfg.data;
    set(&mut d.classes, a.classes);
    set(&mut d.per_class, a.per_class);
    set(&mut d.snr_range_db[0], a.snr_lo);
    set(&mut d.snr_range_db[1], a.snr_hi);
    set(&mut d.pulse_width_range[0], a.nmin);
    set(&mut d.pulse_width_range[1], a.nmax);
    set(&mut d.split_fraction, a.split);
    set(&mut d.master_seed, a.seed);
    cfg.data.validate().map_err(usage)?;
    let mut manifest = cfg.data.clone();
    manifest.provenance = Some(cfg.to_value());
    ensure_dir(&a.out)?;
    let ds = build_dataset(&manifest, &a.out)?;
    println!(
        "wrote {} train and {} test pulses ({} classes) to {}",
        ds.train.len(),
        ds.test.len(),
        ds.num_classes(),
        a.out.display()
    );
    Ok(())
}

pub fn train(a: TrainArgs) -> CmdResult {
    let mut cfg = RunConfig::load("train", a.config.as_deref())?;
    apply_model(&mut cfg.model, &a.model);
    apply_train(&mut cfg, &a.train);
    let ds = load_dataset(&a.data)?;
    cfg.model.num_classes = ds.num_classes();
    cfg.data = ds.manifest.clone();
    cfg.data.provenance = None;
    cfg.finish_training()?;
    let run = cfg.to_value();
    ensure_dir(&a.out)?;
    write_json(&a.out.join("run_config.json"), &run)?;

    let aug = cfg.augment_spec();
    let mut model = Model::<f32>::build(&cfg.model, cfg.train.init_seed())?;
    eprintln!(
        "{} depth {} width {}: {} parameters, {} train / {} test pulses",
        cfg.model.arithmetic.name(),
        cfg.model.depth,
        cfg.model.base_width,
        model.count_parameters(),
        ds.train.len(),
        ds.test.len()
    );
    let history = train_observed(&mut model, &ds.train, &ds.test, &aug, &cfg.train, log_epoch)?;
    model.to_checkpoint(json!({ "version": pulsenet::VERSION, "run_config": run }))?.save(&a.out.join("ckpt.bin"))?;
    write_history(&a.out, &run, &history)?;

    let report = evaluate(&mut model, &ds.test, &aug, cfg.eval.repeats, cfg.eval.seed)?;
    let scatter = outcome_scatter(&report)?;
    write_artifact(&a.out.join("report.json"), &run, "report", &report)?;
    write_csv(&a.out.join("outcomes.csv"), &run, &scatter.csv)?;
    write_artifact(&a.out.join("scatter.json"), &run, "bins", &scatter.bins)?;
    println!(
        "best epoch {} of {}; test error over {} repeats: {:.4}",
        history.best_epoch,
        history.stopped_epoch,
        report.repeats,
        report.top1_error.unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn eval(a: EvalArgs) -> CmdResult {
    if !a.ckpt.is_file() {
        return Err(CliError::Runtime(anyhow::anyhow!("checkpoint not found: {}", a.ckpt.display())));
    }
    let ckpt = Checkpoint::load(&a.ckpt)?;
    let mut model = Model::<f32>::from_checkpoint(&ckpt)?;
    let mut cfg = match ckpt.header.get("run_config") {
        Some(v) => serde_json::from_value::<RunConfig>(v.clone())
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("checkpoint run_config: {e}")))?,
        None => RunConfig::defaults("eval"),
    };
    cfg.command = "eval".into();
    cfg.version = pulsenet::VERSION.into();
    cfg.model = model.config.clone();
    set(&mut cfg.eval.repeats, a.repeats);
    set(&mut cfg.eval.seed, a.seed);
    if a.sync {
        cfg.augment.mode = DelayMode::Synchronous;
    }
    if a.async_mode {
        cfg.augment.mode = DelayMode::Asynchronous;
    }
    if cfg.eval.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let ds = load_dataset(&a.data)?;
    if ds.num_classes() != cfg.model.num_classes {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "dataset has {} classes but the checkpoint model has {}",
            ds.num_classes(),
            cfg.model.num_classes
        )));
    }
    let run = cfg.to_value();
    let report = evaluate(&mut model, &ds.test, &cfg.augment_spec(), cfg.eval.repeats, cfg.eval.seed)?;
    if let Some(parent) = a.report.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_artifact(&a.report, &run, "report", &report)?;
    println!("test error over {} repeats: {:.4}", report.repeats, report.top1_error.unwrap_or(f64::NAN));
    Ok(())
}

pub fn sweep_d(a: SweepArgs) -> CmdResult {
    let mut cfg = RunConfig::load("sweep-d", a.config.as_deref())?;
    apply_model(&mut cfg.model, &a.model);
    apply_train(&mut cfg, &a.train);
    set(&mut cfg.sweep.d_values, a.d_values);
    if cfg.sweep.d_values.is_empty() {
        return Err(CliError::Usage("--d-values must list at least one length".into()));
    }
    let ds = load_dataset(&a.data)?;
    cfg.model.num_classes = ds.num_classes();
    cfg.data = ds.manifest.clone();
    cfg.data.provenance = None;
    cfg.finish_training()?;
    for &d in &cfg.sweep.d_values {
        ModelConfig { input_length: d, ..cfg.model.clone() }.validate().map_err(usage)?;
    }
    let run = cfg.to_value();
    ensure_dir(&a.out)?;
    write_json(&a.out.join("run_config.json"), &run)?;
    let start = Instant::now();
    let rows = sweep_input_length(
        &cfg.sweep.d_values,
        &cfg.model,
        &ds.train,
        &ds.test,
        &cfg.augment_spec(),
        &cfg.train,
        cfg.eval.repeats,
        cfg.eval.seed,
        |r| match (&r.test_error, &r.error) {
            (Some(e), _) => eprintln!("D={}: test error {e:.4}", r.d),
            (_, Some(msg)) => eprintln!("D={}: failed: {msg}", r.d),
            _ => {}
        },
    );
    write_csv(&a.out.join("sweep_d.csv"), &run, &sweep_csv(&rows))?;
    write_artifact(&a.out.join("sweep_d.json"), &run, "rows", &rows)?;
    write_json(
        &a.out.join("timing.json"),
        &json!({ "version": pulsenet::VERSION, "wall_time_s": start.elapsed().as_secs_f64() }),
    )?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}

pub fn multipulse(a: MultiPulseArgs) -> CmdResult {
    let mut cfg = RunConfig::load("multipulse", a.config.as_deref())?;
    apply_model(&mut cfg.model, &a.model);
    apply_train(&mut cfg, &a.train);
    set(&mut cfg.model.num_classes, a.classes);
    let mp = &mut cfg.multipulse;
    set(&mut mp.l_values, a.l_values);
    set(&mut mp.train_scenes, a.train_scenes);
    set(&mut mp.test_scenes, a.test_scenes);
    set(&mut mp.eval_scenes, a.eval_scenes);
    cfg.force_multilabel();
    cfg.finish_training()?;
    let family = standard_family(cfg.model.num_classes).map_err(usage)?;
    let max_l = cfg.multipulse.l_values.iter().chain(&cfg.multipulse.train_l_values).copied().max().unwrap_or(0);
    if cfg.multipulse.l_values.is_empty() || cfg.multipulse.train_l_values.is_empty() || max_l > family.len() {
        return Err(CliError::Usage(format!(
            "pulse counts must be non-empty and at most the number of classes ({})",
            family.len()
        )));
    }
    if cfg.multipulse.l_values.contains(&0) || cfg.multipulse.train_l_values.contains(&0) {
        return Err(CliError::Usage("pulse counts must be at least 1".into()));
    }
    let scene = SceneSpec {
        input_length: cfg.model.input_length,
        snr_range_db: cfg.multipulse.snr_range_db,
        pulse_width_range: cfg.multipulse.pulse_width_range,
        scale_range: cfg.multipulse.scale_range,
    };
    let mpc = MultiPulseConfig {
        scene: scene.clone(),
        l_values: cfg.multipulse.train_l_values.clone(),
        train_scenes: cfg.multipulse.train_scenes,
        test_scenes: cfg.multipulse.test_scenes,
    };
    let run = cfg.to_value();
    ensure_dir(&a.out)?;
    write_json(&a.out.join("run_config.json"), &run)?;

    let mut model = Model::<f32>::build(&cfg.model, cfg.train.init_seed())?;
    let history = train_multipulse(&mut model, &family, &mpc, &cfg.train, log_epoch)?;
    model.to_checkpoint(json!({ "version": pulsenet::VERSION, "run_config": run }))?.save(&a.out.join("ckpt.bin"))?;
    write_history(&a.out, &run, &history)?;

    let mut reports = Vec::new();
    for &l in &cfg.multipulse.l_values {
        let seed = derive_seed(cfg.eval.seed, &[l as u64]);
        let report = evaluate_multipulse(&mut model, &family, &scene, l, cfg.multipulse.eval_scenes, seed)?;
        eprintln!(
            "L={l}: E_abs {:.4}  E_sub {:.4}",
            report.e_abs.unwrap_or(f64::NAN),
            report.e_sub.unwrap_or(f64::NAN)
        );
        reports.push((l, report));
    }
    let curve = multipulse_curve(&reports)?;
    write_csv(&a.out.join("multipulse.csv"), &run, &curve)?;
    write_artifact(&a.out.join("multipulse.json"), &run, "rows", multipulse_rows(&reports)?)?;
    print!("{curve}");
    Ok(())
}

pub fn gradcheck(a: GradcheckArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let precisions: &[Precision] = match a.precision {
        PrecisionArg::Single => &[Precision::Single],
        PrecisionArg::Double => &[Precision::Double],
        PrecisionArg::Both => &[Precision::Single, Precision::Double],
    };
    let mut reports = Vec::new();
    for &p in precisions {
        reports.extend(grad_check_all(p, a.trials, a.seed)?);
    }
    println!("{:<24} {:<9} {:>12} {:>10}  result", "layer", "precision", "max rel err", "tolerance");
    for r in &reports {
        println!(
            "{:<24} {:<9} {:>12.3e} {:>10.0e}  {}",
            r.op,
            format!("{:?}", r.precision).to_lowercase(),
            r.max_rel_error,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    if let Some(out) = &a.out {
        let run = json!({ "command": "gradcheck", "trials": a.trials, "seed": a.seed });
        write_artifact(out, &run, "reports", &reports)?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.op.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(anyhow::anyhow!("gradient check failed for {}", failed.join(", "))))
    }
}

pub fn summary(a: SummaryArgs) -> CmdResult {
    let mut cfg = ModelConfig::default();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text).map_err(usage)?;
        let section = file.get("model").cloned().unwrap_or(file);
        let mut merged = serde_json::to_value(&cfg).expect("config serializes");
        merge(&mut merged, &section, "model")?;
        cfg = serde_json::from_value(merged).map_err(usage)?;
    }
    apply_model(&mut cfg, &a.model);
    cfg.validate().map_err(usage)?;
    let model = Model::<f32>::build(&cfg, 0)?;
    let s = model.summary();
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
        return Ok(());
    }
    println!(
        "{} ResNet-{} width {} kernel {} D={} K={}",
        cfg.arithmetic.name(),
        cfg.depth,
        cfg.base_width,
        cfg.first_kernel,
        cfg.input_length,
        cfg.num_classes
    );
    println!("{:<22} {:<22} {:>12} {:>10}", "layer", "kind", "output", "params");
    for l in &s.layers {
        println!("{:<22} {:<22} {:>12} {:>10}", l.name, l.kind, format!("{}x{}", l.output.0, l.output.1), l.parameters);
    }
    println!("receptive field: {} samples", s.receptive_field);
    println!("total parameters: {}", s.real_parameter_count);
    Ok(())
}
