use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use bitslice_core::quant::QuantConfig;
use bitslice_core::slicekit::sparsity_report;
use bitslice_core::trainkit::{
    evaluate, load_mnist, magnitude_prune, train_from, Checkpoint, MlpModel, TrainingConfig,
};

use crate::config::{text, Defaults, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{render_table, ReportRow};
use crate::TrainArgs;

const DEFAULTS: Defaults = &[
    ("data", "data/mnist"),
    ("out", ""),
    ("mode", "none"),
    ("alpha", "0"),
    ("lr", "0.1"),
    ("epochs", "10"),
    ("batch_size", "64"),
    ("seed", "0"),
    ("hidden", "128"),
    ("warm_start", ""),
    ("prune_threshold", ""),
    ("bits", "8"),
    ("slice_width", "2"),
    ("update_base", "latent"),
];

fn resolve(a: &TrainArgs) -> Result<RunConfig> {
    RunConfig::resolve(
        DEFAULTS,
        a.config.as_deref(),
        vec![
            ("data", a.data.as_ref().map(|p| p.display().to_string())),
            ("out", a.out.as_ref().map(|p| p.display().to_string())),
            ("mode", a.mode.clone()),
            ("alpha", text(&a.alpha)),
            ("lr", text(&a.lr)),
            ("epochs", text(&a.epochs)),
            ("batch_size", text(&a.batch_size)),
            ("seed", text(&a.seed)),
            ("hidden", text(&a.hidden)),
            (
                "warm_start",
                a.warm_start.as_ref().map(|p| p.display().to_string()),
            ),
            ("prune_threshold", text(&a.prune_threshold)),
            ("bits", text(&a.bits)),
            ("slice_width", text(&a.slice_width)),
            ("update_base", a.update_base.clone()),
        ],
    )
}

pub fn training_config(c: &RunConfig) -> Result<TrainingConfig> {
    let cfg = TrainingConfig {
        lr: c.get("lr")?,
        alpha: c.get("alpha")?,
        epochs: c.get("epochs")?,
        batch_size: c.get("batch_size")?,
        seed: c.get("seed")?,
        mode: c.get("mode")?,
        warm_start: c.opt("warm_start")?,
        prune_threshold: c.opt("prune_threshold")?,
        hidden: c.get("hidden")?,
        quant: QuantConfig::new(c.get("bits")?, c.get("slice_width")?)?,
        update_base: c.get("update_base")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: TrainArgs) -> Result<()> {
    let rc = resolve(&args)?;
    let cfg = training_config(&rc)?;
    let out: PathBuf = rc
        .opt("out")?
        .ok_or_else(|| CliError::usage("train needs --out DIR"))?;
    let data_dir: PathBuf = rc.get("data")?;
    let data = load_mnist::<f32>(&data_dir)?;

    let mut model = match &cfg.warm_start {
        Some(path) => {
            let ck = Checkpoint::<f32>::load(path)?;
            let dims = ck.model.dims();
            if dims.get(1) != Some(&cfg.hidden) {
                return Err(CliError::usage(format!(
                    "{} has layer sizes {dims:?}, hidden={} requested",
                    path.display(),
                    cfg.hidden
                )));
            }
            ck.model
        }
        None => MlpModel::mnist(cfg.hidden, cfg.seed)?,
    };
    if model.dims().first() != Some(&data.train.features()) {
        return Err(CliError::usage(format!(
            "model expects {:?} inputs, data has {}",
            model.dims().first(),
            data.train.features()
        )));
    }
    if let Some(t) = cfg.prune_threshold {
        let n = magnitude_prune(&mut model, t);
        println!("pruned {n} of {} weights below {t}", model.weight_count());
    }

    rc.echo_into(&out)?;
    let history_path = out.join("history.jsonl");
    let file = File::create(&history_path).map_err(|e| CliError::io(&history_path, e))?;
    let mut history = BufWriter::new(file);
    let mut write_err = None;
    let records = train_from(&mut model, &data.train, &data.test, &cfg, 0, |r, _| {
        println!(
            "epoch {:>3}  acc {:.2}%  mean {:.2}%  loss {:.4}  penalty {:.4e}",
            r.epoch,
            100.0 * r.test_accuracy,
            100.0 * r.mean,
            r.loss,
            r.penalty
        );
        let line = serde_json::to_string(r).expect("record serializes");
        if let Err(e) = writeln!(history, "{line}") {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(CliError::io(&history_path, e));
    }
    history
        .flush()
        .map_err(|e| CliError::io(&history_path, e))?;

    let accuracy = match records.last() {
        Some(r) => r.test_accuracy,
        None => evaluate(&model, &data.test, cfg.quant)?,
    };
    let report = sparsity_report(&model.quantize(cfg.quant)?, Some(accuracy))?;
    let report_path = out.join("sparsity.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&report_path, json + "\n").map_err(|e| CliError::io(&report_path, e))?;
    let epochs = cfg.epochs;
    let row = ReportRow::new(method_name(&cfg, &model), report);
    Checkpoint::new(model, cfg, epochs, Some(accuracy)).save(out.join("checkpoint.ckpt"))?;
    print!("{}", render_table(&[row]));
    Ok(())
}

pub fn method_name(cfg: &TrainingConfig, model: &MlpModel<f32>) -> String {
    let pruned = model.layers().iter().any(|l| l.mask.is_some());
    let base = cfg.mode.to_string();
    if pruned {
        format!("{base}+pruned")
    } else {
        base
    }
}
