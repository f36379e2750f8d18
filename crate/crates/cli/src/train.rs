use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use halftone_core::config::Config;
use halftone_core::io::load_gray;
use halftone_core::marl::Trainer;
use halftone_core::policy::Checkpoint;

use crate::manifest::{sidecar, Invocation, OutputRecord, Record};
use crate::usage;

pub const LOG_HEADER: &str = "step,lr,mean_reward,l_as,wall_ms";

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// `key = value` config file; missing keys keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set train.iterations=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-step CSV log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Continue from a checkpoint up to `train.iterations` total steps.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Stop after this many steps in this invocation; the schedule still
    /// spans `train.iterations`.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Training images (PGM/PNG). Defaults to the built-in fixture corpus.
    #[arg(long = "image")]
    pub images: Vec<PathBuf>,
}

pub fn load_config(path: Option<&PathBuf>, overrides: &[String]) -> anyhow::Result<Config> {
    let mut cfg = match path {
        Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => Config::default(),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{o}'")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| usage(e.to_string()))?;
    }
    Ok(cfg)
}

pub fn run(a: TrainArgs, inv: Invocation) -> anyhow::Result<()> {
    let cfg = load_config(a.config.as_ref(), &a.overrides)?;
    let tc = cfg.train()?;
    let mut trainer = match &a.resume {
        Some(p) => Trainer::resume(tc, Checkpoint::load(p).with_context(|| format!("loading {}", p.display()))?)?,
        None => Trainer::new(tc)?,
    };
    if !a.images.is_empty() {
        let imgs = a
            .images
            .iter()
            .map(|p| load_gray(p).with_context(|| format!("loading {}", p.display())))
            .collect::<anyhow::Result<Vec<_>>>()?;
        trainer = trainer.with_images(imgs)?;
    }
    let start_step = trainer.steps_done();

    let mut log = match &a.log {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            writeln!(w, "{LOG_HEADER}")?;
            Some(w)
        }
        None => None,
    };
    let total = trainer.config().iterations;
    let stop = a.max_steps.map_or(total, |n| total.min(start_step.saturating_add(n)));
    while trainer.steps_done() < stop {
        let r = trainer.step()?;
        if let Some(w) = log.as_mut() {
            writeln!(w, "{},{},{},{},{}", r.step, r.lr, r.mean_reward, r.l_as, inv.elapsed_ms())
                .and_then(|_| w.flush())
                .context("writing training log")?;
        }
    }
    trainer.checkpoint().save(&a.out)?;

    let mut rec = Record {
        config: Some(cfg.to_text()),
        ..Record::default()
    }
    .seed("train", cfg.seed)
    .set("start_step", start_step)
    .set("end_step", trainer.steps_done())
    .set("max_steps", a.max_steps.map_or("none".into(), |n| n.to_string()))
    .output(OutputRecord::new(&a.out, "checkpoint"));
    if let Some(p) = &a.resume {
        rec = rec.set("resume", p.display());
    }
    if let Some(p) = &a.log {
        rec = rec.output(OutputRecord::new(p, "csv").volatile(&["wall_ms"]));
    }
    inv.write("train", rec, &sidecar(&a.out))
}
