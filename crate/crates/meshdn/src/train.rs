//! The `train` command: manifest meshes in, checkpoint out.

use std::io::Write;

use meshdn_core::trainer::{StepReport, Trainer};
use meshdn_core::{canonicalize, NetParams};

use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::read_mesh;
use crate::manifest::Manifest;

/// One log line per step: step, mesh, total and the five loss terms.
pub fn log_line(r: &StepReport) -> String {
    let c = &r.components;
    format!(
        "step={} mesh={} loss={:e} vertex={:e} normal={:e} curvature={:e} chamfer={:e} fe={:e} noise={}:{}",
        r.step,
        r.mesh,
        r.loss,
        c.vertex,
        c.normal,
        c.curvature,
        c.chamfer,
        c.fe,
        r.noise.kind.name(),
        r.noise.amplitude
    )
}

/// Trains on the `[train]` split and writes the checkpoint. Returns the
/// trainer for inspection.
pub fn run(config: &RunConfig, log: &mut dyn Write) -> Result<Trainer> {
    let manifest_path = config
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Invalid("config sets no `manifest`".into()))?;
    let checkpoint = config
        .checkpoint
        .as_deref()
        .ok_or_else(|| Error::Invalid("config sets no `checkpoint`".into()))?;
    let manifest = Manifest::read(manifest_path)?;
    if manifest.train.is_empty() {
        return Err(Error::Invalid(format!("{}: [train] is empty", manifest_path.display())));
    }
    let meshes = manifest
        .train
        .iter()
        .map(|p| Ok(canonicalize(&read_mesh(p)?)?.0))
        .collect::<Result<Vec<_>>>()?;
    let params = match &config.init_checkpoint {
        Some(p) => read_checkpoint(p)?,
        None => NetParams::init(&config.train.net, config.train.seed),
    };
    let mut trainer = Trainer::new(config.train.clone(), params, meshes)?;
    let every = config.train.checkpoint_every;
    let log_err = |e| Error::file("training log", e);
    while trainer.step() < config.train.steps {
        let report = trainer.train_step()?;
        writeln!(log, "{}", log_line(&report)).map_err(log_err)?;
        if every > 0 && trainer.step() % every == 0 && trainer.step() < config.train.steps {
            write_checkpoint(checkpoint, &trainer.params)?;
        }
    }
    write_checkpoint(checkpoint, &trainer.params)?;
    if trainer.faults > 0 {
        writeln!(log, "rejected {} steps with non-finite gradients", trainer.faults).map_err(log_err)?;
    }
    Ok(trainer)
}
