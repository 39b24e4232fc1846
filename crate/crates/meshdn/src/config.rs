//! Flat `key = value` run configuration for `meshdn train`.
//!
//! Keys are the field names of the trainer, loss-weight and network
//! configurations plus the run paths `manifest`, `checkpoint` and
//! `init_checkpoint`. Unlisted keys keep their defaults. Relative paths
//! resolve against the directory of the config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use meshdn_core::noise::NoiseGrid;
use meshdn_core::trainer::TrainConfig;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub manifest: Option<PathBuf>,
    /// Where the trained parameters go.
    pub checkpoint: Option<PathBuf>,
    /// Start from these parameters instead of a seeded initialization.
    pub init_checkpoint: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            manifest: None,
            checkpoint: None,
            init_checkpoint: None,
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::parse(line, format!("`{key}`: cannot parse `{raw}`")))
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let entry = raw.split('#').next().unwrap_or("").trim();
            if entry.is_empty() {
                continue;
            }
            let (key, v) = entry
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse(line, format!("expected `key = value`, found `{entry}`")))?;
            if !seen.insert(key.to_owned()) {
                return Err(Error::parse(line, format!("`{key}` set twice")));
            }
            let t = &mut c.train;
            let w = &mut t.weights;
            let n = &mut t.net;
            match key {
                "lr" => t.lr = value(line, key, v)?,
                "beta1" => t.beta1 = value(line, key, v)?,
                "beta2" => t.beta2 = value(line, key, v)?,
                "eps" => t.eps = value(line, key, v)?,
                "steps" => t.steps = value(line, key, v)?,
                "seed" => t.seed = value(line, key, v)?,
                "augment_rotation" => t.augment_rotation = value(line, key, v)?,
                "fixed_noise" => t.fixed_noise = value(line, key, v)?,
                "checkpoint_every" => t.checkpoint_every = value(line, key, v)?,
                "noise_grid" => {
                    t.noise_grid = NoiseGrid::parse(v).map_err(|e| Error::parse(line, e.to_string()))?
                }
                "lambda_v" => w.lambda_v = value(line, key, v)?,
                "lambda_n" => w.lambda_n = value(line, key, v)?,
                "lambda_kappa" => w.lambda_kappa = value(line, key, v)?,
                "lambda_c" => w.lambda_c = value(line, key, v)?,
                "lambda_fe" => w.lambda_fe = value(line, key, v)?,
                "gamma_h" => w.gamma_h = value(line, key, v)?,
                "gamma_g" => w.gamma_g = value(line, key, v)?,
                "k" => n.k = value(line, key, v)?,
                "k_tf" => n.k_tf = value(line, key, v)?,
                "aggs_per_stream" => n.aggs_per_stream = value(line, key, v)?,
                "two_stream_blocks_fe" => n.two_stream_blocks_fe = value(line, key, v)?,
                "two_stream_blocks_denoiser" => n.two_stream_blocks_denoiser = value(line, key, v)?,
                "manifest" => c.manifest = Some(base.join(v)),
                "checkpoint" => c.checkpoint = Some(base.join(v)),
                "init_checkpoint" => c.init_checkpoint = Some(base.join(v)),
                _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
            }
        }
        c.train.validate()?;
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base).map_err(|e| e.in_file(path))
    }

    /// Every key with its current value, in the grammar `parse` reads.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let w = &t.weights;
        let n = &t.net;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(s, "{k} = {v}").unwrap();
        kv("lr", &t.lr);
        kv("beta1", &t.beta1);
        kv("beta2", &t.beta2);
        kv("eps", &t.eps);
        kv("steps", &t.steps);
        kv("seed", &t.seed);
        kv("augment_rotation", &t.augment_rotation);
        kv("fixed_noise", &t.fixed_noise);
        kv("checkpoint_every", &t.checkpoint_every);
        kv("noise_grid", &t.noise_grid.to_text());
        kv("lambda_v", &w.lambda_v);
        kv("lambda_n", &w.lambda_n);
        kv("lambda_kappa", &w.lambda_kappa);
        kv("lambda_c", &w.lambda_c);
        kv("lambda_fe", &w.lambda_fe);
        kv("gamma_h", &w.gamma_h);
        kv("gamma_g", &w.gamma_g);
        kv("k", &n.k);
        kv("k_tf", &n.k_tf);
        kv("aggs_per_stream", &n.aggs_per_stream);
        kv("two_stream_blocks_fe", &n.two_stream_blocks_fe);
        kv("two_stream_blocks_denoiser", &n.two_stream_blocks_denoiser);
        for (k, p) in [
            ("manifest", &self.manifest),
            ("checkpoint", &self.checkpoint),
            ("init_checkpoint", &self.init_checkpoint),
        ] {
            if let Some(p) = p {
                kv(k, &p.display());
            }
        }
        s
    }
}
