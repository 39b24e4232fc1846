use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use meshdn::checkpoint::{read_model, write_checkpoint};
use meshdn::config::RunConfig;
use meshdn::manifest::Manifest;
use meshdn::pipeline::{self, EvalNoise};
use meshdn::report::{Format, Table};
use meshdn::{bench, read_mesh, train, write_mesh};
use meshdn_core::noise::{apply_noise, NoiseKind, NoiseSpec};
use meshdn_core::{canonicalize, diffgeo, NetConfig, NetParams};

/// Graph-network mesh denoising.
#[derive(Parser)]
#[command(name = "meshdn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Omit the generation-time header.
    #[arg(long)]
    no_timestamp: bool,
}

impl ReportArgs {
    fn write(&self, table: &Table) -> Result<()> {
        table.write(&self.report, self.format, !self.no_timestamp)?;
        Ok(())
    }
}

#[derive(Args)]
struct NoiseArgs {
    /// Noise added to each ground-truth test mesh before denoising.
    #[arg(long, default_value = "gaussian")]
    kind: NoiseKind,
    /// Amplitude in the unit-cube frame; 0 evaluates on the ground truth.
    #[arg(long, default_value_t = 0.02)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl NoiseArgs {
    fn eval_noise(&self) -> EvalNoise {
        EvalNoise {
            kind: self.kind,
            level: self.level,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Denoise one mesh with a trained checkpoint.
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train from a key = value run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Suppress the per-step log on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Model and reference metrics over the test splits of a manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Add synthetic noise to a mesh.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        kind: NoiseKind,
        /// Amplitude in the unit-cube frame of the input.
        #[arg(long)]
        level: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-vertex normal, mean and Gaussian curvature as CSV.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rotation-equivariance test over the test splits of a manifest.
    Equivariance {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 5)]
        rotations: usize,
        /// Seed of the rotations.
        #[arg(long, default_value_t = 0)]
        rotation_seed: u64,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Forward-pass wall time on refined tori.
    Bench {
        #[arg(long)]
        min_verts: usize,
        #[arg(long)]
        max_verts: usize,
        /// Number of mesh sizes in the sweep.
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        k_tf: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Write a freshly initialized checkpoint.
    Init {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        k_tf: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// All-zero parameters: the identity denoiser.
        #[arg(long)]
        zero: bool,
    },
}

fn test_meshes(manifest_path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let manifest = Manifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let meshes: Vec<_> = manifest
        .test()
        .map(|p| {
            let label = p.strip_prefix(base).unwrap_or(p).display().to_string();
            (label, p.clone())
        })
        .collect();
    if meshes.is_empty() {
        bail!("{}: no [test-intra] or [test-inter] meshes", manifest_path.display());
    }
    Ok(meshes)
}

fn report_skips(skipped: &[(String, meshdn::Error)]) {
    for (name, e) in skipped {
        eprintln!("skipped {name}: {e}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Denoise { input, ckpt, out } => {
            let (params, config) = read_model(&ckpt)?;
            let mesh = read_mesh(&input)?;
            write_mesh(&out, &pipeline::denoise(&mesh, &params, &config)?)?;
        }
        Command::Train { config, quiet } => {
            let run = RunConfig::read(&config)?;
            let mut sink: Box<dyn std::io::Write> = if quiet {
                Box::new(std::io::sink())
            } else {
                Box::new(std::io::stderr().lock())
            };
            train::run(&run, &mut sink)?;
        }
        Command::Eval {
            manifest,
            ckpt,
            noise,
            report,
        } => {
            let (params, config) = read_model(&ckpt)?;
            let meshes = test_meshes(&manifest)?;
            let (mut table, skipped) = pipeline::evaluate(&meshes, &params, &config, &noise.eval_noise());
            report_skips(&skipped);
            if let Some(means) = table.means() {
                table.push("mean", means);
            }
            report.write(&table)?;
        }
        Command::Noise {
            input,
            kind,
            level,
            seed,
            out,
        } => {
            let mesh = read_mesh(&input)?;
            let (canonical, transform) = canonicalize(&mesh)?;
            let noisy = apply_noise(&canonical, &NoiseSpec::new(kind, level, seed))?;
            write_mesh(&out, &transform.invert_mesh(&noisy)?)?;
        }
        Command::Features { input, out } => {
            let mesh = read_mesh(&input)?;
            let features = diffgeo::local_features(&mesh);
            let mut s = String::from("vertex,nx,ny,nz,mean_curvature,gaussian_curvature\n");
            for (v, r) in features.rows.iter().enumerate() {
                writeln!(s, "{v},{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4])?;
            }
            std::fs::write(&out, s).with_context(|| out.display().to_string())?;
        }
        Command::Equivariance {
            manifest,
            ckpt,
            rotations,
            rotation_seed,
            noise,
            report,
        } => {
            if rotations == 0 {
                bail!("--rotations must be at least 1");
            }
            let (params, config) = read_model(&ckpt)?;
            let meshes = test_meshes(&manifest)?;
            let (mut table, skipped) =
                pipeline::equivariance(&meshes, &params, &config, &noise.eval_noise(), rotations, rotation_seed);
            report_skips(&skipped);
            if let Some(means) = table.means() {
                table.push("mean", means);
            }
            report.write(&table)?;
        }
        Command::Bench {
            min_verts,
            max_verts,
            steps,
            repeats,
            k,
            k_tf,
            seed,
            report,
        } => {
            let config = NetConfig::with_widths(k, k_tf);
            config.validate()?;
            let sizes = bench::sizes(min_verts, max_verts, steps)?;
            let samples = bench::run(&sizes, &config, seed, repeats)?;
            report.write(&bench::table(&samples))?;
            if samples.len() >= 2 {
                let points: Vec<_> = samples.iter().map(|s| (s.faces as f64, s.seconds)).collect();
                let (_, slope, r2) = bench::linear_fit(&points);
                println!("seconds per face {slope:e}, r2 {r2:.4}");
            }
        }
        Command::Init {
            out,
            k,
            k_tf,
            seed,
            zero,
        } => {
            let config = NetConfig::with_widths(k, k_tf);
            config.validate()?;
            let params = if zero {
                NetParams::zeros(&config)
            } else {
                NetParams::init(&config, seed)
            };
            write_checkpoint(&out, &params)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("meshdn: {msg}");
            ExitCode::FAILURE
        }
    }
}
