//! Joint training of all three network parts with ADAM.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::autodiff::{Backend, Tape, Tensor};
use crate::losses::{self, LossComponents, LossWeights, Metrics, Target};
use crate::network::{self, MeshGraph, NetConfig, NetParams};
use crate::noise::{self, NoiseGrid, NoiseSpec};
use crate::{Error, Mesh, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub steps: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub net: NetConfig,
    pub noise_grid: NoiseGrid,
    /// Rotate the ground truth randomly before every step.
    pub augment_rotation: bool,
    /// Draw one noise instance per mesh and reuse it at every step.
    pub fixed_noise: bool,
    /// Write a checkpoint every this many steps; 0 only writes at the end.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 1000,
            seed: 0,
            weights: LossWeights::default(),
            net: NetConfig::desk(),
            noise_grid: NoiseGrid::default(),
            augment_rotation: true,
            fixed_noise: false,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("lr must be positive, got {}", self.lr)));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1), got {beta}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {}", self.eps)));
        }
        if self.noise_grid.entries.is_empty() {
            return Err(Error::InvalidArgument("noise grid is empty".into()));
        }
        self.weights.validate()?;
        self.net.validate()
    }
}

/// First and second moments per parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub step: u64,
    pub moments: BTreeMap<String, (Tensor, Tensor)>,
}

/// One bias-corrected ADAM update. A non-finite gradient rejects the whole
/// step and leaves parameters and state untouched.
pub fn adam_step(
    params: &mut NetParams,
    grads: &BTreeMap<String, Tensor>,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    for (name, g) in grads {
        let p = params.get(name).ok_or_else(|| Error::Parameter {
            name: name.clone(),
            detail: "gradient for unknown parameter".into(),
        })?;
        if p.dims() != g.dims() {
            return Err(Error::Parameter {
                name: name.clone(),
                detail: format!("gradient dims {:?} vs parameter {:?}", g.dims(), p.dims()),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("adam_step"));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - libm::pow(config.beta1, t as f64);
    let c2 = 1.0 - libm::pow(config.beta2, t as f64);
    for (name, g) in grads {
        let p = params.get_mut(name).expect("checked above");
        let (m, v) = state
            .moments
            .entry(name.clone())
            .or_insert_with(|| (Tensor::zeros(g.dims()), Tensor::zeros(g.dims())));
        let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
        for i in 0..g.len() {
            let gi = g.data()[i];
            md[i] = config.beta1 * md[i] + (1.0 - config.beta1) * gi;
            vd[i] = config.beta2 * vd[i] + (1.0 - config.beta2) * gi * gi;
            let m_hat = md[i] / c1;
            let v_hat = vd[i] / c2;
            pd[i] -= config.lr * m_hat / (libm::sqrt(v_hat) + config.eps);
        }
    }
    Ok(())
}

/// Outcome of one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub mesh: usize,
    pub loss: f64,
    pub components: LossComponents,
    pub noise: NoiseSpec,
    pub clamped: usize,
}

/// Loss and parameter gradients for one (ground truth, noisy) pair.
pub fn loss_and_gradients(
    graph: &MeshGraph,
    gt: &Mesh,
    noisy: &Mesh,
    params: &NetParams,
    config: &TrainConfig,
) -> Result<(f64, LossComponents, BTreeMap<String, Tensor>, usize)> {
    let target = Target::new(gt)?;
    let mut tape = Tape::new();
    let x = tape.constant(network::positions_tensor(noisy));
    let out = network::dmdnet_forward(&mut tape, graph, params, &config.net, &x)?;
    let (total, components) = losses::total_loss(&mut tape, &out.denoised, &out.features, &target, &config.weights)?;
    let loss = tape.value(&total).data()[0];
    let grads = tape.backward(total)?.params();
    Ok((loss, components, grads, tape.clamp_count()))
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 over the three words.
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sequential trainer over a fixed set of canonical ground-truth meshes.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub params: NetParams,
    pub state: AdamState,
    meshes: Vec<(Mesh, MeshGraph)>,
    step: usize,
    /// Steps rejected because of a non-finite gradient.
    pub faults: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, params: NetParams, meshes: Vec<Mesh>) -> Result<Self> {
        config.validate()?;
        params.check(&config.net)?;
        if meshes.is_empty() {
            return Err(Error::InvalidArgument("no training meshes".into()));
        }
        let meshes = meshes
            .into_iter()
            .map(|m| MeshGraph::new(&m).map(|g| (m, g)))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            params,
            state: AdamState::default(),
            meshes,
            step: 0,
            faults: 0,
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn meshes(&self) -> impl Iterator<Item = &Mesh> {
        self.meshes.iter().map(|(m, _)| m)
    }

    /// The sample drawn at `step`: mesh index, rotated ground truth, noise.
    pub fn sample(&self, step: usize) -> Result<(usize, Mesh, Mesh, NoiseSpec)> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.config.seed, step as u64, 1));
        let index = rng.random_range(0..self.meshes.len());
        let mut gt = self.meshes[index].0.clone();
        if self.config.augment_rotation {
            gt = gt.rotated(&noise::random_rotation_with(&mut rng));
        }
        let spec = if self.config.fixed_noise {
            let mut fixed = ChaCha8Rng::seed_from_u64(mix(self.config.seed, index as u64, 2));
            noise::mixed_noise_sample_with(&self.config.noise_grid, &mut fixed)?
        } else {
            noise::mixed_noise_sample_with(&self.config.noise_grid, &mut rng)?
        };
        let noisy = noise::apply_noise(&gt, &spec)?;
        Ok((index, gt, noisy, spec))
    }

    /// Sample, forward, total loss, backward and one ADAM update.
    pub fn train_step(&mut self) -> Result<StepReport> {
        let (index, gt, noisy, spec) = self.sample(self.step)?;
        let graph = &self.meshes[index].1;
        let (loss, components, grads, clamped) = loss_and_gradients(graph, &gt, &noisy, &self.params, &self.config)?;
        match adam_step(&mut self.params, &grads, &mut self.state, &self.config) {
            Ok(()) => {}
            Err(Error::NonFinite(_)) => self.faults += 1,
            Err(e) => return Err(e),
        }
        let report = StepReport {
            step: self.step,
            mesh: index,
            loss,
            components,
            noise: spec,
            clamped,
        };
        self.step += 1;
        Ok(report)
    }

    /// Runs the remaining configured steps.
    pub fn run(&mut self, mut on_step: impl FnMut(&Self, &StepReport) -> Result<()>) -> Result<()> {
        while self.step < self.config.steps {
            let report = self.train_step()?;
            on_step(self, &report)?;
        }
        Ok(())
    }
}

/// Model and reference metrics for one canonical sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMetrics {
    pub model: Metrics,
    pub reference: Metrics,
}

pub fn evaluate_sample(gt: &Mesh, noisy: &Mesh, params: &NetParams, config: &NetConfig) -> Result<SampleMetrics> {
    let denoised = network::denoise_canonical(noisy, params, config)?;
    Ok(SampleMetrics {
        model: losses::metrics(&denoised, gt)?,
        reference: losses::metrics(noisy, gt)?,
    })
}
