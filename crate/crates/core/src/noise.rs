//! Synthetic vertex noise and random rotations for data augmentation.
//!
//! Noise amplitudes are expressed in the unit-cube canonical frame.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::math;
use crate::{Error, Mesh, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NoiseKind {
    /// `N(0, sigma)` per coordinate.
    Gaussian,
    /// `a * U(-1, 1)` per coordinate.
    Uniform,
    /// `a * s * Gamma(2, 2)` per coordinate with a random sign `s`.
    Gamma,
    /// `a * delta(p+, p-)`: `+a` with probability `p+`, `-a` with `p-`.
    Impulse,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::Gaussian,
        NoiseKind::Uniform,
        NoiseKind::Gamma,
        NoiseKind::Impulse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Uniform => "uniform",
            NoiseKind::Gamma => "gamma",
            NoiseKind::Impulse => "impulse",
        }
    }
}

impl core::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown noise kind `{s}`")))
    }
}

/// Shape of the gamma distribution behind [`NoiseKind::Gamma`].
pub const GAMMA_SHAPE: f64 = 2.0;
/// Rate of the gamma distribution behind [`NoiseKind::Gamma`] (scale `1/2`).
pub const GAMMA_RATE: f64 = 2.0;
/// Default `(p+, p-)` for impulse noise.
pub const IMPULSE_PROBABILITIES: (f64, f64) = (0.15, 0.15);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// `sigma` for Gaussian noise, the scale `a` otherwise.
    pub amplitude: f64,
    /// `(p+, p-)`, only used by impulse noise.
    pub impulse: (f64, f64),
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, amplitude: f64, seed: u64) -> Self {
        Self {
            kind,
            amplitude,
            impulse: IMPULSE_PROBABILITIES,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise amplitude must be finite and non-negative, got {}",
                self.amplitude
            )));
        }
        let (plus, minus) = self.impulse;
        let in_range = |p: f64| (0.0..=0.5).contains(&p);
        if !in_range(plus) || !in_range(minus) {
            return Err(Error::InvalidArgument(format!(
                "impulse probabilities must lie in [0, 0.5], got ({plus}, {minus})"
            )));
        }
        Ok(())
    }
}

/// Returns a mesh with the same faces and positions `P + N`, where `N` is
/// drawn per coordinate according to `spec`. Deterministic in `spec.seed`.
pub fn apply_noise(mesh: &Mesh, spec: &NoiseSpec) -> Result<Mesh> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = spec.amplitude;
    let mut sample: alloc::boxed::Box<dyn FnMut(&mut ChaCha8Rng) -> f64> = match spec.kind {
        NoiseKind::Gaussian => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            alloc::boxed::Box::new(move |rng| a * normal.sample(rng))
        }
        NoiseKind::Uniform => {
            alloc::boxed::Box::new(move |rng| a * (2.0 * rng.random::<f64>() - 1.0))
        }
        NoiseKind::Gamma => {
            let gamma = Gamma::new(GAMMA_SHAPE, 1.0 / GAMMA_RATE).expect("valid gamma");
            alloc::boxed::Box::new(move |rng| {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                a * sign * gamma.sample(rng)
            })
        }
        NoiseKind::Impulse => {
            let (plus, minus) = spec.impulse;
            alloc::boxed::Box::new(move |rng| {
                let u = rng.random::<f64>();
                if u < plus {
                    a
                } else if u < plus + minus {
                    -a
                } else {
                    0.0
                }
            })
        }
    };
    let positions = mesh
        .positions()
        .iter()
        .map(|p| {
            let mut q = *p;
            for c in &mut q {
                *c += sample(&mut rng);
            }
            q
        })
        .collect();
    mesh.with_positions(positions)
}

/// Uniformly distributed rotation matrix (determinant +1), deterministic in
/// `seed`.
pub fn random_rotation(seed: u64) -> [[f64; 3]; 3] {
    random_rotation_with(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Uniform rotation from a unit quaternion with i.i.d. Gaussian components.
pub fn random_rotation_with<R: Rng + ?Sized>(rng: &mut R) -> [[f64; 3]; 3] {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let (w, x, y, z) = loop {
        let q: [f64; 4] = core::array::from_fn(|_| normal.sample(rng));
        let len = math::sqrt(q.iter().map(|c| c * c).sum());
        if len > 1e-9 {
            break (q[0] / len, q[1] / len, q[2] / len, q[3] / len);
        }
    };
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// The `(kind, level)` pairs training draws from.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    pub entries: Vec<(NoiseKind, f64)>,
}

impl Default for NoiseGrid {
    /// Four noise families with five levels each.
    fn default() -> Self {
        let levels = |kind, values: [f64; 5]| values.map(|v| (kind, v));
        let mut entries = Vec::with_capacity(20);
        entries.extend(levels(NoiseKind::Gaussian, [0.005, 0.01, 0.015, 0.02, 0.03]));
        entries.extend(levels(NoiseKind::Uniform, [0.01, 0.02, 0.03, 0.04, 0.06]));
        entries.extend(levels(NoiseKind::Gamma, [0.005, 0.01, 0.015, 0.02, 0.025]));
        entries.extend(levels(NoiseKind::Impulse, [0.01, 0.02, 0.03, 0.04, 0.06]));
        Self { entries }
    }
}

impl NoiseGrid {
    pub fn single(kind: NoiseKind, level: f64) -> Self {
        Self {
            entries: alloc::vec![(kind, level)],
        }
    }

    /// Parses `kind:level,kind:level,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let (kind, level) = item.split_once(':').ok_or_else(|| {
                    Error::InvalidArgument(format!("noise grid entry `{item}` is not kind:level"))
                })?;
                let level: f64 = level.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad noise level in `{item}`"))
                })?;
                Ok((kind.trim().parse()?, level))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn to_text(&self) -> alloc::string::String {
        let parts: Vec<_> = self
            .entries
            .iter()
            .map(|(k, l)| format!("{}:{l}", k.name()))
            .collect();
        parts.join(",")
    }
}

/// Draws one grid entry uniformly, with a fresh noise seed, deterministic in
/// `seed`.
pub fn mixed_noise_sample(grid: &NoiseGrid, seed: u64) -> Result<NoiseSpec> {
    mixed_noise_sample_with(grid, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn mixed_noise_sample_with<R: Rng + ?Sized>(grid: &NoiseGrid, rng: &mut R) -> Result<NoiseSpec> {
    if grid.entries.is_empty() {
        return Err(Error::InvalidArgument("noise grid is empty".into()));
    }
    let (kind, level) = grid.entries[rng.random_range(0..grid.entries.len())];
    Ok(NoiseSpec::new(kind, level, rng.random()))
}
