//! Whole-mesh operations shared by the commands: denoising in the original
//! frame, per-mesh evaluation and the rotation-equivariance test.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use meshdn_core::losses::{self, Metrics};
use meshdn_core::network::denoise_canonical;
use meshdn_core::noise::{self, NoiseKind, NoiseSpec};
use meshdn_core::trainer::evaluate_sample;
use meshdn_core::{canonicalize, Mesh, NetConfig, NetParams};

use crate::error::Result;
use crate::formats::read_mesh;
use crate::report::{Table, DISTANCE_SCALE};

/// Canonicalize, run the network, map back to the input frame.
///
/// The predicted displacement is scaled back and added to the input
/// positions, so a zero displacement returns the input bit for bit.
pub fn denoise(mesh: &Mesh, params: &NetParams, config: &NetConfig) -> Result<Mesh> {
    let (canonical, transform) = canonicalize(mesh)?;
    let out = denoise_canonical(&canonical, params, config)?;
    let positions = mesh
        .positions()
        .iter()
        .zip(canonical.positions())
        .zip(out.positions())
        .map(|((p, c), d)| std::array::from_fn(|i| p[i] + (d[i] - c[i]) / transform.scale))
        .collect();
    Ok(mesh.with_positions(positions)?)
}

/// Independent stream per mesh index.
pub fn mesh_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Noise added to each test mesh; level 0 evaluates on the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalNoise {
    pub kind: NoiseKind,
    pub level: f64,
    pub seed: u64,
}

impl EvalNoise {
    pub fn spec(&self, index: usize) -> NoiseSpec {
        NoiseSpec::new(self.kind, self.level, mesh_seed(self.seed, index))
    }
}

/// A test mesh in its canonical frame with its noisy counterpart.
pub fn load_pair(path: &Path, index: usize, noise: &EvalNoise) -> Result<(Mesh, Mesh)> {
    let (gt, _) = canonicalize(&read_mesh(path)?)?;
    let noisy = noise::apply_noise(&gt, &noise.spec(index))?;
    Ok((gt, noisy))
}

pub const EVAL_COLUMNS: [&str; 7] = [
    "mesh",
    "vertex",
    "normal_deg",
    "chamfer",
    "ref_vertex",
    "ref_normal_deg",
    "ref_chamfer",
];

fn scaled(m: &Metrics) -> [f64; 3] {
    [m.vertex * DISTANCE_SCALE, m.normal_deg, m.chamfer * DISTANCE_SCALE]
}

/// Model and reference metrics for every mesh, in input order. Meshes that
/// fail to load or evaluate are skipped and returned with their error.
pub fn evaluate(
    meshes: &[(String, PathBuf)],
    params: &NetParams,
    config: &NetConfig,
    noise: &EvalNoise,
) -> (Table, Vec<(String, crate::Error)>) {
    let results: Vec<_> = meshes
        .par_iter()
        .enumerate()
        .map(|(i, (_, path))| {
            let (gt, noisy) = load_pair(path, i, noise)?;
            Ok(evaluate_sample(&gt, &noisy, params, config)?)
        })
        .collect::<Vec<Result<_>>>();
    let mut table = Table::new(&EVAL_COLUMNS);
    let mut skipped = Vec::new();
    for ((name, _), r) in meshes.iter().zip(results) {
        match r {
            Ok(s) => {
                let mut row = scaled(&s.model).to_vec();
                row.extend(scaled(&s.reference));
                table.push(name.clone(), row);
            }
            Err(e) => skipped.push((name.clone(), e)),
        }
    }
    (table, skipped)
}

pub const EQUIVARIANCE_COLUMNS: [&str; 4] = ["mesh", "vertex_re", "normal_re_deg", "chamfer_re"];

/// `R(D(G))` against `D(R(G))` for `rotations` random rotations of every
/// noisy test mesh. Rows hold the per-mesh means over the rotations; the
/// mean over all rows is the aggregate score.
pub fn equivariance(
    meshes: &[(String, PathBuf)],
    params: &NetParams,
    config: &NetConfig,
    noise: &EvalNoise,
    rotations: usize,
    seed: u64,
) -> (Table, Vec<(String, crate::Error)>) {
    let results: Vec<_> = meshes
        .par_iter()
        .enumerate()
        .map(|(i, (_, path))| -> Result<[f64; 3]> {
            let (_, g) = load_pair(path, i, noise)?;
            let dg = denoise(&g, params, config)?;
            let mut sum = [0.0; 3];
            for j in 0..rotations {
                let r = noise::random_rotation(mesh_seed(mesh_seed(seed, i), j));
                let rd = dg.rotated(&r);
                let dr = denoise(&g.rotated(&r), params, config)?;
                let m = scaled(&losses::metrics(&rd, &dr)?);
                for (s, v) in sum.iter_mut().zip(m) {
                    *s += v;
                }
            }
            Ok(sum.map(|s| s / rotations as f64))
        })
        .collect::<Vec<_>>();
    let mut table = Table::new(&EQUIVARIANCE_COLUMNS);
    let mut skipped = Vec::new();
    for ((name, _), r) in meshes.iter().zip(results) {
        match r {
            Ok(v) => table.push(name.clone(), v.to_vec()),
            Err(e) => skipped.push((name.clone(), e)),
        }
    }
    (table, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use meshdn_core::shapes;

    #[test]
    fn zero_network_denoise_is_exact_identity() {
        let c = NetConfig::with_widths(4, 3);
        let m = shapes::torus(3.0, 1.0, 8, 6).rotated(&noise::random_rotation(5));
        let m = m
            .with_positions(m.positions().iter().map(|p| [p[0] * 7.0 + 2.0, p[1] - 40.0, p[2]]).collect())
            .unwrap();
        let out = denoise(&m, &NetParams::zeros(&c), &c).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn mesh_seeds_differ() {
        let s: std::collections::BTreeSet<_> = (0..100).map(|i| mesh_seed(3, i)).collect();
        assert_eq!(s.len(), 100);
        assert_ne!(mesh_seed(0, 0), mesh_seed(1, 0));
    }
}
