//! Forward-pass timing over refined meshes of growing size.

use std::time::Instant;

use meshdn_core::network::denoise_canonical;
use meshdn_core::{canonicalize, shapes, NetConfig, NetParams};

use crate::error::{Error, Result};
use crate::report::Table;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub vertices: usize,
    pub faces: usize,
    /// Fastest of the repeats, in seconds.
    pub seconds: f64,
}

/// Geometrically spaced sizes from `min` to `max`, both included.
pub fn sizes(min: usize, max: usize, steps: usize) -> Result<Vec<usize>> {
    if min < 18 || max < min || steps == 0 || (steps == 1 && min != max) {
        return Err(Error::Invalid(format!(
            "bad sweep: {min}..{max} in {steps} steps (need 18 <= min <= max, steps >= 2 unless min == max)"
        )));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let ratio = (max as f64 / min as f64).powf(1.0 / (steps - 1) as f64);
    Ok((0..steps).map(|i| (min as f64 * ratio.powi(i as i32)).round() as usize).collect())
}

/// Times the forward pass on tori with roughly the requested vertex counts
/// (twice as many faces).
pub fn run(vertices: &[usize], config: &NetConfig, seed: u64, repeats: usize) -> Result<Vec<Sample>> {
    let params = NetParams::init(config, seed);
    vertices
        .iter()
        .map(|&n| {
            let (mesh, _) = canonicalize(&shapes::torus_with_faces(2 * n))?;
            let mut best = f64::INFINITY;
            for _ in 0..repeats.max(1) {
                let start = Instant::now();
                std::hint::black_box(denoise_canonical(&mesh, &params, config)?);
                best = best.min(start.elapsed().as_secs_f64());
            }
            Ok(Sample {
                vertices: mesh.vertex_count(),
                faces: mesh.face_count(),
                seconds: best,
            })
        })
        .collect()
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (intercept, slope, r2)
}

pub fn table(samples: &[Sample]) -> Table {
    let mut t = Table::new(&["size", "vertices", "faces", "seconds"]);
    for (i, s) in samples.iter().enumerate() {
        t.push(i.to_string(), vec![s.vertices as f64, s.faces as f64, s.seconds]);
    }
    t
}
