//! Training losses and evaluation metrics.
//!
//! The `*_loss` functions are written against [`Backend`] so they can be
//! differentiated. The plain-`f64` functions at the bottom compute the same
//! quantities for reporting without the `acos` guard, so identical meshes
//! score exactly zero.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Backend, Tensor};
use crate::diffgeo::{self, GeometryCache, COT_CLAMP, DEGENERATE_AREA};
use crate::math::{self, Vec3, PI};
use crate::network::{positions_tensor, FEATURE_DIM};
use crate::{Error, Mesh, Result, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_v: f64,
    pub lambda_n: f64,
    pub lambda_kappa: f64,
    pub lambda_c: f64,
    pub lambda_fe: f64,
    pub gamma_h: f64,
    pub gamma_g: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_v: 1.0,
            lambda_n: 0.2,
            lambda_kappa: 0.01,
            lambda_c: 0.05,
            lambda_fe: 1.0,
            gamma_h: 1e-6,
            gamma_g: 1.0,
        }
    }
}

impl LossWeights {
    pub fn zero() -> Self {
        Self {
            lambda_v: 0.0,
            lambda_n: 0.0,
            lambda_kappa: 0.0,
            lambda_c: 0.0,
            lambda_fe: 0.0,
            gamma_h: 0.0,
            gamma_g: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_v,
            self.lambda_n,
            self.lambda_kappa,
            self.lambda_c,
            self.lambda_fe,
            self.gamma_h,
            self.gamma_g,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!("loss weights must be finite and non-negative: {self:?}")));
        }
        Ok(())
    }
}

/// Unweighted loss values of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub vertex: f64,
    pub normal: f64,
    pub curvature: f64,
    pub chamfer: f64,
    pub fe: f64,
}

impl LossComponents {
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        w.lambda_v * self.vertex
            + w.lambda_n * self.normal
            + w.lambda_kappa * self.curvature
            + w.lambda_c * self.chamfer
            + w.lambda_fe * self.fe
    }
}

/// Everything the losses need from the ground-truth mesh.
#[derive(Debug, Clone)]
pub struct Target {
    pub mesh: Mesh,
    pub positions: Tensor,
    pub face_normals: Vec<Vec3>,
    pub degenerate_faces: Vec<bool>,
    pub mean_curvature: Vec<f64>,
    pub gaussian_curvature: Vec<f64>,
    pub zero_area_vertices: Vec<bool>,
    /// `n x 5` local features.
    pub features: Tensor,
}

impl Target {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let cache = GeometryCache::new(mesh);
        let features = diffgeo::local_features(mesh);
        Ok(Self {
            mesh: mesh.clone(),
            positions: positions_tensor(mesh),
            mean_curvature: cache.mean_curvature(),
            gaussian_curvature: cache.gaussian_curvature(),
            zero_area_vertices: cache.zero_area_vertices(),
            face_normals: cache.face_normals,
            degenerate_faces: cache.degenerate_faces,
            features: Tensor::new(&[mesh.vertex_count(), FEATURE_DIM], features.flat())?,
        })
    }
}

fn points(t: &Tensor) -> Vec<Vec3> {
    t.data().chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// `(1/n) sum |p_out - p_gt|^2`.
pub fn vertex_loss<B: Backend>(b: &mut B, p_out: &B::Value, p_gt: &B::Value) -> Result<B::Value> {
    let d = b.sub(p_out, p_gt)?;
    let sq = b.sq_norm_rows(&d)?;
    b.mean(&sq)
}

/// Unit normals of the listed faces, `len x 3`.
pub fn face_normals<B: Backend>(
    b: &mut B,
    p: &B::Value,
    faces: &[[usize; 3]],
    which: &[usize],
) -> Result<B::Value> {
    let corner = |c: usize| -> Arc<[usize]> { which.iter().map(|&s| faces[s][c]).collect::<Vec<_>>().into() };
    let p0 = b.gather(p, &corner(0))?;
    let p1 = b.gather(p, &corner(1))?;
    let p2 = b.gather(p, &corner(2))?;
    let e1 = b.sub(&p1, &p0)?;
    let e2 = b.sub(&p2, &p0)?;
    let c = b.cross_rows(&e1, &e2)?;
    b.normalize_rows(&c)
}

fn degenerate_mask(p: &[Vec3], faces: &[[usize; 3]]) -> Vec<bool> {
    faces
        .iter()
        .map(|f| {
            let c = math::cross(math::sub(p[f[1]], p[f[0]]), math::sub(p[f[2]], p[f[0]]));
            !(0.5 * math::norm(c) >= DEGENERATE_AREA)
        })
        .collect()
}

/// Mean angle in radians between output and target face normals over faces
/// that are non-degenerate in both meshes. Dot products are clamped to
/// `1 - ACOS_EPS` in magnitude so the gradient stays finite.
pub fn normal_loss<B: Backend>(b: &mut B, p_out: &B::Value, target: &Target) -> Result<B::Value> {
    let faces = target.mesh.faces();
    let out_deg = degenerate_mask(&points(b.value(p_out)), faces);
    let valid: Vec<usize> = (0..faces.len())
        .filter(|&s| !out_deg[s] && !target.degenerate_faces[s])
        .collect();
    if valid.is_empty() {
        return Err(Error::DegenerateGeometry("every face is degenerate"));
    }
    let n_out = face_normals(b, p_out, faces, &valid)?;
    let gt: Vec<[f64; 3]> = valid.iter().map(|&s| target.face_normals[s]).collect();
    let n_gt = b.constant(Tensor::from_rows(&gt));
    let cos = b.dot_rows(&n_out, &n_gt)?;
    let angle = b.acos(&cos)?;
    b.mean(&angle)
}

/// Per-vertex `(mean, Gaussian)` curvature of `p` as `n x 1` values, plus
/// the vertices whose mixed area is zero (their rows are meaningless).
/// The face classification (degenerate, obtuse) is taken from the current
/// positions and held fixed for differentiation.
pub fn curvature<B: Backend>(
    b: &mut B,
    p: &B::Value,
    faces: &[[usize; 3]],
) -> Result<(B::Value, B::Value, Vec<bool>)> {
    let pts = points(b.value(p));
    let n = pts.len();
    let cache = GeometryCache::new(&Mesh::new(pts.clone(), faces.to_vec())?);

    let mut ci = Vec::new();
    let mut cj = Vec::new();
    let mut ck = Vec::new();
    let mut next = Vec::new();
    let mut prev = Vec::new();
    let mut voronoi = Vec::new();
    let mut fraction = Vec::new();
    for (s, face) in faces.iter().enumerate() {
        if cache.degenerate_faces[s] {
            continue;
        }
        let base = ci.len();
        let obtuse = (0..3).position(|t| {
            let (i, j, k) = (face[t], face[(t + 1) % 3], face[(t + 2) % 3]);
            math::dot(math::sub(pts[j], pts[i]), math::sub(pts[k], pts[i])) < 0.0
        });
        for t in 0..3 {
            ci.push(face[t]);
            cj.push(face[(t + 1) % 3]);
            ck.push(face[(t + 2) % 3]);
            next.push(base + (t + 1) % 3);
            prev.push(base + (t + 2) % 3);
            let (v, frac) = match obtuse {
                None => (1.0, 0.0),
                Some(o) if o == t => (0.0, 0.5),
                Some(_) => (0.0, 0.25),
            };
            voronoi.push(v);
            fraction.push(frac);
        }
    }
    let corners = ci.len();
    let zero_area = cache.zero_area_vertices();
    if corners == 0 {
        let z = b.constant(Tensor::zeros(&[n, 1]));
        return Ok((z.clone(), z, zero_area));
    }
    let list = |v: Vec<usize>| -> Arc<[usize]> { v.into() };
    let (ci, cj, ck) = (list(ci), list(cj), list(ck));

    let pi = b.gather(p, &ci)?;
    let pj = b.gather(p, &cj)?;
    let pk = b.gather(p, &ck)?;
    let e1 = b.sub(&pj, &pi)?;
    let e2 = b.sub(&pk, &pi)?;
    let cr = b.cross_rows(&e1, &e2)?;
    let twice_area = b.norm_rows(&cr)?;
    let dot = b.dot_rows(&e1, &e2)?;
    let theta = b.atan2(&twice_area, &dot)?;
    let ratio = b.div(&dot, &twice_area)?;
    let cot = b.clamp(&ratio, -COT_CLAMP, COT_CLAMP)?;

    // Cotangent Laplacian: corner i weights the opposite edge (j, k).
    let jk = b.sub(&pj, &pk)?;
    let terms = b.mul_col(&jk, &cot)?;
    let scatter_lap = Arc::new(SparseMatrix::from_triplets(
        n,
        corners,
        (0..corners).flat_map(|c| [(cj[c], c, 1.0), (ck[c], c, -1.0)]),
    )?);
    let lap = b.spmm(&scatter_lap, &terms)?;

    let to_vertex = Arc::new(SparseMatrix::from_triplets(
        n,
        corners,
        (0..corners).map(|c| (ci[c], c, 1.0)),
    )?);
    let angle_sum = b.spmm(&to_vertex, &theta)?;

    // Mixed area per corner, summed onto the corner's vertex.
    let cot_next = b.gather(&cot, &list(next))?;
    let cot_prev = b.gather(&cot, &list(prev))?;
    let e1_sq = b.sq_norm_rows(&e1)?;
    let e2_sq = b.sq_norm_rows(&e2)?;
    let a = b.mul(&e1_sq, &cot_prev)?;
    let c = b.mul(&e2_sq, &cot_next)?;
    let vor = b.add(&a, &c)?;
    let mask = b.constant(Tensor::column(voronoi.into_iter().map(|v| v / 8.0).collect()));
    let vor = b.mul(&vor, &mask)?;
    let frac = b.constant(Tensor::column(fraction.into_iter().map(|f| f / 2.0).collect()));
    let fixed = b.mul(&twice_area, &frac)?;
    let corner_area = b.add(&vor, &fixed)?;
    let area = b.spmm(&to_vertex, &corner_area)?;

    // Zero-area vertices divide by one instead and are excluded by callers.
    let pad = b.constant(Tensor::column(zero_area.iter().map(|&z| if z { 1.0 } else { 0.0 }).collect()));
    let safe_area = b.add(&area, &pad)?;

    let lap_norm = b.norm_rows(&lap)?;
    let four_area = b.scale(&safe_area, 4.0)?;
    let kh = b.div(&lap_norm, &four_area)?;
    let deficit = b.scale(&angle_sum, -1.0)?;
    let deficit = b.offset(&deficit, 2.0 * PI)?;
    let kg = b.div(&deficit, &safe_area)?;
    Ok((kh, kg, zero_area))
}

/// `gamma_h * L_H + gamma_g * L_G`, where `L_X` is the mean over vertices of
/// `|k_out - k_gt| * k_gt^2`. Vertices with zero mixed area in either mesh
/// are left out of the mean.
pub fn curvature_loss<B: Backend>(
    b: &mut B,
    p_out: &B::Value,
    target: &Target,
    gamma_h: f64,
    gamma_g: f64,
) -> Result<B::Value> {
    let (kh, kg, zero_out) = curvature(b, p_out, target.mesh.faces())?;
    let keep: Vec<usize> = (0..zero_out.len())
        .filter(|&v| !zero_out[v] && !target.zero_area_vertices[v])
        .collect();
    if keep.is_empty() {
        return Err(Error::DegenerateGeometry("no vertex has positive mixed area"));
    }
    let rows: Arc<[usize]> = keep.clone().into();
    let pick = |k: &[f64]| -> Vec<f64> { keep.iter().map(|&v| k[v]).collect() };
    let kh = b.gather(&kh, &rows)?;
    let kg = b.gather(&kg, &rows)?;
    let lh = weighted_curvature_error(b, &kh, &pick(&target.mean_curvature), gamma_h)?;
    let lg = weighted_curvature_error(b, &kg, &pick(&target.gaussian_curvature), gamma_g)?;
    b.add(&lh, &lg)
}

/// `gamma * mean(|k_out - k_gt| * k_gt^2)` for an `n x 1` prediction.
pub fn weighted_curvature_error<B: Backend>(
    b: &mut B,
    k_out: &B::Value,
    k_gt: &[f64],
    gamma: f64,
) -> Result<B::Value> {
    let gt = b.constant(Tensor::column(k_gt.to_vec()));
    let weight = b.constant(Tensor::column(k_gt.iter().map(|k| gamma * k * k).collect()));
    let d = b.sub(k_out, &gt)?;
    let d = b.abs(&d)?;
    let w = b.mul(&d, &weight)?;
    b.mean(&w)
}

/// Symmetric mean of nearest-neighbour squared distances. Neighbours are
/// found on the current values and then held fixed.
pub fn chamfer_loss<B: Backend>(b: &mut B, p_out: &B::Value, p_gt: &B::Value) -> Result<B::Value> {
    let out = points(b.value(p_out));
    let gt = points(b.value(p_gt));
    let to_gt: Arc<[usize]> = nearest_neighbors(&out, &gt)?.into();
    let to_out: Arc<[usize]> = nearest_neighbors(&gt, &out)?.into();
    let matched_gt = b.gather(p_gt, &to_gt)?;
    let d1 = b.sub(p_out, &matched_gt)?;
    let d1 = b.sq_norm_rows(&d1)?;
    let d1 = b.mean(&d1)?;
    let matched_out = b.gather(p_out, &to_out)?;
    let d2 = b.sub(&matched_out, p_gt)?;
    let d2 = b.sq_norm_rows(&d2)?;
    let d2 = b.mean(&d2)?;
    b.add(&d1, &d2)
}

/// `(1/n) sum |f_pred - f_gt|^2` over the `n x 5` local features.
pub fn feature_extractor_loss<B: Backend>(b: &mut B, fe_out: &B::Value, target: &Target) -> Result<B::Value> {
    let gt = b.constant(target.features.clone());
    let d = b.sub(fe_out, &gt)?;
    let sq = b.sq_norm_rows(&d)?;
    b.mean(&sq)
}

/// All five losses, their values, and the weighted total.
pub fn total_loss<B: Backend>(
    b: &mut B,
    p_out: &B::Value,
    fe_out: &B::Value,
    target: &Target,
    weights: &LossWeights,
) -> Result<(B::Value, LossComponents)> {
    let p_gt = b.constant(target.positions.clone());
    let lv = vertex_loss(b, p_out, &p_gt)?;
    let ln = normal_loss(b, p_out, target)?;
    let lk = curvature_loss(b, p_out, target, weights.gamma_h, weights.gamma_g)?;
    let lc = chamfer_loss(b, p_out, &p_gt)?;
    let lf = feature_extractor_loss(b, fe_out, target)?;
    let item = |b: &B, v: &B::Value| b.value(v).data()[0];
    let components = LossComponents {
        vertex: item(b, &lv),
        normal: item(b, &ln),
        curvature: item(b, &lk),
        chamfer: item(b, &lc),
        fe: item(b, &lf),
    };
    let mut total = b.scale(&lv, weights.lambda_v)?;
    for (v, w) in [
        (&ln, weights.lambda_n),
        (&lk, weights.lambda_kappa),
        (&lc, weights.lambda_c),
        (&lf, weights.lambda_fe),
    ] {
        let scaled = b.scale(v, w)?;
        total = b.add(&total, &scaled)?;
    }
    Ok((total, components))
}

fn sq_dist(a: Vec3, b: Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// For each query point, the index of the closest reference point (smallest
/// index among ties). Uses a uniform grid whose cell size is the reference
/// bounding-box diagonal over `n^(1/3)`.
pub fn nearest_neighbors(query: &[Vec3], reference: &[Vec3]) -> Result<Vec<usize>> {
    if reference.is_empty() || query.is_empty() {
        return Err(Error::InvalidArgument("nearest neighbours need non-empty point sets".into()));
    }
    let grid = Grid::new(reference);
    Ok(query.iter().map(|&q| grid.nearest(q, reference)).collect())
}

struct Grid {
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    /// Start of each cell's slice in `points`, plus a final end marker.
    starts: Vec<usize>,
    points: Vec<usize>,
}

impl Grid {
    fn new(reference: &[Vec3]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in reference {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let diag = math::norm(math::sub(hi, lo));
        let mut cell = diag / math::cbrt(reference.len() as f64);
        if !(cell > 0.0) {
            cell = 1.0;
        }
        let dims = core::array::from_fn(|a| (math::floor((hi[a] - lo[a]) / cell) as usize) + 1);
        let mut grid = Self {
            lo,
            cell,
            dims,
            starts: Vec::new(),
            points: Vec::new(),
        };
        let cells = dims[0] * dims[1] * dims[2];
        let ids: Vec<usize> = reference.iter().map(|&p| grid.flat(grid.coord(p))).collect();
        let mut counts = vec![0usize; cells + 1];
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for c in 0..cells {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut points = vec![0; reference.len()];
        for (i, &c) in ids.iter().enumerate() {
            points[fill[c]] = i;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.points = points;
        grid
    }

    fn coord(&self, p: Vec3) -> [usize; 3] {
        core::array::from_fn(|a| {
            let x = math::floor((p[a] - self.lo[a]) / self.cell);
            if x > 0.0 {
                (x as usize).min(self.dims[a] - 1)
            } else {
                0
            }
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    fn nearest(&self, q: Vec3, reference: &[Vec3]) -> usize {
        let c = self.coord(q);
        let max_ring = self.dims.iter().copied().max().unwrap_or(1);
        let mut best = (f64::INFINITY, usize::MAX);
        for r in 0..=max_ring {
            if r >= 1 {
                // Points in ring r are at least (r - 1) cells away.
                let bound = (r as f64 - 1.0) * self.cell * (1.0 - 1e-9);
                if bound > 0.0 && bound * bound > best.0 {
                    break;
                }
            }
            let range = |a: usize| c[a].saturating_sub(r)..=(c[a] + r).min(self.dims[a] - 1);
            for z in range(2) {
                for y in range(1) {
                    for x in range(0) {
                        let ring = [x.abs_diff(c[0]), y.abs_diff(c[1]), z.abs_diff(c[2])];
                        if ring.into_iter().max() != Some(r) {
                            continue;
                        }
                        let id = self.flat([x, y, z]);
                        for &i in &self.points[self.starts[id]..self.starts[id + 1]] {
                            let d = sq_dist(q, reference[i]);
                            if d < best.0 || (d == best.0 && i < best.1) {
                                best = (d, i);
                            }
                        }
                    }
                }
            }
        }
        best.1
    }
}

/// Exhaustive nearest neighbours with the same tie rule as
/// [`nearest_neighbors`].
pub fn nearest_neighbors_brute(query: &[Vec3], reference: &[Vec3]) -> Result<Vec<usize>> {
    if reference.is_empty() || query.is_empty() {
        return Err(Error::InvalidArgument("nearest neighbours need non-empty point sets".into()));
    }
    Ok(query
        .iter()
        .map(|&q| {
            let mut best = (f64::INFINITY, 0);
            for (i, &p) in reference.iter().enumerate() {
                let d = sq_dist(q, p);
                if d < best.0 {
                    best = (d, i);
                }
            }
            best.1
        })
        .collect())
}

fn chamfer_with(a: &[Vec3], b: &[Vec3], nn: fn(&[Vec3], &[Vec3]) -> Result<Vec<usize>>) -> Result<f64> {
    let ab = nn(a, b)?;
    let ba = nn(b, a)?;
    let d1: f64 = a.iter().zip(&ab).map(|(&p, &i)| sq_dist(p, b[i])).sum::<f64>() / a.len() as f64;
    let d2: f64 = b.iter().zip(&ba).map(|(&p, &i)| sq_dist(p, a[i])).sum::<f64>() / b.len() as f64;
    Ok(d1 + d2)
}

/// Chamfer distance through the grid.
pub fn chamfer_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    chamfer_with(a, b, nearest_neighbors)
}

/// Chamfer distance by exhaustive search.
pub fn chamfer_distance_brute(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    chamfer_with(a, b, nearest_neighbors_brute)
}

/// `(1/n) sum |a_i - b_i|^2`.
pub fn vertex_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::shape("vertex_distance", format!("{} vs {} points", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(&p, &q)| sq_dist(p, q)).sum::<f64>() / a.len() as f64)
}

/// Mean face-normal angle in radians over faces non-degenerate in both meshes.
pub fn normal_angle(out: &Mesh, gt: &Mesh) -> Result<f64> {
    if out.faces() != gt.faces() {
        return Err(Error::InvalidArgument("meshes have different connectivity".into()));
    }
    let (na, da) = diffgeo::face_normals(out);
    let (nb, db) = diffgeo::face_normals(gt);
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in 0..na.len() {
        if da[s] || db[s] {
            continue;
        }
        sum += math::atan2(math::norm(math::cross(na[s], nb[s])), math::dot(na[s], nb[s]));
        count += 1;
    }
    if count == 0 {
        return Err(Error::DegenerateGeometry("every face is degenerate"));
    }
    Ok(sum / count as f64)
}

/// Reporting metrics: vertex and Chamfer in squared canonical units, normal
/// angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub vertex: f64,
    pub normal_deg: f64,
    pub chamfer: f64,
}

pub fn metrics(out: &Mesh, gt: &Mesh) -> Result<Metrics> {
    Ok(Metrics {
        vertex: vertex_distance(out.positions(), gt.positions())?,
        normal_deg: normal_angle(out, gt)?.to_degrees(),
        chamfer: chamfer_distance(out.positions(), gt.positions())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{shapes, Eval};

    fn pts(rows: &[[f64; 3]]) -> Tensor {
        Tensor::from_rows(rows)
    }

    #[test]
    fn vertex_loss_examples() {
        let mut b = Eval::new();
        let zero = pts(&[[0.0; 3], [0.0; 3]]);
        assert_eq!(vertex_loss(&mut b, &zero, &zero).unwrap().item(), Some(0.0));
        let off = pts(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]);
        assert_eq!(vertex_loss(&mut b, &off, &zero).unwrap().item(), Some(2.5));
        let one = pts(&[[1.0, 0.0, 0.0]]);
        assert_eq!(vertex_loss(&mut b, &one, &pts(&[[0.0; 3]])).unwrap().item(), Some(1.0));
    }

    #[test]
    fn chamfer_single_points() {
        let a = [[0.0; 3]];
        let b = [[1.0, 0.0, 0.0]];
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 2.0);
        assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
        assert!(chamfer_distance(&[], &b).is_err());
    }

    #[test]
    fn grid_matches_brute_on_sphere() {
        let m = shapes::icosphere(2, 1.0);
        let q: Vec<Vec3> = m.positions().iter().map(|p| math::scale(*p, 1.3)).collect();
        assert_eq!(
            nearest_neighbors(&q, m.positions()).unwrap(),
            nearest_neighbors_brute(&q, m.positions()).unwrap()
        );
    }

    #[test]
    fn flipping_one_of_two_faces() {
        let two = Mesh::new(
            vec![
                [0.0; 3],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [2.0, 0.0, 0.0],
                [3.0, 0.0, 0.0],
                [2.0, 1.0, 0.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert_eq!(normal_angle(&two, &two).unwrap(), 0.0);
        let mut p = two.positions().to_vec();
        p.swap(4, 5);
        let flipped = two.with_positions(p).unwrap();
        assert!((normal_angle(&flipped, &two).unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rotated_face_gives_right_angle() {
        let flat = shapes::triangle();
        let upright = flat
            .with_positions(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
            .unwrap();
        let a = normal_angle(&upright, &flat).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_total_with_default_weights() {
        let ones = LossComponents {
            vertex: 1.0,
            normal: 1.0,
            curvature: 1.0,
            chamfer: 1.0,
            fe: 1.0,
        };
        assert!((ones.weighted_total(&LossWeights::default()) - 2.26).abs() < 1e-15);
        assert_eq!(ones.weighted_total(&LossWeights::zero()), 0.0);
    }

    #[test]
    fn taped_curvature_matches_direct() {
        for m in [shapes::icosphere(2, 1.0), shapes::torus(1.0, 0.4, 12, 8), shapes::grid(4, 5, 0.3)] {
            let cache = GeometryCache::new(&m);
            let mut b = Eval::new();
            let p = positions_tensor(&m);
            let (kh, kg, _) = curvature(&mut b, &p, m.faces()).unwrap();
            let (h, g) = (cache.mean_curvature(), cache.gaussian_curvature());
            for v in 0..m.vertex_count() {
                assert!((kh.data()[v] - h[v]).abs() < 1e-9 * (1.0 + h[v].abs()));
                assert!((kg.data()[v] - g[v]).abs() < 1e-9 * (1.0 + g[v].abs()));
            }
        }
    }

    #[test]
    fn curvature_loss_examples() {
        let m = shapes::icosphere(1, 1.0);
        let mut t = Target::new(&m).unwrap();
        let mut b = Eval::new();
        let loss = curvature_loss(&mut b, &t.positions, &t, 1.0, 1.0).unwrap();
        assert!(loss.item().unwrap().abs() < 1e-12);

        // A zero ground-truth curvature annihilates any error.
        t.mean_curvature.fill(0.0);
        t.gaussian_curvature.fill(0.0);
        let moved = t.positions.map(|x| 1.7 * x + 0.01);
        assert_eq!(curvature_loss(&mut b, &moved, &t, 1.0, 1.0).unwrap().item(), Some(0.0));

        let k = Tensor::column(vec![2.0]);
        let e = weighted_curvature_error(&mut b, &k, &[1.0], 1.0).unwrap();
        assert_eq!(e.item(), Some(1.0));
    }

    #[test]
    fn fe_loss_examples() {
        let m = shapes::triangle();
        let t = Target::new(&m).unwrap();
        let mut b = Eval::new();
        assert_eq!(feature_extractor_loss(&mut b, &t.features, &t).unwrap().item(), Some(0.0));
        let mut off = t.features.clone();
        // Zero the predicted normal of vertex 0.
        off.data_mut()[..3].fill(0.0);
        let l = feature_extractor_loss(&mut b, &off, &t).unwrap().item().unwrap();
        assert!((l - 1.0 / 3.0).abs() < 1e-15);
    }
}
