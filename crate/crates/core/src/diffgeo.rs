//! Discrete differential geometry on triangle meshes.
//!
//! Mean curvature comes from the cotangent Laplacian, Gaussian curvature from
//! the angle deficit, and both are normalized by the mixed Voronoi area of
//! Meyer et al. Faces whose area falls below [`DEGENERATE_AREA`] keep their
//! place in the connectivity but contribute nothing to normals, areas,
//! angles or curvature.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, Vec3, PI};
use crate::Mesh;

/// Faces with less area than this are treated as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Cotangents are clamped to `[-COT_CLAMP, COT_CLAMP]`.
pub const COT_CLAMP: f64 = 1e4;

/// How face normals are blended into vertex normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalWeighting {
    #[default]
    Area,
    Angle,
}

/// Per-face and per-vertex quantities shared by the curvature operators.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    /// Unit normals, `(v1 - v0) x (v2 - v0)` orientation; zero for degenerate faces.
    pub face_normals: Vec<Vec3>,
    pub face_areas: Vec<f64>,
    pub degenerate_faces: Vec<bool>,
    /// Interior angle at each corner of each face.
    pub angles: Vec<[f64; 3]>,
    /// Clamped cotangent of each interior angle.
    pub cotangents: Vec<[f64; 3]>,
    pub mixed_areas: Vec<f64>,
    /// Per-vertex `sum_u w_vu (p_v - p_u)`.
    pub laplacian: Vec<Vec3>,
    pub angle_sums: Vec<f64>,
}

impl GeometryCache {
    pub fn new(mesh: &Mesh) -> Self {
        let p = mesh.positions();
        let n = mesh.vertex_count();
        let f = mesh.face_count();
        let mut face_normals = vec![[0.0; 3]; f];
        let mut face_areas = vec![0.0; f];
        let mut degenerate_faces = vec![false; f];
        let mut angles = vec![[0.0; 3]; f];
        let mut cotangents = vec![[0.0; 3]; f];
        let mut mixed_areas = vec![0.0; n];
        let mut laplacian = vec![[0.0; 3]; n];
        let mut angle_sums = vec![0.0; n];

        for (s, face) in mesh.faces().iter().enumerate() {
            let c = math::cross(math::sub(p[face[1]], p[face[0]]), math::sub(p[face[2]], p[face[0]]));
            let twice_area = math::norm(c);
            let area = 0.5 * twice_area;
            face_areas[s] = area;
            if !(area >= DEGENERATE_AREA) {
                degenerate_faces[s] = true;
                continue;
            }
            face_normals[s] = math::scale(c, 1.0 / twice_area);

            let mut dots = [0.0; 3];
            let mut sq = [[0.0; 2]; 3];
            for t in 0..3 {
                let (i, j, k) = (face[t], face[(t + 1) % 3], face[(t + 2) % 3]);
                let e1 = math::sub(p[j], p[i]);
                let e2 = math::sub(p[k], p[i]);
                let cross_norm = math::norm(math::cross(e1, e2));
                let d = math::dot(e1, e2);
                dots[t] = d;
                sq[t] = [math::norm_sq(e1), math::norm_sq(e2)];
                angles[s][t] = math::atan2(cross_norm, d);
                cotangents[s][t] = (d / cross_norm).clamp(-COT_CLAMP, COT_CLAMP);
            }

            let obtuse = dots.iter().position(|&d| d < 0.0);
            for t in 0..3 {
                let (i, j, k) = (face[t], face[(t + 1) % 3], face[(t + 2) % 3]);
                angle_sums[i] += angles[s][t];

                // Corner t is opposite edge (j, k).
                let w = cotangents[s][t];
                let d = math::sub(p[j], p[k]);
                laplacian[j] = math::add(laplacian[j], math::scale(d, w));
                laplacian[k] = math::sub(laplacian[k], math::scale(d, w));

                mixed_areas[i] += match obtuse {
                    None => {
                        let cot_j = cotangents[s][(t + 1) % 3];
                        let cot_k = cotangents[s][(t + 2) % 3];
                        // |ij|^2 is opposite k, |ik|^2 is opposite j.
                        (sq[t][0] * cot_k + sq[t][1] * cot_j) / 8.0
                    }
                    Some(o) if o == t => area / 2.0,
                    Some(_) => area / 4.0,
                };
            }
        }

        Self {
            face_normals,
            face_areas,
            degenerate_faces,
            angles,
            cotangents,
            mixed_areas,
            laplacian,
            angle_sums,
        }
    }

    pub fn degenerate_face_count(&self) -> usize {
        self.degenerate_faces.iter().filter(|&&d| d).count()
    }

    /// Vertices whose mixed area is zero; their curvature is reported as 0.
    pub fn zero_area_vertices(&self) -> Vec<bool> {
        self.mixed_areas.iter().map(|&a| !(a > 0.0)).collect()
    }

    /// Symmetric cotangent weights `w_vu = sum of cot(alpha)` over the faces
    /// containing edge `vu`, keyed by the directed pair.
    pub fn cotangent_weights(&self, mesh: &Mesh) -> BTreeMap<(usize, usize), f64> {
        let mut w = BTreeMap::new();
        for (s, face) in mesh.faces().iter().enumerate() {
            if self.degenerate_faces[s] {
                continue;
            }
            for t in 0..3 {
                let (j, k) = (face[(t + 1) % 3], face[(t + 2) % 3]);
                *w.entry((j, k)).or_insert(0.0) += self.cotangents[s][t];
                *w.entry((k, j)).or_insert(0.0) += self.cotangents[s][t];
            }
        }
        w
    }

    pub fn mean_curvature(&self) -> Vec<f64> {
        self.laplacian
            .iter()
            .zip(&self.mixed_areas)
            .map(|(l, &a)| if a > 0.0 { math::norm(*l) / (4.0 * a) } else { 0.0 })
            .collect()
    }

    pub fn gaussian_curvature(&self) -> Vec<f64> {
        self.angle_sums
            .iter()
            .zip(&self.mixed_areas)
            .map(|(&theta, &a)| if a > 0.0 { (2.0 * PI - theta) / a } else { 0.0 })
            .collect()
    }

    /// Unit vertex normals; vertices without a non-degenerate incident face
    /// get the zero vector.
    pub fn vertex_normals(&self, mesh: &Mesh, weighting: NormalWeighting) -> Vec<Vec3> {
        let mut acc = vec![[0.0; 3]; mesh.vertex_count()];
        for (s, face) in mesh.faces().iter().enumerate() {
            if self.degenerate_faces[s] {
                continue;
            }
            for (t, &v) in face.iter().enumerate() {
                let weight = match weighting {
                    NormalWeighting::Area => self.face_areas[s],
                    NormalWeighting::Angle => self.angles[s][t],
                };
                acc[v] = math::add(acc[v], math::scale(self.face_normals[s], weight));
            }
        }
        acc.into_iter()
            .map(|a| {
                let len = math::norm(a);
                if len > 0.0 {
                    math::scale(a, 1.0 / len)
                } else {
                    [0.0; 3]
                }
            })
            .collect()
    }
}

/// Unit face normals with degenerate faces flagged (their normal is zero).
pub fn face_normals(mesh: &Mesh) -> (Vec<Vec3>, Vec<bool>) {
    let p = mesh.positions();
    mesh.faces()
        .iter()
        .map(|f| {
            let c = math::cross(math::sub(p[f[1]], p[f[0]]), math::sub(p[f[2]], p[f[0]]));
            let len = math::norm(c);
            if 0.5 * len >= DEGENERATE_AREA {
                (math::scale(c, 1.0 / len), false)
            } else {
                ([0.0; 3], true)
            }
        })
        .unzip()
}

pub fn mixed_voronoi_areas(mesh: &Mesh) -> Vec<f64> {
    GeometryCache::new(mesh).mixed_areas
}

pub fn mean_curvature(mesh: &Mesh) -> Vec<f64> {
    GeometryCache::new(mesh).mean_curvature()
}

pub fn gaussian_curvature(mesh: &Mesh) -> Vec<f64> {
    GeometryCache::new(mesh).gaussian_curvature()
}

pub fn vertex_normals(mesh: &Mesh) -> Vec<Vec3> {
    GeometryCache::new(mesh).vertex_normals(mesh, NormalWeighting::Area)
}

/// Per-vertex `[normal (3), mean curvature, Gaussian curvature]` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeatures {
    pub rows: Vec<[f64; 5]>,
    pub degenerate_faces: usize,
    /// Vertices with zero mixed area or no usable incident face.
    pub degenerate_vertices: Vec<bool>,
    /// Vertices on an open boundary; their curvature is not corrected for
    /// the boundary and should be treated as unreliable.
    pub boundary_vertices: Vec<bool>,
}

impl LocalFeatures {
    /// Row-major `n x 5` buffer.
    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn normals(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.rows.iter().map(|r| [r[0], r[1], r[2]])
    }

    pub fn mean_curvature(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r[3])
    }

    pub fn gaussian_curvature(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r[4])
    }
}

pub fn local_features(mesh: &Mesh) -> LocalFeatures {
    local_features_with(mesh, NormalWeighting::Area)
}

pub fn local_features_with(mesh: &Mesh, weighting: NormalWeighting) -> LocalFeatures {
    let cache = GeometryCache::new(mesh);
    let normals = cache.vertex_normals(mesh, weighting);
    let kh = cache.mean_curvature();
    let kg = cache.gaussian_curvature();
    let rows = (0..mesh.vertex_count())
        .map(|v| {
            let nv = normals[v];
            [nv[0], nv[1], nv[2], kh[v], kg[v]]
        })
        .collect();
    let degenerate_vertices = cache
        .zero_area_vertices()
        .into_iter()
        .zip(&normals)
        .map(|(zero_area, nv)| zero_area || *nv == [0.0; 3])
        .collect();
    LocalFeatures {
        rows,
        degenerate_faces: cache.degenerate_face_count(),
        degenerate_vertices,
        boundary_vertices: mesh.boundary_vertices(),
    }
}
