//! Triangle meshes, their primal/dual adjacency operators and the unit-cube
//! canonical frame.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::sparse::SparseMatrix;
use crate::{Error, Result};

pub use crate::sparse::normalize_adjacency;

/// Vertex positions plus triangular faces indexing into them.
///
/// Faces must reference existing vertices and may not repeat a vertex.
/// Manifoldness is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    positions: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn new(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if positions.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 vertices, got {}",
                positions.len()
            )));
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        let n = positions.len();
        for (s, face) in faces.iter().enumerate() {
            if let Some(&v) = face.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {s} references vertex {v} but there are only {n}"
                )));
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {s} repeats a vertex: {face:?}"
                )));
            }
        }
        if let Some(p) = positions.iter().find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite position {p:?}")));
        }
        Ok(Self { positions, faces })
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Same connectivity, new positions.
    pub fn with_positions(&self, positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(Error::InvalidMesh(format!(
                "expected {} positions, got {}",
                self.positions.len(),
                positions.len()
            )));
        }
        if let Some(p) = positions.iter().find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite position {p:?}")));
        }
        Ok(Self {
            positions,
            faces: self.faces.clone(),
        })
    }

    /// Positions flattened row-major into an `n x 3` buffer.
    pub fn flat_positions(&self) -> Vec<f64> {
        self.positions.iter().flatten().copied().collect()
    }

    /// Applies `p -> R p` to every vertex.
    pub fn rotated(&self, rotation: &[[f64; 3]; 3]) -> Self {
        let positions = self
            .positions
            .iter()
            .map(|p| {
                let mut out = [0.0; 3];
                for (i, row) in rotation.iter().enumerate() {
                    out[i] = row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
                }
                out
            })
            .collect();
        Self {
            positions,
            faces: self.faces.clone(),
        }
    }

    /// Relabels vertices and faces: new vertex `vertex_perm[i]` is old vertex
    /// `i`, and new face `face_perm[s]` is old face `s` with remapped indices.
    pub fn permuted(&self, vertex_perm: &[usize], face_perm: &[usize]) -> Result<Self> {
        check_permutation(vertex_perm, self.vertex_count())?;
        check_permutation(face_perm, self.face_count())?;
        let mut positions = alloc::vec![[0.0; 3]; self.vertex_count()];
        for (old, &new) in vertex_perm.iter().enumerate() {
            positions[new] = self.positions[old];
        }
        let mut faces = alloc::vec![[0usize; 3]; self.face_count()];
        for (old, &new) in face_perm.iter().enumerate() {
            let f = self.faces[old];
            faces[new] = [vertex_perm[f[0]], vertex_perm[f[1]], vertex_perm[f[2]]];
        }
        Ok(Self { positions, faces })
    }

    /// Unique undirected edges `(lo, hi)` in sorted order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| face_edges(*f))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Faces incident to each undirected edge.
    pub fn edge_faces(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (s, f) in self.faces.iter().enumerate() {
            for e in face_edges(*f) {
                map.entry(e).or_default().push(s);
            }
        }
        map
    }

    /// Vertices lying on an edge used by exactly one face.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut boundary = alloc::vec![false; self.vertex_count()];
        for ((a, b), faces) in self.edge_faces() {
            if faces.len() == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
        boundary
    }

    /// `n - m + f`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edges().len() as i64 + self.face_count() as i64
    }
}

fn check_permutation(perm: &[usize], len: usize) -> Result<()> {
    if perm.len() != len {
        return Err(Error::InvalidArgument(format!(
            "permutation has {} entries, expected {len}",
            perm.len()
        )));
    }
    let mut seen = alloc::vec![false; len];
    for &p in perm {
        if p >= len || core::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
    }
    Ok(())
}

fn face_edges(f: [usize; 3]) -> [(usize, usize); 3] {
    let e = |a: usize, b: usize| (a.min(b), a.max(b));
    [e(f[0], f[1]), e(f[1], f[2]), e(f[2], f[0])]
}

/// Symmetric binary `n x n` vertex adjacency: `(u, v) = 1` iff `u` and `v`
/// share a face edge.
pub fn build_vertex_adjacency(mesh: &Mesh) -> SparseMatrix {
    let n = mesh.vertex_count();
    SparseMatrix::from_triplets(
        n,
        n,
        mesh.edges()
            .into_iter()
            .flat_map(|(a, b)| [(a, b, 1.0), (b, a, 1.0)]),
    )
    .expect("edge indices are validated by Mesh")
}

/// Symmetric binary `f x f` face adjacency: two faces are adjacent iff they
/// share an unordered edge.
pub fn build_face_adjacency(mesh: &Mesh) -> SparseMatrix {
    let f = mesh.face_count();
    let mut pairs = Vec::new();
    for faces in mesh.edge_faces().values() {
        for (i, &a) in faces.iter().enumerate() {
            for &b in &faces[i + 1..] {
                if a != b {
                    pairs.push((a, b));
                    pairs.push((b, a));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    SparseMatrix::from_triplets(f, f, pairs.into_iter().map(|(a, b)| (a, b, 1.0)))
        .expect("face indices are in range")
}

/// Binary `n x f` incidence: `(v, s) = 1` iff vertex `v` belongs to face `s`.
pub fn build_vertex_face_adjacency(mesh: &Mesh) -> SparseMatrix {
    SparseMatrix::from_triplets(
        mesh.vertex_count(),
        mesh.face_count(),
        mesh.faces()
            .iter()
            .enumerate()
            .flat_map(|(s, f)| f.map(|v| (v, s, 1.0))),
    )
    .expect("face indices are validated by Mesh")
}

/// Maps model coordinates into the unit-cube frame: `p' = (p + translation) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalTransform {
    pub translation: [f64; 3],
    pub scale: f64,
}

impl CanonicalTransform {
    pub const IDENTITY: Self = Self {
        translation: [0.0; 3],
        scale: 1.0,
    };

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let t = self.translation;
        [
            (p[0] + t[0]) * self.scale,
            (p[1] + t[1]) * self.scale,
            (p[2] + t[2]) * self.scale,
        ]
    }

    pub fn invert(&self, p: [f64; 3]) -> [f64; 3] {
        let t = self.translation;
        [
            p[0] / self.scale - t[0],
            p[1] / self.scale - t[1],
            p[2] / self.scale - t[2],
        ]
    }

    pub fn apply_mesh(&self, mesh: &Mesh) -> Result<Mesh> {
        mesh.with_positions(mesh.positions().iter().map(|&p| self.apply(p)).collect())
    }

    pub fn invert_mesh(&self, mesh: &Mesh) -> Result<Mesh> {
        mesh.with_positions(mesh.positions().iter().map(|&p| self.invert(p)).collect())
    }
}

/// Centers the bounding box at the origin and scales its longest side to 1.
pub fn canonicalize(mesh: &Mesh) -> Result<(Mesh, CanonicalTransform)> {
    let transform = canonical_transform(mesh.positions())?;
    Ok((transform.apply_mesh(mesh)?, transform))
}

/// The transform `canonicalize` would apply to these points.
pub fn canonical_transform(points: &[[f64; 3]]) -> Result<CanonicalTransform> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let extent = (0..3).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::DegenerateGeometry("bounding box has zero extent"));
    }
    Ok(CanonicalTransform {
        translation: [
            -(lo[0] + hi[0]) / 2.0,
            -(lo[1] + hi[1]) / 2.0,
            -(lo[2] + hi[2]) / 2.0,
        ],
        scale: 1.0 / extent,
    })
}
