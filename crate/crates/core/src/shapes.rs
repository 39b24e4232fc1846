//! Procedural test meshes: platonic solids, subdivided spheres, tori and
//! planar grids.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, PI};
use crate::Mesh;

/// The triangle `(0,0,0), (1,0,0), (0,1,0)`.
pub fn triangle() -> Mesh {
    Mesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        vec![[0, 1, 2]],
    )
    .unwrap()
}

/// Regular tetrahedron with outward-facing counter-clockwise faces.
pub fn tetrahedron() -> Mesh {
    Mesh::new(
        vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ],
        vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    )
    .unwrap()
}

/// Axis-aligned cube spanning `[0, side]^3`, two triangles per side.
pub fn cube(side: f64) -> Mesh {
    let s = side;
    let positions = vec![
        [0.0, 0.0, 0.0],
        [s, 0.0, 0.0],
        [s, s, 0.0],
        [0.0, s, 0.0],
        [0.0, 0.0, s],
        [s, 0.0, s],
        [s, s, s],
        [0.0, s, s],
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    Mesh::new(positions, faces).unwrap()
}

pub fn octahedron() -> Mesh {
    Mesh::new(
        vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ],
        vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ],
    )
    .unwrap()
}

/// Icosahedron refined `subdivisions` times by edge midpoints projected onto
/// the sphere of the given radius. Three subdivisions give 642 vertices.
pub fn icosphere(subdivisions: usize, radius: f64) -> Mesh {
    let t = (1.0 + math::sqrt(5.0)) / 2.0;
    let mut positions: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let unit = |p: [f64; 3]| math::scale(p, 1.0 / math::norm(p));
    for p in &mut positions {
        *p = unit(*p);
    }
    for _ in 0..subdivisions {
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, positions: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = math::scale(math::add(positions[a], positions[b]), 0.5);
                positions.push(unit(m));
                positions.len() - 1
            })
        };
        let mut refined = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut positions);
            let bc = midpoint(b, c, &mut positions);
            let ca = midpoint(c, a, &mut positions);
            refined.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = refined;
    }
    for p in &mut positions {
        *p = math::scale(*p, radius);
    }
    Mesh::new(positions, faces).unwrap()
}

/// Closed torus around the z axis with `rings x segments` vertices and
/// `2 * rings * segments` faces.
pub fn torus(major: f64, minor: f64, rings: usize, segments: usize) -> Mesh {
    assert!(rings >= 3 && segments >= 3, "torus needs at least 3x3 samples");
    let mut positions = Vec::with_capacity(rings * segments);
    for i in 0..rings {
        let u = 2.0 * PI * i as f64 / rings as f64;
        for j in 0..segments {
            let v = 2.0 * PI * j as f64 / segments as f64;
            let r = major + minor * math::cos(v);
            positions.push([r * math::cos(u), r * math::sin(u), minor * math::sin(v)]);
        }
    }
    let idx = |i: usize, j: usize| (i % rings) * segments + (j % segments);
    let mut faces = Vec::with_capacity(2 * rings * segments);
    for i in 0..rings {
        for j in 0..segments {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Mesh::new(positions, faces).unwrap()
}

/// Flat `nx x ny` vertex grid in the plane `z = 0` with the given spacing,
/// triangulated with counter-clockwise faces (normals along `+z`).
pub fn grid(nx: usize, ny: usize, spacing: f64) -> Mesh {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 vertices");
    let mut positions = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            positions.push([i as f64 * spacing, j as f64 * spacing, 0.0]);
        }
    }
    let idx = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Mesh::new(positions, faces).unwrap()
}

/// Torus whose face count is as close as possible to `faces` while keeping
/// a 2:1 ring-to-segment ratio. Used for timing sweeps.
pub fn torus_with_faces(faces: usize) -> Mesh {
    // faces = 2 * rings * segments with rings = 2 * segments.
    let segments = (math::floor(math::sqrt(faces as f64 / 4.0) + 0.5) as usize).max(3);
    torus(0.35, 0.15, 2 * segments, segments)
}
