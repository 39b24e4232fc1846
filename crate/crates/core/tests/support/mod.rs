//! Oracles and measurement routines shared by the integration tests of both
//! crates. Everything here is computed independently of the code under test
//! where an independent route exists.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use meshdn_core::autodiff::gradcheck::{self, DEFAULT_STEP};
use meshdn_core::autodiff::index_list;
use meshdn_core::losses::{self, Target};
use meshdn_core::network::{self, MeshGraph};
use meshdn_core::{noise, shapes, Backend, Eval, Mesh, NetConfig, NetParams, SparseMatrix, Tape, Tensor, Var};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with magnitude in `[0.2, 1]` and random sign, away from kinks.
pub fn away_from_zero(rng: &mut ChaCha8Rng, dims: &[usize]) -> Tensor {
    let n = dims.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.random_range(0.2..1.0);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(dims, data).unwrap()
}

pub fn uniform(rng: &mut ChaCha8Rng, dims: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = dims.iter().product();
    Tensor::new(dims, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Small closed and open meshes with their vertices jittered and relabelled.
pub fn random_mesh(rng: &mut ChaCha8Rng, jitter: f64) -> Mesh {
    let base = match rng.random_range(0..5) {
        0 => shapes::icosphere(1, 1.0),
        1 => shapes::torus(1.0, 0.4, rng.random_range(4..8), rng.random_range(3..6)),
        2 => shapes::grid(rng.random_range(3..7), rng.random_range(3..7), 0.3),
        3 => shapes::octahedron(),
        _ => shapes::cube(1.0),
    };
    let positions = base
        .positions()
        .iter()
        .map(|p| p.map(|c| c + rng.random_range(-jitter..=jitter)))
        .collect();
    let m = base.with_positions(positions).unwrap();
    let mut vp: Vec<usize> = (0..m.vertex_count()).collect();
    let mut fp: Vec<usize> = (0..m.face_count()).collect();
    vp.shuffle(rng);
    fp.shuffle(rng);
    m.permuted(&vp, &fp).unwrap()
}

// ---------------------------------------------------------------- gradients

pub struct GradCase {
    pub name: &'static str,
    pub instances: usize,
    pub worst: f64,
}

pub const GRAD_INSTANCES: usize = 20;
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// `sum(y * r)` for a fixed random `r`, which turns any output into a scalar
/// with a generic gradient.
fn contract(t: &mut Tape, y: Var, r: &Tensor) -> meshdn_core::Result<Var> {
    let dims = t.value(&y).dims().to_vec();
    let r = t.constant(r.clone().reshaped(&dims)?);
    let p = t.mul(&y, &r)?;
    t.sum(&p)
}

fn run_case<F>(name: &'static str, seed: u64, mut instance: F) -> GradCase
where
    F: FnMut(&mut ChaCha8Rng) -> (Vec<Tensor>, Box<dyn Fn(&mut Tape, &[Var]) -> meshdn_core::Result<Var>>),
{
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..GRAD_INSTANCES {
        let (inputs, f) = instance(&mut rng);
        let check = gradcheck::check(&inputs, DEFAULT_STEP, f).unwrap_or_else(|e| panic!("{name}: {e}"));
        worst = worst.max(check.relative_error);
    }
    GradCase {
        name,
        instances: GRAD_INSTANCES,
        worst,
    }
}

type Instance = (Vec<Tensor>, Box<dyn Fn(&mut Tape, &[Var]) -> meshdn_core::Result<Var>>);

fn unary(rng: &mut ChaCha8Rng, x: Tensor, op: impl Fn(&mut Tape, &Var) -> meshdn_core::Result<Var> + 'static) -> Instance {
    let out_probe = {
        let mut t = Tape::new();
        let v = t.param("x", &x);
        let y = op(&mut t, &v).unwrap();
        t.value(&y).len()
    };
    let r = uniform(rng, &[out_probe], -1.0, 1.0);
    (
        vec![x],
        Box::new(move |t, v| {
            let y = op(t, &v[0])?;
            contract(t, y, &r)
        }),
    )
}

fn binary(
    rng: &mut ChaCha8Rng,
    a: Tensor,
    b: Tensor,
    op: impl Fn(&mut Tape, &Var, &Var) -> meshdn_core::Result<Var> + 'static,
) -> Instance {
    let out_len = {
        let mut t = Tape::new();
        let va = t.param("a", &a);
        let vb = t.param("b", &b);
        let y = op(&mut t, &va, &vb).unwrap();
        t.value(&y).len()
    };
    let r = uniform(rng, &[out_len], -1.0, 1.0);
    (
        vec![a, b],
        Box::new(move |t, v| {
            let y = op(t, &v[0], &v[1])?;
            contract(t, y, &r)
        }),
    )
}

fn dims2(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..6), rng.random_range(1..5))
}

fn random_sparse(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Arc<SparseMatrix> {
    let mut triplets = Vec::new();
    for i in 0..rows * cols {
        if rng.random_bool(0.5) {
            triplets.push((i / cols, i % cols, rng.random_range(-1.0..1.0)));
        }
    }
    Arc::new(SparseMatrix::from_triplets(rows, cols, triplets).unwrap())
}

/// Finite-difference checks of every tape op.
pub fn op_gradient_cases() -> Vec<GradCase> {
    let mut cases = Vec::new();
    let mut add = |name, seed, f: &mut dyn FnMut(&mut ChaCha8Rng) -> Instance| cases.push(run_case(name, seed, f));

    add("matmul", 1, &mut |rng| {
        let (m, k) = dims2(rng);
        let n = rng.random_range(1..5);
        let a = away_from_zero(rng, &[m, k]);
        let b = away_from_zero(rng, &[k, n]);
        binary(rng, a, b, |t, a, b| t.matmul(a, b))
    });
    add("sparse_matmul", 2, &mut |rng| {
        let (k, n) = dims2(rng);
        let rows = rng.random_range(1..6);
        let s = random_sparse(rng, rows, k);
        let x = away_from_zero(rng, &[k, n]);
        unary(rng, x, move |t, x| t.spmm(&s, x))
    });
    for (name, seed, which) in [("add", 3, 0), ("sub", 4, 1), ("mul", 5, 2), ("div", 6, 3)] {
        add(name, seed, &mut |rng| {
            let (m, k) = dims2(rng);
            let a = away_from_zero(rng, &[m, k]);
            let b = away_from_zero(rng, &[m, k]);
            binary(rng, a, b, move |t, a, b| match which {
                0 => t.add(a, b),
                1 => t.sub(a, b),
                2 => t.mul(a, b),
                _ => t.div(a, b),
            })
        });
    }
    add("add_row_broadcast", 7, &mut |rng| {
        let (m, k) = dims2(rng);
        let a = away_from_zero(rng, &[m, k]);
        let row = away_from_zero(rng, &[k]);
        binary(rng, a, row, |t, a, r| t.add_row(a, r))
    });
    add("mul_col_broadcast", 8, &mut |rng| {
        let (m, k) = dims2(rng);
        let a = away_from_zero(rng, &[m, k]);
        let col = away_from_zero(rng, &[m, 1]);
        binary(rng, a, col, |t, a, c| t.mul_col(a, c))
    });
    add("scale", 9, &mut |rng| {
        let (m, k) = dims2(rng);
        let c = rng.random_range(-3.0..3.0);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, move |t, x| t.scale(x, c))
    });
    add("offset", 10, &mut |rng| {
        let (m, k) = dims2(rng);
        let c = rng.random_range(-3.0..3.0);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, move |t, x| {
            let y = t.offset(x, c)?;
            t.mul(&y, &y)
        })
    });
    add("concat_columns", 11, &mut |rng| {
        let m = rng.random_range(1..6);
        let (ka, kb) = (rng.random_range(1..4), rng.random_range(1..4));
        let a = away_from_zero(rng, &[m, ka]);
        let b = away_from_zero(rng, &[m, kb]);
        binary(rng, a, b, |t, a, b| t.concat(&[a, b, a]))
    });
    add("relu", 12, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, |t, x| t.relu(x))
    });
    add("abs", 13, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, |t, x| t.abs(x))
    });
    add("row_gather", 14, &mut |rng| {
        let (m, k) = dims2(rng);
        let idx = index_list((0..rng.random_range(1..8)).map(|_| rng.random_range(0..m)).collect::<Vec<_>>());
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, move |t, x| t.gather(x, &idx))
    });
    add("mean_over_rows", 15, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, |t, x| t.mean_rows(x))
    });
    add("mean_over_axis", 16, &mut |rng| {
        let dims = [rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4)];
        let axis = rng.random_range(0..3);
        let x = away_from_zero(rng, &dims);
        unary(rng, x, move |t, x| t.mean_axis(x, axis))
    });
    add("sum", 17, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        (
            vec![x],
            Box::new(|t: &mut Tape, v: &[Var]| {
                let sq = t.mul(&v[0], &v[0])?;
                t.sum(&sq)
            }),
        )
    });
    add("mean", 18, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        (
            vec![x],
            Box::new(|t: &mut Tape, v: &[Var]| {
                let sq = t.mul(&v[0], &v[0])?;
                t.mean(&sq)
            }),
        )
    });
    add("reshape", 19, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, move |t, x| {
            let y = t.reshape(x, &[k, m])?;
            t.mul(&y, &y)
        })
    });
    add("squared_norm_rows", 20, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, |t, x| t.sq_norm_rows(x))
    });
    add("norm_rows", 21, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, |t, x| t.norm_rows(x))
    });
    add("dot_rows", 22, &mut |rng| {
        let (m, k) = dims2(rng);
        let a = away_from_zero(rng, &[m, k]);
        let b = away_from_zero(rng, &[m, k]);
        binary(rng, a, b, |t, a, b| t.dot_rows(a, b))
    });
    add("cross_rows", 23, &mut |rng| {
        let m = rng.random_range(1..6);
        let a = away_from_zero(rng, &[m, 3]);
        let b = away_from_zero(rng, &[m, 3]);
        binary(rng, a, b, |t, a, b| t.cross_rows(a, b))
    });
    add("normalize_rows", 24, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = away_from_zero(rng, &[m, k]);
        unary(rng, x, |t, x| t.normalize_rows(x))
    });
    add("acos", 25, &mut |rng| {
        let (m, k) = dims2(rng);
        let x = uniform(rng, &[m, k], -0.9, 0.9);
        unary(rng, x, |t, x| t.acos(x))
    });
    add("atan2", 26, &mut |rng| {
        let (m, k) = dims2(rng);
        let y = away_from_zero(rng, &[m, k]);
        let x = away_from_zero(rng, &[m, k]);
        binary(rng, y, x, |t, y, x| t.atan2(y, x))
    });
    add("clamp", 27, &mut |rng| {
        let (m, k) = dims2(rng);
        // Bounds at +-0.6 never coincide with entries drawn from 0.2..1
        // closer than the step.
        let x = away_from_zero(rng, &[m, k]);
        let x = x.map(|v| if (v.abs() - 0.6).abs() < 1e-3 { v * 1.1 } else { v });
        unary(rng, x, |t, x| {
            let y = t.clamp(x, -0.6, 0.6)?;
            t.mul(&y, x)
        })
    });
    add("dual_average_pool", 28, &mut |rng| {
        let n = rng.random_range(3..7);
        let k = rng.random_range(1..4);
        let f = rng.random_range(1..6);
        let faces: Arc<[[usize; 3]]> = (0..f)
            .map(|_| {
                let mut v: Vec<usize> = (0..n).collect();
                v.shuffle(rng);
                [v[0], v[1], v[2]]
            })
            .collect::<Vec<_>>()
            .into();
        let xv = away_from_zero(rng, &[n, k]);
        let xf = uniform(rng, &[f, k], -0.1, 0.1);
        binary(rng, xv, xf, move |t, a, b| t.dual_average_pool(a, b, &faces))
    });
    cases
}

fn mesh_points(mesh: &Mesh) -> Tensor {
    network::positions_tensor(mesh)
}

/// Finite-difference checks of the five losses on jittered meshes.
pub fn loss_gradient_cases() -> Vec<GradCase> {
    let mut cases = Vec::new();
    let mut add = |name, seed, f: &mut dyn FnMut(&mut ChaCha8Rng) -> Instance| cases.push(run_case(name, seed, f));

    add("vertex_loss", 101, &mut |rng| {
        let m = random_mesh(rng, 0.05);
        let gt = mesh_points(&random_mesh_like(rng, &m, 0.05));
        (
            vec![mesh_points(&m)],
            Box::new(move |t: &mut Tape, v: &[Var]| {
                let g = t.constant(gt.clone());
                losses::vertex_loss(t, &v[0], &g)
            }),
        )
    });
    add("normal_loss", 102, &mut |rng| {
        let m = random_mesh(rng, 0.05);
        let target = Target::new(&random_mesh_like(rng, &m, 0.05)).unwrap();
        (
            vec![mesh_points(&m)],
            Box::new(move |t: &mut Tape, v: &[Var]| losses::normal_loss(t, &v[0], &target)),
        )
    });
    add("curvature_loss", 103, &mut |rng| {
        let m = random_mesh(rng, 0.03);
        let target = Target::new(&random_mesh_like(rng, &m, 0.03)).unwrap();
        let (gh, gg) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
        (
            vec![mesh_points(&m)],
            Box::new(move |t: &mut Tape, v: &[Var]| losses::curvature_loss(t, &v[0], &target, gh, gg)),
        )
    });
    add("chamfer_loss", 104, &mut |rng| {
        let m = random_mesh(rng, 0.02);
        let gt = mesh_points(&random_mesh_like(rng, &m, 0.02));
        (
            vec![mesh_points(&m)],
            Box::new(move |t: &mut Tape, v: &[Var]| {
                let g = t.constant(gt.clone());
                losses::chamfer_loss(t, &v[0], &g)
            }),
        )
    });
    add("feature_extractor_loss", 105, &mut |rng| {
        let m = random_mesh(rng, 0.05);
        let target = Target::new(&m).unwrap();
        let fe = away_from_zero(rng, &[m.vertex_count(), 5]);
        (
            vec![fe],
            Box::new(move |t: &mut Tape, v: &[Var]| losses::feature_extractor_loss(t, &v[0], &target)),
        )
    });
    cases
}

/// Same connectivity as `m`, every position jittered again.
pub fn random_mesh_like(rng: &mut ChaCha8Rng, m: &Mesh, jitter: f64) -> Mesh {
    let positions = m
        .positions()
        .iter()
        .map(|p| p.map(|c| c + rng.random_range(-jitter..=jitter)))
        .collect();
    m.with_positions(positions).unwrap()
}

// ------------------------------------------------------------ layer oracles

pub type Dense = Vec<Vec<f64>>;

pub fn dense_from(t: &Tensor) -> Dense {
    let (r, c) = t.matrix_dims().unwrap();
    (0..r).map(|i| t.data()[i * c..(i + 1) * c].to_vec()).collect()
}

pub fn dense_matmul(a: &Dense, b: &Dense) -> Dense {
    let k = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..k).map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum()).collect())
        .collect()
}

/// `D^{-1/2} (A + I) D^{-1/2}` from an explicit neighbour list.
pub fn dense_normalized(n: usize, neighbours: &[BTreeSet<usize>]) -> Dense {
    let deg: Vec<f64> = (0..n).map(|i| neighbours[i].len() as f64 + 1.0).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j || neighbours[i].contains(&j) {
                        1.0 / (deg[i] * deg[j]).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn vertex_neighbours(mesh: &Mesh) -> Vec<BTreeSet<usize>> {
    let mut nb = vec![BTreeSet::new(); mesh.vertex_count()];
    for f in mesh.faces() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            nb[a].insert(b);
            nb[b].insert(a);
        }
    }
    nb
}

/// Faces sharing exactly two vertices.
pub fn face_neighbours(mesh: &Mesh) -> Vec<BTreeSet<usize>> {
    let faces = mesh.faces();
    let mut nb = vec![BTreeSet::new(); faces.len()];
    for i in 0..faces.len() {
        for j in 0..faces.len() {
            let shared = faces[i].iter().filter(|v| faces[j].contains(v)).count();
            if i != j && shared == 2 {
                nb[i].insert(j);
            }
        }
    }
    nb
}

pub fn max_diff(a: &Dense, b: &Tensor) -> f64 {
    let b = dense_from(b);
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(&b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

/// Worst deviation of `(agg primal, agg dual, p2d, d2p, dap)` from their
/// dense brute-force definitions over `meshes` random meshes.
pub fn layer_oracle_errors(seed: u64, meshes: usize) -> [f64; 5] {
    let mut rng = rng(seed);
    let mut worst = [0.0f64; 5];
    for _ in 0..meshes {
        let mesh = random_mesh(&mut rng, 0.1);
        assert!(mesh.vertex_count() <= 50);
        let graph = MeshGraph::new(&mesh).unwrap();
        let (n, f) = (mesh.vertex_count(), mesh.face_count());
        let k_in = rng.random_range(1..6);
        let k_out = rng.random_range(1..6);
        let mut b = Eval::new();
        let xv = uniform(&mut rng, &[n, k_in], -1.0, 1.0);
        let xf = uniform(&mut rng, &[f, k_in], -1.0, 1.0);
        let w = uniform(&mut rng, &[k_in, k_out], -1.0, 1.0);
        let relu = |d: Dense| -> Dense { d.into_iter().map(|r| r.into_iter().map(|x| x.max(0.0)).collect()).collect() };

        let av = dense_normalized(n, &vertex_neighbours(&mesh));
        let expect = relu(dense_matmul(&dense_matmul(&av, &dense_from(&xv)), &dense_from(&w)));
        let got = network::agg(&mut b, &xv, &graph.a_v, &w, true).unwrap();
        worst[0] = worst[0].max(max_diff(&expect, &got));

        let af = dense_normalized(f, &face_neighbours(&mesh));
        let expect = relu(dense_matmul(&dense_matmul(&af, &dense_from(&xf)), &dense_from(&w)));
        let got = network::agg(&mut b, &xf, &graph.a_f, &w, true).unwrap();
        worst[1] = worst[1].max(max_diff(&expect, &got));

        let a_fv: Dense = mesh
            .faces()
            .iter()
            .map(|face| (0..n).map(|v| if face.contains(&v) { 1.0 / 3.0 } else { 0.0 }).collect())
            .collect();
        let expect = dense_matmul(&a_fv, &dense_from(&xv));
        let got = network::p2d(&mut b, &graph, &xv).unwrap();
        worst[2] = worst[2].max(max_diff(&expect, &got));

        let a_vf: Dense = (0..n)
            .map(|v| {
                let deg = mesh.faces().iter().filter(|face| face.contains(&v)).count() as f64;
                mesh.faces()
                    .iter()
                    .map(|face| if face.contains(&v) { 1.0 / deg } else { 0.0 })
                    .collect()
            })
            .collect();
        let expect = dense_matmul(&a_vf, &dense_from(&xf));
        let got = network::d2p(&mut b, &graph, &xf).unwrap();
        worst[3] = worst[3].max(max_diff(&expect, &got));

        let dv = dense_from(&xv);
        let df = dense_from(&xf);
        let expect: Dense = mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(s, face)| {
                (0..k_in)
                    .map(|c| face.iter().map(|&v| (dv[v][c] - df[s][c]).abs()).sum::<f64>() / 3.0)
                    .collect()
            })
            .collect();
        let got = network::dap(&mut b, &graph, &xv, &xf).unwrap();
        worst[4] = worst[4].max(max_diff(&expect, &got));
    }
    worst
}

/// DAP on one triangle with vertex rows (1,0), (0,1), (0,0) and the face
/// row set to their centroid.
pub fn dap_hand_example() -> Vec<f64> {
    let mesh = shapes::triangle();
    let graph = MeshGraph::new(&mesh).unwrap();
    let mut b = Eval::new();
    let xv = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
    let xf = network::p2d(&mut b, &graph, &xv).unwrap();
    network::dap(&mut b, &graph, &xv, &xf).unwrap().into_data()
}

// ------------------------------------------------------------- equivariance

/// Replaces the zero-initialized denoiser head with small random values so
/// that the network output depends on every layer.
pub fn perturb_head(rng: &mut ChaCha8Rng, params: &mut NetParams) {
    for (name, t) in params.iter_mut() {
        if name.starts_with("dn.head") {
            for x in t.data_mut() {
                *x = rng.random_range(-0.1..0.1);
            }
        }
    }
}

/// Largest deviation between the network output on a relabelled mesh and
/// the relabelled output on the original mesh, with a nonzero head.
pub fn permutation_error(seed: u64, config: &NetConfig) -> f64 {
    let mut rng = rng(seed);
    let mesh = random_mesh(&mut rng, 0.05);
    let mut params = NetParams::init(config, seed);
    perturb_head(&mut rng, &mut params);
    let run = |m: &meshdn_core::Mesh| {
        let g = MeshGraph::new(m).unwrap();
        let mut b = Eval::new();
        let x = network::positions_tensor(m);
        let out = network::dmdnet_forward(&mut b, &g, &params, config, &x).unwrap();
        (out.denoised, out.features)
    };
    let (d0, f0) = run(&mesh);
    let mut vp: Vec<usize> = (0..mesh.vertex_count()).collect();
    let mut fp: Vec<usize> = (0..mesh.face_count()).collect();
    vp.shuffle(&mut rng);
    fp.shuffle(&mut rng);
    let (d1, f1) = run(&mesh.permuted(&vp, &fp).unwrap());
    let mut worst: f64 = 0.0;
    for (old, &new) in vp.iter().enumerate() {
        for (a, b, k) in [(&d0, &d1, 3), (&f0, &f1, 5)] {
            for c in 0..k {
                worst = worst.max((a.data()[old * k + c] - b.data()[new * k + c]).abs());
            }
        }
    }
    worst
}

// ---------------------------------------------------------- feature collision

pub fn max_pairwise_distance(t: &Tensor) -> f64 {
    let rows = dense_from(t);
    let mut best: f64 = 0.0;
    for a in &rows {
        for b in &rows {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            best = best.max(d);
        }
    }
    best
}

/// `(input spread, skip-free output spread, residual output spread)` for a
/// three-AGG stack on the tetrahedron.
pub fn collision_spreads(seed: u64) -> (f64, f64, f64) {
    let mut rng = rng(seed);
    let mesh = shapes::tetrahedron();
    let graph = MeshGraph::new(&mesh).unwrap();
    let k = 4;
    let x = uniform(&mut rng, &[4, k], -1.0, 1.0);
    let ws: Vec<Tensor> = (0..3).map(|_| uniform(&mut rng, &[k, k], -1.0, 1.0)).collect();
    let mut b = Eval::new();
    let plain = network::agg_stack(&mut b, &x, &graph.a_v, &ws, false).unwrap();
    let residual = network::agg_stack(&mut b, &x, &graph.a_v, &ws, true).unwrap();
    (max_pairwise_distance(&x), max_pairwise_distance(&plain), max_pairwise_distance(&residual))
}

// ----------------------------------------------------------------- noise

/// Per-coordinate sample variance of Gaussian noise and the perturbed
/// fraction of impulse noise, both on an `n`-vertex point set.
pub fn noise_statistics(n: usize, sigma: f64, impulse: f64, seed: u64) -> ([f64; 3], f64) {
    let mesh = point_mesh(n);
    let g = noise::apply_noise(&mesh, &noise::NoiseSpec::new(noise::NoiseKind::Gaussian, sigma, seed)).unwrap();
    let mut var = [0.0; 3];
    for c in 0..3 {
        let d: Vec<f64> = g.positions().iter().zip(mesh.positions()).map(|(a, b)| a[c] - b[c]).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        var[c] = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() as f64 - 1.0);
    }
    let i = noise::apply_noise(&mesh, &noise::NoiseSpec::new(noise::NoiseKind::Impulse, impulse, seed + 1)).unwrap();
    let moved = i
        .positions()
        .iter()
        .zip(mesh.positions())
        .flat_map(|(a, b)| (0..3).map(move |c| a[c] != b[c]))
        .filter(|&m| m)
        .count();
    (var, moved as f64 / (3 * mesh.vertex_count()) as f64)
}

/// Flat grid with at least `n` vertices.
fn point_mesh(n: usize) -> Mesh {
    let side = ((n as f64).sqrt().ceil() as usize).max(2);
    shapes::grid(side, side, 0.01)
}

// ----------------------------------------------------------------- chamfer

/// Random point-set pairs with `n <= 200`, a share of them on lattices so
/// that equidistant ties occur. Returns how many pairs disagree.
pub fn chamfer_mismatches(pairs: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut bad = 0;
    for i in 0..pairs {
        let na = rng.random_range(1..=200);
        let nb = rng.random_range(1..=200);
        let lattice = i % 3 == 0;
        let mut cloud = |n: usize| -> Vec<[f64; 3]> {
            (0..n)
                .map(|_| {
                    if lattice {
                        [0; 3].map(|_| rng.random_range(0..5) as f64 * 0.25)
                    } else {
                        [0; 3].map(|_| rng.random_range(-1.0..1.0))
                    }
                })
                .collect()
        };
        let a = cloud(na);
        let b = cloud(nb);
        let fast = losses::nearest_neighbors(&a, &b).unwrap() == losses::nearest_neighbors_brute(&a, &b).unwrap();
        let same = losses::chamfer_distance(&a, &b).unwrap().to_bits()
            == losses::chamfer_distance_brute(&a, &b).unwrap().to_bits();
        if !fast || !same {
            bad += 1;
        }
    }
    bad
}
