//! Primal/dual graph layers and the feature-guided denoising network.
//!
//! The network has three parts. The feature extractor predicts per-vertex
//! normals and curvatures from the noisy positions. The transformer turns
//! those predictions into a global `8 x k_tf` matrix and applies it to the
//! per-vertex input. The denoiser maps the noisy positions plus the
//! transformer output to a per-vertex displacement.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::autodiff::{Backend, Tensor};
use crate::math;
use crate::mesh::{build_face_adjacency, build_vertex_adjacency, build_vertex_face_adjacency};
use crate::sparse::normalize_adjacency;
use crate::{Error, Mesh, Result, SparseMatrix};

/// Width of the per-vertex local feature rows (normal, mean and Gaussian curvature).
pub const FEATURE_DIM: usize = 5;
/// Rows of the transformer matrix: noisy positions (3) next to local features (5).
pub const TRANSFORM_ROWS: usize = 3 + FEATURE_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    /// Feature width of every AGG in the two-stream blocks.
    pub k: usize,
    /// Column count of the transformer matrix; the pooled FC has `8 * k_tf` outputs.
    pub k_tf: usize,
    pub aggs_per_stream: usize,
    pub two_stream_blocks_fe: usize,
    pub two_stream_blocks_denoiser: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl NetConfig {
    /// `k = 32`, `k_tf = 64`.
    pub fn desk() -> Self {
        Self::with_widths(32, 64)
    }

    pub fn with_widths(k: usize, k_tf: usize) -> Self {
        Self {
            k,
            k_tf,
            aggs_per_stream: 3,
            two_stream_blocks_fe: 2,
            two_stream_blocks_denoiser: 2,
        }
    }

    pub fn pooled_width(&self) -> usize {
        TRANSFORM_ROWS * self.k_tf
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k_tf == 0 || self.aggs_per_stream == 0 {
            return Err(Error::InvalidArgument(format!("network widths must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Every parameter name with its shape, in name order.
    pub fn shapes(&self) -> BTreeMap<String, Vec<usize>> {
        let (k, k_tf) = (self.k, self.k_tf);
        let mut s = BTreeMap::new();
        let fc = |s: &mut BTreeMap<String, Vec<usize>>, name: &str, i: usize, o: usize| {
            s.insert(format!("{name}.weight"), vec![i, o]);
            s.insert(format!("{name}.bias"), vec![o]);
        };
        for (prefix, input, output, blocks) in [
            ("fe", 3, FEATURE_DIM, self.two_stream_blocks_fe),
            ("dn", 3 + k_tf, 3, self.two_stream_blocks_denoiser),
        ] {
            fc(&mut s, &format!("{prefix}.lift"), input, k);
            for b in 0..blocks {
                for stream in ["primal", "dual"] {
                    for a in 0..self.aggs_per_stream {
                        s.insert(format!("{prefix}.block{b}.{stream}.agg{a}"), vec![k, k]);
                    }
                }
            }
            fc(&mut s, &format!("{prefix}.head"), k, output);
        }
        fc(&mut s, "tf.fc0", FEATURE_DIM, k);
        for d in 0..3 {
            s.insert(format!("tf.dense{d}"), vec![(d + 1) * k, k]);
        }
        s.insert("tf.agg".into(), vec![4 * k, k]);
        fc(&mut s, "tf.fc1", k, self.pooled_width());
        s.insert("tf.out_agg".into(), vec![k_tf, k_tf]);
        s
    }

    pub fn parameter_count(&self) -> usize {
        self.shapes().values().map(|d| d.iter().product::<usize>()).sum()
    }

    /// Recovers the configuration a parameter set was built for.
    pub fn infer(params: &NetParams) -> Result<Self> {
        let dims = |name: &str| {
            params.get(name).map(|t| t.dims().to_vec()).ok_or_else(|| Error::Parameter {
                name: name.into(),
                detail: "missing".into(),
            })
        };
        let lift = dims("fe.lift.weight")?;
        let out_agg = dims("tf.out_agg")?;
        let count = |prefix: &str, suffix: &str| {
            (0..)
                .take_while(|i| params.get(&format!("{prefix}{i}{suffix}")).is_some())
                .count()
        };
        let config = Self {
            k: lift.get(1).copied().unwrap_or(0),
            k_tf: out_agg.first().copied().unwrap_or(0),
            aggs_per_stream: count("fe.block0.primal.agg", ""),
            two_stream_blocks_fe: count("fe.block", ".primal.agg0"),
            two_stream_blocks_denoiser: count("dn.block", ".primal.agg0"),
        };
        config.validate()?;
        params.check(&config)?;
        Ok(config)
    }
}

/// Named parameter tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetParams {
    tensors: BTreeMap<String, Tensor>,
}

impl NetParams {
    pub fn from_map(tensors: BTreeMap<String, Tensor>) -> Self {
        Self { tensors }
    }

    /// All zeros: the network then returns its input positions unchanged.
    pub fn zeros(config: &NetConfig) -> Self {
        Self {
            tensors: config
                .shapes()
                .into_iter()
                .map(|(name, dims)| (name, Tensor::zeros(&dims)))
                .collect(),
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero, and a zero
    /// denoiser head so the untrained network is the identity.
    pub fn init(config: &NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, dims) in config.shapes() {
            let zero = name.ends_with(".bias") || name.starts_with("dn.head");
            let t = if zero {
                Tensor::zeros(&dims)
            } else {
                let bound = 1.0 / math::sqrt(dims[0] as f64);
                let len = dims.iter().product();
                let data = (0..len).map(|_| rng.random_range(-bound..bound)).collect();
                Tensor::new(&dims, data).expect("shape from config")
            };
            tensors.insert(name, t);
        }
        Self { tensors }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.tensors.insert(name.into(), t);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn into_map(self) -> BTreeMap<String, Tensor> {
        self.tensors
    }

    /// Errors name the first missing, unexpected or misshapen tensor.
    pub fn check(&self, config: &NetConfig) -> Result<()> {
        let shapes = config.shapes();
        for (name, dims) in &shapes {
            match self.tensors.get(name) {
                None => {
                    return Err(Error::Parameter {
                        name: name.clone(),
                        detail: "missing".into(),
                    })
                }
                Some(t) if t.dims() != dims.as_slice() => {
                    return Err(Error::Parameter {
                        name: name.clone(),
                        detail: format!("expected dims {dims:?}, found {:?}", t.dims()),
                    })
                }
                _ => {}
            }
        }
        if let Some(extra) = self.tensors.keys().find(|n| !shapes.contains_key(*n)) {
            return Err(Error::Parameter {
                name: extra.clone(),
                detail: "not part of this network".into(),
            });
        }
        Ok(())
    }

    fn fetch<B: Backend>(&self, b: &mut B, name: &str) -> Result<B::Value> {
        let t = self.tensors.get(name).ok_or_else(|| Error::Parameter {
            name: name.into(),
            detail: "missing".into(),
        })?;
        Ok(b.param(name, t))
    }
}

/// Graph operators of one mesh, built once and reused by every layer.
#[derive(Debug, Clone)]
pub struct MeshGraph {
    pub vertex_count: usize,
    pub face_count: usize,
    pub faces: Arc<[[usize; 3]]>,
    /// Normalized primal adjacency.
    pub a_v: Arc<SparseMatrix>,
    /// Normalized dual adjacency.
    pub a_f: Arc<SparseMatrix>,
    /// `(1/3) A_FV`, `f x n`.
    pub p2d: Arc<SparseMatrix>,
    /// `D_VF^{-1} A_VF`, `n x f`. Rows of isolated vertices are zero.
    pub d2p: Arc<SparseMatrix>,
    pub isolated_vertices: usize,
}

impl MeshGraph {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let a_vf = build_vertex_face_adjacency(mesh);
        let degrees = a_vf.row_sums();
        let inv: Vec<f64> = degrees.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
        let ones_f = vec![1.0; mesh.face_count()];
        let third = vec![1.0 / 3.0; mesh.face_count()];
        let ones_v = vec![1.0; mesh.vertex_count()];
        Ok(Self {
            vertex_count: mesh.vertex_count(),
            face_count: mesh.face_count(),
            faces: mesh.faces().into(),
            a_v: Arc::new(normalize_adjacency(&build_vertex_adjacency(mesh))?),
            a_f: Arc::new(normalize_adjacency(&build_face_adjacency(mesh))?),
            p2d: Arc::new(a_vf.transpose().scale_rows_cols(&third, &ones_v)),
            d2p: Arc::new(a_vf.scale_rows_cols(&inv, &ones_f)),
            isolated_vertices: degrees.iter().filter(|&&d| d == 0.0).count(),
        })
    }
}

/// `relu(A X W)` with the activation optional.
pub fn agg<B: Backend>(
    b: &mut B,
    x: &B::Value,
    a_norm: &Arc<SparseMatrix>,
    w: &B::Value,
    activation: bool,
) -> Result<B::Value> {
    let xw = b.matmul(x, w)?;
    let out = b.spmm(a_norm, &xw)?;
    if activation {
        b.relu(&out)
    } else {
        Ok(out)
    }
}

/// Stack of ReLU AGGs, each wrapped as `h(X) = g(X) + X` when `residual`.
/// The skip-free form only exists to study feature collapse.
pub fn agg_stack<B: Backend>(
    b: &mut B,
    x: &B::Value,
    a_norm: &Arc<SparseMatrix>,
    weights: &[B::Value],
    residual: bool,
) -> Result<B::Value> {
    let mut h = x.clone();
    for w in weights {
        let g = agg(b, &h, a_norm, w, true)?;
        h = if residual { b.add(&g, &h)? } else { g };
    }
    Ok(h)
}

/// Face features as the centroid of their vertex features.
pub fn p2d<B: Backend>(b: &mut B, graph: &MeshGraph, x_v: &B::Value) -> Result<B::Value> {
    b.spmm(&graph.p2d, x_v)
}

/// Vertex features as the mean of their incident face features.
pub fn d2p<B: Backend>(b: &mut B, graph: &MeshGraph, x_f: &B::Value) -> Result<B::Value> {
    b.spmm(&graph.d2p, x_f)
}

/// Per face, the mean over its corners of `|x_v[corner] - x_f[face]|`.
pub fn dap<B: Backend>(b: &mut B, graph: &MeshGraph, x_v: &B::Value, x_f: &B::Value) -> Result<B::Value> {
    b.dual_average_pool(x_v, x_f, &graph.faces)
}

/// Column means over all rows, as a `1 x k` matrix.
pub fn fap<B: Backend>(b: &mut B, h: &B::Value) -> Result<B::Value> {
    let k = b.value(h).matrix_dims().map(|(_, k)| k).unwrap_or(0);
    let z = b.mean_rows(h)?;
    b.reshape(&z, &[1, k])
}

/// Affine layer `X W + b`.
pub fn fc<B: Backend>(b: &mut B, params: &NetParams, name: &str, x: &B::Value) -> Result<B::Value> {
    let w = params.fetch(b, &format!("{name}.weight"))?;
    let bias = params.fetch(b, &format!("{name}.bias"))?;
    let xw = b.matmul(x, &w)?;
    b.add_row(&xw, &bias)
}

/// Primal stream on the vertex graph and dual stream on the face graph,
/// fused by DAP and brought back to the vertices by D2P.
pub fn two_stream<B: Backend>(
    b: &mut B,
    graph: &MeshGraph,
    params: &NetParams,
    prefix: &str,
    aggs: usize,
    x_v: &B::Value,
) -> Result<B::Value> {
    let weights = |b: &mut B, stream: &str| {
        (0..aggs)
            .map(|a| params.fetch(b, &format!("{prefix}.{stream}.agg{a}")))
            .collect::<Result<Vec<_>>>()
    };
    let wp = weights(b, "primal")?;
    let wd = weights(b, "dual")?;
    let primal = agg_stack(b, x_v, &graph.a_v, &wp, true)?;
    let x_f = p2d(b, graph, x_v)?;
    let dual = agg_stack(b, &x_f, &graph.a_f, &wd, true)?;
    let fused = dap(b, graph, &primal, &dual)?;
    d2p(b, graph, &fused)
}

/// Lift FC, chained two-stream blocks, head FC.
fn stream_network<B: Backend>(
    b: &mut B,
    graph: &MeshGraph,
    params: &NetParams,
    config: &NetConfig,
    prefix: &str,
    blocks: usize,
    x: &B::Value,
) -> Result<B::Value> {
    let mut h = fc(b, params, &format!("{prefix}.lift"), x)?;
    for block in 0..blocks {
        h = two_stream(b, graph, params, &format!("{prefix}.block{block}"), config.aggs_per_stream, &h)?;
    }
    fc(b, params, &format!("{prefix}.head"), &h)
}

/// Predicted local features, `n x 5`.
pub fn feature_extractor<B: Backend>(
    b: &mut B,
    graph: &MeshGraph,
    params: &NetParams,
    config: &NetConfig,
    x_noisy: &B::Value,
) -> Result<B::Value> {
    stream_network(b, graph, params, config, "fe", config.two_stream_blocks_fe, x_noisy)
}

/// The `8 x k_tf` matrix built from the predicted features.
pub fn transform_matrix<B: Backend>(
    b: &mut B,
    graph: &MeshGraph,
    params: &NetParams,
    config: &NetConfig,
    features: &B::Value,
) -> Result<B::Value> {
    let h0 = fc(b, params, "tf.fc0", features)?;
    let h0 = b.relu(&h0)?;
    let mut outputs = vec![h0];
    for d in 0..3 {
        let w = params.fetch(b, &format!("tf.dense{d}"))?;
        let input = concat_all(b, &outputs)?;
        outputs.push(agg(b, &input, &graph.a_v, &w, true)?);
    }
    let w = params.fetch(b, "tf.agg")?;
    let input = concat_all(b, &outputs)?;
    let h = agg(b, &input, &graph.a_v, &w, true)?;
    let z = fap(b, &h)?;
    let pooled = fc(b, params, "tf.fc1", &z)?;
    b.reshape(&pooled, &[TRANSFORM_ROWS, config.k_tf])
}

fn concat_all<B: Backend>(b: &mut B, parts: &[B::Value]) -> Result<B::Value> {
    if parts.len() == 1 {
        return Ok(parts[0].clone());
    }
    let refs: Vec<&B::Value> = parts.iter().collect();
    b.concat(&refs)
}

/// `relu(A [X_noisy | features] W_tf W_out)`, `n x k_tf`.
pub fn transformer<B: Backend>(
    b: &mut B,
    graph: &MeshGraph,
    params: &NetParams,
    config: &NetConfig,
    features: &B::Value,
    x_noisy: &B::Value,
) -> Result<B::Value> {
    let w_tf = transform_matrix(b, graph, params, config, features)?;
    let input = b.concat(&[x_noisy, features])?;
    let t = b.matmul(&input, &w_tf)?;
    let w = params.fetch(b, "tf.out_agg")?;
    agg(b, &t, &graph.a_v, &w, true)
}

#[derive(Debug, Clone)]
pub struct Forward<V> {
    /// Denoised positions, `n x 3`.
    pub denoised: V,
    /// Predicted local features, `n x 5`.
    pub features: V,
}

/// Runs the full network on noisy canonical positions (`n x 3`).
pub fn dmdnet_forward<B: Backend>(
    b: &mut B,
    graph: &MeshGraph,
    params: &NetParams,
    config: &NetConfig,
    x_noisy: &B::Value,
) -> Result<Forward<B::Value>> {
    let features = feature_extractor(b, graph, params, config, x_noisy)?;
    let intermediate = transformer(b, graph, params, config, &features, x_noisy)?;
    let input = b.concat(&[x_noisy, &intermediate])?;
    drop(intermediate);
    let displacement = stream_network(b, graph, params, config, "dn", config.two_stream_blocks_denoiser, &input)?;
    let denoised = b.add(x_noisy, &displacement)?;
    Ok(Forward { denoised, features })
}

/// Positions as an `n x 3` tensor.
pub fn positions_tensor(mesh: &Mesh) -> Tensor {
    Tensor::from_rows(mesh.positions())
}

/// Rows of an `n x 3` tensor as points.
pub fn tensor_points(t: &Tensor) -> Result<Vec<[f64; 3]>> {
    match t.matrix_dims() {
        Some((_, 3)) => Ok(t.data().chunks(3).map(|c| [c[0], c[1], c[2]]).collect()),
        _ => Err(Error::shape("tensor_points", format!("expected n x 3, got {:?}", t.dims()))),
    }
}

/// Denoises a canonical mesh with the forward-only backend.
pub fn denoise_canonical(mesh: &Mesh, params: &NetParams, config: &NetConfig) -> Result<Mesh> {
    let graph = MeshGraph::new(mesh)?;
    let mut b = crate::Eval::new();
    let x = positions_tensor(mesh);
    let out = dmdnet_forward(&mut b, &graph, params, config, &x)?;
    mesh.with_positions(tensor_points(&out.denoised)?)
}
