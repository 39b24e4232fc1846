//! The differentiable operator set: forward kernels and adjoint rules.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::math;
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Inputs to `acos` are clamped to `[-1 + ACOS_EPS, 1 - ACOS_EPS]`.
pub const ACOS_EPS: f64 = 1e-7;

#[derive(Debug, Clone)]
pub enum Op {
    /// `[m x k, k x n] -> m x n`
    MatMul,
    /// `[k x n] -> S k x n`
    SparseMatMul(Arc<SparseMatrix>),
    Add,
    Sub,
    Mul,
    Div,
    /// `[n x k, k or 1 x k]`: adds the row to every row.
    AddRowBroadcast,
    /// `[n x k, n x 1]`: scales row `r` by the `r`-th entry.
    MulColBroadcast,
    Scale(f64),
    Offset(f64),
    /// Any number of `n x k_i` inputs.
    ConcatColumns,
    Relu,
    Abs,
    /// Output row `r` is input row `idx[r]`.
    RowGather(Arc<[usize]>),
    /// `n x k -> k`
    MeanOverRows,
    /// Averages out one axis.
    MeanOverAxis(usize),
    Sum,
    Mean,
    Reshape(Vec<usize>),
    /// `n x k -> n x 1`
    SquaredNormRows,
    /// `n x k -> n x 1`, subgradient zero at the origin.
    NormRows,
    /// `[n x k, n x k] -> n x 1`
    DotRows,
    /// `[n x 3, n x 3] -> n x 3`
    CrossRows,
    /// Zero rows stay zero.
    NormalizeRows,
    /// Clamped to `[-1 + ACOS_EPS, 1 - ACOS_EPS]`.
    Acos,
    /// `[y, x] -> atan2(y, x)`
    Atan2,
    Clamp(f64, f64),
    /// `[x_v n x k, x_f f x k] -> f x k`: per face, the mean over its three
    /// vertices of `|x_v[v] - x_f[face]|`.
    DualAveragePool(Arc<[[usize; 3]]>),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::MatMul => "matmul",
            Op::SparseMatMul(_) => "sparse_matmul",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::AddRowBroadcast => "add_row_broadcast",
            Op::MulColBroadcast => "mul_col_broadcast",
            Op::Scale(_) => "scale",
            Op::Offset(_) => "offset",
            Op::ConcatColumns => "concat_columns",
            Op::Relu => "relu",
            Op::Abs => "abs",
            Op::RowGather(_) => "row_gather",
            Op::MeanOverRows => "mean_over_rows",
            Op::MeanOverAxis(_) => "mean_over_axis",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::Reshape(_) => "reshape",
            Op::SquaredNormRows => "squared_norm_rows",
            Op::NormRows => "norm_rows",
            Op::DotRows => "dot_rows",
            Op::CrossRows => "cross_rows",
            Op::NormalizeRows => "normalize_rows",
            Op::Acos => "acos",
            Op::Atan2 => "atan2",
            Op::Clamp(..) => "clamp",
            Op::DualAveragePool(_) => "dual_average_pool",
        }
    }
}

fn arity(op: &Op, inputs: &[&Tensor], expected: usize) -> Result<()> {
    if inputs.len() != expected {
        return Err(Error::shape(
            op.name(),
            format!("expected {expected} inputs, got {}", inputs.len()),
        ));
    }
    Ok(())
}

fn mat(op: &Op, t: &Tensor) -> Result<(usize, usize)> {
    t.matrix_dims()
        .ok_or_else(|| Error::shape(op.name(), format!("expected a matrix, got dims {:?}", t.dims())))
}

fn same_dims(op: &Op, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::shape(
            op.name(),
            format!("{:?} vs {:?}", a.dims(), b.dims()),
        ));
    }
    Ok(())
}

fn rows_of(op: &Op, t: &Tensor, k: usize) -> Result<usize> {
    let (n, c) = mat(op, t)?;
    if c != k {
        return Err(Error::shape(op.name(), format!("expected {k} columns, got {c}")));
    }
    Ok(n)
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.dims(), data).expect("same dims")
}

fn from(dims: &[usize], data: Vec<f64>) -> Tensor {
    Tensor::new(dims, data).expect("kernel produced consistent dims")
}

/// `m x k` times `k x n`, row-major.
pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `A · Bᵀ` for `A: m x n`, `B: k x n`.
fn matmul_bt(a: &[f64], b: &[f64], m: usize, n: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            out[i * k + p] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    out
}

/// `Aᵀ · G` for `A: m x k`, `G: m x n`.
fn matmul_at(a: &[f64], g: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &gv) in orow.iter_mut().zip(grow) {
                *o += av * gv;
            }
        }
    }
    out
}

/// Evaluates `op`. Returns the output and the number of clamped `acos`
/// inputs (zero for every other op).
pub fn forward(op: &Op, inputs: &[&Tensor]) -> Result<(Tensor, usize)> {
    let out = match op {
        Op::MatMul => {
            arity(op, inputs, 2)?;
            let (m, k) = mat(op, inputs[0])?;
            let (k2, n) = mat(op, inputs[1])?;
            if k != k2 {
                return Err(Error::shape(op.name(), format!("{m}x{k} times {k2}x{n}")));
            }
            from(&[m, n], matmul_raw(inputs[0].data(), inputs[1].data(), m, k, n))
        }
        Op::SparseMatMul(s) => {
            arity(op, inputs, 1)?;
            let (r, k) = mat(op, inputs[0])?;
            if r != s.cols() {
                return Err(Error::shape(
                    op.name(),
                    format!("{}x{} sparse times {r}x{k}", s.rows(), s.cols()),
                ));
            }
            from(&[s.rows(), k], s.mul_dense(inputs[0].data(), k))
        }
        Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Atan2 => {
            arity(op, inputs, 2)?;
            same_dims(op, inputs[0], inputs[1])?;
            let f: fn(f64, f64) -> f64 = match op {
                Op::Add => |a, b| a + b,
                Op::Sub => |a, b| a - b,
                Op::Mul => |a, b| a * b,
                Op::Div => |a, b| a / b,
                _ => math::atan2,
            };
            zip_map(inputs[0], inputs[1], f)
        }
        Op::AddRowBroadcast => {
            arity(op, inputs, 2)?;
            let (n, k) = mat(op, inputs[0])?;
            if inputs[1].len() != k || inputs[1].rank() > 2 || inputs[1].len() != *inputs[1].dims().last().unwrap_or(&1) {
                return Err(Error::shape(
                    op.name(),
                    format!("cannot broadcast {:?} over {n}x{k}", inputs[1].dims()),
                ));
            }
            let b = inputs[1].data();
            let mut data = inputs[0].data().to_vec();
            for row in data.chunks_mut(k.max(1)) {
                for (x, bv) in row.iter_mut().zip(b) {
                    *x += bv;
                }
            }
            from(&[n, k], data)
        }
        Op::MulColBroadcast => {
            arity(op, inputs, 2)?;
            let (n, k) = mat(op, inputs[0])?;
            if rows_of(op, inputs[1], 1)? != n {
                return Err(Error::shape(op.name(), format!("{n}x{k} rows vs {:?}", inputs[1].dims())));
            }
            let s = inputs[1].data();
            let mut data = inputs[0].data().to_vec();
            for (r, row) in data.chunks_mut(k.max(1)).enumerate() {
                for x in row {
                    *x *= s[r];
                }
            }
            from(&[n, k], data)
        }
        Op::Scale(c) => {
            arity(op, inputs, 1)?;
            inputs[0].map(|x| x * c)
        }
        Op::Offset(c) => {
            arity(op, inputs, 1)?;
            inputs[0].map(|x| x + c)
        }
        Op::ConcatColumns => {
            if inputs.is_empty() {
                return Err(Error::shape(op.name(), "no inputs"));
            }
            let n = mat(op, inputs[0])?.0;
            let mut widths = Vec::with_capacity(inputs.len());
            for t in inputs {
                let (r, c) = mat(op, t)?;
                if r != n {
                    return Err(Error::shape(op.name(), format!("row counts {n} and {r}")));
                }
                widths.push(c);
            }
            let total: usize = widths.iter().sum();
            let mut data = Vec::with_capacity(n * total);
            for r in 0..n {
                for (t, &w) in inputs.iter().zip(&widths) {
                    data.extend_from_slice(&t.data()[r * w..(r + 1) * w]);
                }
            }
            from(&[n, total], data)
        }
        Op::Relu => {
            arity(op, inputs, 1)?;
            inputs[0].map(|x| if x > 0.0 { x } else { 0.0 })
        }
        Op::Abs => {
            arity(op, inputs, 1)?;
            inputs[0].map(f64::abs)
        }
        Op::RowGather(idx) => {
            arity(op, inputs, 1)?;
            let (n, k) = mat(op, inputs[0])?;
            let mut data = Vec::with_capacity(idx.len() * k);
            for &i in idx.iter() {
                if i >= n {
                    return Err(Error::shape(op.name(), format!("row {i} of {n}")));
                }
                data.extend_from_slice(inputs[0].row(i));
            }
            from(&[idx.len(), k], data)
        }
        Op::MeanOverRows => {
            arity(op, inputs, 1)?;
            let (n, k) = mat(op, inputs[0])?;
            if n == 0 {
                return Err(Error::shape(op.name(), "no rows"));
            }
            let mut acc = vec![0.0; k];
            for row in inputs[0].data().chunks(k.max(1)) {
                for (a, x) in acc.iter_mut().zip(row) {
                    *a += x;
                }
            }
            from(&[k], acc.into_iter().map(|a| a / n as f64).collect())
        }
        Op::MeanOverAxis(axis) => {
            arity(op, inputs, 1)?;
            let t = inputs[0];
            if *axis >= t.rank() || t.dims()[*axis] == 0 {
                return Err(Error::shape(op.name(), format!("axis {axis} of {:?}", t.dims())));
            }
            let (outer, len, inner) = axis_split(t.dims(), *axis);
            let mut data = vec![0.0; outer * inner];
            for o in 0..outer {
                for a in 0..len {
                    let src = &t.data()[(o * len + a) * inner..(o * len + a + 1) * inner];
                    for (d, s) in data[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
            for d in &mut data {
                *d /= len as f64;
            }
            let dims: Vec<usize> = t
                .dims()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != *axis)
                .map(|(_, &d)| d)
                .collect();
            from(&dims, data)
        }
        Op::Sum | Op::Mean => {
            arity(op, inputs, 1)?;
            let t = inputs[0];
            if t.is_empty() {
                return Err(Error::shape(op.name(), "empty tensor"));
            }
            let s: f64 = t.data().iter().sum();
            Tensor::scalar(if matches!(op, Op::Mean) { s / t.len() as f64 } else { s })
        }
        Op::Reshape(dims) => {
            arity(op, inputs, 1)?;
            inputs[0].clone().reshaped(dims)?
        }
        Op::SquaredNormRows | Op::NormRows => {
            arity(op, inputs, 1)?;
            let (n, k) = mat(op, inputs[0])?;
            let data = (0..n)
                .map(|r| {
                    let sq: f64 = inputs[0].row(r).iter().map(|x| x * x).sum();
                    if matches!(op, Op::NormRows) {
                        math::sqrt(sq)
                    } else {
                        sq
                    }
                })
                .collect();
            let _ = k;
            from(&[n, 1], data)
        }
        Op::DotRows => {
            arity(op, inputs, 2)?;
            same_dims(op, inputs[0], inputs[1])?;
            let (n, _) = mat(op, inputs[0])?;
            let data = (0..n)
                .map(|r| inputs[0].row(r).iter().zip(inputs[1].row(r)).map(|(a, b)| a * b).sum())
                .collect();
            from(&[n, 1], data)
        }
        Op::CrossRows => {
            arity(op, inputs, 2)?;
            same_dims(op, inputs[0], inputs[1])?;
            let n = rows_of(op, inputs[0], 3)?;
            let mut data = Vec::with_capacity(n * 3);
            for r in 0..n {
                data.extend_from_slice(&math::cross(row3(inputs[0], r), row3(inputs[1], r)));
            }
            from(&[n, 3], data)
        }
        Op::NormalizeRows => {
            arity(op, inputs, 1)?;
            let (n, k) = mat(op, inputs[0])?;
            let mut data = inputs[0].data().to_vec();
            for row in data.chunks_mut(k.max(1)).take(n) {
                let len = math::sqrt(row.iter().map(|x| x * x).sum());
                if len > 0.0 {
                    for x in row {
                        *x /= len;
                    }
                }
            }
            from(&[n, k], data)
        }
        Op::Acos => {
            arity(op, inputs, 1)?;
            let lim = 1.0 - ACOS_EPS;
            let clamped = inputs[0].data().iter().filter(|x| x.abs() > lim).count();
            return finite(op, (inputs[0].map(|x| math::acos(x.clamp(-lim, lim))), clamped));
        }
        Op::Clamp(lo, hi) => {
            arity(op, inputs, 1)?;
            inputs[0].map(|x| x.clamp(*lo, *hi))
        }
        Op::DualAveragePool(faces) => {
            arity(op, inputs, 2)?;
            let (n, k) = mat(op, inputs[0])?;
            let f = rows_of(op, inputs[1], k)?;
            if f != faces.len() {
                return Err(Error::shape(op.name(), format!("{f} face rows for {} faces", faces.len())));
            }
            let (xv, xf) = (inputs[0].data(), inputs[1].data());
            let mut data = vec![0.0; f * k];
            for (s, face) in faces.iter().enumerate() {
                let d = &xf[s * k..(s + 1) * k];
                let out = &mut data[s * k..(s + 1) * k];
                for &v in face {
                    if v >= n {
                        return Err(Error::shape(op.name(), format!("vertex {v} of {n}")));
                    }
                    for ((o, p), dv) in out.iter_mut().zip(&xv[v * k..(v + 1) * k]).zip(d) {
                        *o += (p - dv).abs();
                    }
                }
                for o in out {
                    *o /= 3.0;
                }
            }
            from(&[f, k], data)
        }
    };
    finite(op, (out, 0))
}

fn finite(op: &Op, result: (Tensor, usize)) -> Result<(Tensor, usize)> {
    if result.0.is_finite() {
        Ok(result)
    } else {
        Err(Error::NonFinite(op.name()))
    }
}

fn row3(t: &Tensor, r: usize) -> [f64; 3] {
    let s = t.row(r);
    [s[0], s[1], s[2]]
}

fn axis_split(dims: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = dims[..axis].iter().product();
    let inner = dims[axis + 1..].iter().product();
    (outer, dims[axis], inner)
}

/// Adjoints of `op` with respect to each input, given the upstream gradient
/// `grad` (same dims as `output`).
pub fn backward(op: &Op, inputs: &[&Tensor], output: &Tensor, grad: &Tensor) -> Vec<Tensor> {
    let g = grad.data();
    match op {
        Op::MatMul => {
            let (m, k) = inputs[0].matrix_dims().unwrap();
            let n = inputs[1].matrix_dims().unwrap().1;
            vec![
                from(&[m, k], matmul_bt(g, inputs[1].data(), m, n, k)),
                from(&[k, n], matmul_at(inputs[0].data(), g, m, k, n)),
            ]
        }
        Op::SparseMatMul(s) => {
            let k = inputs[0].matrix_dims().unwrap().1;
            vec![from(inputs[0].dims(), s.transpose_mul_dense(g, k))]
        }
        Op::Add => vec![grad.clone(), grad.clone()],
        Op::Sub => vec![grad.clone(), grad.map(|x| -x)],
        Op::Mul => vec![
            zip_map(grad, inputs[1], |g, b| g * b),
            zip_map(grad, inputs[0], |g, a| g * a),
        ],
        Op::Div => {
            let da = zip_map(grad, inputs[1], |g, b| g / b);
            let db = from(
                grad.dims(),
                g.iter()
                    .zip(inputs[0].data())
                    .zip(inputs[1].data())
                    .map(|((g, a), b)| -g * a / (b * b))
                    .collect(),
            );
            vec![da, db]
        }
        Op::Atan2 => {
            let (y, x) = (inputs[0].data(), inputs[1].data());
            let r2 = |i: usize| x[i] * x[i] + y[i] * y[i];
            let dy = (0..g.len()).map(|i| if r2(i) > 0.0 { g[i] * x[i] / r2(i) } else { 0.0 }).collect();
            let dx = (0..g.len()).map(|i| if r2(i) > 0.0 { -g[i] * y[i] / r2(i) } else { 0.0 }).collect();
            vec![from(grad.dims(), dy), from(grad.dims(), dx)]
        }
        Op::AddRowBroadcast => {
            let k = inputs[1].len();
            let mut db = vec![0.0; k];
            for row in g.chunks(k.max(1)) {
                for (d, x) in db.iter_mut().zip(row) {
                    *d += x;
                }
            }
            vec![grad.clone(), from(inputs[1].dims(), db)]
        }
        Op::MulColBroadcast => {
            let (n, k) = inputs[0].matrix_dims().unwrap();
            let s = inputs[1].data();
            let a = inputs[0].data();
            let mut da = g.to_vec();
            let mut ds = vec![0.0; n];
            for r in 0..n {
                for c in 0..k {
                    da[r * k + c] *= s[r];
                    ds[r] += g[r * k + c] * a[r * k + c];
                }
            }
            vec![from(&[n, k], da), from(inputs[1].dims(), ds)]
        }
        Op::Scale(c) => vec![grad.map(|x| x * c)],
        Op::Offset(_) => vec![grad.clone()],
        Op::ConcatColumns => {
            let total = output.matrix_dims().unwrap().1;
            let mut offset = 0;
            inputs
                .iter()
                .map(|t| {
                    let (n, w) = t.matrix_dims().unwrap();
                    let mut data = Vec::with_capacity(n * w);
                    for r in 0..n {
                        data.extend_from_slice(&g[r * total + offset..r * total + offset + w]);
                    }
                    offset += w;
                    from(&[n, w], data)
                })
                .collect()
        }
        Op::Relu => vec![zip_map(grad, inputs[0], |g, x| if x > 0.0 { g } else { 0.0 })],
        Op::Abs => vec![zip_map(grad, inputs[0], |g, x| {
            if x > 0.0 {
                g
            } else if x < 0.0 {
                -g
            } else {
                0.0
            }
        })],
        Op::RowGather(idx) => {
            let (n, k) = inputs[0].matrix_dims().unwrap();
            let mut da = vec![0.0; n * k];
            for (r, &i) in idx.iter().enumerate() {
                for (d, x) in da[i * k..(i + 1) * k].iter_mut().zip(&g[r * k..(r + 1) * k]) {
                    *d += x;
                }
            }
            vec![from(&[n, k], da)]
        }
        Op::MeanOverRows => {
            let (n, k) = inputs[0].matrix_dims().unwrap();
            let mut da = Vec::with_capacity(n * k);
            for _ in 0..n {
                da.extend(g.iter().map(|x| x / n as f64));
            }
            vec![from(&[n, k], da)]
        }
        Op::MeanOverAxis(axis) => {
            let dims = inputs[0].dims();
            let (outer, len, inner) = axis_split(dims, *axis);
            let mut da = vec![0.0; inputs[0].len()];
            for o in 0..outer {
                for a in 0..len {
                    for i in 0..inner {
                        da[(o * len + a) * inner + i] = g[o * inner + i] / len as f64;
                    }
                }
            }
            vec![from(dims, da)]
        }
        Op::Sum => vec![Tensor::filled(inputs[0].dims(), g[0])],
        Op::Mean => vec![Tensor::filled(inputs[0].dims(), g[0] / inputs[0].len() as f64)],
        Op::Reshape(_) => vec![from(inputs[0].dims(), g.to_vec())],
        Op::SquaredNormRows => {
            let (_, k) = inputs[0].matrix_dims().unwrap();
            let a = inputs[0].data();
            let da = (0..a.len()).map(|i| 2.0 * a[i] * g[i / k]).collect();
            vec![from(inputs[0].dims(), da)]
        }
        Op::NormRows => {
            let (_, k) = inputs[0].matrix_dims().unwrap();
            let a = inputs[0].data();
            let norms = output.data();
            let da = (0..a.len())
                .map(|i| {
                    let len = norms[i / k];
                    if len > 0.0 {
                        a[i] / len * g[i / k]
                    } else {
                        0.0
                    }
                })
                .collect();
            vec![from(inputs[0].dims(), da)]
        }
        Op::DotRows => {
            let (_, k) = inputs[0].matrix_dims().unwrap();
            let (a, b) = (inputs[0].data(), inputs[1].data());
            vec![
                from(inputs[0].dims(), (0..a.len()).map(|i| b[i] * g[i / k]).collect()),
                from(inputs[1].dims(), (0..b.len()).map(|i| a[i] * g[i / k]).collect()),
            ]
        }
        Op::CrossRows => {
            let n = inputs[0].matrix_dims().unwrap().0;
            let mut da = Vec::with_capacity(n * 3);
            let mut db = Vec::with_capacity(n * 3);
            for r in 0..n {
                let (a, b, gr) = (row3(inputs[0], r), row3(inputs[1], r), row3(grad, r));
                da.extend_from_slice(&math::cross(b, gr));
                db.extend_from_slice(&math::cross(gr, a));
            }
            vec![from(&[n, 3], da), from(&[n, 3], db)]
        }
        Op::NormalizeRows => {
            let (n, k) = inputs[0].matrix_dims().unwrap();
            let a = inputs[0].data();
            let y = output.data();
            let mut da = vec![0.0; n * k];
            for r in 0..n {
                let span = r * k..(r + 1) * k;
                let len = math::sqrt(a[span.clone()].iter().map(|x| x * x).sum());
                if len == 0.0 {
                    continue;
                }
                let yg: f64 = y[span.clone()].iter().zip(&g[span.clone()]).map(|(y, g)| y * g).sum();
                for i in span {
                    da[i] = (g[i] - y[i] * yg) / len;
                }
            }
            vec![from(&[n, k], da)]
        }
        Op::Acos => {
            let lim = 1.0 - ACOS_EPS;
            vec![zip_map(grad, inputs[0], |g, x| {
                if x.abs() > lim {
                    0.0
                } else {
                    -g / math::sqrt(1.0 - x * x)
                }
            })]
        }
        Op::Clamp(lo, hi) => vec![zip_map(grad, inputs[0], |g, x| {
            if x < *lo || x > *hi {
                0.0
            } else {
                g
            }
        })],
        Op::DualAveragePool(faces) => {
            let (n, k) = inputs[0].matrix_dims().unwrap();
            let f = faces.len();
            let (xv, xf) = (inputs[0].data(), inputs[1].data());
            let mut dv = vec![0.0; n * k];
            let mut df = vec![0.0; f * k];
            for (s, face) in faces.iter().enumerate() {
                for &v in face {
                    for c in 0..k {
                        let diff = xv[v * k + c] - xf[s * k + c];
                        let sign = if diff > 0.0 {
                            1.0
                        } else if diff < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        let contrib = sign * g[s * k + c] / 3.0;
                        dv[v * k + c] += contrib;
                        df[s * k + c] -= contrib;
                    }
                }
            }
            vec![from(&[n, k], dv), from(&[f, k], df)]
        }
    }
}
