//! Dense tensors and reverse-mode differentiation over a fixed op set.
//!
//! Model code is written once against [`Backend`]. [`Tape`] records every op
//! so gradients can be pulled back from a scalar loss; [`Eval`] only computes
//! values and drops intermediates as soon as the caller does, which keeps
//! inference on large meshes within memory.

mod ops;
mod tape;
mod tensor;

pub mod gradcheck;

use alloc::sync::Arc;
use alloc::vec::Vec;

pub use ops::{backward as op_backward, forward as op_forward, Op, ACOS_EPS};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

use crate::sparse::SparseMatrix;
use crate::Result;

pub trait Backend {
    type Value: Clone;

    fn constant(&mut self, value: Tensor) -> Self::Value;

    /// A named trainable input. Registering the same name twice returns the
    /// same value.
    fn param(&mut self, name: &str, value: &Tensor) -> Self::Value;

    fn value<'a>(&'a self, v: &'a Self::Value) -> &'a Tensor;

    fn apply(&mut self, op: Op, inputs: &[&Self::Value]) -> Result<Self::Value>;

    /// Number of `acos` inputs clamped so far.
    fn clamp_count(&self) -> usize;

    fn matmul(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::MatMul, &[a, b])
    }
    fn spmm(&mut self, s: &Arc<SparseMatrix>, x: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::SparseMatMul(s.clone()), &[x])
    }
    fn add(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Add, &[a, b])
    }
    fn sub(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Sub, &[a, b])
    }
    fn mul(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Mul, &[a, b])
    }
    fn div(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Div, &[a, b])
    }
    fn add_row(&mut self, a: &Self::Value, row: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::AddRowBroadcast, &[a, row])
    }
    fn mul_col(&mut self, a: &Self::Value, col: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::MulColBroadcast, &[a, col])
    }
    fn scale(&mut self, a: &Self::Value, c: f64) -> Result<Self::Value> {
        self.apply(Op::Scale(c), &[a])
    }
    fn offset(&mut self, a: &Self::Value, c: f64) -> Result<Self::Value> {
        self.apply(Op::Offset(c), &[a])
    }
    fn concat(&mut self, parts: &[&Self::Value]) -> Result<Self::Value> {
        self.apply(Op::ConcatColumns, parts)
    }
    fn relu(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Relu, &[a])
    }
    fn abs(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Abs, &[a])
    }
    fn gather(&mut self, a: &Self::Value, rows: &Arc<[usize]>) -> Result<Self::Value> {
        self.apply(Op::RowGather(rows.clone()), &[a])
    }
    fn mean_rows(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::MeanOverRows, &[a])
    }
    fn mean_axis(&mut self, a: &Self::Value, axis: usize) -> Result<Self::Value> {
        self.apply(Op::MeanOverAxis(axis), &[a])
    }
    fn sum(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Sum, &[a])
    }
    fn mean(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Mean, &[a])
    }
    fn reshape(&mut self, a: &Self::Value, dims: &[usize]) -> Result<Self::Value> {
        self.apply(Op::Reshape(dims.to_vec()), &[a])
    }
    fn sq_norm_rows(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::SquaredNormRows, &[a])
    }
    fn norm_rows(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::NormRows, &[a])
    }
    fn dot_rows(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::DotRows, &[a, b])
    }
    fn cross_rows(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::CrossRows, &[a, b])
    }
    fn normalize_rows(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::NormalizeRows, &[a])
    }
    fn acos(&mut self, a: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Acos, &[a])
    }
    fn atan2(&mut self, y: &Self::Value, x: &Self::Value) -> Result<Self::Value> {
        self.apply(Op::Atan2, &[y, x])
    }
    fn clamp(&mut self, a: &Self::Value, lo: f64, hi: f64) -> Result<Self::Value> {
        self.apply(Op::Clamp(lo, hi), &[a])
    }
    fn dual_average_pool(
        &mut self,
        x_v: &Self::Value,
        x_f: &Self::Value,
        faces: &Arc<[[usize; 3]]>,
    ) -> Result<Self::Value> {
        self.apply(Op::DualAveragePool(faces.clone()), &[x_v, x_f])
    }
}

/// Forward-only backend. Values are plain tensors, so memory is released as
/// soon as the caller lets go of them.
#[derive(Debug, Default)]
pub struct Eval {
    clamped: usize,
}

impl Eval {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Backend for Eval {
    type Value = Tensor;

    fn constant(&mut self, value: Tensor) -> Tensor {
        value
    }

    fn param(&mut self, _name: &str, value: &Tensor) -> Tensor {
        value.clone()
    }

    fn value<'a>(&'a self, v: &'a Tensor) -> &'a Tensor {
        v
    }

    fn apply(&mut self, op: Op, inputs: &[&Tensor]) -> Result<Tensor> {
        let (out, clamped) = ops::forward(&op, inputs)?;
        self.clamped += clamped;
        Ok(out)
    }

    fn clamp_count(&self) -> usize {
        self.clamped
    }
}

/// Rows `0..n` as a shared index list.
pub fn index_list(rows: impl IntoIterator<Item = usize>) -> Arc<[usize]> {
    rows.into_iter().collect::<Vec<_>>().into()
}
