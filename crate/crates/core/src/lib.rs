//! Core numerics for graph-based triangle mesh denoising.
//!
//! Everything in this crate is pure computation over in-memory data: mesh
//! connectivity and sparse graph operators, discrete curvature, noise
//! synthesis, a small reverse-mode differentiation tape, the primal/dual
//! denoising network, its losses, and the optimizer loop. File formats, the
//! command line and timing live in the `meshdn` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod diffgeo;
mod error;
pub mod losses;
mod math;
pub mod mesh;
pub mod network;
pub mod noise;
pub mod shapes;
pub mod sparse;
pub mod trainer;

pub use autodiff::{Backend, Eval, Tape, Tensor, Var};
pub use error::{Error, Result};
pub use mesh::{canonicalize, CanonicalTransform, Mesh};
pub use network::{MeshGraph, NetConfig, NetParams};
pub use noise::{NoiseKind, NoiseSpec};
pub use sparse::SparseMatrix;
