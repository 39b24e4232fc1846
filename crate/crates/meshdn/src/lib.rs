//! File formats, checkpoints, dataset manifests and the harnesses behind the
//! `meshdn` command line.

pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod train;

pub use error::{Error, Result};
pub use formats::{parse_obj, parse_off, read_mesh, write_mesh, write_obj, write_off};
