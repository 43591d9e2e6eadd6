//! File formats, experiment configuration and reporting on top of `cwm-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod mesh_io;
pub mod mtx;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
