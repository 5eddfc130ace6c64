//! Fractal compressed sensing: discrete Radon transform on prime and
//! prime-power grids, fractal and Cartesian k-space sampling, incoherence
//! analysis, iterative reconstruction and evaluation metrics.

pub mod error;
pub mod fourier;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod incoherence;
pub mod kv;
pub mod metrics;
pub mod radon;
pub mod recon;
pub mod rng;
pub mod sampling;

#[cfg(test)]
mod test_util;

pub use error::{FcsError, Result};
pub use geometry::{GridGeometry, Slope, SlopeKind};
pub use grid::{Image, KSpace};
pub use incoherence::{IncoherenceReport, SprMethod};
pub use metrics::MetricsReport;
pub use radon::{Projection, Sinogram};
pub use recon::{ReconConfig, ReconOutput, Solver};
pub use sampling::{Provenance, SamplingMask};
