//! Image reconstruction from under-sampled k-space.

mod cs;
mod iterative;
mod nlm;
mod schedule;

pub use cs::{
    cs_baseline, haar_forward, haar_inverse, total_variation, CsBaselineConfig, CsOutput,
};
pub use iterative::{ffr, fsirt, RunOptions};
pub use nlm::{nlm_channel, nlm_denoise, Denoiser, NlmParams};
pub use schedule::{h_schedule_eval, HSchedule};

use std::fmt::Write as _;

use ndarray::Array2;

use crate::error::{mismatch, FcsError, Result};
use crate::grid::{Image, KSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Ffr,
    Fsirt,
    CsBaseline,
    ZeroFill,
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Ffr => "ffr",
            Solver::Fsirt => "fsirt",
            Solver::CsBaseline => "cs_baseline",
            Solver::ZeroFill => "zero_fill",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ffr" => Ok(Solver::Ffr),
            "fsirt" => Ok(Solver::Fsirt),
            "cs_baseline" | "cs" => Ok(Solver::CsBaseline),
            "zero_fill" | "zf" => Ok(Solver::ZeroFill),
            other => Err(FcsError::Parse(format!("unknown solver {other:?}"))),
        }
    }
}

/// Parameters shared by the iterative projection solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconConfig {
    /// Relaxation, in `(0, 2)`.
    pub lambda_relax: f64,
    pub iterations: usize,
    /// Denoise after every `denoise_every` updates.
    pub denoise_every: usize,
    /// `None` disables denoising.
    pub schedule: Option<HSchedule>,
    pub solver: Solver,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            lambda_relax: 1.0,
            iterations: 100,
            denoise_every: 3,
            schedule: Some(HSchedule::Staged { h0: 6.0 }),
            solver: Solver::Ffr,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_relax > 0.0 && self.lambda_relax < 2.0) {
            return Err(FcsError::InvalidParameter(format!(
                "lambda_relax = {} not in (0, 2)",
                self.lambda_relax
            )));
        }
        if self.iterations == 0 || self.denoise_every == 0 {
            return Err(FcsError::InvalidParameter(
                "iterations and denoise_every must be at least 1".into(),
            ));
        }
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Data-consistency residual of the iterate entering this iteration.
    pub residual_l2: f64,
    /// Denoising strength applied after the update (0 when none).
    pub h_applied: f64,
    pub psnr_vs_ground: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ReconOutput {
    pub image: Image,
    pub log: Vec<IterationRecord>,
    /// Every iterate after its update and optional denoise, when requested.
    pub iterates: Vec<Image>,
}

pub const ITERATION_CSV_HEADER: &str = "iter,residual_l2,h_applied,psnr_vs_ground";

pub fn iteration_log_csv(log: &[IterationRecord]) -> String {
    let mut s = String::from(ITERATION_CSV_HEADER);
    s.push('\n');
    for r in log {
        let psnr = r
            .psnr_vs_ground
            .map(|p| format!("{p:.6}"))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{:.9e},{},{}",
            r.iter, r.residual_l2, r.h_applied, psnr
        );
    }
    s
}

/// Inverse unitary DFT of the masked k-space.
pub fn zero_fill(y: &KSpace) -> Image {
    y.to_image()
}

/// Per-pixel `sqrt(sum |c|^2)` across channel images.
pub fn rss_combine(channels: &[Image]) -> Result<Array2<f64>> {
    let first = channels
        .first()
        .ok_or_else(|| FcsError::InvalidParameter("no channels to combine".into()))?;
    let g = first.geometry();
    let mut acc = Array2::<f64>::zeros(first.pixels().dim());
    for ch in channels {
        if ch.geometry() != g {
            return Err(mismatch(g.size(), ch.size()));
        }
        acc.zip_mut_with(ch.pixels(), |a, v| *a += v.norm_sqr());
    }
    acc.mapv_inplace(f64::sqrt);
    Ok(acc)
}
