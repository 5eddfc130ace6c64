//! Point-spread function and sidelobe-to-peak ratio of sampling masks.
//!
//! Under the unitary DFT, `F^H diag(mask) F` is a circular convolution, so
//! `PSF(i, j) = e_j^* F^H F_mask e_i` depends only on the displacement
//! `j - i` and equals the inverse DFT of the mask indicator, scaled by
//! `1/N`. One inverse FFT therefore gives every column of the PSF.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{FcsError, Result};
use crate::fourier;
use crate::grid::Image;
use crate::rng::{derive_seed, stream, Stream};
use crate::sampling::{actual_reduction, Provenance, SamplingMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SprMethod {
    Exact,
    MonteCarlo {
        samples: usize,
        bases: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Mean achieved reduction factor of the sampled masks.
    pub mean_reduction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncoherenceReport {
    /// Provenance of the (first) analysed mask.
    pub provenance: Provenance,
    pub spr: f64,
    pub method: SprMethod,
    pub stats: Option<SprStats>,
}

/// PSF as a function of displacement: `psf[d] = PSF(i, i + d)` for any `i`.
pub fn psf(mask: &SamplingMask) -> Image {
    let n = mask.size();
    let mut k = mask.selected().mapv(|s| {
        if s {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    });
    fourier::ifft2_inplace(&mut k);
    k.mapv_inplace(|v| v / n as f64);
    Image::new(mask.geometry(), k).expect("mask geometry is square")
}

fn peak_and_sidelobe(psf: &Array2<Complex64>) -> (f64, f64) {
    let peak = psf[[0, 0]].norm();
    let side = psf
        .indexed_iter()
        .filter(|((a, b), _)| (*a, *b) != (0, 0))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    (peak, side)
}

fn spr_value(mask: &SamplingMask) -> Result<f64> {
    if mask.count() == 0 {
        return Err(FcsError::EmptyMask);
    }
    let p = psf(mask);
    let (peak, side) = peak_and_sidelobe(p.pixels());
    Ok(side / peak)
}

/// `max_{d != 0} |psf(d)| / |psf(0)|`, which is the supremum over all pairs
/// `i != j` of `|PSF(i, j) / PSF(i, i)|`.
pub fn spr_exact(mask: &SamplingMask) -> Result<IncoherenceReport> {
    Ok(IncoherenceReport {
        provenance: mask.provenance().clone(),
        spr: spr_value(mask)?,
        method: SprMethod::Exact,
        stats: None,
    })
}

/// SPR seen from `bases` random basis images `e_i`: for each, the PSF column
/// `j -> PSF(i, j)` is read from the displacement PSF and the largest
/// `|PSF(i, j) / PSF(i, i)|` with `j != i` is kept.
fn spr_from_bases(psf: &Array2<Complex64>, bases: usize, seed: u64) -> f64 {
    let n = psf.nrows();
    let mut rng = stream(seed, Stream::PsfBases);
    let mut best: f64 = 0.0;
    for _ in 0..bases {
        let (ix, iy) = (rng.random_range(0..n), rng.random_range(0..n));
        let diag = psf[[0, 0]].norm();
        for jx in 0..n {
            for jy in 0..n {
                if (jx, jy) == (ix, iy) {
                    continue;
                }
                let d = psf[[(jx + n - ix) % n, (jy + n - iy) % n]];
                best = best.max(d.norm() / diag);
            }
        }
    }
    best
}

/// Monte-Carlo SPR over `samples` masks drawn from `source`.
///
/// `source` receives a per-sample seed derived from `seed`; pass a closure
/// ignoring it to analyse one fixed mask repeatedly. Samples run in parallel
/// but the report does not depend on scheduling.
pub fn spr_monte_carlo<F>(
    source: F,
    samples: usize,
    bases_per_sample: usize,
    seed: u64,
) -> Result<IncoherenceReport>
where
    F: Fn(u64) -> Result<SamplingMask> + Sync,
{
    if samples == 0 || bases_per_sample == 0 {
        return Err(FcsError::InvalidParameter(
            "samples and bases must be at least 1".into(),
        ));
    }
    let results: Vec<(f64, f64, Option<Provenance>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let sample_seed = derive_seed(seed, i as u64);
            let mask = source(sample_seed)?;
            if mask.count() == 0 {
                return Err(FcsError::EmptyMask);
            }
            let p = psf(&mask);
            let spr = spr_from_bases(p.pixels(), bases_per_sample, sample_seed);
            let prov = (i == 0).then(|| mask.provenance().clone());
            Ok((spr, actual_reduction(&mask), prov))
        })
        .collect::<Result<_>>()?;

    let n = samples as f64;
    let mean = results.iter().map(|r| r.0).sum::<f64>() / n;
    let min = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let max = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let mean_reduction = results.iter().map(|r| r.1).sum::<f64>() / n;
    let provenance = results
        .into_iter()
        .find_map(|r| r.2)
        .unwrap_or(Provenance::Custom);
    Ok(IncoherenceReport {
        provenance,
        spr: mean,
        method: SprMethod::MonteCarlo {
            samples,
            bases: bases_per_sample,
            seed,
        },
        stats: Some(SprStats {
            mean,
            min,
            max,
            mean_reduction,
        }),
    })
}

/// Monte-Carlo SPR of one fixed mask.
pub fn spr_monte_carlo_fixed(
    mask: &SamplingMask,
    samples: usize,
    bases_per_sample: usize,
    seed: u64,
) -> Result<IncoherenceReport> {
    spr_monte_carlo(|_| Ok(mask.clone()), samples, bases_per_sample, seed)
}

pub const SPR_CSV_HEADER: &str =
    "mask_kind,N,target_R,actual_R,ctr_or_alpha,method,spr_mean,spr_min,spr_max,samples,seed";

impl IncoherenceReport {
    /// One CSV row in the [`SPR_CSV_HEADER`] layout.
    pub fn csv_row(&self, n: usize, target_r: f64, actual_r: f64) -> String {
        let ctr_or_alpha = match &self.provenance {
            Provenance::Cartesian { spec, .. } => spec.alpha,
            other => other.ctr(),
        };
        let (method, samples, seed) = match self.method {
            SprMethod::Exact => ("exact", 1, 0),
            SprMethod::MonteCarlo { samples, seed, .. } => ("monte_carlo", samples, seed),
        };
        let (mean, min, max) = match self.stats {
            Some(s) => (s.mean, s.min, s.max),
            None => (self.spr, self.spr, self.spr),
        };
        format!(
            "{},{n},{target_r},{actual_r:.6},{ctr_or_alpha},{method},{mean:.6},{min:.6},{max:.6},{samples},{seed}",
            self.provenance.kind_name()
        )
    }
}
