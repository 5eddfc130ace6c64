//! Finite Fourier reconstruction and its projection-domain twin.
//!
//! Both solve the same relaxed Landweber iteration
//! `x <- x + lambda A^+ (b - A x)`: FFR with `A = F_mask` acting on k-space,
//! fSIRT with `A = R_slopes` acting on a partial DRT sinogram, whose Fourier
//! back-projection `A^+` divides multiply-hit k-space points by their hit
//! count. For a mask made only of those slopes the two produce identical
//! iterates.

use ndarray::Array2;
use num_complex::Complex64;

use super::{h_schedule_eval, Denoiser, IterationRecord, ReconConfig, ReconOutput};
use crate::error::{mismatch, FcsError, Result};
use crate::fourier;
use crate::grid::{Image, KSpace};
use crate::metrics;
use crate::radon::{back_project, drt_forward_slopes, multiplicity_for, Sinogram};
use crate::sampling::SamplingMask;

/// Optional extras for an iterative run.
#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub denoiser: Option<&'a dyn Denoiser>,
    /// Ground-truth magnitude on the `[0, 255]` scale, for per-iteration PSNR.
    pub truth: Option<&'a Array2<f64>>,
    pub keep_iterates: bool,
}

fn iterate<F>(
    x0: Image,
    config: &ReconConfig,
    opts: RunOptions<'_>,
    data_norm: f64,
    mut correction: F,
) -> Result<ReconOutput>
where
    F: FnMut(&Image) -> Result<(f64, Array2<Complex64>)>,
{
    config.validate()?;
    let limit = 10.0 * data_norm;
    let mut x = x0;
    let mut log = Vec::with_capacity(config.iterations);
    let mut iterates = Vec::new();
    for t in 0..config.iterations {
        let (residual, delta) = correction(&x)?;
        if !residual.is_finite() || residual > limit {
            return Err(FcsError::Diverged {
                iteration: t,
                residual,
                limit,
            });
        }
        let lambda = config.lambda_relax;
        x.pixels_mut().zip_mut_with(&delta, |a, d| *a += d * lambda);

        let mut h_applied = 0.0;
        let last = t + 1 == config.iterations;
        if let (Some(den), Some(schedule)) = (opts.denoiser, config.schedule.as_ref()) {
            if (t + 1) % config.denoise_every == 0 && !last {
                let h = h_schedule_eval(schedule, t, config.iterations);
                if h > 0.0 {
                    x = den.denoise(&x, h)?;
                    h_applied = h;
                }
            }
        }
        let psnr_vs_ground = opts
            .truth
            .map(|truth| metrics::psnr(truth.view(), x.magnitude().view(), 255.0))
            .transpose()?;
        log.push(IterationRecord {
            iter: t,
            residual_l2: residual,
            h_applied,
            psnr_vs_ground,
        });
        if opts.keep_iterates {
            iterates.push(x.clone());
        }
    }
    Ok(ReconOutput {
        image: x,
        log,
        iterates,
    })
}

/// FFR: `x <- x + lambda F_mask^H (y - F_mask x)` from the zero-filled start,
/// with scheduled denoising between updates. The final step is always a data
/// update. Aborts when the residual exceeds ten times `||y||`.
pub fn ffr(
    y: &KSpace,
    mask: &SamplingMask,
    config: &ReconConfig,
    opts: RunOptions<'_>,
) -> Result<ReconOutput> {
    if y.geometry() != mask.geometry() {
        return Err(mismatch(mask.size(), y.size()));
    }
    let selected = mask.selected();
    let data = y.coefficients();
    let data_norm = masked_norm(data, selected);
    let x0 = super::zero_fill(y);
    iterate(x0, config, opts, data_norm, |x| {
        let mut k = fourier::fft2(x.pixels());
        let mut sq = 0.0;
        ndarray::Zip::from(&mut k)
            .and(data)
            .and(selected)
            .for_each(|kv, &yv, &sel| {
                *kv = if sel { yv - *kv } else { Complex64::default() };
                sq += kv.norm_sqr();
            });
        fourier::ifft2_inplace(&mut k);
        Ok((sq.sqrt(), k))
    })
}

fn masked_norm(data: &Array2<Complex64>, selected: &Array2<bool>) -> f64 {
    data.iter()
        .zip(selected.iter())
        .filter(|(_, &s)| s)
        .map(|(v, _)| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// fSIRT: `x <- x + lambda R^+ (g - R x)` over the slopes present in `g`.
///
/// `mask` must be exactly the union of those slopes' slices; masks carrying a
/// fully sampled centre disk are rejected because the disk is not made of
/// DRT projections.
pub fn fsirt(
    g: &Sinogram,
    mask: &SamplingMask,
    config: &ReconConfig,
    opts: RunOptions<'_>,
) -> Result<ReconOutput> {
    let geometry = g.geometry();
    if mask.geometry() != geometry {
        return Err(mismatch(geometry.size(), mask.size()));
    }
    if mask.provenance().ctr() > 0.0 {
        return Err(FcsError::InvalidParameter(
            "fSIRT cannot represent a centre-tiled mask (ctr > 0)".into(),
        ));
    }
    let slopes = g.slopes();
    let union = multiplicity_for(geometry, &slopes)?.mapv(|c| c > 0);
    if union != *mask.selected() {
        return Err(mismatch(
            "mask equal to the union of sinogram slices",
            "different sampling pattern",
        ));
    }
    let data_norm = g
        .rows()
        .iter()
        .flat_map(|r| r.bins.iter())
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let x0 = back_project(g)?;
    iterate(x0, config, opts, data_norm, |x| {
        let residual = g.sub(&drt_forward_slopes(x, &slopes)?)?;
        let norm = residual
            .rows()
            .iter()
            .flat_map(|r| r.bins.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        Ok((norm, back_project(&residual)?.into_pixels()))
    })
}
