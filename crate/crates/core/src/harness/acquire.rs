//! Simulated acquisition: forward DFT, complex Gaussian noise, masking.

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use crate::error::{mismatch, FcsError, Result};
use crate::fourier;
use crate::geometry::Slope;
use crate::grid::{Image, KSpace};
use crate::radon::{slice_points, Projection, Sinogram};
use crate::rng::{stream, Stream};
use crate::sampling::SamplingMask;

/// Additive complex Gaussian noise with `E|n|^2 = sigma^2` per sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { sigma: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(FcsError::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Adds seeded noise to every coefficient of a fully sampled grid.
pub fn add_noise(kspace: &mut KSpace, noise: NoiseModel, seed: u64) -> Result<()> {
    noise.validate()?;
    if noise.sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, noise.sigma / std::f64::consts::SQRT_2)
        .map_err(|e| FcsError::InvalidParameter(e.to_string()))?;
    let mut rng = stream(seed, Stream::Noise);
    for c in kspace.coefficients_mut().iter_mut() {
        *c += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(())
}

/// Transforms, perturbs and masks a fully sampled grid.
pub fn undersample_kspace(
    full: &KSpace,
    mask: &SamplingMask,
    noise: NoiseModel,
    seed: u64,
) -> Result<KSpace> {
    if full.size() != mask.size() {
        return Err(mismatch(mask.size(), full.size()));
    }
    let mut y = full.clone();
    add_noise(&mut y, noise, seed)?;
    mask.apply(&mut y)?;
    Ok(y)
}

pub fn undersample(
    image: &Image,
    mask: &SamplingMask,
    noise: NoiseModel,
    seed: u64,
) -> Result<KSpace> {
    undersample_kspace(&image.to_kspace(), mask, noise, seed)
}

/// Recovers the projections along `slopes` from measured k-space, so that
/// sinogram-domain solvers see exactly the same (possibly noisy) data.
pub fn sinogram_from_kspace(y: &KSpace, slopes: &[Slope]) -> Result<Sinogram> {
    let g = y.geometry();
    let scale = (g.size() as f64).sqrt();
    let coeffs = y.coefficients();
    let rows = slopes
        .iter()
        .map(|&slope| {
            let slice: Vec<Complex64> = slice_points(slope, g)?
                .into_iter()
                .map(|(u, v)| coeffs[[u, v]] * scale)
                .collect();
            Ok(Projection {
                slope,
                bins: fourier::ifft(&slice),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Sinogram::new(g, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridGeometry;
    use crate::radon::drt_forward_slopes;
    use crate::sampling::{build_pfrac, FractalSpec};
    use crate::test_util::random_complex_image;

    #[test]
    fn noiseless_undersampling_keeps_selected_points() {
        let img = random_complex_image(17, 3);
        let g = img.geometry();
        let mask = build_pfrac(FractalSpec {
            geometry: g,
            r: 0.3,
            mu: 1,
            ctr: 0.0,
            seed: 9,
        })
        .unwrap();
        let full = img.to_kspace();
        let y = undersample(&img, &mask, NoiseModel::none(), 1).unwrap();
        for ((idx, &sel), c) in mask.selected().indexed_iter().zip(y.coefficients()) {
            let want = if sel {
                full.coefficients()[idx]
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert_eq!(*c, want);
        }
    }

    #[test]
    fn noise_has_requested_power_and_is_seeded() {
        let g = GridGeometry::new(64).unwrap();
        let mut a = KSpace::zeros(g);
        add_noise(&mut a, NoiseModel { sigma: 2.0 }, 5).unwrap();
        let power = a.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>() / 4096.0;
        assert!((power - 4.0).abs() < 0.3, "{power}");
        let mut b = KSpace::zeros(g);
        add_noise(&mut b, NoiseModel { sigma: 2.0 }, 5).unwrap();
        assert_eq!(a, b);
        assert!(add_noise(&mut b, NoiseModel { sigma: -1.0 }, 5).is_err());
    }

    #[test]
    fn sinogram_from_kspace_matches_direct_projection() {
        for n in [17usize, 16, 27] {
            let img = random_complex_image(n, 8);
            let slopes: Vec<Slope> = img.geometry().slopes().step_by(2).collect();
            let want = drt_forward_slopes(&img, &slopes).unwrap();
            let got = sinogram_from_kspace(&img.to_kspace(), &slopes).unwrap();
            for (a, b) in want.rows().iter().zip(got.rows()) {
                assert_eq!(a.slope, b.slope);
                for (x, y) in a.bins.iter().zip(&b.bins) {
                    assert!((x - y).norm() < 1e-9, "N={n}");
                }
            }
        }
    }
}
