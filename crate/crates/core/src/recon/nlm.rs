//! Non-local means denoising.
//!
//! Each output pixel is the weighted average of the pixels in its search
//! window, with weight `exp(-d^2 / h^2)` where `d^2` is the mean squared
//! difference between the two surrounding patches. Borders are mirrored.
//! Complex images are filtered as independent real and imaginary channels.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{FcsError, Result};
use crate::grid::Image;

/// Strength `h` (intensity units) and window radii in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmParams {
    pub h: f64,
    pub patch_radius: usize,
    pub search_radius: usize,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self {
            h: 0.0,
            patch_radius: 1,
            search_radius: 5,
        }
    }
}

impl NlmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(FcsError::InvalidParameter(format!("nlm h = {}", self.h)));
        }
        if self.patch_radius < 1 || self.search_radius < self.patch_radius {
            return Err(FcsError::InvalidParameter(format!(
                "nlm radii patch = {} search = {}",
                self.patch_radius, self.search_radius
            )));
        }
        Ok(())
    }
}

/// An image-domain regulariser applied between data-consistency updates.
pub trait Denoiser: Sync {
    fn denoise(&self, image: &Image, strength: f64) -> Result<Image>;
}

impl Denoiser for NlmParams {
    fn denoise(&self, image: &Image, strength: f64) -> Result<Image> {
        nlm_denoise(
            image,
            &NlmParams {
                h: strength,
                ..*self
            },
        )
    }
}

pub fn nlm_denoise(image: &Image, params: &NlmParams) -> Result<Image> {
    params.validate()?;
    if params.h == 0.0 {
        return Ok(image.clone());
    }
    let px = image.pixels();
    let re = px.mapv(|v| v.re);
    let im = px.mapv(|v| v.im);
    let re = nlm_channel(re.view(), params);
    let im = if im.iter().all(|&v| v == 0.0) {
        im
    } else {
        nlm_channel(im.view(), params)
    };
    let mut out = Array2::zeros(px.dim());
    ndarray::Zip::from(&mut out)
        .and(&re)
        .and(&im)
        .for_each(|o: &mut Complex64, &r, &i| *o = Complex64::new(r, i));
    Image::new(image.geometry(), out)
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// NLM of one real channel.
///
/// Works offset by offset: for a row and a displacement, the squared
/// differences are summed down each patch column, then a sliding window
/// along the row yields every patch distance at once.
pub fn nlm_channel(input: ArrayView2<f64>, params: &NlmParams) -> Array2<f64> {
    let (rows, cols) = input.dim();
    let pr = params.patch_radius;
    let sr = params.search_radius as isize;
    let pad = pr + params.search_radius;
    let width = cols + 2 * pad;
    let padded: Vec<f64> = (0..rows + 2 * pad)
        .flat_map(|r| {
            let src = mirror(r as isize - pad as isize, rows);
            (0..width).map(move |c| input[[src, mirror(c as isize - pad as isize, cols)]])
        })
        .collect();
    let patch = 2 * pr + 1;
    let inv = 1.0 / ((patch * patch) as f64 * params.h * params.h);

    let mut out = vec![0.0; rows * cols];
    out.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, out_row)| {
            let mut wsum = vec![0.0; cols];
            let mut acc = vec![0.0; cols];
            // column sums span the patch footprint of every pixel in the row
            let span = cols + 2 * pr;
            let mut colsum = vec![0.0; span];
            let top = r + pad - pr;
            for dr in -sr..=sr {
                for dc in -sr..=sr {
                    colsum.iter_mut().for_each(|v| *v = 0.0);
                    for i in 0..patch {
                        let a0 = (top + i) * width + pad - pr;
                        let b0 = ((top + i) as isize + dr) as usize * width
                            + ((pad - pr) as isize + dc) as usize;
                        let a = &padded[a0..a0 + span];
                        let b = &padded[b0..b0 + span];
                        for ((s, x), y) in colsum.iter_mut().zip(a).zip(b) {
                            let d = x - y;
                            *s += d * d;
                        }
                    }
                    let centre = ((r + pad) as isize + dr) as usize * width;
                    let mut d2: f64 = colsum[..patch].iter().sum();
                    for c in 0..cols {
                        if c > 0 {
                            d2 += colsum[c + patch - 1] - colsum[c - 1];
                        }
                        let w = (-d2.max(0.0) * inv).exp();
                        wsum[c] += w;
                        acc[c] += w * padded[centre + ((c + pad) as isize + dc) as usize];
                    }
                }
            }
            for ((o, a), w) in out_row.iter_mut().zip(&acc).zip(&wsum) {
                *o = a / w;
            }
        });
    Array2::from_shape_vec((rows, cols), out).expect("row-major buffer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn zero_strength_is_identity() {
        let img = crate::test_util::random_complex_image(9, 1);
        let out = nlm_denoise(&img, &NlmParams::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn constant_is_fixed() {
        let px = Array2::from_elem((12, 12), 77.0);
        let img = Image::from_real(&px).unwrap();
        let out = nlm_denoise(
            &img,
            &NlmParams {
                h: 10.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.max_abs_diff(&img) < 1e-12);
    }

    #[test]
    fn reduces_noise_on_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = Normal::new(0.0, 20.0).unwrap();
        let base = 128.0;
        let noisy = Array2::from_shape_fn((48, 48), |_| base + noise.sample(&mut rng));
        let params = NlmParams {
            h: 10.0,
            patch_radius: 1,
            search_radius: 5,
        };
        let out = nlm_channel(noisy.view(), &params);
        let mse =
            |a: &Array2<f64>| a.iter().map(|v| (v - base).powi(2)).sum::<f64>() / a.len() as f64;
        let (before, after) = (mse(&noisy), mse(&out));
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn channels_are_independent() {
        let img = crate::test_util::random_complex_image(10, 3);
        let p = NlmParams {
            h: 0.3,
            ..Default::default()
        };
        let out = nlm_denoise(&img, &p).unwrap();
        let re = nlm_channel(img.real().view(), &p);
        let im = nlm_channel(img.pixels().mapv(|v| v.im).view(), &p);
        for ((o, r), i) in out.pixels().iter().zip(re.iter()).zip(im.iter()) {
            assert_eq!(o.re, *r);
            assert_eq!(o.im, *i);
        }
    }

    /// Direct per-pixel evaluation of the definition.
    fn nlm_reference(input: &Array2<f64>, p: &NlmParams) -> Array2<f64> {
        let (rows, cols) = input.dim();
        let at = |r: isize, c: isize| input[[mirror(r, rows), mirror(c, cols)]];
        let (pr, sr) = (p.patch_radius as isize, p.search_radius as isize);
        let len = ((2 * pr + 1) * (2 * pr + 1)) as f64;
        Array2::from_shape_fn((rows, cols), |(r, c)| {
            let (r, c) = (r as isize, c as isize);
            let (mut wsum, mut acc) = (0.0, 0.0);
            for dr in -sr..=sr {
                for dc in -sr..=sr {
                    let mut d2 = 0.0;
                    for i in -pr..=pr {
                        for j in -pr..=pr {
                            let d = at(r + i, c + j) - at(r + dr + i, c + dc + j);
                            d2 += d * d;
                        }
                    }
                    let w = (-d2 / len / (p.h * p.h)).exp();
                    wsum += w;
                    acc += w * at(r + dr, c + dc);
                }
            }
            acc / wsum
        })
    }

    #[test]
    fn matches_direct_definition() {
        let img = crate::test_util::random_real_image(13, 6).real() * 40.0;
        for p in [
            NlmParams {
                h: 15.0,
                patch_radius: 1,
                search_radius: 5,
            },
            NlmParams {
                h: 30.0,
                patch_radius: 2,
                search_radius: 3,
            },
        ] {
            let fast = nlm_channel(img.view(), &p);
            let slow = nlm_reference(&img, &p);
            let err = (&fast - &slow).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-9, "{p:?}: {err}");
        }
    }

    #[test]
    fn invalid_params() {
        let bad = NlmParams {
            h: 1.0,
            patch_radius: 3,
            search_radius: 2,
        };
        assert!(bad.validate().is_err());
        assert!(NlmParams {
            h: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(NlmParams {
            patch_radius: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn mirror_indices() {
        assert_eq!(mirror(-1, 5), 0);
        assert_eq!(mirror(-2, 5), 1);
        assert_eq!(mirror(5, 5), 4);
        assert_eq!(mirror(6, 5), 3);
    }
}
