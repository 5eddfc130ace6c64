//! Image quality metrics on real (magnitude) images.

use ndarray::{Array2, ArrayView2};

use crate::error::{mismatch, Result};

/// PSNR, SSIM and RMSE of a test image against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// `f64::INFINITY` when the images are identical.
    pub psnr: f64,
    pub ssim: f64,
    pub rmse: f64,
}

impl MetricsReport {
    pub fn compute(reference: ArrayView2<f64>, test: ArrayView2<f64>, peak: f64) -> Result<Self> {
        Ok(Self {
            psnr: psnr(reference, test, peak)?,
            ssim: ssim(reference, test, peak)?,
            rmse: rmse(reference, test)?,
        })
    }
}

fn same_shape(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(mismatch(format!("{:?}", a.dim()), format!("{:?}", b.dim())));
    }
    Ok(())
}

fn mse(reference: &ArrayView2<f64>, test: &ArrayView2<f64>) -> f64 {
    let sum: f64 = reference
        .iter()
        .zip(test.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    sum / reference.len() as f64
}

/// `10 log10(peak^2 / MSE)`; infinite for identical inputs.
pub fn psnr(reference: ArrayView2<f64>, test: ArrayView2<f64>, peak: f64) -> Result<f64> {
    same_shape(&reference, &test)?;
    let rmse = mse(&reference, &test).sqrt();
    Ok(psnr_from_rmse(rmse, peak))
}

/// Written as `20 log10(peak / rmse)` so that the two metrics agree exactly.
pub fn psnr_from_rmse(rmse: f64, peak: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (peak / rmse).log10()
    }
}

pub fn rmse(reference: ArrayView2<f64>, test: ArrayView2<f64>) -> Result<f64> {
    same_shape(&reference, &test)?;
    Ok(mse(&reference, &test).sqrt())
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> Array2<f64> {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut w = Array2::from_shape_fn((SSIM_WINDOW, SSIM_WINDOW), |(i, j)| {
        let (di, dj) = (i as f64 - c, j as f64 - c);
        (-(di * di + dj * dj) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    });
    let s = w.sum();
    w.mapv_inplace(|v| v / s);
    w
}

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5),
/// with `C1 = (0.01 peak)^2` and `C2 = (0.03 peak)^2`. Images smaller than
/// the window are treated as a single window with uniform weights.
pub fn ssim(reference: ArrayView2<f64>, test: ArrayView2<f64>, peak: f64) -> Result<f64> {
    same_shape(&reference, &test)?;
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let (rows, cols) = reference.dim();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        let w = Array2::from_elem((rows, cols), 1.0 / (rows * cols) as f64);
        return Ok(local_ssim(&reference, &test, &w, 0, 0, c1, c2));
    }
    let w = gaussian_window();
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..=rows - SSIM_WINDOW {
        for c in 0..=cols - SSIM_WINDOW {
            total += local_ssim(&reference, &test, &w, r, c, c1, c2);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn local_ssim(
    a: &ArrayView2<f64>,
    b: &ArrayView2<f64>,
    w: &Array2<f64>,
    r0: usize,
    c0: usize,
    c1: f64,
    c2: f64,
) -> f64 {
    let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((i, j), &wt) in w.indexed_iter() {
        let x = a[[r0 + i, c0 + j]];
        let y = b[[r0 + i, c0 + j]];
        ma += wt * x;
        mb += wt * y;
        saa += wt * x * x;
        sbb += wt * y * y;
        sab += wt * x * y;
    }
    let va = saa - ma * ma;
    let vb = sbb - mb * mb;
    let cov = sab - ma * mb;
    ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_edge_cases() {
        let a = Array2::from_shape_fn((8, 8), |(i, j)| (i * j) as f64);
        assert_eq!(psnr(a.view(), a.view(), 255.0).unwrap(), f64::INFINITY);
        let b = a.mapv(|v| v + 255.0);
        assert!(psnr(a.view(), b.view(), 255.0).unwrap().abs() < 1e-12);
        assert!(psnr(a.view(), Array2::zeros((4, 4)).view(), 255.0).is_err());
    }

    #[test]
    fn rmse_offsets() {
        let a = Array2::from_elem((6, 6), 3.0);
        assert_eq!(rmse(a.view(), a.view()).unwrap(), 0.0);
        let b = a.mapv(|v| v - 2.5);
        assert!((rmse(a.view(), b.view()).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn ssim_basics() {
        let a = Array2::from_shape_fn((32, 32), |(i, j)| ((i * 7 + j * 3) % 50) as f64 * 5.0);
        assert!((ssim(a.view(), a.view(), 255.0).unwrap() - 1.0).abs() < 1e-12);
        let neg = a.mapv(|v| 255.0 - v);
        assert!(ssim(a.view(), neg.view(), 255.0).unwrap() < 1.0);
    }

    #[test]
    fn ssim_of_offset_constants() {
        // closed form: (2 c (c+1) + C1) / (c^2 + (c+1)^2 + C1), variances zero
        let c = 100.0;
        let a = Array2::from_elem((24, 24), c);
        let b = Array2::from_elem((24, 24), c + 1.0);
        let c1 = (0.01f64 * 255.0).powi(2);
        let want = (2.0 * c * (c + 1.0) + c1) / (c * c + (c + 1.0) * (c + 1.0) + c1);
        let got = ssim(a.view(), b.view(), 255.0).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!(got >= 0.99);
    }

    #[test]
    fn window_is_normalised() {
        let w = gaussian_window();
        assert!((w.sum() - 1.0).abs() < 1e-14);
        assert_eq!(w[[0, 0]], w[[10, 10]]);
    }
}
