//! Pixel-domain images and k-space grids.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{mismatch, Result};
use crate::fourier;
use crate::geometry::GridGeometry;

/// `N x N` complex image, indexed `[x, y]` with `x` the first (row) index.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    geometry: GridGeometry,
    pixels: Array2<Complex64>,
}

impl Image {
    pub fn new(geometry: GridGeometry, pixels: Array2<Complex64>) -> Result<Self> {
        check_square(&geometry, pixels.dim())?;
        Ok(Self { geometry, pixels })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        let n = geometry.size();
        Self {
            geometry,
            pixels: Array2::zeros((n, n)),
        }
    }

    /// Builds an image from a square complex array, deriving its geometry.
    pub fn from_complex(pixels: Array2<Complex64>) -> Result<Self> {
        let (r, c) = pixels.dim();
        if r != c {
            return Err(mismatch("square array", format!("{r}x{c}")));
        }
        Self::new(GridGeometry::new(r)?, pixels)
    }

    pub fn from_real(pixels: &Array2<f64>) -> Result<Self> {
        Self::from_complex(pixels.mapv(|v| Complex64::new(v, 0.0)))
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn size(&self) -> usize {
        self.geometry.size()
    }

    pub fn pixels(&self) -> &Array2<Complex64> {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Array2<Complex64> {
        self.pixels
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.pixels.mapv(|v| v.norm())
    }

    pub fn real(&self) -> Array2<f64> {
        self.pixels.mapv(|v| v.re)
    }

    pub fn sum(&self) -> Complex64 {
        self.pixels.sum()
    }

    /// Unitary 2D DFT.
    pub fn to_kspace(&self) -> KSpace {
        KSpace {
            geometry: self.geometry,
            coefficients: fourier::fft2(&self.pixels),
        }
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.pixels
            .iter()
            .zip(other.pixels.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `N x N` DFT coefficients in natural ordering (DC at `[0, 0]`).
#[derive(Debug, Clone, PartialEq)]
pub struct KSpace {
    geometry: GridGeometry,
    coefficients: Array2<Complex64>,
}

impl KSpace {
    pub fn new(geometry: GridGeometry, coefficients: Array2<Complex64>) -> Result<Self> {
        check_square(&geometry, coefficients.dim())?;
        Ok(Self {
            geometry,
            coefficients,
        })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        let n = geometry.size();
        Self {
            geometry,
            coefficients: Array2::zeros((n, n)),
        }
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn size(&self) -> usize {
        self.geometry.size()
    }

    pub fn coefficients(&self) -> &Array2<Complex64> {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Array2<Complex64> {
        self.coefficients
    }

    /// Unitary 2D inverse DFT.
    pub fn to_image(&self) -> Image {
        Image {
            geometry: self.geometry,
            pixels: fourier::ifft2(&self.coefficients),
        }
    }
}

fn check_square(geometry: &GridGeometry, dim: (usize, usize)) -> Result<()> {
    let n = geometry.size();
    if dim != (n, n) {
        return Err(mismatch(format!("{n}x{n}"), format!("{}x{}", dim.0, dim.1)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_shape() {
        let g = GridGeometry::new(5).unwrap();
        assert!(Image::new(g, Array2::zeros((5, 4))).is_err());
        assert!(KSpace::new(g, Array2::zeros((4, 4))).is_err());
        assert!(Image::from_complex(Array2::zeros((3, 4))).is_err());
    }

    #[test]
    fn kspace_round_trip() {
        let px = Array2::from_shape_fn((11, 11), |(x, y)| (x * 3 + y * 7) as f64 % 5.0);
        let img = Image::from_real(&px).unwrap();
        let back = img.to_kspace().to_image();
        assert!(img.max_abs_diff(&back) < 1e-10 * 4.0);
    }
}
