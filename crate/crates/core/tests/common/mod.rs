#![allow(dead_code)]

use fcs_core::Image;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_complex(n: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = Array2::from_shape_fn((n, n), |_| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    Image::from_complex(px).unwrap()
}

pub fn random_real(n: usize, seed: u64, scale: f64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, n), |_| scale * rng.random::<f64>())
}

/// Unitary 2D DFT evaluated term by term.
pub fn naive_dft2(x: &Array2<Complex64>) -> Array2<Complex64> {
    let n = x.nrows();
    let scale = 1.0 / n as f64;
    Array2::from_shape_fn((n, n), |(u, v)| {
        let mut acc = Complex64::default();
        for ((a, b), val) in x.indexed_iter() {
            let phase = -2.0 * std::f64::consts::PI * ((u * a + v * b) % n) as f64 / n as f64;
            acc += val * Complex64::from_polar(1.0, phase);
        }
        acc * scale
    })
}

pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
