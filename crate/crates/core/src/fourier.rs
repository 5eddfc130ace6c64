//! Unitary discrete Fourier transforms.
//!
//! Every transform here is scaled by `1/sqrt(N)` per dimension and the
//! forward direction uses the negative exponent, so `F^H F = I` and a
//! masked forward/inverse pair is an orthogonal projector.

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Unitary 1D forward DFT.
pub fn fft(input: &[Complex64]) -> Vec<Complex64> {
    transform_1d(input, FftDirection::Forward)
}

/// Unitary 1D inverse DFT.
pub fn ifft(input: &[Complex64]) -> Vec<Complex64> {
    transform_1d(input, FftDirection::Inverse)
}

fn transform_1d(input: &[Complex64], direction: FftDirection) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    if buf.is_empty() {
        return buf;
    }
    plan(buf.len(), direction).process(&mut buf);
    let scale = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Unitary 2D forward DFT; index `[u, v]` pairs with pixel `[x, y]`.
pub fn fft2(data: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = data.clone();
    transform_2d_inplace(&mut out, FftDirection::Forward);
    out
}

/// Unitary 2D inverse DFT.
pub fn ifft2(data: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = data.clone();
    transform_2d_inplace(&mut out, FftDirection::Inverse);
    out
}

pub fn fft2_inplace(data: &mut Array2<Complex64>) {
    transform_2d_inplace(data, FftDirection::Forward);
}

pub fn ifft2_inplace(data: &mut Array2<Complex64>) {
    transform_2d_inplace(data, FftDirection::Inverse);
}

fn transform_2d_inplace(data: &mut Array2<Complex64>, direction: FftDirection) {
    let (rows, cols) = data.dim();
    if rows == 0 || cols == 0 {
        return;
    }
    let row_fft = plan(cols, direction);
    let col_fft = plan(rows, direction);

    let mut scratch = vec![Complex64::default(); rows.max(cols)];
    for mut row in data.axis_iter_mut(Axis(0)) {
        let line = &mut scratch[..cols];
        line.iter_mut().zip(row.iter()).for_each(|(d, s)| *d = *s);
        row_fft.process(line);
        row.iter_mut().zip(line.iter()).for_each(|(d, s)| *d = *s);
    }
    for mut col in data.axis_iter_mut(Axis(1)) {
        let line = &mut scratch[..rows];
        line.iter_mut().zip(col.iter()).for_each(|(d, s)| *d = *s);
        col_fft.process(line);
        col.iter_mut().zip(line.iter()).for_each(|(d, s)| *d = *s);
    }
    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    data.mapv_inplace(|v| v * scale);
}
