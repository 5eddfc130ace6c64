//! Proximal-gradient baseline for `min ||y - F_mask x||^2 + a ||Psi x||_1 + b TV(x)`.
//!
//! `Psi` is a single-level orthonormal 2D Haar transform and `TV` the
//! anisotropic total variation with complex moduli. Each iteration takes a
//! gradient step on the data term, soft-thresholds the Haar coefficients and
//! then applies the TV proximal map (solved by fast gradient projection on
//! its dual). Candidates that would raise the objective are rejected in the
//! style of monotone FISTA, so the accepted objective never increases.

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{mismatch, FcsError, Result};
use crate::fourier;
use crate::grid::{Image, KSpace};
use crate::sampling::SamplingMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsBaselineConfig {
    pub wavelet_weight: f64,
    pub tv_weight: f64,
    pub iterations: usize,
    /// Gradient step; the data term has Lipschitz constant 2, so 0.5 is safe.
    pub step: f64,
    /// Inner iterations of the TV proximal solver.
    pub tv_inner: usize,
    /// Solve on data scaled so the zero-filled image peaks at 1 and scale
    /// the result back. Off by default: the default weights are meant for
    /// images on the `[0, 255]` scale.
    pub normalize: bool,
}

impl Default for CsBaselineConfig {
    fn default() -> Self {
        Self {
            wavelet_weight: 2.0,
            tv_weight: 6e-4,
            iterations: 160,
            step: 0.5,
            tv_inner: 20,
            normalize: false,
        }
    }
}

impl CsBaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.wavelet_weight >= 0.0
            && self.tv_weight >= 0.0
            && self.wavelet_weight.is_finite()
            && self.tv_weight.is_finite()
            && self.step > 0.0
            && self.step <= 0.5
            && self.iterations >= 1;
        if ok {
            Ok(())
        } else {
            Err(FcsError::InvalidParameter(format!(
                "bad cs_baseline config {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsOutput {
    pub image: Image,
    /// Objective of the accepted iterate, in the solver's (possibly
    /// normalized) units: entry 0 is the zero-filled start,
    /// entry `k` follows iteration `k`.
    pub objective: Vec<f64>,
    /// Set when the trailing quarter of the run (at least 10 iterations)
    /// produced only objective-increasing candidates.
    pub non_convergence: bool,
}

fn haar_1d(line: &mut [Complex64], scratch: &mut Vec<Complex64>, inverse: bool) {
    let n = line.len();
    let half = n / 2;
    scratch.clear();
    scratch.extend_from_slice(line);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if inverse {
        for i in 0..half {
            let (a, d) = (scratch[i], scratch[half + i]);
            line[2 * i] = (a + d) * s;
            line[2 * i + 1] = (a - d) * s;
        }
    } else {
        for i in 0..half {
            let (x0, x1) = (scratch[2 * i], scratch[2 * i + 1]);
            line[i] = (x0 + x1) * s;
            line[half + i] = (x0 - x1) * s;
        }
    }
    // odd lengths pass the trailing sample through unchanged
}

fn haar_2d(data: &Array2<Complex64>, inverse: bool) -> Array2<Complex64> {
    let mut out = data.clone();
    let mut line = Vec::new();
    let mut scratch = Vec::new();
    let axes = if inverse {
        [Axis(0), Axis(1)]
    } else {
        [Axis(1), Axis(0)]
    };
    for axis in axes {
        for mut lane in out.lanes_mut(axis) {
            line.clear();
            line.extend(lane.iter().copied());
            haar_1d(&mut line, &mut scratch, inverse);
            lane.iter_mut().zip(&line).for_each(|(d, s)| *d = *s);
        }
    }
    out
}

/// Single-level orthonormal 2D Haar analysis.
pub fn haar_forward(data: &Array2<Complex64>) -> Array2<Complex64> {
    haar_2d(data, false)
}

/// Inverse of [`haar_forward`].
pub fn haar_inverse(data: &Array2<Complex64>) -> Array2<Complex64> {
    haar_2d(data, true)
}

/// Anisotropic TV: sum of moduli of forward differences along both axes.
pub fn total_variation(x: &Array2<Complex64>) -> f64 {
    let (r, c) = x.dim();
    let mut tv = 0.0;
    for i in 0..r {
        for j in 0..c {
            if i + 1 < r {
                tv += (x[[i + 1, j]] - x[[i, j]]).norm();
            }
            if j + 1 < c {
                tv += (x[[i, j + 1]] - x[[i, j]]).norm();
            }
        }
    }
    tv
}

fn soft_threshold(v: Complex64, t: f64) -> Complex64 {
    let m = v.norm();
    if m <= t {
        Complex64::default()
    } else {
        v * ((m - t) / m)
    }
}

fn project_unit(v: Complex64) -> Complex64 {
    let m = v.norm();
    if m > 1.0 {
        v / m
    } else {
        v
    }
}

/// `L(p, q)[i, j] = p[i, j] + q[i, j] - p[i-1, j] - q[i, j-1]`, zero outside.
fn tv_divergence(
    p: &Array2<Complex64>,
    q: &Array2<Complex64>,
    dim: (usize, usize),
) -> Array2<Complex64> {
    let (r, c) = dim;
    Array2::from_shape_fn((r, c), |(i, j)| {
        let mut v = Complex64::default();
        if i + 1 < r {
            v += p[[i, j]];
        }
        if i > 0 {
            v -= p[[i - 1, j]];
        }
        if j + 1 < c {
            v += q[[i, j]];
        }
        if j > 0 {
            v -= q[[i, j - 1]];
        }
        v
    })
}

/// Proximal map of `weight * TV` at `b` (fast gradient projection on the dual).
fn tv_prox(b: &Array2<Complex64>, weight: f64, inner: usize) -> Array2<Complex64> {
    if weight == 0.0 {
        return b.clone();
    }
    let (r, c) = b.dim();
    let zero_p = Array2::<Complex64>::zeros((r.saturating_sub(1), c));
    let zero_q = Array2::<Complex64>::zeros((r, c.saturating_sub(1)));
    let (mut p, mut q) = (zero_p.clone(), zero_q.clone());
    let (mut rp, mut rq) = (zero_p, zero_q);
    let mut t = 1.0f64;
    let scale = 1.0 / (8.0 * weight);
    for _ in 0..inner {
        let l = tv_divergence(&rp, &rq, (r, c));
        let x = b - &(l * weight);
        let np = Array2::from_shape_fn(p.dim(), |(i, j)| {
            project_unit(rp[[i, j]] + (x[[i, j]] - x[[i + 1, j]]) * scale)
        });
        let nq = Array2::from_shape_fn(q.dim(), |(i, j)| {
            project_unit(rq[[i, j]] + (x[[i, j]] - x[[i, j + 1]]) * scale)
        });
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / tn;
        rp = &np + &((&np - &p) * beta);
        rq = &nq + &((&nq - &q) * beta);
        p = np;
        q = nq;
        t = tn;
    }
    b - &(tv_divergence(&p, &q, (r, c)) * weight)
}

struct Problem<'a> {
    y: &'a Array2<Complex64>,
    selected: &'a Array2<bool>,
    config: CsBaselineConfig,
}

impl Problem<'_> {
    fn data_residual(&self, x: &Array2<Complex64>) -> Array2<Complex64> {
        let mut k = fourier::fft2(x);
        ndarray::Zip::from(&mut k)
            .and(self.y)
            .and(self.selected)
            .for_each(|kv, &yv, &s| *kv = if s { *kv - yv } else { Complex64::default() });
        k
    }

    fn objective(&self, x: &Array2<Complex64>) -> f64 {
        let data: f64 = self.data_residual(x).iter().map(|v| v.norm_sqr()).sum();
        let wav = if self.config.wavelet_weight > 0.0 {
            haar_forward(x).iter().map(|v| v.norm()).sum::<f64>()
        } else {
            0.0
        };
        let tv = if self.config.tv_weight > 0.0 {
            total_variation(x)
        } else {
            0.0
        };
        data + self.config.wavelet_weight * wav + self.config.tv_weight * tv
    }

    fn prox_gradient(&self, x: &Array2<Complex64>) -> Array2<Complex64> {
        let step = self.config.step;
        let mut grad = self.data_residual(x);
        fourier::ifft2_inplace(&mut grad);
        let mut z = x - &(grad * (2.0 * step));
        if self.config.wavelet_weight > 0.0 {
            let t = step * self.config.wavelet_weight;
            let w = haar_forward(&z).mapv(|v| soft_threshold(v, t));
            z = haar_inverse(&w);
        }
        tv_prox(&z, step * self.config.tv_weight, self.config.tv_inner)
    }
}

/// Runs the baseline solver from the zero-filled image of `y`.
pub fn cs_baseline(y: &KSpace, mask: &SamplingMask, config: &CsBaselineConfig) -> Result<CsOutput> {
    config.validate()?;
    if y.geometry() != mask.geometry() {
        return Err(mismatch(mask.size(), y.size()));
    }
    let zf = fourier::ifft2(y.coefficients());
    let peak = zf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = if config.normalize && peak > 0.0 {
        peak
    } else {
        1.0
    };
    let data = y.coefficients() / Complex64::new(scale, 0.0);
    let problem = Problem {
        y: &data,
        selected: mask.selected(),
        config: *config,
    };
    let mut x = zf / Complex64::new(scale, 0.0);
    let mut fx = problem.objective(&x);
    let mut objective = vec![fx];
    let mut momentum = x.clone();
    let mut t = 1.0f64;
    let mut rejected_run = 0usize;
    for _ in 0..config.iterations {
        let z = problem.prox_gradient(&momentum);
        let fz = problem.objective(&z);
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
            rejected_run = 0;
        } else {
            rejected_run += 1;
        }
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        momentum = &x + &((&z - &x) * (t / tn)) + ((&x - &x_prev) * ((t - 1.0) / tn));
        t = tn;
        objective.push(fx);
    }
    let window = (config.iterations / 4).max(10);
    Ok(CsOutput {
        image: Image::new(y.geometry(), x * Complex64::new(scale, 0.0))?,
        objective,
        non_convergence: config.iterations >= window && rejected_run >= window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_complex_image;

    #[test]
    fn haar_is_orthonormal_for_odd_and_even() {
        for n in [8, 9, 257] {
            let x = random_complex_image(n, n as u64).into_pixels();
            let w = haar_forward(&x);
            let e0: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            let e1: f64 = w.iter().map(|v| v.norm_sqr()).sum();
            assert!((e0 - e1).abs() < 1e-10 * e0);
            let back = haar_inverse(&w);
            let err = (&back - &x).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "n={n}");
        }
    }

    #[test]
    fn haar_of_constant_is_sparse() {
        let x = Array2::from_elem((4, 4), Complex64::new(1.0, 0.0));
        let w = haar_forward(&x);
        assert_eq!(w.iter().filter(|v| v.norm() > 1e-12).count(), 4);
    }

    #[test]
    fn tv_of_step() {
        let x = Array2::from_shape_fn((4, 4), |(i, _)| {
            Complex64::new(if i < 2 { 0.0 } else { 3.0 }, 0.0)
        });
        assert_eq!(total_variation(&x), 12.0);
    }

    #[test]
    fn tv_prox_decreases_its_objective() {
        let b = random_complex_image(12, 4).into_pixels();
        let w = 0.05;
        let x = tv_prox(&b, w, 50);
        let obj = |x: &Array2<Complex64>| {
            0.5 * (x - &b).iter().map(|v| v.norm_sqr()).sum::<f64>() + w * total_variation(x)
        };
        assert!(obj(&x) < obj(&b));
        // constant input is a fixed point
        let c = Array2::from_elem((6, 6), Complex64::new(2.0, -1.0));
        let out = tv_prox(&c, 1.0, 10);
        assert!((&out - &c).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn soft_threshold_complex() {
        let v = Complex64::new(3.0, 4.0);
        assert_eq!(soft_threshold(v, 6.0), Complex64::default());
        let s = soft_threshold(v, 1.0);
        assert!((s.norm() - 4.0).abs() < 1e-12);
        assert!((s.arg() - v.arg()).abs() < 1e-12);
    }

    #[test]
    fn config_checks() {
        assert!(CsBaselineConfig::default().validate().is_ok());
        assert!(CsBaselineConfig {
            tv_weight: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CsBaselineConfig {
            step: 0.6,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
