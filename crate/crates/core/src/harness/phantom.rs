//! Shepp-Logan head phantom (the higher-contrast variant used by most
//! imaging toolkits), rasterised at pixel centres without anti-aliasing.

use ndarray::Array2;

use crate::error::{FcsError, Result};

/// `(intensity, semi-axis a, semi-axis b, centre x, centre y, angle deg)`
/// on the `[-1, 1]^2` field of view.
pub const SHEPP_LOGAN_ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
];

/// Field-of-view coordinates of pixel `(row, col)`: column maps to `x`
/// left to right, row maps to `y` top to bottom.
pub fn pixel_centre(row: usize, col: usize, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let x = (2.0 * col as f64 + 1.0 - nf) / nf;
    let y = (nf - 1.0 - 2.0 * row as f64) / nf;
    (x, y)
}

pub fn inside_ellipse(e: &(f64, f64, f64, f64, f64, f64), x: f64, y: f64) -> bool {
    let (_, a, b, cx, cy, deg) = *e;
    let (s, c) = deg.to_radians().sin_cos();
    let (dx, dy) = (x - cx, y - cy);
    let u = dx * c + dy * s;
    let v = -dx * s + dy * c;
    (u / a).powi(2) + (v / b).powi(2) <= 1.0
}

/// `N x N` phantom scaled to `[0, 255]`.
pub fn shepp_logan(n: usize) -> Result<Array2<f64>> {
    if n < 16 {
        return Err(FcsError::InvalidParameter(format!(
            "phantom size {n} too small (minimum 16)"
        )));
    }
    Ok(Array2::from_shape_fn((n, n), |(r, c)| {
        let (x, y) = pixel_centre(r, c, n);
        let v: f64 = SHEPP_LOGAN_ELLIPSES
            .iter()
            .filter(|e| inside_ellipse(e, x, y))
            .map(|e| e.0)
            .sum();
        (v.clamp(0.0, 1.0) * 255.0).max(0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outside_is_zero() {
        let p = shepp_logan(64).unwrap();
        assert_eq!(p[[0, 0]], 0.0);
        assert_eq!(p[[63, 32]], 0.0);
        assert_eq!(p[[32, 0]], 0.0);
        assert!(p.iter().all(|&v| (0.0..=255.0).contains(&v)));
        assert!(shepp_logan(8).is_err());
    }

    #[test]
    fn skull_and_background_levels() {
        let p = shepp_logan(256).unwrap();
        // skull rim just inside the outer ellipse on the horizontal midline
        let (_, col) = (128, (128.0 - 0.67 * 128.0) as usize);
        assert_eq!(p[[128, col]], 255.0);
        // brain matter near the centre-top is 0.2 + 0.1 (ellipse 5)
        let v = p[[128 - 45, 128]];
        assert!((v - 0.3 * 255.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn area_sum_matches_analytic() {
        let n = 257;
        let p = shepp_logan(n).unwrap();
        let analytic: f64 = SHEPP_LOGAN_ELLIPSES
            .iter()
            .map(|&(rho, a, b, ..)| rho * std::f64::consts::PI * a * b)
            .sum::<f64>()
            * (n as f64 / 2.0).powi(2)
            * 255.0;
        let got = p.sum();
        assert!(
            (got - analytic).abs() / analytic < 0.01,
            "{got} vs {analytic}"
        );
    }

    #[test]
    fn mirror_symmetric_where_ellipses_are() {
        // only the asymmetric ventricles and the three small bottom ellipses
        // break left-right symmetry; everywhere else must mirror exactly
        let n = 129;
        let p = shepp_logan(n).unwrap();
        let asym = [2usize, 3, 7, 8, 9];
        for r in 0..n {
            for c in 0..n {
                let (x, y) = pixel_centre(r, c, n);
                let touches = asym.iter().any(|&i| {
                    inside_ellipse(&SHEPP_LOGAN_ELLIPSES[i], x, y)
                        || inside_ellipse(&SHEPP_LOGAN_ELLIPSES[i], -x, y)
                });
                if !touches {
                    assert_eq!(p[[r, c]], p[[r, n - 1 - c]], "({r}, {c})");
                }
            }
        }
    }
}
