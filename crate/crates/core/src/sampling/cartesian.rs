use std::cmp::Ordering;

use ndarray::Array2;
use rand::Rng;

use super::{check_fraction, fill_centre_disk, fraction_of, Provenance, SamplingMask};
use crate::error::{FcsError, Result};
use crate::geometry::GridGeometry;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartesianDims {
    /// Whole phase-encode rows (first index `u`).
    OneD,
    /// Individual k-space points.
    TwoD,
}

/// Variable-density random Cartesian mask parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianSpec {
    pub geometry: GridGeometry,
    pub r: f64,
    /// Exponent of the polynomial density `(1 - 2|k|/N)^alpha`.
    pub alpha: f64,
    pub ctr: f64,
    pub seed: u64,
    pub dims: CartesianDims,
}

impl CartesianSpec {
    pub fn validate(&self) -> Result<()> {
        check_fraction(self.r, false)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(FcsError::InvalidParameter(format!(
                "alpha = {}",
                self.alpha
            )));
        }
        if !(self.ctr >= 0.0 && self.ctr.is_finite()) {
            return Err(FcsError::InvalidParameter(format!("ctr = {}", self.ctr)));
        }
        Ok(())
    }

    /// Rows (1D) or points (2D) to draw, DC included.
    pub fn draw_count(&self) -> usize {
        let n = self.geometry.size();
        let total = match self.dims {
            CartesianDims::OneD => n,
            CartesianDims::TwoD => n * n,
        };
        fraction_of(self.r, total).max(1)
    }
}

/// Relative selection weight of DFT index `k` (any representative).
pub fn density_weight(geometry: GridGeometry, k: usize, alpha: f64) -> f64 {
    let kc = geometry.centred(k).unsigned_abs() as f64;
    let base = (1.0 - 2.0 * kc / geometry.size() as f64).max(0.0);
    base.powf(alpha)
}

/// Full draw order for `spec`: DC first, then weighted sampling without
/// replacement (Efraimidis-Spirakis keys `ln(U) / w`). Taking the first `k`
/// entries is a weighted draw of size `k`; zero-weight items come last in
/// index order.
pub fn cartesian_order(spec: &CartesianSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let g = spec.geometry;
    let n = g.size();
    let mut rng = stream(spec.seed, Stream::CartesianDraw);
    let weights: Vec<f64> = (0..n).map(|k| density_weight(g, k, spec.alpha)).collect();
    let total = match spec.dims {
        CartesianDims::OneD => n,
        CartesianDims::TwoD => n * n,
    };
    let mut keyed: Vec<(f64, usize)> = (0..total)
        .map(|idx| {
            // one uniform per item keeps the stream position index-aligned
            let u: f64 = 1.0 - rng.random::<f64>();
            let w = match spec.dims {
                CartesianDims::OneD => weights[idx],
                CartesianDims::TwoD => weights[idx / n] * weights[idx % n],
            };
            let key = if idx == 0 {
                f64::INFINITY
            } else if w > 0.0 {
                u.ln() / w
            } else {
                f64::NEG_INFINITY
            };
            (key, idx)
        })
        .collect();
    keyed.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Random variable-density Cartesian mask.
pub fn build_cartesian(spec: CartesianSpec) -> Result<SamplingMask> {
    let g = spec.geometry;
    let n = g.size();
    let mut chosen = cartesian_order(&spec)?;
    chosen.truncate(spec.draw_count());

    let mut selected = Array2::from_elem((n, n), false);
    match spec.dims {
        CartesianDims::OneD => {
            for &row in &chosen {
                selected.row_mut(row).fill(true);
            }
        }
        CartesianDims::TwoD => {
            for &idx in &chosen {
                selected[[idx / n, idx % n]] = true;
            }
        }
    }
    fill_centre_disk(&mut selected, g, spec.ctr);
    SamplingMask::new(g, selected, Provenance::Cartesian { spec, chosen })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::actual_reduction;

    fn spec(n: usize, r: f64, alpha: f64, dims: CartesianDims, seed: u64) -> CartesianSpec {
        CartesianSpec {
            geometry: GridGeometry::new(n).unwrap(),
            r,
            alpha,
            ctr: 0.0,
            seed,
            dims,
        }
    }

    #[test]
    fn uniform_full_is_all_ones() {
        for dims in [CartesianDims::OneD, CartesianDims::TwoD] {
            let m = build_cartesian(spec(16, 1.0, 0.0, dims, 3)).unwrap();
            assert!(m.is_full());
        }
    }

    #[test]
    fn one_d_rows_are_full() {
        let m = build_cartesian(spec(64, 0.25, 2.0, CartesianDims::OneD, 5)).unwrap();
        let mut rows = 0;
        for row in m.selected().rows() {
            let c = row.iter().filter(|&&s| s).count();
            assert!(c == 0 || c == 64);
            rows += usize::from(c == 64);
        }
        assert_eq!(rows, 16);
        assert!(m.selected().row(0).iter().all(|&s| s));
        assert_eq!(actual_reduction(&m), 4.0);
    }

    #[test]
    fn two_d_point_count() {
        let m = build_cartesian(spec(32, 0.25, 1.0, CartesianDims::TwoD, 5)).unwrap();
        assert_eq!(m.count(), 256);
        assert!(m.selected()[[0, 0]]);
    }

    #[test]
    fn even_edge_row_needs_zero_weight_fallback() {
        // the -N/2 row has weight 0 for alpha > 0; still reachable at r = 1
        let m = build_cartesian(spec(16, 1.0, 2.0, CartesianDims::OneD, 1)).unwrap();
        assert!(m.is_full());
    }

    #[test]
    fn weights() {
        let g = GridGeometry::new(256).unwrap();
        assert_eq!(density_weight(g, 0, 2.0), 1.0);
        assert_eq!(density_weight(g, 128, 2.0), 0.0);
        assert_eq!(density_weight(g, 128, 0.0), 1.0);
        assert!((density_weight(g, 64, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(density_weight(g, 1, 3.0), density_weight(g, 255, 3.0));
    }

    #[test]
    fn deterministic_and_prefix_consistent() {
        let a = spec(32, 0.25, 2.0, CartesianDims::TwoD, 77);
        assert_eq!(build_cartesian(a).unwrap(), build_cartesian(a).unwrap());
        let order = cartesian_order(&a).unwrap();
        let b = CartesianSpec { r: 0.1, ..a };
        let Provenance::Cartesian { chosen, .. } = build_cartesian(b).unwrap().provenance().clone()
        else {
            panic!()
        };
        assert_eq!(&order[..chosen.len()], &chosen[..]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(build_cartesian(spec(16, 0.0, 1.0, CartesianDims::OneD, 0)).is_err());
        assert!(build_cartesian(spec(16, 0.5, -1.0, CartesianDims::OneD, 0)).is_err());
    }
}
