//! k-space sampling masks.
//!
//! Two families are provided: the pseudo-random fractal built from whole
//! discrete Radon slices ([`build_pfrac`]), and variable-density Cartesian
//! baselines selecting phase-encode rows or individual points
//! ([`build_cartesian`]). Both can add a fully sampled centre disk.

mod cartesian;
mod fractal;
pub mod io;

pub use cartesian::{
    build_cartesian, cartesian_order, density_weight, CartesianDims, CartesianSpec,
};
pub use fractal::{
    build_pfrac, build_pfrac_cropped, build_pfrac_lines, deterministic_slopes,
    first_point_distance_sq, random_slopes, FractalSpec,
};

use ndarray::Array2;

use crate::error::{mismatch, FcsError, Result};
use crate::geometry::{GridGeometry, Slope};
use crate::grid::KSpace;

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Slices drawn on `spec.geometry`. When that grid is larger than the
    /// mask, the mask is its centred crop (see [`crop_index`]).
    PFrac {
        spec: FractalSpec,
        slopes: Vec<Slope>,
    },
    Cartesian {
        spec: CartesianSpec,
        /// Selected rows (1D) or flattened `u * N + v` point indices (2D),
        /// in draw order.
        chosen: Vec<usize>,
    },
    /// Hand-built or loaded without generative metadata.
    Custom,
}

impl Provenance {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Provenance::PFrac { .. } => "pfrac",
            Provenance::Cartesian { spec, .. } => match spec.dims {
                CartesianDims::OneD => "cartesian1d",
                CartesianDims::TwoD => "cartesian2d",
            },
            Provenance::Custom => "custom",
        }
    }

    pub fn ctr(&self) -> f64 {
        match self {
            Provenance::PFrac { spec, .. } => spec.ctr,
            Provenance::Cartesian { spec, .. } => spec.ctr,
            Provenance::Custom => 0.0,
        }
    }
}

/// Boolean k-space selector in natural DFT ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    geometry: GridGeometry,
    selected: Array2<bool>,
    provenance: Provenance,
}

impl SamplingMask {
    /// Wraps a raw grid. DC is forced on so the mask invariant holds.
    pub fn new(
        geometry: GridGeometry,
        mut selected: Array2<bool>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = geometry.size();
        if selected.dim() != (n, n) {
            let (r, c) = selected.dim();
            return Err(mismatch(format!("{n}x{n}"), format!("{r}x{c}")));
        }
        selected[[0, 0]] = true;
        Ok(Self {
            geometry,
            selected,
            provenance,
        })
    }

    pub fn full(geometry: GridGeometry) -> Self {
        let n = geometry.size();
        Self {
            geometry,
            selected: Array2::from_elem((n, n), true),
            provenance: Provenance::Custom,
        }
    }

    pub fn dc_only(geometry: GridGeometry) -> Self {
        let n = geometry.size();
        let mut selected = Array2::from_elem((n, n), false);
        selected[[0, 0]] = true;
        Self {
            geometry,
            selected,
            provenance: Provenance::Custom,
        }
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn size(&self) -> usize {
        self.geometry.size()
    }

    pub fn selected(&self) -> &Array2<bool> {
        &self.selected
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn is_full(&self) -> bool {
        self.selected.iter().all(|&s| s)
    }

    /// Zeroes every unselected coefficient of `kspace`.
    pub fn apply(&self, kspace: &mut KSpace) -> Result<()> {
        if kspace.geometry() != self.geometry {
            return Err(mismatch(self.size(), kspace.size()));
        }
        kspace
            .coefficients_mut()
            .zip_mut_with(&self.selected, |c, &keep| {
                if !keep {
                    *c = Default::default();
                }
            });
        Ok(())
    }
}

/// Index on a `to`-sized grid of DFT index `k` of a larger `from` grid
/// when cropping to the centred band `[-to/2, to - to/2)`, or `None` if the
/// frequency falls outside it.
pub fn crop_index(k: usize, from: GridGeometry, to: GridGeometry) -> Option<usize> {
    let c = from.centred(k);
    let half = (to.size() / 2) as i64;
    let hi = to.size() as i64 - half;
    (-half..hi).contains(&c).then(|| to.wrap(c))
}

/// Centred crop of a larger boolean k-space grid.
pub fn crop_selection(
    selected: &Array2<bool>,
    from: GridGeometry,
    to: GridGeometry,
) -> Result<Array2<bool>> {
    let (n, m) = (from.size(), to.size());
    if selected.dim() != (n, n) || m > n {
        return Err(mismatch(format!("{n}x{n} grid cropped to <= {n}"), m));
    }
    let mut out = Array2::from_elem((m, m), false);
    for ((u, v), &s) in selected.indexed_iter() {
        if let (true, Some(a), Some(b)) = (s, crop_index(u, from, to), crop_index(v, from, to)) {
            out[[a, b]] = true;
        }
    }
    Ok(out)
}

/// `N^2 / |selected|`.
pub fn actual_reduction(mask: &SamplingMask) -> f64 {
    let n = mask.size();
    (n * n) as f64 / mask.count() as f64
}

/// Marks every point of the closed disk `u_c^2 + v_c^2 <= ctr^2` in centred
/// coordinates.
pub fn fill_centre_disk(selected: &mut Array2<bool>, geometry: GridGeometry, ctr: f64) {
    if ctr <= 0.0 {
        return;
    }
    let r2 = ctr * ctr;
    for ((u, v), s) in selected.indexed_iter_mut() {
        let cu = geometry.centred(u) as f64;
        let cv = geometry.centred(v) as f64;
        if cu * cu + cv * cv <= r2 {
            *s = true;
        }
    }
}

pub(crate) fn check_fraction(r: f64, allow_zero: bool) -> Result<()> {
    let ok = r.is_finite() && r <= 1.0 && if allow_zero { r >= 0.0 } else { r > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(FcsError::InvalidParameter(format!(
            "sampling fraction r = {r} out of range"
        )))
    }
}

/// `floor(r * count)` with a small allowance so that `r = k / count` maps
/// back to `k` despite rounding.
pub(crate) fn fraction_of(r: f64, count: usize) -> usize {
    ((r * count as f64) + 1e-9).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_of_simple_masks() {
        let g = GridGeometry::new(8).unwrap();
        assert_eq!(actual_reduction(&SamplingMask::full(g)), 1.0);
        let half = Array2::from_shape_fn((8, 8), |(u, _)| u % 2 == 0);
        let m = SamplingMask::new(g, half, Provenance::Custom).unwrap();
        assert_eq!(actual_reduction(&m), 2.0);
    }

    #[test]
    fn dc_is_forced() {
        let g = GridGeometry::new(5).unwrap();
        let m = SamplingMask::new(g, Array2::from_elem((5, 5), false), Provenance::Custom).unwrap();
        assert!(m.selected()[[0, 0]]);
        assert_eq!(m.count(), 1);
    }

    #[test]
    fn centre_disk_is_symmetric_and_sized() {
        let g = GridGeometry::new(17).unwrap();
        let mut sel = Array2::from_elem((17, 17), false);
        fill_centre_disk(&mut sel, g, 2.0);
        // lattice points with x^2 + y^2 <= 4
        assert_eq!(sel.iter().filter(|&&s| s).count(), 13);
        for ((u, v), &s) in sel.indexed_iter() {
            assert_eq!(s, sel[[(17 - u) % 17, (17 - v) % 17]]);
        }
    }

    #[test]
    fn apply_zeroes_unselected() {
        let g = GridGeometry::new(5).unwrap();
        let mut k = KSpace::new(
            g,
            Array2::from_elem((5, 5), num_complex::Complex64::new(1.0, 1.0)),
        )
        .unwrap();
        SamplingMask::dc_only(g).apply(&mut k).unwrap();
        assert_eq!(
            k.coefficients().iter().filter(|c| c.norm() > 0.0).count(),
            1
        );
    }

    #[test]
    fn fraction_rounding() {
        assert_eq!(fraction_of(64.0 / 257.0, 257), 64);
        assert_eq!(fraction_of(0.25, 256), 64);
        assert_eq!(fraction_of(0.0, 256), 0);
    }
}
