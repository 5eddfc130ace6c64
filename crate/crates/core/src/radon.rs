//! Discrete (finite) Radon transform over the periodic `N x N` grid.
//!
//! Projections are taken along the discrete lines
//!
//! ```text
//! M slopes:  y = m x + t      (mod N),  m in [0, N)
//! S slopes:  x = p s y + t    (mod N),  s in [0, N/p)
//! ```
//!
//! and inverted through the discrete Fourier slice theorem: the unitary 1D
//! DFT of projection `R(slope, .)` equals `sqrt(N)` times the unitary 2D DFT
//! of the image sampled along [`slice_points`]. For the M slope `m` the slice
//! is `{(-k m, k)}`, for the S slope `s` it is `{(k, -k p s)}`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{mismatch, FcsError, Result};
use crate::fourier;
use crate::geometry::{GridGeometry, Slope, SlopeKind};
use crate::grid::Image;

/// One projection: the line sums for every translate `t` in `[0, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub slope: Slope,
    pub bins: Vec<Complex64>,
}

/// A full or partial set of projections in canonical slope order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    geometry: GridGeometry,
    rows: Vec<Projection>,
}

impl Sinogram {
    /// Rows are sorted into canonical order; duplicate slopes are rejected.
    pub fn new(geometry: GridGeometry, mut rows: Vec<Projection>) -> Result<Self> {
        geometry.require_prime_power()?;
        let n = geometry.size();
        for row in &rows {
            geometry.check_slope(row.slope)?;
            if row.bins.len() != n {
                return Err(mismatch(
                    format!("{n} bins for {}", row.slope),
                    row.bins.len(),
                ));
            }
        }
        rows.sort_by_key(|r| r.slope);
        if rows.windows(2).any(|w| w[0].slope == w[1].slope) {
            return Err(FcsError::InvalidParameter(
                "duplicate slope in sinogram".into(),
            ));
        }
        Ok(Self { geometry, rows })
    }

    pub fn zeros(geometry: GridGeometry, slopes: &[Slope]) -> Result<Self> {
        let rows = slopes
            .iter()
            .map(|&slope| Projection {
                slope,
                bins: vec![Complex64::default(); geometry.size()],
            })
            .collect();
        Self::new(geometry, rows)
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn rows(&self) -> &[Projection] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Projection] {
        &mut self.rows
    }

    pub fn slopes(&self) -> Vec<Slope> {
        self.rows.iter().map(|r| r.slope).collect()
    }

    pub fn projection(&self, slope: Slope) -> Option<&Projection> {
        self.rows
            .binary_search_by_key(&slope, |r| r.slope)
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.geometry.slope_count()
    }

    /// `self - other`, row by row; slope sets must match.
    pub fn sub(&self, other: &Sinogram) -> Result<Sinogram> {
        if self.geometry != other.geometry || self.slopes() != other.slopes() {
            return Err(mismatch("matching sinogram slopes", "different slope sets"));
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| Projection {
                slope: a.slope,
                bins: a.bins.iter().zip(&b.bins).map(|(x, y)| x - y).collect(),
            })
            .collect();
        Ok(Sinogram {
            geometry: self.geometry,
            rows,
        })
    }
}

/// All `N + N/p` projections of `image`.
pub fn drt_forward(image: &Image) -> Result<Sinogram> {
    let g = image.geometry();
    g.require_prime_power()?;
    let slopes: Vec<Slope> = g.slopes().collect();
    drt_forward_slopes(image, &slopes)
}

/// Projections of `image` for the given slopes only (the under-sampled DRT).
pub fn drt_forward_slopes(image: &Image, slopes: &[Slope]) -> Result<Sinogram> {
    let g = image.geometry();
    g.require_prime_power()?;
    let n = g.size();
    let p = g.smallest_prime();
    let px = image.pixels();
    let mut rows = Vec::with_capacity(slopes.len());
    for &slope in slopes {
        g.check_slope(slope)?;
        let mut bins = vec![Complex64::default(); n];
        match slope.kind {
            SlopeKind::M => {
                let m = slope.value;
                for x in 0..n {
                    let offset = (m * x) % n;
                    for (t, bin) in bins.iter_mut().enumerate() {
                        *bin += px[[x, (offset + t) % n]];
                    }
                }
            }
            SlopeKind::S => {
                let step = (p * slope.value) % n;
                for y in 0..n {
                    let offset = (step * y) % n;
                    for (t, bin) in bins.iter_mut().enumerate() {
                        *bin += px[[(offset + t) % n, y]];
                    }
                }
            }
        }
        rows.push(Projection { slope, bins });
    }
    Sinogram::new(g, rows)
}

/// Exact inverse of [`drt_forward`] via the discrete Fourier slice theorem.
pub fn drt_inverse(sinogram: &Sinogram) -> Result<Image> {
    if !sinogram.is_complete() {
        return Err(FcsError::IncompleteSinogram {
            missing: sinogram.geometry.slope_count() - sinogram.rows.len(),
        });
    }
    back_project(sinogram)
}

/// Fourier back-projection of whatever slopes are present.
///
/// Each projection's slice is placed in k-space, points hit by several of the
/// present slices are divided by their hit count, and the result is inverted.
/// For a complete sinogram this is [`drt_inverse`]; for a partial one it is
/// the zero-filled reconstruction over the union of the present slices.
pub fn back_project(sinogram: &Sinogram) -> Result<Image> {
    let g = sinogram.geometry;
    let n = g.size();
    let scale = 1.0 / (n as f64).sqrt();
    let mut kspace = Array2::<Complex64>::zeros((n, n));
    let mut counts = Array2::<u32>::zeros((n, n));
    for row in &sinogram.rows {
        let slice = dfst_slice(&row.bins, g)?;
        for (value, (u, v)) in slice.into_iter().zip(slice_points(row.slope, g)?) {
            kspace[[u, v]] += value * scale;
            counts[[u, v]] += 1;
        }
    }
    kspace.zip_mut_with(&counts, |k, &c| {
        if c > 1 {
            *k /= c as f64;
        }
    });
    fourier::ifft2_inplace(&mut kspace);
    Image::new(g, kspace)
}

/// The `N` k-space coordinates `(u, v)` of the slice for `slope`, indexed by
/// slice frequency `k`; entry 0 is always DC.
pub fn slice_points(slope: Slope, geometry: GridGeometry) -> Result<Vec<(usize, usize)>> {
    geometry.require_prime_power()?;
    geometry.check_slope(slope)?;
    let n = geometry.size();
    let p = geometry.smallest_prime();
    let pts = match slope.kind {
        SlopeKind::M => {
            let m = slope.value;
            (0..n).map(|k| ((n - (k * m) % n) % n, k)).collect()
        }
        SlopeKind::S => {
            let step = (p * slope.value) % n;
            (0..n).map(|k| (k, (n - (k * step) % n) % n)).collect()
        }
    };
    Ok(pts)
}

/// Per-point count of slices passing through it when every slope is drawn.
pub fn multiplicity_map(geometry: GridGeometry) -> Result<Array2<u32>> {
    geometry.require_prime_power()?;
    let slopes: Vec<Slope> = geometry.slopes().collect();
    multiplicity_for(geometry, &slopes)
}

/// Per-point count of slices for an arbitrary slope subset.
pub fn multiplicity_for(geometry: GridGeometry, slopes: &[Slope]) -> Result<Array2<u32>> {
    let n = geometry.size();
    let mut counts = Array2::zeros((n, n));
    for &slope in slopes {
        for (u, v) in slice_points(slope, geometry)? {
            counts[[u, v]] += 1;
        }
    }
    Ok(counts)
}

/// Unitary 1D DFT of one projection: the k-space slice scaled by `sqrt(N)`.
pub fn dfst_slice(projection: &[Complex64], geometry: GridGeometry) -> Result<Vec<Complex64>> {
    if projection.len() != geometry.size() {
        return Err(mismatch(geometry.size(), projection.len()));
    }
    Ok(fourier::fft(projection))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_complex_image, random_real_image};

    fn geom(n: usize) -> GridGeometry {
        GridGeometry::new(n).unwrap()
    }

    #[test]
    fn constant_image_projects_to_n_times_value() {
        let g = geom(5);
        let img = Image::new(g, Array2::from_elem((5, 5), Complex64::new(2.5, 0.0))).unwrap();
        let sino = drt_forward(&img).unwrap();
        assert_eq!(sino.rows().len(), 6);
        for row in sino.rows() {
            assert!(row.bins.iter().all(|b| (b - 12.5).norm() < 1e-12));
        }
    }

    #[test]
    fn delta_image_projects_to_t_zero() {
        let g = geom(5);
        let mut img = Image::zeros(g);
        img.pixels_mut()[[0, 0]] = Complex64::new(1.0, 0.0);
        let sino = drt_forward(&img).unwrap();
        for row in sino.rows() {
            assert_eq!(row.bins[0], Complex64::new(1.0, 0.0), "{}", row.slope);
            assert!(row.bins[1..].iter().all(|b| b.norm() == 0.0));
        }
    }

    #[test]
    fn row_order_is_m_then_s() {
        let g = geom(9);
        let sino = drt_forward(&Image::zeros(g)).unwrap();
        let slopes = sino.slopes();
        assert_eq!(slopes.len(), 12);
        assert_eq!(slopes[0], Slope::m(0));
        assert_eq!(slopes[8], Slope::m(8));
        assert_eq!(slopes[9], Slope::s(0));
        assert_eq!(slopes[11], Slope::s(2));
    }

    #[test]
    fn mass_is_conserved_per_slope() {
        let img = random_real_image(17, 11);
        let total = img.sum();
        let sino = drt_forward(&img).unwrap();
        let scale = img.pixels().iter().map(|v| v.norm()).sum::<f64>();
        for row in sino.rows() {
            let s: Complex64 = row.bins.iter().sum();
            assert!((s - total).norm() < 1e-12 * scale);
            // real input stays real
            assert!(row.bins.iter().all(|b| b.im == 0.0));
        }
    }

    #[test]
    fn round_trip_primes_and_prime_powers() {
        for (n, seed) in [(5, 1), (17, 2), (4, 3), (8, 4), (9, 5), (25, 6)] {
            let img = random_complex_image(n, seed);
            let back = drt_inverse(&drt_forward(&img).unwrap()).unwrap();
            let err = img.max_abs_diff(&back);
            assert!(err < 1e-9, "N={n} err={err}");
        }
    }

    #[test]
    fn zero_sinogram_inverts_to_zero() {
        let g = geom(7);
        let slopes: Vec<_> = g.slopes().collect();
        let img = drt_inverse(&Sinogram::zeros(g, &slopes).unwrap()).unwrap();
        assert!(img.pixels().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn composite_sizes_are_rejected() {
        let img = Image::zeros(geom(12));
        assert!(matches!(
            drt_forward(&img),
            Err(FcsError::UnsupportedComposite(12))
        ));
        assert!(multiplicity_map(geom(6)).is_err());
    }

    #[test]
    fn incomplete_sinogram_is_rejected() {
        let g = geom(5);
        let sino = Sinogram::zeros(g, &[Slope::m(0), Slope::s(0)]).unwrap();
        assert!(matches!(
            drt_inverse(&sino),
            Err(FcsError::IncompleteSinogram { missing: 4 })
        ));
    }

    #[test]
    fn sinogram_validates_rows() {
        let g = geom(5);
        let bad_len = Projection {
            slope: Slope::m(1),
            bins: vec![Complex64::default(); 4],
        };
        assert!(Sinogram::new(g, vec![bad_len]).is_err());
        assert!(Sinogram::zeros(g, &[Slope::m(1), Slope::m(1)]).is_err());
        assert!(Sinogram::zeros(g, &[Slope::s(1)]).is_err());
    }

    #[test]
    fn slice_points_start_at_dc() {
        for n in [5, 8, 17, 27] {
            let g = geom(n);
            for s in g.slopes() {
                let pts = slice_points(s, g).unwrap();
                assert_eq!(pts.len(), n);
                assert_eq!(pts[0], (0, 0));
            }
        }
        assert!(slice_points(Slope::m(5), geom(5)).is_err());
    }

    #[test]
    fn prime_multiplicity_tiles_once() {
        let g = geom(5);
        let map = multiplicity_map(g).unwrap();
        assert_eq!(map[[0, 0]], 6);
        let off_dc = map.iter().skip(1).all(|&c| c == 1);
        assert!(off_dc);
        assert_eq!(map.sum(), 6 * 5);
    }

    #[test]
    fn prime_power_multiplicity_by_accumulation() {
        let g = geom(4);
        let map = multiplicity_map(g).unwrap();
        // brute-force accumulation straight from the line equations
        let mut oracle = Array2::<u32>::zeros((4, 4));
        for m in 0..4usize {
            for k in 0..4usize {
                oracle[[(4 * 4 - k * m) % 4, k]] += 1;
            }
        }
        for s in 0..2usize {
            for k in 0..4usize {
                oracle[[k, (16 - 2 * s * k) % 4]] += 1;
            }
        }
        assert_eq!(map, oracle);
        assert!(map.iter().all(|&c| c >= 1));
        assert_eq!(map.sum() as usize, 6 * 4);
    }

    #[test]
    fn dfst_slice_edge_cases() {
        let g = geom(5);
        let out = dfst_slice(&[Complex64::new(3.0, 0.0); 5], g).unwrap();
        assert!((out[0] - Complex64::new(3.0 * 5f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!(out[1..].iter().all(|v| v.norm() < 1e-12));
        let zeros = dfst_slice(&[Complex64::default(); 5], g).unwrap();
        assert!(zeros.iter().all(|v| v.norm() == 0.0));
        assert!(dfst_slice(&[Complex64::default(); 4], g).is_err());
    }
}
