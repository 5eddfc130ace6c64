use ndarray::Array2;
use rand::Rng;

use super::{
    check_fraction, crop_selection, fill_centre_disk, fraction_of, Provenance, SamplingMask,
};
use crate::error::{FcsError, Result};
use crate::geometry::{GridGeometry, Slope};
use crate::radon::slice_points;
use crate::rng::{stream, Stream};

/// Parameters of a pseudo-random fractal mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractalSpec {
    pub geometry: GridGeometry,
    /// Fraction of `N` giving the number of lines, `floor(r N)`. `r = 1`
    /// selects every slope (full tiling).
    pub r: f64,
    /// Number of deterministic, centre-tiling slopes.
    pub mu: usize,
    /// Radius of the fully sampled centre disk; 0 disables it.
    pub ctr: f64,
    pub seed: u64,
}

impl FractalSpec {
    pub fn line_count(&self) -> usize {
        if self.r >= 1.0 {
            self.geometry.slope_count()
        } else {
            fraction_of(self.r, self.geometry.size())
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.require_prime_power()?;
        check_fraction(self.r, true)?;
        if !(self.ctr >= 0.0 && self.ctr.is_finite()) {
            return Err(FcsError::InvalidParameter(format!("ctr = {}", self.ctr)));
        }
        let lines = self.line_count();
        if self.mu > lines {
            return Err(FcsError::InvalidParameter(format!(
                "mu = {} exceeds line count {lines}",
                self.mu
            )));
        }
        if lines > self.geometry.slope_count() {
            return Err(FcsError::InvalidParameter(format!(
                "{lines} lines requested but only {} slopes exist",
                self.geometry.slope_count()
            )));
        }
        Ok(())
    }
}

/// Squared distance from the origin of the slice's `k = 1` sample, in
/// centred coordinates.
pub fn first_point_distance_sq(slope: Slope, geometry: GridGeometry) -> Result<i64> {
    let (u, v) = slice_points(slope, geometry)?[1];
    let (cu, cv) = (geometry.centred(u), geometry.centred(v));
    Ok(cu * cu + cv * cv)
}

/// The `mu` slopes whose first non-DC sample lies closest to the origin.
/// Ties go to M before S, then to the smaller slope value.
pub fn deterministic_slopes(geometry: GridGeometry, mu: usize) -> Result<Vec<Slope>> {
    geometry.require_prime_power()?;
    if mu > geometry.slope_count() {
        return Err(FcsError::InvalidParameter(format!(
            "mu = {mu} exceeds slope count {}",
            geometry.slope_count()
        )));
    }
    let mut ranked = geometry
        .slopes()
        .map(|s| first_point_distance_sq(s, geometry).map(|d| (d, s)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort();
    Ok(ranked.into_iter().take(mu).map(|(_, s)| s).collect())
}

/// Draws `nu` distinct slopes uniformly from those not in `exclude`.
///
/// The eligible pool is taken in canonical order and partially shuffled
/// front to back (Fisher-Yates), so the draw for `nu` is always a prefix of
/// the draw for any larger `nu` under the same seed.
pub fn random_slopes(
    geometry: GridGeometry,
    nu: usize,
    seed: u64,
    exclude: &[Slope],
) -> Result<Vec<Slope>> {
    geometry.require_prime_power()?;
    let mut pool: Vec<Slope> = geometry.slopes().filter(|s| !exclude.contains(s)).collect();
    if nu > pool.len() {
        return Err(FcsError::InvalidParameter(format!(
            "cannot draw {nu} slopes from {} remaining",
            pool.len()
        )));
    }
    let mut rng = stream(seed, Stream::SlopeDraw);
    for i in 0..nu {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(nu);
    Ok(pool)
}

/// Union of the deterministic and random slices plus the centre disk.
pub fn build_pfrac(spec: FractalSpec) -> Result<SamplingMask> {
    spec.validate()?;
    build_pfrac_lines(spec, spec.line_count())
}

/// As [`build_pfrac`] but with an explicit total line count, which may
/// exceed `N` on prime-power grids where there are `N + N/p` slopes.
pub fn build_pfrac_lines(spec: FractalSpec, lines: usize) -> Result<SamplingMask> {
    let g = spec.geometry;
    g.require_prime_power()?;
    if lines < spec.mu || lines > g.slope_count() {
        return Err(FcsError::InvalidParameter(format!(
            "line count {lines} outside [{}, {}]",
            spec.mu,
            g.slope_count()
        )));
    }
    if !(spec.ctr >= 0.0 && spec.ctr.is_finite()) {
        return Err(FcsError::InvalidParameter(format!("ctr = {}", spec.ctr)));
    }
    let mut slopes = deterministic_slopes(g, spec.mu)?;
    let random = random_slopes(g, lines - spec.mu, spec.seed, &slopes)?;
    slopes.extend(random);

    let n = g.size();
    let mut selected = Array2::from_elem((n, n), false);
    for &slope in &slopes {
        for (u, v) in slice_points(slope, g)? {
            selected[[u, v]] = true;
        }
    }
    fill_centre_disk(&mut selected, g, spec.ctr);
    SamplingMask::new(g, selected, Provenance::PFrac { spec, slopes })
}

/// p.frac for a grid that is not (or should not be treated as) a prime
/// power: slices are drawn on `spec.geometry`, normally the next prime, and
/// the mask is the centred `target x target` crop. The centre disk is
/// filled on the target grid.
pub fn build_pfrac_cropped(
    spec: FractalSpec,
    lines: usize,
    target: GridGeometry,
) -> Result<SamplingMask> {
    let lattice = build_pfrac_lines(FractalSpec { ctr: 0.0, ..spec }, lines)?;
    let mut selected = crop_selection(lattice.selected(), spec.geometry, target)?;
    fill_centre_disk(&mut selected, target, spec.ctr);
    let slopes = match lattice.provenance() {
        Provenance::PFrac { slopes, .. } => slopes.clone(),
        _ => unreachable!("build_pfrac_lines records p.frac provenance"),
    };
    SamplingMask::new(target, selected, Provenance::PFrac { spec, slopes })
}
