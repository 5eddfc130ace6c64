//! Reduction-factor search: the densest mask whose `N^2 / |selected|` is
//! still at least the requested factor.
//!
//! Slope and Cartesian draw orders are prefix-consistent, so growing the line
//! or point count one step at a time only ever adds samples and the search is
//! a single forward pass.

use std::fmt;

use ndarray::Array2;

use crate::error::{FcsError, Result};
use crate::geometry::{next_prime, GridGeometry};
use crate::radon::slice_points;
use crate::sampling::{
    build_cartesian, build_pfrac_cropped, build_pfrac_lines, cartesian_order, crop_index,
    deterministic_slopes, fill_centre_disk, random_slopes, CartesianDims, CartesianSpec,
    FractalSpec, SamplingMask,
};

/// Grid on which p.frac slices are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lattice {
    /// The next prime `>= N`, cropped back to `N`. Identical to
    /// [`Lattice::Native`] when `N` is prime.
    #[default]
    NextPrime,
    /// The mask grid itself, which must be a prime power. On `2^n` grids the
    /// slices are nested subgroups and the mask is far more coherent.
    Native,
}

impl Lattice {
    pub fn name(&self) -> &'static str {
        match self {
            Lattice::NextPrime => "next_prime",
            Lattice::Native => "native",
        }
    }

    pub fn for_grid(&self, geometry: GridGeometry) -> Result<GridGeometry> {
        match self {
            Lattice::NextPrime => GridGeometry::new(next_prime(geometry.size())),
            Lattice::Native => {
                geometry.require_prime_power()?;
                Ok(geometry)
            }
        }
    }
}

impl std::str::FromStr for Lattice {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "next_prime" | "prime" => Ok(Lattice::NextPrime),
            "native" => Ok(Lattice::Native),
            other => Err(FcsError::Parse(format!("unknown lattice {other:?}"))),
        }
    }
}

/// A mask family without its size, which the search fills in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskRecipe {
    PFrac {
        mu: usize,
        ctr: f64,
        lattice: Lattice,
    },
    Cartesian {
        dims: CartesianDims,
        alpha: f64,
        ctr: f64,
    },
}

impl MaskRecipe {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MaskRecipe::PFrac { .. } => "pfrac",
            MaskRecipe::Cartesian {
                dims: CartesianDims::OneD,
                ..
            } => "cartesian1d",
            MaskRecipe::Cartesian {
                dims: CartesianDims::TwoD,
                ..
            } => "cartesian2d",
        }
    }

    pub fn ctr(&self) -> f64 {
        match *self {
            MaskRecipe::PFrac { ctr, .. } | MaskRecipe::Cartesian { ctr, .. } => ctr,
        }
    }

    /// `mu` for p.frac, `alpha` for Cartesian.
    pub fn shape_parameter(&self) -> f64 {
        match *self {
            MaskRecipe::PFrac { mu, .. } => mu as f64,
            MaskRecipe::Cartesian { alpha, .. } => alpha,
        }
    }
}

impl fmt::Display for MaskRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskRecipe::PFrac { mu, ctr, lattice } => {
                write!(f, "pfrac(mu={mu}, ctr={ctr}, lattice={})", lattice.name())
            }
            MaskRecipe::Cartesian { alpha, ctr, .. } => {
                write!(f, "{}(alpha={alpha}, ctr={ctr})", self.kind_name())
            }
        }
    }
}

/// Largest prefix length `k >= min` whose sample count stays within
/// `budget`, falling back to `min` when even that overshoots.
fn largest_prefix<I>(grid: &mut Array2<bool>, min: usize, budget: usize, items: I) -> usize
where
    I: IntoIterator<Item = Vec<(usize, usize)>>,
{
    let mut count = grid.iter().filter(|&&b| b).count();
    let mut best = min;
    for (k, points) in items.into_iter().enumerate() {
        for (u, v) in points {
            let cell = &mut grid[[u, v]];
            if !*cell {
                *cell = true;
                count += 1;
            }
        }
        let len = k + 1;
        if count > budget {
            break;
        }
        if len >= min {
            best = len;
        }
    }
    best
}

fn budget_for(geometry: GridGeometry, target_r: f64) -> Result<usize> {
    if !(target_r.is_finite() && target_r >= 1.0) {
        return Err(FcsError::InvalidParameter(format!(
            "reduction factor must be >= 1, got {target_r}"
        )));
    }
    let n = geometry.size() as f64;
    Ok((n * n / target_r + 1e-9).floor() as usize)
}

/// Builds the densest mask of `recipe` with reduction factor `>= target_r`.
pub fn mask_for_reduction(
    recipe: MaskRecipe,
    geometry: GridGeometry,
    target_r: f64,
    seed: u64,
) -> Result<SamplingMask> {
    let budget = budget_for(geometry, target_r)?;
    let n = geometry.size();
    let mut grid = Array2::from_elem((n, n), false);
    grid[[0, 0]] = true;
    fill_centre_disk(&mut grid, geometry, recipe.ctr());

    match recipe {
        MaskRecipe::PFrac { mu, ctr, lattice } => {
            let lg = lattice.for_grid(geometry)?;
            let mut order = deterministic_slopes(lg, mu)?;
            let rest = lg.slope_count() - mu;
            order.extend(random_slopes(lg, rest, seed, &order.clone())?);
            let slices = order
                .iter()
                .map(|&s| {
                    Ok(slice_points(s, lg)?
                        .into_iter()
                        .filter_map(|(u, v)| {
                            Some((crop_index(u, lg, geometry)?, crop_index(v, lg, geometry)?))
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let lines = largest_prefix(&mut grid, mu, budget, slices);
            let spec = FractalSpec {
                geometry: lg,
                r: lines as f64 / lg.size() as f64,
                mu,
                ctr,
                seed,
            };
            if lg == geometry {
                build_pfrac_lines(spec, lines)
            } else {
                build_pfrac_cropped(spec, lines, geometry)
            }
        }
        MaskRecipe::Cartesian { dims, alpha, ctr } => {
            let total = match dims {
                CartesianDims::OneD => n,
                CartesianDims::TwoD => n * n,
            };
            let mut spec = CartesianSpec {
                geometry,
                r: 1.0,
                alpha,
                ctr,
                seed,
                dims,
            };
            let order = cartesian_order(&spec)?;
            let items = order.iter().map(|&idx| match dims {
                CartesianDims::OneD => (0..n).map(|v| (idx, v)).collect(),
                CartesianDims::TwoD => vec![(idx / n, idx % n)],
            });
            let k = largest_prefix(&mut grid, 1, budget, items);
            spec.r = k as f64 / total as f64;
            build_cartesian(spec)
        }
    }
}
