//! Shared fixtures for the benchmarks.

use fcs_core::harness::{mask_for_reduction, shepp_logan, Lattice, MaskRecipe};
use fcs_core::{GridGeometry, Image, SamplingMask};

pub fn phantom(n: usize) -> Image {
    Image::from_real(&shepp_logan(n).expect("phantom size")).expect("square phantom")
}

/// A p.frac mask at reduction factor `r` with four centre slopes.
pub fn pfrac_mask(n: usize, r: f64, seed: u64) -> SamplingMask {
    let recipe = MaskRecipe::PFrac {
        mu: 4,
        ctr: 0.0,
        lattice: Lattice::NextPrime,
    };
    mask_for_reduction(recipe, GridGeometry::new(n).expect("grid size"), r, seed)
        .expect("mask search")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(phantom(17).size(), 17);
        assert!(fcs_core::sampling::actual_reduction(&pfrac_mask(17, 2.0, 1)) >= 2.0);
    }
}
