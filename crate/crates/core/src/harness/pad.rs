//! Zero padding of square images onto the next prime grid and the
//! matching crop.

use ndarray::{s, Array2};

use crate::error::{FcsError, Result};
use crate::geometry::next_prime;

/// Where the original image sits inside the padded grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadInfo {
    pub original: usize,
    pub padded: usize,
    pub offset: usize,
}

impl PadInfo {
    /// Split `padded - original` evenly, odd remainder to the trailing edge.
    pub fn new(original: usize, padded: usize) -> Result<Self> {
        if padded < original {
            return Err(FcsError::InvalidParameter(format!(
                "cannot pad {original} down to {padded}"
            )));
        }
        Ok(Self {
            original,
            padded,
            offset: (padded - original) / 2,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            original: n,
            padded: n,
            offset: 0,
        }
    }
}

fn require_square<T>(a: &Array2<T>) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(FcsError::InvalidParameter(format!(
            "image must be square, got {r}x{c}"
        )));
    }
    Ok(r)
}

/// Zero-pad onto a `padded x padded` grid.
pub fn pad_to<T: Clone + Default>(a: &Array2<T>, padded: usize) -> Result<(Array2<T>, PadInfo)> {
    let n = require_square(a)?;
    let info = PadInfo::new(n, padded)?;
    let mut out = Array2::from_elem((padded, padded), T::default());
    let (lo, hi) = (info.offset, info.offset + n);
    out.slice_mut(s![lo..hi, lo..hi]).assign(a);
    Ok((out, info))
}

/// Zero-pad onto the smallest prime grid that holds the image.
pub fn pad_to_prime<T: Clone + Default>(a: &Array2<T>) -> Result<(Array2<T>, PadInfo)> {
    let n = require_square(a)?;
    pad_to(a, next_prime(n))
}

pub fn crop<T: Clone>(a: &Array2<T>, info: PadInfo) -> Result<Array2<T>> {
    let n = require_square(a)?;
    if n != info.padded {
        return Err(crate::error::mismatch(info.padded, n));
    }
    let (lo, hi) = (info.offset, info.offset + info.original);
    Ok(a.slice(s![lo..hi, lo..hi]).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pads_256_to_257_on_trailing_edge() {
        let a = Array2::from_shape_fn((256, 256), |(i, j)| (i * 256 + j) as f64 + 1.0);
        let (p, info) = pad_to_prime(&a).unwrap();
        assert_eq!(p.dim(), (257, 257));
        assert_eq!(info.offset, 0);
        assert_eq!(p[[0, 0]], 1.0);
        assert!(p.row(256).iter().all(|&v| v == 0.0));
        assert!(p.column(256).iter().all(|&v| v == 0.0));
        assert_eq!(crop(&p, info).unwrap(), a);
    }

    #[test]
    fn centred_padding_round_trip() {
        let a = Array2::from_elem((20, 20), 3.0);
        let (p, info) = pad_to_prime(&a).unwrap();
        assert_eq!(info.padded, 23);
        assert_eq!(info.offset, 1);
        assert_eq!(p[[0, 0]], 0.0);
        assert_eq!(p[[1, 1]], 3.0);
        assert_eq!(p[[21, 21]], 0.0);
        assert_eq!(p.sum(), a.sum());
        assert_eq!(crop(&p, info).unwrap(), a);
    }

    #[test]
    fn prime_sizes_unchanged() {
        let a = Array2::from_elem((17, 17), 1.0);
        let (p, info) = pad_to_prime(&a).unwrap();
        assert_eq!(info, PadInfo::identity(17));
        assert_eq!(p, a);
    }

    #[test]
    fn rejects_non_square() {
        assert!(pad_to_prime(&Array2::<f64>::zeros((4, 5))).is_err());
    }
}
