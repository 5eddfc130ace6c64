//! Finite grid geometry and discrete slopes.
//!
//! An `N x N` periodic grid with `N = p^n` admits `N` slopes of kind `M`
//! (lines `y = m x + t mod N`) and `N / p` slopes of kind `S`
//! (lines `x = p s y + t mod N`), giving `N + N/p` projections in total.

use std::fmt;
use std::str::FromStr;

use crate::error::{FcsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridGeometry {
    n: usize,
    p: usize,
    exponent: Option<u32>,
}

impl GridGeometry {
    /// Any `N >= 2` is a valid geometry; transforms additionally require a
    /// prime power (see [`GridGeometry::require_prime_power`]).
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(FcsError::InvalidSize(n));
        }
        let p = smallest_prime_factor(n);
        let mut rest = n;
        let mut exp = 0u32;
        while rest.is_multiple_of(p) {
            rest /= p;
            exp += 1;
        }
        let exponent = (rest == 1).then_some(exp);
        Ok(Self { n, p, exponent })
    }

    /// Geometry that is guaranteed to support the discrete Radon transform.
    pub fn prime_power(n: usize) -> Result<Self> {
        let g = Self::new(n)?;
        g.require_prime_power()?;
        Ok(g)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn smallest_prime(&self) -> usize {
        self.p
    }

    pub fn exponent(&self) -> Option<u32> {
        self.exponent
    }

    pub fn is_prime(&self) -> bool {
        self.exponent == Some(1)
    }

    pub fn is_prime_power(&self) -> bool {
        self.exponent.is_some()
    }

    pub fn require_prime_power(&self) -> Result<()> {
        if self.is_prime_power() {
            Ok(())
        } else {
            Err(FcsError::UnsupportedComposite(self.n))
        }
    }

    pub fn m_slope_count(&self) -> usize {
        self.n
    }

    pub fn s_slope_count(&self) -> usize {
        self.n / self.p
    }

    pub fn slope_count(&self) -> usize {
        self.m_slope_count() + self.s_slope_count()
    }

    /// All slopes in canonical order: M ascending, then S ascending.
    pub fn slopes(&self) -> impl Iterator<Item = Slope> + '_ {
        (0..self.m_slope_count())
            .map(Slope::m)
            .chain((0..self.s_slope_count()).map(Slope::s))
    }

    /// Position of `slope` in [`GridGeometry::slopes`].
    pub fn slope_index(&self, slope: Slope) -> Result<usize> {
        self.check_slope(slope)?;
        Ok(match slope.kind {
            SlopeKind::M => slope.value,
            SlopeKind::S => self.n + slope.value,
        })
    }

    pub fn check_slope(&self, slope: Slope) -> Result<()> {
        let limit = match slope.kind {
            SlopeKind::M => self.m_slope_count(),
            SlopeKind::S => self.s_slope_count(),
        };
        if slope.value < limit {
            Ok(())
        } else {
            Err(FcsError::SlopeOutOfRange(format!(
                "{slope} (N = {})",
                self.n
            )))
        }
    }

    /// Wraps a DFT index into the centred range `[-N/2, N/2)`.
    pub fn centred(&self, index: usize) -> i64 {
        let i = (index % self.n) as i64;
        let n = self.n as i64;
        if 2 * i < n {
            i
        } else {
            i - n
        }
    }

    /// Inverse of [`GridGeometry::centred`].
    pub fn wrap(&self, coord: i64) -> usize {
        coord.rem_euclid(self.n as i64) as usize
    }
}

fn smallest_prime_factor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return f;
        }
        f += 2;
    }
    n
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && smallest_prime_factor(n) == n
}

/// Smallest prime `>= n`.
pub fn next_prime(n: usize) -> usize {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlopeKind {
    M,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slope {
    pub kind: SlopeKind,
    pub value: usize,
}

impl Slope {
    pub fn m(value: usize) -> Self {
        Self {
            kind: SlopeKind::M,
            value,
        }
    }

    pub fn s(value: usize) -> Self {
        Self {
            kind: SlopeKind::S,
            value,
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            SlopeKind::M => 'm',
            SlopeKind::S => 's',
        };
        write!(f, "{k}:{}", self.value)
    }
}

impl FromStr for Slope {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| FcsError::Parse(format!("bad slope token {s:?}")))?;
        let value = value
            .parse()
            .map_err(|_| FcsError::Parse(format!("bad slope value in {s:?}")))?;
        match kind {
            "m" | "M" => Ok(Slope::m(value)),
            "s" | "S" => Ok(Slope::s(value)),
            _ => Err(FcsError::Parse(format!("bad slope kind in {s:?}"))),
        }
    }
}
