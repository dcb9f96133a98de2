//! Log-spaced sampling grids.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::{exp, ln};

/// `n` points spaced uniformly in `ln t` between `lo` and `hi` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        LogGrid { lo: 1e-6, hi: 1e6, n: 2048 }
    }
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
            return invalid("log grid needs 0 < lo < hi < inf");
        }
        if n < 2 {
            return invalid("log grid needs at least two points");
        }
        Ok(LogGrid { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (ln(self.lo), ln(self.hi));
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| match i {
                0 => self.lo,
                _ if i == self.n - 1 => self.hi,
                _ => exp(a + (b - a) * i as f64 / last),
            })
            .collect()
    }
}

/// Uniform grid with `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_endpoints_are_exact() {
        let p = LogGrid::default().points();
        assert_eq!(p.len(), 2048);
        assert_eq!(p[0], 1e-6);
        assert_eq!(p[2047], 1e6);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_degenerate_bounds() {
        assert!(LogGrid::new(0.0, 1.0, 10).is_err());
        assert!(LogGrid::new(2.0, 1.0, 10).is_err());
        assert!(LogGrid::new(1.0, 2.0, 1).is_err());
    }
}
