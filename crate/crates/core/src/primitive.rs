//! Tabulated primitives of positive integrands and their inverses.
//!
//! [`MonotoneMap`] stores `s -> int_start^s g` on a geometric knot grid
//! (32 knots per decade) that is extended on demand by factor-2 steps of
//! the table end; evaluation between knots adds one local quadrature and
//! inversion is a safeguarded Newton iteration inside the bracketing cell.
//! [`TailMap`] does the same for `s -> int_s^inf g`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::{invalid, numerical, Error, Result};
use crate::math::{exp, ln, powf};
use crate::quad::{integrate, tanh_sinh_from_zero, Tol};

/// Integrand of a tabulated map. Errors abort the tabulation.
pub type Integrand = Box<dyn Fn(f64) -> Result<f64>>;

/// Knot spacing factor, `10^(1/32)`.
pub const KNOT_RATIO: f64 = 1.074_607_828_321_317_5;
/// First knot when the map starts at the origin.
pub const FIRST_KNOT: f64 = 1e-6;
/// Largest argument a map will ever tabulate.
pub const T_CAP: f64 = 1e300;

const CELL_TOL: Tol = Tol::new(0.0, 1e-14);

/// Integrates a fallible integrand; the first error raised wins.
pub(crate) fn integrate_fallible(
    g: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: Tol,
    singular_at_zero: bool,
) -> Result<f64> {
    let failure: Cell<Option<Error>> = Cell::new(None);
    let wrapped = |x: f64| match g(x) {
        Ok(v) => v,
        Err(e) => {
            let prev = failure.take();
            failure.set(Some(prev.unwrap_or(e)));
            f64::NAN
        }
    };
    let res = if singular_at_zero && a == 0.0 {
        tanh_sinh_from_zero(wrapped, b, tol)
    } else {
        integrate(wrapped, a, b, tol)
    };
    if let Some(e) = failure.take() {
        return Err(e);
    }
    res
}

/// Strictly increasing map `t -> int_start^t g(s) ds` with a lazily grown
/// knot table.
pub struct MonotoneMap {
    integrand: Integrand,
    start: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneMap {
    /// Builds the map; `start` is the lower limit (0 allows an integrable
    /// singularity at the origin).
    pub fn new(start: f64, integrand: Integrand) -> Result<Self> {
        if !(start >= 0.0 && start.is_finite()) {
            return invalid("map start must be finite and non-negative");
        }
        let mut map = MonotoneMap {
            integrand,
            start,
            knots: Vec::new(),
            values: Vec::new(),
            slopes: Vec::new(),
        };
        let (k0, v0) = if start == 0.0 {
            (FIRST_KNOT, map.head_integral(FIRST_KNOT)?)
        } else {
            (start, 0.0)
        };
        let s0 = (map.integrand)(k0)?;
        map.knots.push(k0);
        map.values.push(v0);
        map.slopes.push(s0);
        Ok(map)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Largest tabulated argument.
    pub fn t_cap(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Value at the largest tabulated argument.
    pub fn value_at_cap(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.values.iter().copied())
    }

    pub fn integrand(&self, t: f64) -> Result<f64> {
        (self.integrand)(t)
    }

    fn head_integral(&self, t: f64) -> Result<f64> {
        integrate_fallible(&*self.integrand, 0.0, t, Tol::new(0.0, 1e-14), true)
    }

    fn cell_integral(&self, a: f64, b: f64) -> Result<f64> {
        integrate_fallible(&*self.integrand, a, b, CELL_TOL, false)
    }

    fn push_knot(&mut self) -> Result<()> {
        let last = self.t_cap();
        if last >= T_CAP {
            return numerical("monotone map reached the argument cap 1e300");
        }
        let next = (last * KNOT_RATIO).min(T_CAP);
        let v = self.value_at_cap() + self.cell_integral(last, next)?;
        if !v.is_finite() {
            return Err(Error::Overflow { s: next });
        }
        let s = (self.integrand)(next)?;
        self.knots.push(next);
        self.values.push(v);
        self.slopes.push(s);
        Ok(())
    }

    /// Grows the table until it covers `t` (to at least twice the old end).
    pub fn extend_to(&mut self, t: f64) -> Result<()> {
        if t > T_CAP {
            return invalid("argument beyond 1e300");
        }
        if t <= self.t_cap() {
            return Ok(());
        }
        let target = t.max(2.0 * self.t_cap()).min(T_CAP);
        while self.t_cap() < target {
            self.push_knot()?;
        }
        Ok(())
    }

    /// Grows the table until its value at the cap is at least `y`.
    pub fn extend_to_value(&mut self, y: f64) -> Result<()> {
        while self.value_at_cap() < y {
            if self.t_cap() >= T_CAP {
                return Err(Error::ConditionFailed(alloc::format!(
                    "map is bounded by {:e}, value {y:e} is never reached",
                    self.value_at_cap()
                )));
            }
            let target = (2.0 * self.t_cap()).min(T_CAP);
            while self.t_cap() < target {
                self.push_knot()?;
            }
        }
        Ok(())
    }

    /// Evaluation on the current table (no extension).
    pub fn forward_cached(&self, t: f64) -> Result<f64> {
        if t < self.start || t.is_nan() {
            return invalid("map evaluated below its start");
        }
        if t == self.start {
            return Ok(0.0);
        }
        if t < self.knots[0] {
            return self.head_integral(t);
        }
        if t > self.t_cap() {
            return invalid("map evaluated beyond its table");
        }
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        let k = self.knots[i];
        if t == k {
            return Ok(self.values[i]);
        }
        Ok(self.values[i] + self.cell_integral(k, t)?)
    }

    pub fn forward(&mut self, t: f64) -> Result<f64> {
        self.extend_to(t)?;
        self.forward_cached(t)
    }

    /// Inverse on the current table (no extension).
    pub fn inverse_cached(&self, y: f64) -> Result<f64> {
        if y < 0.0 || y.is_nan() {
            return invalid("inverse of a negative value");
        }
        if y == 0.0 {
            return Ok(self.start);
        }
        if y > self.value_at_cap() {
            return invalid("inverse beyond the tabulated range");
        }
        let (mut lo, mut hi, guess) = if y < self.values[0] {
            let (lo, hi) = (self.start, self.knots[0]);
            (lo, hi, lo + (hi - lo) * y / self.values[0])
        } else {
            let i = self.values.partition_point(|&v| v <= y).max(1) - 1;
            if self.values[i] == y {
                return Ok(self.knots[i]);
            }
            let (a, b) = (self.knots[i], self.knots[i + 1]);
            (a, b, hermite_guess(a, b, self.values[i], self.values[i + 1], self.slopes[i], self.slopes[i + 1], y))
        };
        let mut t = guess.clamp(lo, hi);
        let target = 1e-14 * y.max(1e-300);
        for _ in 0..200 {
            let g = self.forward_cached(t)? - y;
            if g.abs() <= target {
                return Ok(t);
            }
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = (self.integrand)(t)?;
            let newton = t - g / d;
            t = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(t);
            }
        }
        numerical("inversion did not converge")
    }

    pub fn inverse(&mut self, y: f64) -> Result<f64> {
        self.extend_to_value(y)?;
        self.inverse_cached(y)
    }
}

/// Cubic Hermite interpolation of the inverse inside a cell, as a Newton
/// starting point.
fn hermite_guess(a: f64, b: f64, va: f64, vb: f64, sa: f64, sb: f64, y: f64) -> f64 {
    let dv = vb - va;
    if !(dv > 0.0) || !(sa > 0.0) || !(sb > 0.0) {
        return a + (b - a) * (y - va) / dv;
    }
    // Hermite interpolation of t(v) with dt/dv = 1/g.
    let s = (y - va) / dv;
    let (m0, m1) = (dv / sa, dv / sb);
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * a + h10 * m0 + h01 * b + h11 * m1
}

/// Decreasing map `s -> int_s^inf g` for an integrand with a convergent
/// power-law (or faster) tail, tabulated on `[start, s_max]` with a
/// power-law extrapolation beyond.
pub struct TailMap {
    integrand: Integrand,
    knots: Vec<f64>,
    /// `tails[k] = int_{knots[k]}^inf g`.
    tails: Vec<f64>,
    /// Fitted decay exponent of `g` at the table end.
    end_exponent: f64,
}

impl TailMap {
    /// Tabulates the tail integral from `start` outwards, stopping when the
    /// remaining tail is below `1e-13` of the accumulated total or at
    /// `s_cap` (or where the integrand stops being representable).
    pub fn new(start: f64, s_cap: f64, integrand: Integrand) -> Result<Self> {
        if !(start > 0.0 && s_cap > start) {
            return invalid("tail map needs 0 < start < cap");
        }
        let per_decade = 32usize;
        let mut knots = alloc::vec![start];
        let mut gvals = alloc::vec![integrand(start)?];
        let mut cells: Vec<f64> = Vec::new();
        let mut total = 0.0;
        let mut end_exponent = f64::NAN;
        let mut end_tail = 0.0;
        loop {
            let last = *knots.last().unwrap();
            let next = last * KNOT_RATIO;
            let g_next = match integrand(next) {
                Ok(v) if v.is_finite() => v,
                Ok(_) | Err(Error::Overflow { .. }) => break,
                Err(e) => return Err(e),
            };
            let c = match integrate_fallible(&*integrand, last, next, CELL_TOL, false) {
                Ok(v) => v,
                Err(Error::Overflow { .. }) => break,
                Err(e) => return Err(e),
            };
            knots.push(next);
            gvals.push(g_next);
            cells.push(c);
            total += c;
            let n = knots.len();
            if g_next == 0.0 {
                end_exponent = f64::NEG_INFINITY;
                end_tail = 0.0;
                break;
            }
            if n > per_decade {
                let back = n - 1 - per_decade;
                let a = (ln(g_next) - ln(gvals[back])) / (ln(next) - ln(knots[back]));
                end_exponent = a;
                if a < -1.0 {
                    end_tail = g_next * next / (-a - 1.0);
                    if end_tail <= 1e-13 * total {
                        break;
                    }
                } else {
                    end_tail = f64::INFINITY;
                }
            }
            if next >= s_cap {
                break;
            }
        }
        if knots.len() <= per_decade {
            return numerical("tail map could not tabulate one decade of its integrand");
        }
        if !end_tail.is_finite() || !(end_exponent < -1.0) {
            return Err(Error::ConditionFailed(alloc::format!(
                "integrand decays like t^{end_exponent:.3} at t = {:e}; the tail integral diverges",
                knots.last().unwrap()
            )));
        }
        let mut tails = alloc::vec![0.0; knots.len()];
        let mut acc = end_tail;
        *tails.last_mut().unwrap() = acc;
        for k in (0..cells.len()).rev() {
            acc += cells[k];
            tails[k] = acc;
        }
        Ok(TailMap { integrand, knots, tails, end_exponent })
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    /// `int_start^inf g`.
    pub fn total(&self) -> f64 {
        self.tails[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn end_exponent(&self) -> f64 {
        self.end_exponent
    }

    pub fn integrand(&self, s: f64) -> Result<f64> {
        (self.integrand)(s)
    }

    /// `int_s^inf g` for `s >= start`.
    pub fn tail(&self, s: f64) -> Result<f64> {
        if s < self.start() || s.is_nan() {
            return invalid("tail evaluated below its start");
        }
        let last = self.knots.len() - 1;
        if s >= self.knots[last] {
            let a1 = self.end_exponent + 1.0;
            if self.tails[last] == 0.0 {
                return Ok(0.0);
            }
            return Ok(self.tails[last] * exp(a1 * ln(s / self.knots[last])));
        }
        let i = self.knots.partition_point(|&k| k <= s) - 1;
        if s == self.knots[i] {
            return Ok(self.tails[i]);
        }
        let b = self.knots[i + 1];
        Ok(self.tails[i + 1] + integrate_fallible(&*self.integrand, s, b, CELL_TOL, false)?)
    }

    /// The `s` with `tail(s) = y`, for `0 < y <= total()`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || y > self.total() * (1.0 + 1e-15) {
            return invalid("tail inverse outside (0, total]");
        }
        if y >= self.total() {
            return Ok(self.start());
        }
        let last = self.knots.len() - 1;
        if y <= self.tails[last] {
            let a1 = self.end_exponent + 1.0;
            return Ok(self.knots[last] * powf(y / self.tails[last], 1.0 / a1));
        }
        // tails is decreasing: find i with tails[i] >= y > tails[i+1].
        let i = self.tails.partition_point(|&v| v >= y) - 1;
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let (ta, tb) = (self.tails[i], self.tails[i + 1]);
        let mut s = lo + (hi - lo) * (ta - y) / (ta - tb);
        let target = 1e-14 * y;
        for _ in 0..200 {
            let g = self.tail(s)? - y;
            if g.abs() <= target {
                return Ok(s);
            }
            if g > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let d = (self.integrand)(s)?;
            let newton = s + g / d;
            s = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(s);
            }
        }
        numerical("tail inversion did not converge")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{close, sqrt};

    #[test]
    fn quadratic_primitive_and_inverse() {
        let mut m = MonotoneMap::new(0.0, Box::new(|s| Ok(s))).unwrap();
        assert!(close(m.forward(2.0).unwrap(), 2.0, 1e-13));
        assert!(close(m.inverse(2.0).unwrap(), 2.0, 1e-13));
        assert_eq!(m.inverse(0.0).unwrap(), 0.0);
        assert!(close(m.inverse(1e-20).unwrap(), sqrt(2e-20), 1e-10));
        assert!(close(m.inverse(5e10).unwrap(), sqrt(1e11), 1e-12));
    }

    #[test]
    fn singular_integrand_at_origin() {
        let mut m = MonotoneMap::new(0.0, Box::new(|s| Ok(1.0 / sqrt(s)))).unwrap();
        assert!(close(m.forward(4.0).unwrap(), 4.0, 1e-12));
        assert!(close(m.forward(1e-8).unwrap(), 2e-4, 1e-12));
        assert!(close(m.inverse(4.0).unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn bounded_map_reports_unreachable_value() {
        let mut m = MonotoneMap::new(1.0, Box::new(|s| Ok(1.0 / (s * s)))).unwrap();
        assert!(m.inverse(2.0).is_err());
        assert!(close(m.inverse(0.5).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn tail_of_power_law() {
        // int_s^inf s^{-3/2} / sqrt(2) = sqrt(2/s)
        let t = TailMap::new(1.0, 1e100, Box::new(|s| Ok(powf(s, -1.5) / sqrt(2.0)))).unwrap();
        assert!(close(t.total(), sqrt(2.0), 1e-12));
        for &s in &[1.3, 17.0, 1e5, 1e40] {
            assert!(close(t.tail(s).unwrap(), sqrt(2.0 / s), 1e-10), "{s}");
            assert!(close(t.inverse(sqrt(2.0 / s)).unwrap(), s, 1e-9), "{s}");
        }
    }

    #[test]
    fn tail_rejects_divergent_integrand() {
        assert!(TailMap::new(1.0, 1e30, Box::new(|s| Ok(1.0 / s))).is_err());
    }
}
