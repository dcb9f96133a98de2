//! Floating-point helpers for `no_std` builds and third-order jets.
//!
//! `core` does not ship transcendental functions, so everything routes
//! through `libm`. [`Jet`] carries a value together with its first three
//! derivatives and propagates them through arithmetic exactly (truncated
//! Taylor arithmetic), which is how every built-in function family gets
//! closed-form derivatives.

use core::ops::{Add, Div, Mul, Neg, Sub};

pub const PI: f64 = core::f64::consts::PI;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}
#[inline]
pub fn powf(x: f64, a: f64) -> f64 {
    libm::pow(x, a)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}
#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + ln1p(exp(lo - hi))
}

/// Relative closeness with an absolute floor.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Value and first three derivatives of a univariate function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// `0 * inf` guard: a vanishing Taylor coefficient kills the term.
#[inline]
fn coef_mul(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x
    }
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Jet { v, d1, d2, d3 }
    }

    /// The identity function seeded at `t`.
    pub const fn var(t: f64) -> Self {
        Jet::new(t, 1.0, 0.0, 0.0)
    }

    pub const fn constant(c: f64) -> Self {
        Jet::new(c, 0.0, 0.0, 0.0)
    }

    /// Composes an outer function (given by its derivatives at `self.v`)
    /// with this jet (Faà di Bruno to third order).
    pub fn chain(self, f0: f64, f1: f64, f2: f64, f3: f64) -> Self {
        let (g1, g2, g3) = (self.d1, self.d2, self.d3);
        Jet {
            v: f0,
            d1: coef_mul(f1, g1),
            d2: coef_mul(f2, g1 * g1) + coef_mul(f1, g2),
            d3: coef_mul(f3, g1 * g1 * g1) + 3.0 * coef_mul(f2, g1 * g2) + coef_mul(f1, g3),
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Jet::new(c * self.v, c * self.d1, c * self.d2, c * self.d3)
    }

    pub fn powf(self, a: f64) -> Self {
        let x = self.v;
        if a == 0.0 {
            return Jet::constant(1.0);
        }
        if a == 1.0 {
            return self;
        }
        let c1 = a;
        let c2 = a * (a - 1.0);
        let c3 = a * (a - 1.0) * (a - 2.0);
        self.chain(
            powf(x, a),
            coef_mul(c1, powf(x, a - 1.0)),
            coef_mul(c2, powf(x, a - 2.0)),
            coef_mul(c3, powf(x, a - 3.0)),
        )
    }

    pub fn exp(self) -> Self {
        let e = exp(self.v);
        self.chain(e, e, e, e)
    }

    pub fn ln(self) -> Self {
        let x = self.v;
        self.chain(ln(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    /// `ln(1 + x)`.
    pub fn ln1p(self) -> Self {
        let y = 1.0 + self.v;
        self.chain(ln1p(self.v), 1.0 / y, -1.0 / (y * y), 2.0 / (y * y * y))
    }

    pub fn sin(self) -> Self {
        let (s, c) = (sin(self.v), cos(self.v));
        self.chain(s, c, -s, -c)
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (sinh(self.v), cosh(self.v));
        self.chain(s, c, s, c)
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(self) -> Self {
        let x = self.v;
        self.chain(
            1.0 / x,
            -1.0 / (x * x),
            2.0 / (x * x * x),
            -6.0 / (x * x * x * x),
        )
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2, self.d3 + o.d3)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2, self.d3 - o.d3)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (f, g) = (self, o);
        Jet {
            v: f.v * g.v,
            d1: coef_mul(f.d1, g.v) + coef_mul(f.v, g.d1),
            d2: coef_mul(f.d2, g.v) + 2.0 * coef_mul(f.d1, g.d1) + coef_mul(f.v, g.d2),
            d3: coef_mul(f.d3, g.v)
                + 3.0 * coef_mul(f.d2, g.d1)
                + 3.0 * coef_mul(f.d1, g.d2)
                + coef_mul(f.v, g.d3),
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet::new(self.v + c, self.d1, self.d2, self.d3)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_product_rule_matches_closed_form() {
        // t^2 * sin t at t = 0.7
        let t = 0.7;
        let j = Jet::var(t).powf(2.0) * Jet::var(t).sin();
        let (s, c) = (sin(t), cos(t));
        assert!((j.d1 - (2.0 * t * s + t * t * c)).abs() < 1e-14);
        assert!((j.d2 - (2.0 * s + 4.0 * t * c - t * t * s)).abs() < 1e-14);
        assert!((j.d3 - (6.0 * c - 6.0 * t * s - t * t * c)).abs() < 1e-13);
    }

    #[test]
    fn jet_chain_of_exp_square() {
        // e^{t^2}: d1 = 2t e, d2 = (2+4t^2) e, d3 = (12t + 8t^3) e
        let t = 1.3;
        let j = Jet::var(t).powf(2.0).exp();
        let e = exp(t * t);
        assert!(close(j.d1, 2.0 * t * e, 1e-14));
        assert!(close(j.d2, (2.0 + 4.0 * t * t) * e, 1e-14));
        assert!(close(j.d3, (12.0 * t + 8.0 * t * t * t) * e, 1e-14));
    }

    #[test]
    fn identity_power_at_zero_has_no_nan() {
        let j = Jet::var(0.0).powf(1.0);
        assert_eq!(j, Jet::var(0.0));
        let j = Jet::var(0.0).powf(2.0);
        assert_eq!((j.v, j.d1, j.d2, j.d3), (0.0, 0.0, 2.0, 0.0));
    }

    #[test]
    fn log_add_exp_handles_large_arguments() {
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + ln(2.0))).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }
}
