//! The primitives `F`, `Fhat`, `K`, `Khat`, their inverses, and the
//! classification of improper integrals and Keller-Osserman conditions.
//!
//! Maps that are queried repeatedly live in [`KoMaps`]: each primitive is a
//! lazily extended [`MonotoneMap`] shared through `Rc<RefCell<_>>` so that
//! one map's integrand can extend another (e.g. `Fhat` pulls values of
//! `R(s) = int_0^s rho`). The sharing is single-threaded; concurrent users
//! should build their own maps.

use alloc::boxed::Box;
use alloc::format;
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cell::RefCell;
use serde::Serialize;

use crate::error::{invalid, numerical, Error, Result};
use crate::function::{Asym, Endpoint, FunctionSpec, Monomial, RealFn};
use crate::math::{exp, ln, powf};
use crate::primitive::{integrate_fallible, Integrand, MonotoneMap};
use crate::quad::{integrate, Tol};
use crate::structural::{check_phi_ell, Holds, StructuralProfile};

/// Exponents `(2 - omega) R(s)` above this overflow `exp`.
pub const EXP_LIMIT: f64 = 700.0;

const PRIMITIVE_TOL: Tol = Tol::new(1e-15, 1e-13);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `K(t) = int_0^t s phi'(s) / ell(s) ds`
    K,
    /// `Khat(t) = int_0^t phi(s) / ell(s) ds`
    Khat,
}

impl Kernel {
    /// Name of the integrability condition the kernel needs.
    pub fn condition(self) -> &'static str {
        match self {
            Kernel::K => "phi_ell_2",
            Kernel::Khat => "phi_ell_3",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KoVariant {
    Ko,
    KhatO,
    RhoKo,
    RhoKhatO,
}

impl KoVariant {
    pub fn kernel(self) -> Kernel {
        match self {
            KoVariant::Ko | KoVariant::RhoKo => Kernel::K,
            KoVariant::KhatO | KoVariant::RhoKhatO => Kernel::Khat,
        }
    }

    pub fn uses_rho(self) -> bool {
        matches!(self, KoVariant::RhoKo | KoVariant::RhoKhatO)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictMethod {
    ExactExponent,
    NumericTail,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvidenceRow {
    pub limit: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub verdict: Verdict,
    pub endpoint: Endpoint,
    pub fitted_exponent: Option<f64>,
    pub evidence: Vec<EvidenceRow>,
    pub method: VerdictMethod,
}

impl ConvergenceVerdict {
    pub fn is_exact(&self) -> bool {
        self.method == VerdictMethod::ExactExponent
    }

    fn exact(verdict: Verdict, endpoint: Endpoint, exponent: Option<f64>) -> Self {
        ConvergenceVerdict {
            verdict,
            endpoint,
            fitted_exponent: exponent,
            evidence: Vec::new(),
            method: VerdictMethod::ExactExponent,
        }
    }
}

fn is_zero_fn(f: &FunctionSpec) -> bool {
    matches!(f.as_monomial(), Some((c, _)) if c == 0.0)
}

/// Wraps a function into a map integrand that rejects negative and
/// non-finite values.
fn nonneg_integrand(f: FunctionSpec) -> Integrand {
    Box::new(move |s| {
        let v = f.eval(s);
        if v.is_nan() || v < 0.0 {
            return Err(Error::NonPositiveSample { t: s, value: v });
        }
        if !v.is_finite() {
            return Err(Error::Overflow { s });
        }
        Ok(v)
    })
}

fn kernel_value(phi: &FunctionSpec, ell: &FunctionSpec, kernel: Kernel, s: f64) -> f64 {
    match kernel {
        Kernel::K => s * phi.deriv(s) / ell.eval(s),
        Kernel::Khat => phi.eval(s) / ell.eval(s),
    }
}

/// `F(t) = int_0^t f`.
pub fn compute_f(f: &FunctionSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid("F is defined for t >= 0");
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let v = classify_improper(f, Endpoint::Zero)?;
    if v.verdict == Verdict::Divergent {
        return Err(Error::ConditionFailed("f is not integrable at the origin".into()));
    }
    let g = nonneg_integrand(f.clone());
    integrate_fallible(&*g, 0.0, t, PRIMITIVE_TOL, true)
}

/// Map `s -> R(s) = int_0^s rho`.
pub fn r_map(rho: &FunctionSpec) -> Result<MonotoneMap> {
    MonotoneMap::new(0.0, nonneg_integrand(rho.clone()))
}

/// Map `t -> int_0^t f(s) e^{(2 - omega) R(s)} ds`; plain `F` when `r` is
/// `None` or `omega = 2`.
pub fn f_hat_map(
    f: &FunctionSpec,
    r: Option<Rc<RefCell<MonotoneMap>>>,
    omega: f64,
) -> Result<MonotoneMap> {
    let f = f.clone();
    let factor = 2.0 - omega;
    let integrand: Integrand = match r {
        Some(r) if factor != 0.0 => Box::new(move |s| {
            let fv = f.eval(s);
            if fv.is_nan() || fv < 0.0 {
                return Err(Error::NonPositiveSample { t: s, value: fv });
            }
            let e = factor * r.borrow_mut().forward(s)?;
            if e > EXP_LIMIT {
                return Err(Error::Overflow { s });
            }
            let v = fv * exp(e);
            if !v.is_finite() {
                return Err(Error::Overflow { s });
            }
            Ok(v)
        }),
        _ => nonneg_integrand(f),
    };
    MonotoneMap::new(0.0, integrand)
}

/// `Fhat(t) = int_0^t f(s) e^{(2 - omega) int_0^s rho} ds`.
pub fn compute_f_hat(f: &FunctionSpec, rho: &FunctionSpec, omega: f64, t: f64) -> Result<f64> {
    if omega == 2.0 || is_zero_fn(rho) {
        return compute_f(f, t);
    }
    if !(t >= 0.0) {
        return invalid("Fhat is defined for t >= 0");
    }
    let r = Rc::new(RefCell::new(r_map(rho)?));
    r.borrow_mut().extend_to(t)?;
    let mut m = f_hat_map(f, Some(r), omega)?;
    m.forward(t)
}

/// Checks integrability of the kernel integrand at the origin.
fn kernel_origin_check(phi: &FunctionSpec, ell: &FunctionSpec, kernel: Kernel) -> Result<()> {
    let g = match kernel {
        Kernel::K => Monomial::new(1.0, 1.0).deriv(phi, 1.0).value(ell, -1.0),
        Kernel::Khat => Monomial::new(1.0, 0.0).value(phi, 1.0).value(ell, -1.0),
    };
    let v = classify_improper(&g, Endpoint::Zero)?;
    if v.verdict == Verdict::Divergent {
        return Err(Error::ConditionFailed(format!(
            "{}: the kernel integrand is not integrable at 0",
            kernel.condition()
        )));
    }
    Ok(())
}

/// Map `t -> K(t)` (or `Khat`).
pub fn kernel_map(phi: &FunctionSpec, ell: &FunctionSpec, kernel: Kernel) -> Result<MonotoneMap> {
    kernel_origin_check(phi, ell, kernel)?;
    let (phi, ell) = (phi.clone(), ell.clone());
    MonotoneMap::new(
        0.0,
        Box::new(move |s| {
            let v = kernel_value(&phi, &ell, kernel, s);
            if v.is_nan() || v < 0.0 {
                return Err(Error::NonPositiveSample { t: s, value: v });
            }
            if !v.is_finite() {
                return Err(Error::Overflow { s });
            }
            Ok(v)
        }),
    )
}

/// `K(t)` or `Khat(t)` by direct quadrature.
pub fn compute_k(phi: &FunctionSpec, ell: &FunctionSpec, t: f64, kernel: Kernel) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid("K is defined for t >= 0");
    }
    kernel_origin_check(phi, ell, kernel)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let g = |s: f64| -> Result<f64> { Ok(kernel_value(phi, ell, kernel, s)) };
    integrate_fallible(&g, 0.0, t, PRIMITIVE_TOL, true)
}

/// Inverse of a tabulated map, extending the table when needed.
pub fn invert_monotone(map: &mut MonotoneMap, y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return invalid("inverse needs y >= 0");
    }
    map.inverse(y)
}

/// Number of doublings in the numeric tail test.
pub const DOUBLINGS: i32 = 20;
/// Doublings from which the decay slope is fitted.
const FIT_FROM: i32 = 10;

/// Decides whether `int g` converges at `end`: exact exponent arithmetic
/// when `g` knows its asymptotics, a numeric tail test otherwise.
pub fn classify_improper(g: &dyn RealFn, end: Endpoint) -> Result<ConvergenceVerdict> {
    if let Some(a) = g.asym(end) {
        return Ok(exact_verdict(a, end));
    }
    numeric_verdict(g, end)
}

fn exact_verdict(a: Asym, end: Endpoint) -> ConvergenceVerdict {
    let (conv, exp) = match (a, end) {
        (Asym::Power { a, b }, Endpoint::Infinity) => (a < -1.0 || (a == -1.0 && b < -1.0), Some(a)),
        (Asym::Power { a, .. }, Endpoint::Zero) => (a > -1.0, Some(a)),
        (Asym::RapidDecay, _) => (true, None),
        (Asym::RapidGrowth, _) => (false, None),
    };
    let v = if conv { Verdict::Convergent } else { Verdict::Divergent };
    ConvergenceVerdict::exact(v, end, exp)
}

fn limit_at(end: Endpoint, k: i32) -> f64 {
    match end {
        Endpoint::Infinity => powf(2.0, k as f64),
        Endpoint::Zero => powf(2.0, -k as f64),
    }
}

/// Numeric tail test: partial integrals over `[1, 2^k]` (or `[2^-k, 1]`),
/// `k = 1..=20`, and a least-squares fit of `ln |g|` against `ln t` over
/// the last ten doublings.
pub fn numeric_verdict(g: &dyn RealFn, end: Endpoint) -> Result<ConvergenceVerdict> {
    // Sign scan, eight samples per doubling.
    let mut sign = 0i8;
    for i in 0..=(8 * DOUBLINGS) {
        let t = limit_at(end, 0) * powf(2.0, i as f64 / 8.0 * if end == Endpoint::Zero { -1.0 } else { 1.0 });
        let v = g.eval(t);
        if v.is_nan() {
            return numerical(format!("integrand is undefined at t = {t:e}"));
        }
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            continue;
        };
        if sign == 0 {
            sign = s;
        } else if s != sign {
            return invalid(format!("integrand changes sign in the tail (at t = {t:e})"));
        }
    }
    let mut evidence = Vec::with_capacity(DOUBLINGS as usize);
    if sign == 0 {
        for k in 1..=DOUBLINGS {
            evidence.push(EvidenceRow { limit: limit_at(end, k), value: 0.0 });
        }
        return Ok(ConvergenceVerdict {
            verdict: Verdict::Convergent,
            endpoint: end,
            fitted_exponent: None,
            evidence,
            method: VerdictMethod::NumericTail,
        });
    }
    let sg = sign as f64;
    let mut partial: f64 = 0.0;
    for k in 1..=DOUBLINGS {
        let (a, b) = match end {
            Endpoint::Infinity => (limit_at(end, k - 1), limit_at(end, k)),
            Endpoint::Zero => (limit_at(end, k), limit_at(end, k - 1)),
        };
        if partial.is_finite() {
            partial = match integrate(|t| sg * g.eval(t), a, b, Tol::new(0.0, 1e-8)) {
                Ok(v) => partial + v,
                Err(_) => f64::INFINITY,
            };
        }
        evidence.push(EvidenceRow { limit: limit_at(end, k), value: sg * partial });
    }
    // Least squares slope of ln|g| on ln t.
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in FIT_FROM..=DOUBLINGS {
        let t = limit_at(end, k);
        let y = if sign > 0 { g.ln_eval(t) } else { ln(-g.eval(t)) };
        if !y.is_finite() {
            if y == f64::NEG_INFINITY {
                continue;
            }
            if y == f64::INFINITY {
                // overflow: growth beyond any power
                return Ok(ConvergenceVerdict {
                    verdict: Verdict::Divergent,
                    endpoint: end,
                    fitted_exponent: None,
                    evidence,
                    method: VerdictMethod::NumericTail,
                });
            }
            return numerical(format!("integrand not representable at t = {t:e}"));
        }
        let x = ln(t);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1.0;
    }
    let slope = if n >= 2.0 { (n * sxy - sx * sy) / (n * sxx - sx * sx) } else { f64::NEG_INFINITY };
    let by_slope = match end {
        Endpoint::Infinity if slope < -1.1 => Verdict::Convergent,
        Endpoint::Infinity if slope > -0.9 => Verdict::Divergent,
        Endpoint::Zero if slope > -0.9 => Verdict::Convergent,
        Endpoint::Zero if slope < -1.1 => Verdict::Divergent,
        _ => Verdict::Inconclusive,
    };
    // a log-critical tail only ever downgrades the slope verdict
    let verdict = match log_critical_gamma(g, end, sign) {
        Some(gamma) if (0.75..=1.25).contains(&gamma) => Verdict::Inconclusive,
        Some(gamma) if (gamma > 1.0) != (by_slope == Verdict::Convergent) => Verdict::Inconclusive,
        _ => by_slope,
    };
    Ok(ConvergenceVerdict {
        verdict,
        endpoint: end,
        fitted_exponent: slope.is_finite().then_some(slope),
        evidence,
        method: VerdictMethod::NumericTail,
    })
}

/// With `x = |ln t|` and `h = t |g|` the integral is `int^inf h dx`. A
/// power tail has `d ln h / dx` tending to a constant, a log-critical tail
/// `h ~ x^-gamma` has `x d ln h / dx = -gamma`. Returns `gamma` when that
/// product is flat across the fit window (a power makes it grow like `x`,
/// a factor ~1.8 here), `None` otherwise.
fn log_critical_gamma(g: &dyn RealFn, end: Endpoint, sign: i8) -> Option<f64> {
    let ln_h = |x: f64| {
        let t = match end {
            Endpoint::Infinity => exp(x),
            Endpoint::Zero => exp(-x),
        };
        let lg = if sign > 0 { g.ln_eval(t) } else { ln(-g.eval(t)) };
        lg + ln(t)
    };
    let d = 0.5 * ln(2.0);
    let z = |k: i32| {
        let x = k as f64 * ln(2.0);
        x * (ln_h(x + d) - ln_h(x - d)) / (2.0 * d)
    };
    let (zf, zl) = (z(FIT_FROM), z(DOUBLINGS));
    if !(zf.is_finite() && zl.is_finite()) {
        return None;
    }
    let flat = if zf.abs().max(zl.abs()) < 0.1 { true } else { zf * zl > 0.0 && (0.8..=1.25).contains(&(zl / zf)) };
    flat.then_some(-zl)
}

/// The tabulated maps behind the (rho-)KO integrands: kernel, `Fhat` (or
/// `F`) and `R`.
#[derive(Clone)]
pub struct KoMaps {
    pub kernel_kind: Kernel,
    kernel: Rc<RefCell<MonotoneMap>>,
    f_hat: Rc<RefCell<MonotoneMap>>,
    r: Option<Rc<RefCell<MonotoneMap>>>,
}

impl KoMaps {
    /// Builds the maps; `rho_omega` switches on the rho-weighted variant.
    pub fn new(p: &StructuralProfile, kernel: Kernel, rho_omega: Option<(&FunctionSpec, f64)>) -> Result<Self> {
        let kmap = kernel_map(&p.phi, &p.ell, kernel)?;
        let r = match rho_omega {
            Some((rho, _)) if !is_zero_fn(rho) => Some(Rc::new(RefCell::new(r_map(rho)?))),
            _ => None,
        };
        let omega = rho_omega.map_or(2.0, |(_, w)| w);
        let f_hat = f_hat_map(&p.f, r.clone(), omega)?;
        Ok(KoMaps {
            kernel_kind: kernel,
            kernel: Rc::new(RefCell::new(kmap)),
            f_hat: Rc::new(RefCell::new(f_hat)),
            r,
        })
    }

    pub fn k(&self, t: f64) -> Result<f64> {
        self.kernel.borrow_mut().forward(t)
    }

    pub fn k_inv(&self, y: f64) -> Result<f64> {
        invert_monotone(&mut self.kernel.borrow_mut(), y)
    }

    /// Kernel integrand `t phi'(t)/ell(t)` (or `phi/ell`), the derivative of `K`.
    pub fn kernel_integrand(&self, t: f64) -> Result<f64> {
        self.kernel.borrow().integrand(t)
    }

    pub fn f_hat(&self, t: f64) -> Result<f64> {
        self.f_hat.borrow_mut().forward(t)
    }

    /// `f(t) e^{(2 - omega) R(t)}`, the derivative of `Fhat`.
    pub fn f_hat_integrand(&self, t: f64) -> Result<f64> {
        self.f_hat.borrow().integrand(t)
    }

    /// `R(t) = int_0^t rho` (zero without rho).
    pub fn r(&self, t: f64) -> Result<f64> {
        match &self.r {
            Some(r) => r.borrow_mut().forward(t),
            None => Ok(0.0),
        }
    }

    pub fn has_rho(&self) -> bool {
        self.r.is_some()
    }

    /// `ln` of the KO integrand `e^{R(t)} / K^{-1}(sigma Fhat(t))`.
    pub fn ln_ko_integrand(&self, sigma: f64, t: f64) -> Result<f64> {
        let x = self.k_inv(sigma * self.f_hat(t)?)?;
        Ok(self.r(t)? - ln(x))
    }
}

/// Adapter that turns a fallible log-integrand into a [`RealFn`], keeping
/// the first error.
struct Fallible<'a, F: Fn(f64) -> Result<f64>> {
    ln_g: F,
    failure: &'a RefCell<Option<Error>>,
}

impl<F: Fn(f64) -> Result<f64>> RealFn for Fallible<'_, F> {
    fn eval(&self, t: f64) -> f64 {
        exp(self.ln_eval(t))
    }
    fn ln_eval(&self, t: f64) -> f64 {
        match (self.ln_g)(t) {
            Ok(v) => v,
            Err(e) => {
                let mut slot = self.failure.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        }
    }
}

/// Exact KO verdict from tail exponents of `f` and of the kernel
/// integrand; `None` when the exponents do not decide it.
fn exact_ko(p: &StructuralProfile, variant: KoVariant) -> Result<Option<ConvergenceVerdict>> {
    let end = Endpoint::Infinity;
    if variant.uses_rho() {
        let Some(rho) = &p.rho else {
            return invalid("rho variants need rho");
        };
        let integrable = is_zero_fn(rho)
            || matches!(rho.asym_at(end), Some(Asym::Power { a, .. }) if a < -1.0)
            || matches!(rho.asym_at(end), Some(Asym::RapidDecay));
        if !integrable {
            return Ok(None);
        }
    }
    let kg = match variant.kernel() {
        Kernel::K => Monomial::new(1.0, 1.0).deriv(&p.phi, 1.0).value(&p.ell, -1.0),
        Kernel::Khat => Monomial::new(1.0, 0.0).value(&p.phi, 1.0).value(&p.ell, -1.0),
    };
    let Some(ka) = kg.asym(end) else { return Ok(None) };
    let Some(fa) = p.f.asym_at(end) else { return Ok(None) };
    let divergent = |e: Option<f64>| ConvergenceVerdict::exact(Verdict::Divergent, end, e);
    let convergent = |e: Option<f64>| ConvergenceVerdict::exact(Verdict::Convergent, end, e);
    // Growth of F: t^P ln^B t, or bounded, or rapid.
    enum Growth {
        Bounded,
        Power(f64, f64),
        Rapid,
    }
    let fg = match fa {
        Asym::Power { a, b } if a > -1.0 => Growth::Power(a + 1.0, b),
        Asym::Power { a, b } if a == -1.0 && b > -1.0 => Growth::Power(0.0, b + 1.0),
        Asym::Power { .. } | Asym::RapidDecay => Growth::Bounded,
        Asym::RapidGrowth => Growth::Rapid,
    };
    match (ka, fg) {
        (_, Growth::Bounded) => Ok(Some(divergent(None))),
        (Asym::Power { a: c, b: d }, fg) => {
            let kappa = c + 1.0;
            if kappa < 0.0 || (kappa == 0.0 && d < -1.0) {
                return Err(Error::ConditionFailed(format!(
                    "{}: the kernel is bounded",
                    variant.kernel().condition()
                )));
            }
            if kappa == 0.0 {
                return Ok(None);
            }
            match fg {
                Growth::Rapid => Ok(Some(convergent(None))),
                Growth::Power(pp, bb) => {
                    let e = pp / kappa;
                    let conv = e > 1.0 + 1e-12
                        || ((e - 1.0).abs() <= 1e-12 && (bb - d) / kappa > 1.0);
                    Ok(Some(if conv { convergent(Some(-e)) } else { divergent(Some(-e)) }))
                }
                Growth::Bounded => unreachable!(),
            }
        }
        (Asym::RapidGrowth, Growth::Power(..)) => Ok(Some(divergent(None))),
        _ => Ok(None),
    }
}

/// Classifies the Keller-Osserman condition `variant` for `sigma`-scaled
/// data: exact exponent arithmetic when the tails are known, otherwise the
/// numeric tail test applied to `e^{R(t)} / K^{-1}(sigma Fhat(t))`.
pub fn classify_ko(p: &StructuralProfile, variant: KoVariant, sigma: f64) -> Result<ConvergenceVerdict> {
    classify_ko_with(p, variant, sigma, false)
}

/// As [`classify_ko`]; `force_numeric` skips the exact path.
pub fn classify_ko_with(
    p: &StructuralProfile,
    variant: KoVariant,
    sigma: f64,
    force_numeric: bool,
) -> Result<ConvergenceVerdict> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return invalid("sigma must be positive");
    }
    let cond = variant.kernel().condition();
    let report = check_phi_ell(p)?;
    if report.holds(cond) == Holds::No {
        return Err(Error::ConditionFailed(format!("{cond} does not hold")));
    }
    if !force_numeric {
        if let Some(v) = exact_ko(p, variant)? {
            return Ok(v);
        }
    }
    let rho_omega = if variant.uses_rho() {
        match &p.rho {
            Some(rho) => Some((rho, p.omega)),
            None => return invalid("rho variants need rho"),
        }
    } else {
        None
    };
    let maps = KoMaps::new(p, variant.kernel(), rho_omega)?;
    let failure = RefCell::new(None);
    let g = Fallible { ln_g: |t| maps.ln_ko_integrand(sigma, t), failure: &failure };
    let res = numeric_verdict(&g, Endpoint::Infinity);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Sampled;
    use crate::math::{close, sqrt};

    #[test]
    fn f_and_fhat_examples() {
        let f = FunctionSpec::power(1.0, 2.0);
        assert!(close(compute_f(&f, 1.0).unwrap(), 1.0 / 3.0, 1e-12));
        assert_eq!(compute_f(&f, 0.0).unwrap(), 0.0);
        let one = FunctionSpec::constant(1.0);
        let v = compute_f_hat(&one, &one, 1.0, 1.0).unwrap();
        assert!(close(v, core::f64::consts::E - 1.0, 1e-11), "{v}");
        let v = compute_f_hat(&f, &one, 2.0, 1.5).unwrap();
        assert!((v - compute_f(&f, 1.5).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn fhat_reports_overflow_point() {
        let one = FunctionSpec::constant(1.0);
        match compute_f_hat(&one, &one, 0.0, 400.0) {
            Err(Error::Overflow { s }) => assert!(s > 349.0 && s < 400.0, "{s}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kernel_examples_and_inverse() {
        let phi = FunctionSpec::power(1.0, 1.0);
        let one = FunctionSpec::constant(1.0);
        assert!(close(compute_k(&phi, &one, 2.0, Kernel::K).unwrap(), 2.0, 1e-12));
        assert_eq!(compute_k(&phi, &one, 0.0, Kernel::K).unwrap(), 0.0);
        let mc = FunctionSpec::mean_curvature();
        let v = compute_k(&mc, &one, 1.0, Kernel::Khat).unwrap();
        assert!(close(v, sqrt(2.0) - 1.0, 1e-12));
        let mut m = kernel_map(&phi, &one, Kernel::K).unwrap();
        assert!(close(invert_monotone(&mut m, 2.0).unwrap(), 2.0, 1e-10));
        assert_eq!(invert_monotone(&mut m, 0.0).unwrap(), 0.0);
        assert!(invert_monotone(&mut m, -1.0).is_err());
        let mut m = kernel_map(&mc, &one, Kernel::Khat).unwrap();
        assert!(close(invert_monotone(&mut m, sqrt(2.0) - 1.0).unwrap(), 1.0, 1e-10));
    }

    #[test]
    fn kernel_rejects_non_integrable_origin() {
        let phi = FunctionSpec::power(1.0, -1.5);
        let one = FunctionSpec::constant(1.0);
        match compute_k(&phi, &one, 1.0, Kernel::Khat) {
            Err(Error::ConditionFailed(m)) => assert!(m.contains("phi_ell_3")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn improper_exact_and_numeric() {
        let v = classify_improper(&FunctionSpec::power(1.0, -2.0), Endpoint::Infinity).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert!(v.is_exact());
        let v = classify_improper(&FunctionSpec::power(1.0, -1.0), Endpoint::Infinity).unwrap();
        assert_eq!(v.verdict, Verdict::Divergent);
        let b = FunctionSpec::power_log(1.0, -1.0, -3.0);
        assert_eq!(classify_improper(&b, Endpoint::Infinity).unwrap().verdict, Verdict::Convergent);
        let s = Sampled(|t: f64| powf(t, -1.0) * powf(crate::math::ln1p(t), -3.0));
        let v = classify_improper(&s, Endpoint::Infinity).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert_eq!(v.method, VerdictMethod::NumericTail);
        assert_eq!(v.evidence.len(), 20);
        let span = v.evidence.last().unwrap().limit / v.evidence[0].limit;
        assert!(span >= 1e4);
        let s = Sampled(|t: f64| 1.0 / t);
        assert_eq!(classify_improper(&s, Endpoint::Infinity).unwrap().verdict, Verdict::Inconclusive);
        // fitted slope -1.104 but the tail is 1/(t log^1.04 t)
        let p = StructuralProfile::new(
            FunctionSpec::power(1.0, 1.0),
            FunctionSpec::constant(1.0),
            FunctionSpec::power_log(1.0, 1.0, 2.0),
        );
        let v = classify_ko_with(&p, KoVariant::Ko, 1.0, true).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert!(v.fitted_exponent.unwrap() < -1.1);
        let s = Sampled(|t: f64| powf(t, -0.5));
        assert_eq!(classify_improper(&s, Endpoint::Zero).unwrap().verdict, Verdict::Convergent);
        let s = Sampled(|t: f64| crate::math::sin(t));
        assert!(classify_improper(&s, Endpoint::Infinity).is_err());
    }

    fn ko_profile(f: FunctionSpec) -> StructuralProfile {
        StructuralProfile::new(FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(1.0), f)
    }

    #[test]
    fn ko_for_powers_of_u() {
        let p = ko_profile(FunctionSpec::power(1.0, 3.0));
        assert_eq!(classify_ko(&p, KoVariant::Ko, 1.0).unwrap().verdict, Verdict::Convergent);
        let v = classify_ko_with(&p, KoVariant::Ko, 1.0, true).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert!((v.fitted_exponent.unwrap() + 2.0).abs() < 0.01);
        let p = ko_profile(FunctionSpec::power(1.0, 1.0));
        assert_eq!(classify_ko(&p, KoVariant::Ko, 1.0).unwrap().verdict, Verdict::Divergent);
    }

    #[test]
    fn ko_for_log_perturbations() {
        let p = ko_profile(FunctionSpec::power_log(1.0, 1.0, 3.0));
        assert_eq!(classify_ko(&p, KoVariant::Ko, 1.0).unwrap().verdict, Verdict::Convergent);
        let p = ko_profile(FunctionSpec::power_log(1.0, 1.0, 1.0));
        assert_eq!(classify_ko(&p, KoVariant::Ko, 1.0).unwrap().verdict, Verdict::Divergent);
    }

    #[test]
    fn ko_needs_unbounded_kernel() {
        let p = StructuralProfile::new(
            FunctionSpec::mean_curvature(),
            FunctionSpec::constant(1.0),
            FunctionSpec::power(1.0, 3.0),
        );
        assert!(matches!(classify_ko(&p, KoVariant::Ko, 1.0), Err(Error::ConditionFailed(_))));
        assert_eq!(classify_ko(&p, KoVariant::KhatO, 1.0).unwrap().verdict, Verdict::Convergent);
    }

    #[test]
    fn rho_variant_numeric_matches_plain() {
        let mut p = ko_profile(FunctionSpec::power(1.0, 3.0));
        p.rho = Some(FunctionSpec::inv_one_plus_pow(1.0, 2.0));
        p.omega = 0.0;
        let v = classify_ko_with(&p, KoVariant::RhoKo, 1.0, true).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
    }
}
