//! Structural hypotheses on the operator (`phi`), the gradient term (`ell`),
//! the nonlinearity (`f`), the coefficient (`b`) and the lower-order terms.
//!
//! Every check returns a [`ConditionReport`]. Decisions are *exact* when
//! they reduce to exponent arithmetic on closed-form families (both
//! endpoints known) and *sampled* otherwise, in which case the verdict
//! comes from a log-spaced grid and may be inconclusive.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::function::{Asym, Endpoint, FunctionSpec, Monomial, RealFn};
use crate::grid::LogGrid;
use crate::math::{exp, ln, powf};
use crate::transforms::{classify_improper, Verdict};

/// Constants beyond this are treated as "no finite constant".
pub const C_CAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Holds {
    Yes,
    No,
    Inconclusive,
}

impl Holds {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Holds::Yes
        } else {
            Holds::No
        }
    }

    /// Three-valued conjunction.
    pub fn and(self, o: Holds) -> Holds {
        match (self, o) {
            (Holds::No, _) | (_, Holds::No) => Holds::No,
            (Holds::Yes, Holds::Yes) => Holds::Yes,
            _ => Holds::Inconclusive,
        }
    }

    /// Three-valued disjunction.
    pub fn or(self, o: Holds) -> Holds {
        match (self, o) {
            (Holds::Yes, _) | (_, Holds::Yes) => Holds::Yes,
            (Holds::No, Holds::No) => Holds::No,
            _ => Holds::Inconclusive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampled,
}

impl Method {
    fn both(self, o: Method) -> Method {
        if self == Method::Exact && o == Method::Exact {
            Method::Exact
        } else {
            Method::Sampled
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A single point where the condition fails, with the offending value.
    Point { t: f64, value: f64 },
    /// A pair `s <= t` with `g(s) / g(t) = ratio`.
    Pair { s: f64, t: f64, ratio: f64 },
    /// Amount by which a scalar inequality fails.
    Slack { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    #[serde(skip)]
    pub name: String,
    pub holds: Holds,
    pub constant: Option<f64>,
    pub witness: Option<Witness>,
    pub method: Method,
}

impl Entry {
    pub fn new(name: &str, holds: Holds, method: Method) -> Self {
        Entry { name: name.to_string(), holds, constant: None, witness: None, method }
    }
    pub fn constant(mut self, c: f64) -> Self {
        self.constant = Some(c);
        self
    }
    pub fn witness(mut self, w: Option<Witness>) -> Self {
        self.witness = w;
        self
    }
}

/// Ordered list of condition entries; serializes as an object keyed by
/// condition name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionReport {
    pub entries: Vec<Entry>,
}

impl Serialize for ConditionReport {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for e in &self.entries {
            map.serialize_entry(&e.name, e)?;
        }
        map.end()
    }
}

impl ConditionReport {
    pub fn push(&mut self, e: Entry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, other: ConditionReport) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn holds(&self, name: &str) -> Holds {
        self.get(name).map_or(Holds::Inconclusive, |e| e.holds)
    }

    /// Names of entries reporting `No`.
    pub fn failures(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(|e| e.holds == Holds::No).map(|e| e.name.as_str())
    }
}

/// Inputs to every structural check.
#[derive(Clone, Debug)]
pub struct StructuralProfile {
    pub phi: FunctionSpec,
    pub ell: FunctionSpec,
    pub f: FunctionSpec,
    pub b_tilde: FunctionSpec,
    pub rho: Option<FunctionSpec>,
    pub g_fn: Option<FunctionSpec>,
    pub h_fn: Option<FunctionSpec>,
    pub theta: f64,
    pub lambda_b: f64,
    pub beta: f64,
    pub mu: f64,
    pub a_bound: Option<f64>,
    pub delta: Option<f64>,
    pub chi: Option<f64>,
    pub omega: f64,
    /// Estimated C-increasing constants within this of 1 are reported as 1.
    pub c_increasing_tolerance: f64,
    pub grid: LogGrid,
}

impl StructuralProfile {
    /// Profile with `phi = t`, `ell = 1`, `b = 1` and neutral scalars.
    pub fn new(phi: FunctionSpec, ell: FunctionSpec, f: FunctionSpec) -> Self {
        StructuralProfile {
            phi,
            ell,
            f,
            b_tilde: FunctionSpec::constant(1.0),
            rho: None,
            g_fn: None,
            h_fn: None,
            theta: 0.0,
            lambda_b: 1.0,
            beta: -2.0,
            mu: 0.0,
            a_bound: None,
            delta: None,
            chi: None,
            omega: 2.0,
            c_increasing_tolerance: 1e-9,
            grid: LogGrid::default(),
        }
    }

    /// Validates scalars; returns warnings (e.g. the clamp of `beta < -2`).
    pub fn validate(&mut self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.lambda_b > 0.0) {
            return invalid("lambda_b must be positive");
        }
        if self.beta < -2.0 {
            warnings.push(format!(
                "beta = {} < -2 clamped to -2 (smaller values give the same estimates)",
                self.beta
            ));
            self.beta = -2.0;
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return invalid("delta must be positive");
            }
        }
        if let Some(c) = self.chi {
            if c < 0.0 {
                return invalid("chi must be non-negative");
            }
        }
        if !(self.c_increasing_tolerance > 0.0) {
            return invalid("c_increasing_tolerance must be positive");
        }
        Ok(warnings)
    }
}

/// Result of [`estimate_c_increasing`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CIncreasing {
    pub holds: bool,
    /// `max_{s <= t} g(s) / g(t)` over the grid, at least 1.
    pub c_est: f64,
    /// Pair `(s, t)` realising the maximum ratio.
    pub witness: Option<(f64, f64)>,
}

fn ln_sample(f: &dyn RealFn, t: f64) -> Result<f64> {
    let l = f.ln_eval(t);
    if l.is_nan() || l == f64::NEG_INFINITY {
        return Err(Error::NonPositiveSample { t, value: f.eval(t) });
    }
    Ok(l)
}

/// Estimates the C-increasing constant of `f` on `grid` in log space.
pub fn estimate_c_increasing(f: &dyn RealFn, grid: &LogGrid) -> Result<CIncreasing> {
    let pts = grid.points();
    let mut run_max = f64::NEG_INFINITY;
    let mut arg_max = pts[0];
    let mut best = 0.0;
    let mut witness = None;
    for &t in &pts {
        let l = ln_sample(f, t)?;
        if l > run_max {
            run_max = l;
            arg_max = t;
        }
        let gap = run_max - l;
        if gap > best {
            best = gap;
            witness = Some((arg_max, t));
        }
    }
    let c_est = exp(best).max(1.0);
    Ok(CIncreasing { holds: c_est <= C_CAP, c_est, witness })
}

fn c_increasing_entry(
    name: &str,
    f: &dyn RealFn,
    grid: &LogGrid,
    tol: f64,
) -> Result<Entry> {
    let est = estimate_c_increasing(f, grid)?;
    let c = if est.c_est <= 1.0 + tol { 1.0 } else { est.c_est };
    let witness = if est.holds {
        None
    } else {
        est.witness.map(|(s, t)| Witness::Pair { s, t, ratio: est.c_est })
    };
    Ok(Entry::new(name, Holds::from_bool(est.holds), Method::Sampled).constant(c).witness(witness))
}

/// Fitted slope of `ln f` against `ln t` on `[a, b]`.
fn log_slope(f: &dyn RealFn, a: f64, b: f64) -> Result<f64> {
    Ok((ln_sample(f, b)? - ln_sample(f, a)?) / (ln(b) - ln(a)))
}

/// Whether a positive function is bounded above on `(0, inf)`, from its
/// asymptotics at both ends.
fn bounded_above_from(zero: Option<Asym>, inf: Option<Asym>) -> Option<bool> {
    let at0 = match zero? {
        Asym::Power { a, .. } => a >= 0.0,
        _ => return None,
    };
    let at_inf = match inf? {
        Asym::Power { a, b } => a < 0.0 || (a == 0.0 && b <= 0.0),
        Asym::RapidDecay => true,
        Asym::RapidGrowth => false,
    };
    Some(at0 && at_inf)
}

/// Whether a positive function is bounded away from zero on `(0, inf)`.
fn bounded_below_exact(f: &dyn RealFn) -> Option<bool> {
    let at0 = match f.asym(Endpoint::Zero)? {
        Asym::Power { a, .. } => a <= 0.0,
        _ => return None,
    };
    let at_inf = match f.asym(Endpoint::Infinity)? {
        Asym::Power { a, b } => a > 0.0 || (a == 0.0 && b >= 0.0),
        Asym::RapidGrowth => true,
        Asym::RapidDecay => false,
    };
    Some(at0 && at_inf)
}

/// Sup (or inf) of `f` over the grid, with its location, in log space.
fn extreme(f: &dyn RealFn, grid: &LogGrid, max: bool) -> Result<(f64, f64)> {
    let mut best = (if max { f64::NEG_INFINITY } else { f64::INFINITY }, grid.lo);
    for t in grid.points() {
        let l = ln_sample(f, t)?;
        if (max && l > best.0) || (!max && l < best.0) {
            best = (l, t);
        }
    }
    Ok(best)
}

/// Sampled boundedness: the extreme is finite and the function is not
/// trending past it at either end of the grid.
fn sampled_bounded(f: &dyn RealFn, grid: &LogGrid, above: bool) -> Result<(Holds, f64, f64)> {
    let (l, at) = extreme(f, grid, above)?;
    let s0 = log_slope(f, grid.lo, grid.lo * 10.0)?;
    let s1 = log_slope(f, grid.hi / 10.0, grid.hi)?;
    let sign = if above { 1.0 } else { -1.0 };
    // Growing towards an end (for sup) means slope < 0 at 0 or > 0 at inf.
    let escapes = sign * s0 < -0.05 || sign * s1 > 0.05;
    let holds = if escapes { Holds::No } else { Holds::Yes };
    Ok((holds, exp(l), at))
}

/// Derivative sign and the conditions on `phi`.
pub fn check_phi(p: &StructuralProfile) -> Result<ConditionReport> {
    let phi = &p.phi;
    let mut rep = ConditionReport::default();

    // phi' > 0
    let exact_phi0 = if phi.is_builtin() {
        phi.deriv_asym_at(Endpoint::Zero).and(known_monotone(phi))
    } else {
        None
    };
    let entry = match exact_phi0 {
        Some(up) => Entry::new("phi_0", Holds::from_bool(up), Method::Exact)
            .witness((!up).then(|| Witness::Point { t: 1.0, value: phi.deriv(1.0) })),
        None => {
            let bad = p.grid.points().into_iter().find(|&t| !(phi.deriv(t) > 0.0));
            Entry::new("phi_0", Holds::from_bool(bad.is_none()), Method::Sampled)
                .witness(bad.map(|t| Witness::Point { t, value: phi.deriv(t) }))
        }
    };
    rep.push(entry);

    // phi(t) <= A t^delta
    rep.push(match (p.a_bound, p.delta) {
        (Some(a_bound), Some(delta)) => {
            let ratio = Monomial::new(1.0, -delta).value(phi, 1.0);
            if let Some((c, a)) = phi.as_monomial() {
                let holds = a == delta && c <= a_bound;
                let witness = if holds {
                    None
                } else if a > delta {
                    let t = 2.0 * powf((a_bound / c).max(1e-300), 1.0 / (a - delta));
                    Some(Witness::Point { t, value: phi.eval(t) - a_bound * powf(t, delta) })
                } else if a < delta {
                    let t = 0.5 * powf((c / a_bound).max(1e-300), 1.0 / (delta - a));
                    Some(Witness::Point { t, value: phi.eval(t) - a_bound * powf(t, delta) })
                } else {
                    Some(Witness::Point { t: 1.0, value: c - a_bound })
                };
                Entry::new("phi_1", Holds::from_bool(holds), Method::Exact)
                    .constant(c)
                    .witness(witness)
            } else {
                let (h, sup, at) = sampled_bounded(&ratio, &p.grid, true)?;
                let holds = h.and(Holds::from_bool(sup <= a_bound * (1.0 + 1e-12)));
                Entry::new("phi_1", holds, Method::Sampled).constant(sup).witness(
                    (holds == Holds::No).then(|| Witness::Point {
                        t: at,
                        value: phi.eval(at) - a_bound * powf(at, delta),
                    }),
                )
            }
        }
        _ => Entry::new("phi_1", Holds::Inconclusive, Method::Sampled),
    });

    // phi >= C t phi'  <=>  t phi' / phi bounded
    let q = Monomial::new(1.0, 1.0).deriv(phi, 1.0).value(phi, -1.0);
    let sup = extreme(&q, &p.grid, true).map(|(l, _)| exp(l)).ok();
    let entry = match bounded_above_from(q.asym(Endpoint::Zero), elasticity_at_infinity(phi, &q)) {
        Some(b) => {
            let witness = (!b).then(|| {
                let t = (1..64)
                    .map(|k| powf(2.0, k as f64))
                    .find(|&t| phi.eval(t) < t * phi.deriv(t))
                    .unwrap_or(2.0);
                Witness::Point { t, value: phi.eval(t) - t * phi.deriv(t) }
            });
            let e = Entry::new("phi_2", Holds::from_bool(b), Method::Exact).witness(witness);
            match (b, sup) {
                (true, Some(s)) => e.constant(1.0 / s),
                _ => e,
            }
        }
        None => {
            let (h, s, at) = sampled_bounded(&q, &p.grid, true)?;
            Entry::new("phi_2", h, Method::Sampled).constant(1.0 / s).witness(
                (h == Holds::No).then(|| Witness::Point { t: at, value: phi.eval(at) - at * phi.deriv(at) }),
            )
        }
    };
    rep.push(entry);
    Ok(rep)
}

/// Tail shape of `t phi'/phi`; rapidly growing families have polynomial
/// elasticity that the generic quotient rule cannot see.
fn elasticity_at_infinity(phi: &FunctionSpec, q: &dyn RealFn) -> Option<Asym> {
    use crate::function::Family::*;
    match &phi.family {
        ExpPower => Some(Asym::power(2.0)),
        Exponential { k, .. } | Sinh { k, .. } if *k != 0.0 => Some(Asym::power(1.0)),
        _ => q.asym(Endpoint::Infinity),
    }
}

/// Monotonicity of closed-form families that are increasing by
/// construction; `None` when not known.
fn known_monotone(f: &FunctionSpec) -> Option<bool> {
    use crate::function::Family::*;
    match &f.family {
        Power { c, a } => Some(c * a > 0.0),
        PowerLog { c, a, beta } => {
            if *c > 0.0 && *a >= 0.0 && *beta >= 0.0 && a + beta > 0.0 {
                Some(true)
            } else {
                None
            }
        }
        MeanCurvature | ExpPower => Some(true),
        Constant { .. } => Some(false),
        Exponential { c, k } | Sinh { c, k } => Some(c * k > 0.0),
        LogOnePlusPow { c, a } => Some(c * a > 0.0),
        InvOnePlusPow { c, a } => Some(*c < 0.0 && *a > 0.0),
        _ => None,
    }
}

/// Positivity, C-increasing property and power lower bound of `ell`.
pub fn check_grad_ell(p: &StructuralProfile) -> Result<ConditionReport> {
    let ell = &p.ell;
    let mut rep = ConditionReport::default();
    let l1 = if ell.is_builtin() && ell.sign().is_some() {
        let pos = ell.sign() == Some(1);
        Entry::new("l_1", Holds::from_bool(pos), Method::Exact)
            .witness((!pos).then(|| Witness::Point { t: 1.0, value: ell.eval(1.0) }))
    } else {
        let bad = p.grid.points().into_iter().find(|&t| !(ell.eval(t) > 0.0));
        Entry::new("l_1", Holds::from_bool(bad.is_none()), Method::Sampled)
            .witness(bad.map(|t| Witness::Point { t, value: ell.eval(t) }))
    };
    let positive = l1.holds == Holds::Yes;
    rep.push(l1);
    if !positive {
        rep.push(Entry::new("l_2", Holds::Inconclusive, Method::Sampled));
        rep.push(Entry::new("l_3", Holds::Inconclusive, Method::Sampled));
        return Ok(rep);
    }
    rep.push(match ell.as_monomial() {
        Some((_, a)) => Entry::new("l_2", Holds::from_bool(a >= 0.0), Method::Exact)
            .constant(1.0)
            .witness((a < 0.0).then(|| Witness::Pair {
                s: p.grid.lo,
                t: p.grid.hi,
                ratio: powf(p.grid.lo / p.grid.hi, a),
            })),
        None => c_increasing_entry("l_2", ell, &p.grid, p.c_increasing_tolerance)?,
    });
    rep.push(match p.chi {
        None => Entry::new("l_3", Holds::Inconclusive, Method::Sampled),
        Some(chi) => {
            let ratio = Monomial::new(1.0, -chi).value(ell, 1.0);
            let inf = extreme(&ratio, &p.grid, false)?;
            match bounded_below_exact(&ratio).filter(|_| ell.is_builtin()) {
                Some(b) => Entry::new("l_3", Holds::from_bool(b), Method::Exact)
                    .constant(exp(inf.0))
                    .witness((!b).then(|| Witness::Point { t: inf.1, value: ratio.eval(inf.1) })),
                None => {
                    let (h, c, at) = sampled_bounded(&ratio, &p.grid, false)?;
                    Entry::new("l_3", h, Method::Sampled)
                        .constant(c)
                        .witness((h == Holds::No).then(|| Witness::Point { t: at, value: c }))
                }
            }
        }
    });
    Ok(rep)
}

/// `(theta)_1`: `phi'(t) t^theta / ell(t)` and `(theta)_2`:
/// `phi(t) t^(theta-1) / ell(t)` are C-increasing.
pub fn check_theta(p: &StructuralProfile) -> Result<ConditionReport> {
    let mut rep = ConditionReport::default();
    let th = p.theta;
    let g1 = Monomial::new(1.0, th).deriv(&p.phi, 1.0).value(&p.ell, -1.0);
    let g2 = Monomial::new(1.0, th - 1.0).value(&p.phi, 1.0).value(&p.ell, -1.0);
    let exact = match (p.phi.as_monomial(), p.ell.as_monomial()) {
        (Some((_, a)), Some((_, q))) if a != 0.0 => Some(a - 1.0 + th - q),
        _ => None,
    };
    for (name, g) in [("theta_1", &g1), ("theta_2", &g2)] {
        rep.push(match exact {
            Some(e) => Entry::new(name, Holds::from_bool(e >= 0.0), Method::Exact)
                .constant(1.0)
                .witness((e < 0.0).then(|| Witness::Pair {
                    s: p.grid.lo,
                    t: p.grid.hi,
                    ratio: g.eval(p.grid.lo) / g.eval(p.grid.hi),
                })),
            None => c_increasing_entry(name, g, &p.grid, p.c_increasing_tolerance)?,
        });
    }
    Ok(rep)
}

/// The C-increasing constants used by the barrier estimates: `(theta)_1`,
/// `(theta)_2`, `f` and `ell`, on `grid`.
pub fn theta_constants(p: &StructuralProfile) -> Result<[f64; 4]> {
    let th = check_theta(p)?;
    let c1 = th.get("theta_1").and_then(|e| e.constant).unwrap_or(f64::INFINITY);
    let c2 = th.get("theta_2").and_then(|e| e.constant).unwrap_or(f64::INFINITY);
    let cf = match p.f.as_monomial() {
        Some((_, a)) if a >= 0.0 => 1.0,
        _ => estimate_c_increasing(&p.f, &p.grid)?.c_est,
    };
    let cl = match p.ell.as_monomial() {
        Some((_, a)) if a >= 0.0 => 1.0,
        _ => estimate_c_increasing(&p.ell, &p.grid)?.c_est,
    };
    Ok([c1, c2, cf, cl])
}

fn integrability_entry(name: &str, g: &dyn RealFn) -> Result<Entry> {
    let at0 = classify_improper(g, Endpoint::Zero)?;
    let at_inf = classify_improper(g, Endpoint::Infinity)?;
    let h0 = match at0.verdict {
        Verdict::Convergent => Holds::Yes,
        Verdict::Divergent => Holds::No,
        Verdict::Inconclusive => Holds::Inconclusive,
    };
    let h1 = match at_inf.verdict {
        Verdict::Divergent => Holds::Yes,
        Verdict::Convergent => Holds::No,
        Verdict::Inconclusive => Holds::Inconclusive,
    };
    let holds = h0.and(h1);
    let witness = if h0 == Holds::No {
        Some(Witness::Slack { value: at0.fitted_exponent.unwrap_or(f64::NAN) })
    } else if h1 == Holds::No {
        Some(Witness::Slack { value: at_inf.fitted_exponent.unwrap_or(f64::NAN) })
    } else {
        None
    };
    let method = if at0.is_exact() && at_inf.is_exact() { Method::Exact } else { Method::Sampled };
    Ok(Entry::new(name, holds, method).witness(witness))
}

/// `(phi ell)_1`: `liminf_{t->0} phi/ell = 0`; `(phi ell)_2`:
/// `t phi'/ell` in `L^1(0+) \ L^1(+inf)`; `(phi ell)_3`: `phi/ell` likewise;
/// `phi_ell` is the conjunction of the first two.
pub fn check_phi_ell(p: &StructuralProfile) -> Result<ConditionReport> {
    let mut rep = ConditionReport::default();
    let ratio = Monomial::new(1.0, 0.0).value(&p.phi, 1.0).value(&p.ell, -1.0);
    let lo = p.grid.lo;
    let e1 = match ratio.asym(Endpoint::Zero) {
        Some(Asym::Power { a, .. }) => Entry::new("phi_ell_1", Holds::from_bool(a > 0.0), Method::Exact)
            .witness((a <= 0.0).then(|| Witness::Point { t: lo, value: ratio.eval(lo) })),
        _ => {
            let s = log_slope(&ratio, lo, 10.0 * lo)?;
            let h = if s > 0.1 {
                Holds::Yes
            } else if s < -0.1 {
                Holds::No
            } else {
                Holds::Inconclusive
            };
            Entry::new("phi_ell_1", h, Method::Sampled)
                .witness((h == Holds::No).then(|| Witness::Point { t: lo, value: ratio.eval(lo) }))
        }
    };
    let k = Monomial::new(1.0, 1.0).deriv(&p.phi, 1.0).value(&p.ell, -1.0);
    let e2 = integrability_entry("phi_ell_2", &k)?;
    let e3 = integrability_entry("phi_ell_3", &ratio)?;
    let both = Entry::new("phi_ell", e1.holds.and(e2.holds), e1.method.both(e2.method));
    rep.push(e1);
    rep.push(e2);
    rep.push(e3);
    rep.push(both);
    Ok(rep)
}

/// `f(0) = 0`, `f > 0` on `(0, inf)` and `f` C-increasing.
pub fn check_f(p: &StructuralProfile) -> Result<ConditionReport> {
    let f = &p.f;
    let mut rep = ConditionReport::default();
    let f0 = f.eval(0.0);
    let zero = f0 == 0.0;
    let positive_exact = f.is_builtin() && f.sign() == Some(1);
    let bad = if positive_exact {
        None
    } else {
        p.grid.points().into_iter().find(|&t| !(f.eval(t) > 0.0))
    };
    let mut entry = if !zero {
        Entry::new("f_1", Holds::No, Method::Exact).witness(Some(Witness::Point { t: 0.0, value: f0 }))
    } else if let Some(t) = bad {
        Entry::new("f_1", Holds::No, Method::Sampled)
            .witness(Some(Witness::Point { t, value: f.eval(t) }))
    } else {
        match f.as_monomial() {
            Some((_, a)) => Entry::new("f_1", Holds::from_bool(a >= 0.0), Method::Exact).constant(1.0),
            None => {
                let mut e = c_increasing_entry("f_1", f, &p.grid, p.c_increasing_tolerance)?;
                e.name = "f_1".into();
                e
            }
        }
    };
    if entry.holds == Holds::Yes && entry.constant.is_none() {
        entry.constant = Some(1.0);
    }
    rep.push(entry);
    Ok(rep)
}

/// `rho >= 0`, `g <= C rho` and `0 <= h <= C t^2 phi'` for the
/// lower-order term `g(u) h(|grad u|)`.
pub fn check_rho_terms(p: &StructuralProfile) -> Result<ConditionReport> {
    let mut rep = ConditionReport::default();
    let Some(rho) = &p.rho else {
        return Err(Error::InvalidInput("rho is required for the gradient-term checks".into()));
    };
    let pts = p.grid.points();
    let neg = pts.iter().copied().find(|&t| !(rho.eval(t) >= 0.0));
    rep.push(
        Entry::new("rho", Holds::from_bool(neg.is_none()), Method::Sampled)
            .witness(neg.map(|t| Witness::Point { t, value: rho.eval(t) })),
    );
    if let Some(g) = &p.g_fn {
        let mut sup: f64 = 0.0;
        let mut worst = None;
        for &t in &pts {
            let (gv, rv) = (g.eval(t), rho.eval(t));
            if gv <= 0.0 {
                continue;
            }
            let r = if rv > 0.0 { gv / rv } else { f64::INFINITY };
            if r > sup {
                sup = r;
                worst = Some((t, gv - rv));
            }
        }
        let holds = sup <= C_CAP;
        rep.push(
            Entry::new("g", Holds::from_bool(holds), Method::Sampled)
                .constant(sup)
                .witness(worst.filter(|_| !holds).map(|(t, value)| Witness::Point { t, value })),
        );
    }
    if let Some(h) = &p.h_fn {
        let neg = pts.iter().copied().find(|&t| h.eval(t) < 0.0);
        let entry = match neg {
            Some(t) => Entry::new("h", Holds::No, Method::Sampled)
                .witness(Some(Witness::Point { t, value: h.eval(t) })),
            None => {
                let mut sup: f64 = 0.0;
                let mut at = p.grid.lo;
                for &t in &pts {
                    let r = h.eval(t) / (t * t * p.phi.deriv(t));
                    if r > sup || r.is_nan() {
                        sup = r;
                        at = t;
                    }
                }
                let holds = sup.is_finite() && sup <= C_CAP;
                Entry::new("h", Holds::from_bool(holds), Method::Sampled)
                    .constant(sup)
                    .witness((!holds).then(|| Witness::Point { t: at, value: h.eval(at) }))
            }
        };
        rep.push(entry);
    }
    Ok(rep)
}

/// Smallest grid point after which `b'(t) <= 0` on the rest of the grid.
pub fn nonincreasing_from(b: &FunctionSpec, grid: &LogGrid) -> Option<f64> {
    let pts = grid.points();
    let mut from = None;
    for &t in pts.iter().rev() {
        if b.deriv(t) <= 0.0 {
            from = Some(t);
        } else {
            break;
        }
    }
    from
}

/// Positivity, eventual monotonicity and non-integrability of `b^lambda`.
pub fn check_b_tilde(p: &StructuralProfile) -> Result<ConditionReport> {
    let b = &p.b_tilde;
    let mut rep = ConditionReport::default();
    let pts = p.grid.points();
    let bad = pts.iter().copied().find(|&t| !(b.eval(t) > 0.0 || b.ln_value(t).is_finite()));
    let pos = Entry::new("b_positive", Holds::from_bool(bad.is_none()), Method::Sampled)
        .witness(bad.map(|t| Witness::Point { t, value: b.eval(t) }));
    let from = nonincreasing_from(b, &p.grid);
    let mono = match from {
        Some(t) if t < p.grid.hi => Entry::new("b_nonincreasing", Holds::Yes, Method::Sampled).constant(t),
        _ => Entry::new("b_nonincreasing", Holds::No, Method::Sampled).witness(Some(Witness::Point {
            t: p.grid.hi,
            value: b.deriv(p.grid.hi),
        })),
    };
    let nonint = if pos.holds == Holds::Yes {
        let bl = Monomial::new(1.0, 0.0).value(b, p.lambda_b);
        let v = classify_improper(&bl, Endpoint::Infinity)?;
        let h = match v.verdict {
            Verdict::Divergent => Holds::Yes,
            Verdict::Convergent => Holds::No,
            Verdict::Inconclusive => Holds::Inconclusive,
        };
        let method = if v.is_exact() { Method::Exact } else { Method::Sampled };
        Entry::new("b_nonintegrable", h, method).witness(
            (h == Holds::No).then(|| Witness::Slack { value: v.fitted_exponent.unwrap_or(f64::NAN) }),
        )
    } else {
        Entry::new("b_nonintegrable", Holds::Inconclusive, Method::Sampled)
    };
    let all = Entry::new(
        "b",
        pos.holds.and(mono.holds).and(nonint.holds),
        pos.method.both(mono.method).both(nonint.method),
    );
    rep.push(pos);
    rep.push(mono);
    rep.push(nonint);
    rep.push(all);
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Thetabetamu,
    ThetabetamuPrime,
    Eq38,
    CorA1,
    CorA2,
    Eq66,
}

fn slack_entry(name: &str, ok: bool, slack: f64) -> Entry {
    Entry::new(name, Holds::from_bool(ok), Method::Exact)
        .witness((!ok).then_some(Witness::Slack { value: slack }))
}

/// Growth of `int_1^t b^lambda` for `b = C t^-mu`: `(power, is_log)`.
fn b_integral_growth(mu: f64, lambda: f64) -> (f64, bool) {
    let e = 1.0 - mu * lambda;
    if e > 0.0 {
        (e, false)
    } else if e == 0.0 {
        (0.0, true)
    } else {
        (0.0, false)
    }
}

/// `(p, q)` when `phi = c t^{p-1}` and `ell = c' t^q`.
fn p_and_q(p: &StructuralProfile) -> Result<(f64, f64)> {
    let (Some((_, a)), Some((_, q))) = (p.phi.as_monomial(), p.ell.as_monomial()) else {
        return Err(Error::InvalidInput("this regime needs phi = t^(p-1) and ell = t^q".into()));
    };
    Ok((a + 1.0, q))
}

/// Pure inequality arithmetic on the scalar parameters.
pub fn check_parameter_regimes(p: &StructuralProfile, kind: RegimeKind) -> Result<ConditionReport> {
    let (th, be, mu, la) = (p.theta, p.beta, p.mu, p.lambda_b);
    let mut rep = ConditionReport::default();
    match kind {
        RegimeKind::Thetabetamu => {
            let bound = 1.0 - be / 2.0 - mu;
            let ok = if mu > 0.0 {
                th < bound || (th == bound && th < 1.0)
            } else if mu == 0.0 {
                th < 1.0 - be / 2.0
            } else {
                false
            };
            rep.push(slack_entry("thetabetamu", ok, bound - th));
        }
        RegimeKind::ThetabetamuPrime => {
            let bound = 1.0 - be / 2.0 - mu;
            let c1 = th <= 1.0 && mu > 0.0 && th < bound;
            let c2 = th < 1.0 && mu > 0.0 && th == bound;
            let c3 = th <= 1.0 && mu == 0.0 && th < 1.0 - be / 2.0;
            rep.push(slack_entry("thetabetamu_prime_case1", c1, bound - th));
            rep.push(slack_entry("thetabetamu_prime_case2", c2, bound - th));
            rep.push(slack_entry("thetabetamu_prime_case3", c3, 1.0 - be / 2.0 - th));
            rep.push(slack_entry("thetabetamu_prime", c1 || c2 || c3, bound - th));
        }
        RegimeKind::Eq38 => {
            let lam_ok = la * (2.0 - th) >= 1.0;
            let e = be / 2.0 - mu * (la * (1.0 - th) - 1.0);
            let (g, is_log) = b_integral_growth(mu, la);
            let i_ok = if is_log { e < 0.0 } else { e + g <= 0.0 };
            let ii_ok = e <= 0.0 && th < 1.0;
            rep.push(slack_entry("eq38_lambda", lam_ok, la * (2.0 - th) - 1.0));
            rep.push(slack_entry("eq38_i", i_ok, -(e + g)));
            rep.push(slack_entry("eq38_ii", ii_ok, -e));
            rep.push(slack_entry("eq38", lam_ok && (i_ok || ii_ok), -e));
        }
        RegimeKind::Eq66 => {
            if th > 1.0 {
                rep.push(slack_entry("eq66", false, 1.0 - th));
            } else if th == 1.0 {
                let (g, is_log) = b_integral_growth(mu, la);
                let e = be / 2.0 + mu;
                let ok_growth = if is_log { e < 0.0 } else { e + g <= 0.0 };
                rep.push(slack_entry("eq66_lambda", la >= 1.0, la - 1.0));
                rep.push(slack_entry("eq66", la >= 1.0 && ok_growth, -(e + g)));
            } else {
                let e = be / 2.0 - mu * (la * (1.0 - th) - 1.0);
                let lam_ok = la * (2.0 - th) >= 1.0;
                rep.push(slack_entry("eq66_lambda", lam_ok, la * (2.0 - th) - 1.0));
                rep.push(slack_entry("eq66", lam_ok && e <= 0.0, -e));
            }
        }
        RegimeKind::CorA1 => {
            let (pp, q) = p_and_q(p)?;
            let a = pp > q + 1.0;
            let b = mu >= 0.0 && mu <= pp - q;
            let c = be <= 2.0 * (pp - q - mu - 1.0);
            rep.push(slack_entry("cor_a1_p_q", a, pp - q - 1.0));
            rep.push(slack_entry("cor_a1_mu", b, (pp - q - mu).min(mu)));
            rep.push(slack_entry("cor_a1_beta", c, 2.0 * (pp - q - mu - 1.0) - be));
            rep.push(slack_entry("cor_a1", a && b && c, 2.0 * (pp - q - mu - 1.0) - be));
        }
        RegimeKind::CorA2 => {
            let q = match p.ell.as_monomial() {
                Some((_, q)) => q,
                None => return invalid("this regime needs ell = t^q"),
            };
            let ok = mu >= 0.0 && q >= 0.0 && q < -be / 2.0 - mu;
            rep.push(slack_entry("cor_a2", ok, -be / 2.0 - mu - q));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Sampled;
    use crate::math::sin;

    fn profile(phi: FunctionSpec, ell: FunctionSpec) -> StructuralProfile {
        StructuralProfile::new(phi, ell, FunctionSpec::power(1.0, 1.0))
    }

    #[test]
    fn c_increasing_monotone_and_oscillating() {
        let grid = LogGrid::default();
        let r = estimate_c_increasing(&FunctionSpec::power(1.0, 2.0), &grid).unwrap();
        assert!(r.holds && r.c_est == 1.0);
        let osc = Sampled(|t: f64| t * t * (2.0 + sin(t)));
        let g = LogGrid::new(1e-3, 1e3, 20001).unwrap();
        let r = estimate_c_increasing(&osc, &g).unwrap();
        assert!(r.holds && r.c_est >= 1.0 && r.c_est <= 3.0, "{}", r.c_est);
        let r = estimate_c_increasing(&FunctionSpec::exponential(1.0, -1.0), &grid).unwrap();
        assert!(!r.holds);
        let (s, t) = r.witness.unwrap();
        assert!(s < t && exp(t - s) > C_CAP);
    }

    #[test]
    fn c_increasing_rejects_non_positive_sample() {
        let f = FunctionSpec::sine(1.0, 1.0);
        match estimate_c_increasing(&f, &LogGrid::default()) {
            Err(Error::NonPositiveSample { t, .. }) => assert!(sin(t) <= 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phi_conditions_for_standard_operators() {
        let mut p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(1.0));
        p.a_bound = Some(1.0);
        p.delta = Some(1.0);
        let r = check_phi(&p).unwrap();
        for n in ["phi_0", "phi_1", "phi_2"] {
            assert_eq!(r.holds(n), Holds::Yes, "{n}");
        }
        let r = check_phi(&profile(FunctionSpec::mean_curvature(), FunctionSpec::constant(1.0))).unwrap();
        assert_eq!(r.get("phi_2").unwrap().holds, Holds::Yes);
        assert_eq!(r.get("phi_2").unwrap().method, Method::Exact);
        let r = check_phi(&profile(FunctionSpec::exp_power(), FunctionSpec::constant(1.0))).unwrap();
        let e = r.get("phi_2").unwrap();
        assert_eq!(e.holds, Holds::No);
        match e.witness {
            Some(Witness::Point { t, value }) => {
                assert_eq!(t, 2.0);
                assert!(value < 0.0);
            }
            w => panic!("{w:?}"),
        }
    }

    #[test]
    fn ell_conditions() {
        let mut p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::power(1.0, 0.5));
        p.chi = Some(0.5);
        let r = check_grad_ell(&p).unwrap();
        assert!(["l_1", "l_2", "l_3"].iter().all(|n| r.holds(n) == Holds::Yes));
        let mut p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(1.0));
        p.chi = Some(0.0);
        let r = check_grad_ell(&p).unwrap();
        assert!(["l_1", "l_2", "l_3"].iter().all(|n| r.holds(n) == Holds::Yes));
        let p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::exponential(1.0, -1.0));
        let r = check_grad_ell(&p).unwrap();
        assert_eq!(r.holds("l_2"), Holds::No);
        assert!(matches!(r.get("l_2").unwrap().witness, Some(Witness::Pair { .. })));
    }

    #[test]
    fn theta_for_power_operators() {
        let mut p = profile(FunctionSpec::power(1.0, 2.0), FunctionSpec::constant(1.0));
        p.theta = 0.0;
        let r = check_theta(&p).unwrap();
        assert_eq!(r.holds("theta_1"), Holds::Yes);
        assert_eq!(r.holds("theta_2"), Holds::Yes);
        let mut p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::power(1.0, 1.0));
        p.theta = 0.0;
        let r = check_theta(&p).unwrap();
        assert_eq!(r.holds("theta_1"), Holds::No);
        let mut p = profile(FunctionSpec::mean_curvature(), FunctionSpec::power(1.0, 0.5));
        p.theta = 1.5;
        assert_eq!(check_theta(&p).unwrap().holds("theta_2"), Holds::Yes);
    }

    #[test]
    fn phi_ell_for_power_and_mean_curvature() {
        let p = profile(FunctionSpec::power(1.0, 2.0), FunctionSpec::power(1.0, 1.0));
        assert_eq!(check_phi_ell(&p).unwrap().holds("phi_ell"), Holds::Yes);
        let p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::power(1.0, 1.0));
        assert_eq!(check_phi_ell(&p).unwrap().holds("phi_ell"), Holds::No);
        let p = profile(FunctionSpec::mean_curvature(), FunctionSpec::constant(1.0));
        let r = check_phi_ell(&p).unwrap();
        assert_eq!(r.holds("phi_ell_2"), Holds::No);
        assert_eq!(r.holds("phi_ell_3"), Holds::Yes);
        assert_eq!(r.get("phi_ell_3").unwrap().method, Method::Exact);
    }

    #[test]
    fn b_tilde_conditions() {
        let mut p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(1.0));
        p.b_tilde = FunctionSpec::power(1.0, -2.0);
        p.lambda_b = 0.5;
        assert_eq!(check_b_tilde(&p).unwrap().holds("b"), Holds::Yes);
        p.b_tilde = FunctionSpec::constant(1.0);
        p.lambda_b = 1.0;
        assert_eq!(check_b_tilde(&p).unwrap().holds("b"), Holds::Yes);
        p.b_tilde = FunctionSpec::exponential(1.0, -1.0);
        assert_eq!(check_b_tilde(&p).unwrap().holds("b_nonintegrable"), Holds::No);
    }

    #[test]
    fn parameter_regimes() {
        let mut p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(1.0));
        p.theta = 0.0;
        p.beta = -2.0;
        p.mu = 0.0;
        let r = check_parameter_regimes(&p, RegimeKind::Thetabetamu).unwrap();
        assert_eq!(r.holds("thetabetamu"), Holds::Yes);
        p.beta = 2.0;
        let r = check_parameter_regimes(&p, RegimeKind::CorA1).unwrap();
        assert_eq!(r.holds("cor_a1"), Holds::Yes);
        let mut q = profile(FunctionSpec::mean_curvature(), FunctionSpec::power(1.0, 0.3));
        q.beta = 0.0;
        q.mu = 0.2;
        let r = check_parameter_regimes(&q, RegimeKind::CorA2).unwrap();
        assert_eq!(r.holds("cor_a2"), Holds::No);
        assert_eq!(r, check_parameter_regimes(&q, RegimeKind::CorA2).unwrap());
    }

    #[test]
    fn beta_below_minus_two_is_clamped() {
        let mut p = profile(FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(1.0));
        p.beta = -5.0;
        let w = p.validate().unwrap();
        assert_eq!(p.beta, -2.0);
        assert_eq!(w.len(), 1);
    }
}
