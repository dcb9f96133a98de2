//! Radial barriers `alpha` for the radialized inequality
//! `phi'(a') a'' + A t^{beta/2} phi(a') <= b(t) f(a) ell(a')`
//! (with `+ rho(a) phi'(a') a'^2` on the left in the rho variant).
//!
//! In KO mode `alpha` blows up at a finite `T_sigma` and is defined by
//! `int_t^{T_sigma} b^lambda = int_alpha^inf e^R / K^{-1}(sigma Fhat)`; in
//! negKO mode it is global, `int_{t0}^t b^lambda = int_eps^alpha (same)`.
//! The grid is uniform in `u = int_{t0}^t b^lambda`, so it crowds towards
//! the blow-up point.

use alloc::format;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::RefCell;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::math::{exp, ln, powf};
use crate::primitive::{MonotoneMap, TailMap, T_CAP};
use crate::quad::{integrate, Tol};
use crate::structural::{nonincreasing_from, theta_constants, StructuralProfile};
use crate::transforms::{classify_ko, invert_monotone, Kernel, KoMaps, KoVariant, Verdict};

/// Default number of grid points of a built profile.
pub const GRID_POINTS: usize = 4096;
/// negKO profiles stop here in `t`...
pub const NEGKO_T_MAX: f64 = 1e6;
/// ...or where `alpha` reaches this.
pub const NEGKO_ALPHA_CAP: f64 = 1e150;
/// Grid points closer than this to `T_sigma` are dropped.
pub const BLOWUP_GAP: f64 = 1e-6;

const B_TOL: Tol = Tol::new(1e-300, 1e-13);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    Off,
    On,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KoMode {
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "negKO")]
    NegKo,
}

#[derive(Clone, Debug)]
pub struct BuildRequest {
    pub profile: StructuralProfile,
    pub kernel: Kernel,
    pub rho_mode: RhoMode,
    pub ko_mode: KoMode,
    pub epsilon: f64,
    pub eta: f64,
    pub t0: f64,
    pub t1: f64,
    pub a_geom: f64,
    pub beta: f64,
    pub grid_points: usize,
}

impl BuildRequest {
    /// KO-mode request without rho, with `beta = -2` and the default grid.
    pub fn new(profile: StructuralProfile, epsilon: f64, eta: f64, t0: f64, t1: f64, a_geom: f64) -> Self {
        BuildRequest {
            profile,
            kernel: Kernel::K,
            rho_mode: RhoMode::Off,
            ko_mode: KoMode::Ko,
            epsilon,
            eta,
            t0,
            t1,
            a_geom,
            beta: -2.0,
            grid_points: GRID_POINTS,
        }
    }

    pub fn variant(&self) -> KoVariant {
        match (self.kernel, self.rho_mode) {
            (Kernel::K, RhoMode::Off) => KoVariant::Ko,
            (Kernel::Khat, RhoMode::Off) => KoVariant::KhatO,
            (Kernel::K, RhoMode::On) => KoVariant::RhoKo,
            (Kernel::Khat, RhoMode::On) => KoVariant::RhoKhatO,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.epsilon, self.eta, self.t0, self.t1, self.a_geom, self.beta];
        if finite.iter().any(|v| !v.is_finite()) {
            return invalid("request scalars must be finite");
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.eta) {
            return invalid("need 0 < epsilon < eta");
        }
        if !(self.t0 >= 0.0 && self.t0 < self.t1) {
            return invalid("need 0 <= t0 < t1");
        }
        if self.a_geom < 0.0 {
            return invalid("A must be non-negative");
        }
        if self.a_geom > 0.0 && self.beta < 0.0 && self.t0 == 0.0 {
            return invalid("t^(beta/2) is singular at t0 = 0");
        }
        if self.grid_points < 2 || self.grid_points > 1_000_000 {
            return invalid("grid needs between 2 and 1e6 points");
        }
        if self.rho_mode == RhoMode::On && self.profile.rho.is_none() {
            return invalid("rho mode needs rho");
        }
        Ok(())
    }
}

/// Per-point terms (I), (II), (III) of `N_sigma`.
#[derive(Clone, Debug, Serialize)]
pub struct NSigma {
    pub max: f64,
    pub at: f64,
    /// The C-increasing constant used for all three terms.
    pub c: f64,
    #[serde(skip)]
    pub terms: Vec<[f64; 3]>,
}

/// A built barrier with its certificate tables.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_prime: Vec<f64>,
    pub alpha_second: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `(rhs - lhs) / max(|lhs|, |rhs|)` per point.
    pub margin: Vec<f64>,
    pub sigma: f64,
    /// `None` in negKO mode (no blow-up).
    pub t_sigma: Option<f64>,
    pub c_sigma: Option<f64>,
    pub n_sigma: NSigma,
    pub residual_margin: f64,
    pub blow_up: bool,
    /// `b` was divided by this to make it `<= 1` on `[t0, inf)`.
    pub b_scale: f64,
    /// Points dropped next to `T_sigma`.
    pub truncated: usize,
}

pub const PROFILE_HEADER: [&str; 6] = ["t", "alpha", "alpha_prime", "lhs", "rhs", "margin"];

impl RadialProfile {
    pub fn rows(&self) -> Vec<[f64; 6]> {
        (0..self.t.len())
            .map(|i| [self.t[i], self.alpha[i], self.alpha_prime[i], self.lhs[i], self.rhs[i], self.margin[i]])
            .collect()
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            sigma: self.sigma,
            t_sigma: self.t_sigma,
            c_sigma: self.c_sigma,
            n_sigma: self.n_sigma.clone(),
            residual_margin: self.residual_margin,
            blow_up: self.blow_up,
            b_scale: self.b_scale,
            points: self.t.len(),
            truncated: self.truncated,
            alpha_last: self.alpha.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileSummary {
    pub sigma: f64,
    pub t_sigma: Option<f64>,
    pub c_sigma: Option<f64>,
    pub n_sigma: NSigma,
    pub residual_margin: f64,
    pub blow_up: bool,
    pub b_scale: f64,
    pub points: usize,
    pub truncated: usize,
    pub alpha_last: f64,
}

/// One evaluation of the sigma predicate.
#[derive(Clone, Debug, Serialize)]
pub struct SigmaProbe {
    pub sigma: f64,
    pub passed: bool,
    pub n_sigma_max: Option<f64>,
    pub alpha_t1: Option<f64>,
    pub t_sigma: Option<f64>,
    /// Failing clauses, or the error that aborted the probe.
    pub failed: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub sigma: f64,
    pub profile: RadialProfile,
    pub probes: Vec<SigmaProbe>,
}

/// Per-sigma state: the tail map (KO) or the forward map (negKO).
enum SigmaMaps {
    Ko { tail: TailMap, c_sigma: f64, t_sigma: f64 },
    NegKo { fwd: MonotoneMap },
}

/// Everything about a request that does not depend on sigma.
pub struct Barrier {
    req: BuildRequest,
    prof: StructuralProfile,
    maps: KoMaps,
    b_map: Rc<RefCell<MonotoneMap>>,
    b_scale: f64,
    threshold: f64,
    c_const: f64,
}

/// Threshold after which `b` is non-increasing: 0 for constant or
/// decreasing powers, else the grid scan.
fn b_threshold(p: &StructuralProfile) -> Option<f64> {
    match p.b_tilde.as_monomial() {
        Some((c, a)) if c > 0.0 && a <= 0.0 => Some(0.0),
        _ => nonincreasing_from(&p.b_tilde, &p.grid),
    }
}

impl Barrier {
    /// Checks the mode guard, scans `T`, rescales `b` and builds the maps.
    pub fn new(req: &BuildRequest) -> Result<Self> {
        req.validate()?;
        let mut prof = req.profile.clone();
        if req.rho_mode == RhoMode::On {
            prof.omega = prof.theta;
        }
        let variant = req.variant();
        let verdict = classify_ko(&prof, variant, 1.0)?;
        match (req.ko_mode, verdict.verdict) {
            (KoMode::Ko, Verdict::Convergent) | (KoMode::NegKo, Verdict::Divergent) => {}
            (mode, v) => {
                return Err(Error::ModeGuard(format!(
                    "{mode:?} mode needs a {} integral condition, found {v:?}",
                    if mode == KoMode::Ko { "convergent" } else { "divergent" }
                )))
            }
        }
        let threshold = b_threshold(&prof)
            .ok_or_else(|| Error::ConditionFailed("b is not eventually non-increasing".into()))?;
        if req.t0 < threshold {
            return Err(Error::ConditionFailed(format!(
                "t0 = {} lies below the threshold T = {threshold} where b stops increasing",
                req.t0
            )));
        }
        let b0 = prof.b_tilde.eval(req.t0);
        if !(b0 > 0.0) || !b0.is_finite() {
            return Err(Error::NonPositiveSample { t: req.t0, value: b0 });
        }
        let b_scale = b0.max(1.0);
        let [c1, c2, cf, cl] = theta_constants(&prof)?;
        let c_const = c1.max(c2 * cf * cl);
        if !c_const.is_finite() {
            return Err(Error::ConditionFailed("(theta) constants are not available".into()));
        }
        let rho = match req.rho_mode {
            RhoMode::On => prof.rho.as_ref().map(|r| (r, prof.omega)),
            RhoMode::Off => None,
        };
        let maps = KoMaps::new(&prof, req.kernel, rho)?;
        let b = prof.b_tilde.clone();
        let lam = prof.lambda_b;
        let b_map = MonotoneMap::new(
            req.t0,
            alloc::boxed::Box::new(move |t| Ok(powf(b.eval(t) / b_scale, lam))),
        )?;
        Ok(Barrier {
            req: req.clone(),
            prof,
            maps,
            b_map: Rc::new(RefCell::new(b_map)),
            b_scale,
            threshold,
            c_const,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn b_scale(&self) -> f64 {
        self.b_scale
    }

    pub fn c_const(&self) -> f64 {
        self.c_const
    }

    fn b(&self, t: f64) -> f64 {
        self.prof.b_tilde.eval(t) / self.b_scale
    }

    /// `int_{t0}^t b^lambda` (rescaled `b`).
    fn b_int(&self, t: f64) -> Result<f64> {
        self.b_map.borrow_mut().forward(t)
    }

    fn b_int_inv(&self, u: f64) -> Result<f64> {
        invert_monotone(&mut self.b_map.borrow_mut(), u)
    }

    fn b_pow(&self, t: f64) -> f64 {
        powf(self.b(t), self.prof.lambda_b)
    }

    /// `K^{-1}(sigma Fhat(s))`.
    fn x_of(&self, sigma: f64, s: f64) -> Result<f64> {
        self.maps.k_inv(sigma * self.maps.f_hat(s)?)
    }

    fn integrand(&self, sigma: f64) -> crate::primitive::Integrand {
        let maps = self.maps.clone();
        alloc::boxed::Box::new(move |s| Ok(exp(maps.ln_ko_integrand(sigma, s)?)))
    }

    fn sigma_maps(&self, sigma: f64) -> Result<SigmaMaps> {
        if !(sigma > 0.0 && sigma <= 1.0) {
            return invalid("sigma must lie in (0, 1]");
        }
        match self.req.ko_mode {
            KoMode::Ko => {
                let tail = TailMap::new(self.req.epsilon, T_CAP, self.integrand(sigma))?;
                let c_sigma = tail.total();
                let t_sigma = self.b_int_inv(c_sigma)?;
                Ok(SigmaMaps::Ko { tail, c_sigma, t_sigma })
            }
            KoMode::NegKo => Ok(SigmaMaps::NegKo { fwd: MonotoneMap::new(self.req.epsilon, self.integrand(sigma))? }),
        }
    }

    /// `C_sigma = int_eps^inf e^R / K^{-1}(sigma Fhat)` (infinite in negKO mode).
    pub fn c_sigma(&self, sigma: f64) -> Result<f64> {
        match self.sigma_maps(sigma)? {
            SigmaMaps::Ko { c_sigma, .. } => Ok(c_sigma),
            SigmaMaps::NegKo { .. } => Ok(f64::INFINITY),
        }
    }

    /// `T_sigma` with `int_{t0}^{T_sigma} b^lambda = C_sigma`.
    pub fn t_sigma(&self, sigma: f64) -> Result<Option<f64>> {
        match self.sigma_maps(sigma)? {
            SigmaMaps::Ko { t_sigma, .. } => Ok(Some(t_sigma)),
            SigmaMaps::NegKo { .. } => Ok(None),
        }
    }

    fn alpha_from(&self, sm: &mut SigmaMaps, t: f64) -> Result<f64> {
        match sm {
            SigmaMaps::Ko { tail, c_sigma, t_sigma } => {
                if t >= *t_sigma {
                    return Ok(f64::INFINITY);
                }
                let u = self.b_int(t)?;
                let rest = if u < 0.5 * *c_sigma {
                    *c_sigma - u
                } else {
                    integrate(|s| self.b_pow(s), t, *t_sigma, B_TOL)?
                };
                tail.inverse(rest.min(tail.total()))
            }
            SigmaMaps::NegKo { fwd } => fwd.inverse(self.b_int(t)?),
        }
    }

    /// `alpha(t)` for the barrier at `sigma` (infinite at and past `T_sigma`).
    pub fn alpha_at(&self, sigma: f64, t: f64) -> Result<f64> {
        if t < self.req.t0 {
            return invalid("alpha is defined from t0 on");
        }
        let mut sm = self.sigma_maps(sigma)?;
        self.alpha_from(&mut sm, t)
    }

    /// `(alpha', alpha'')` at `(t, alpha)` from the closed derivative formula.
    fn derivatives(&self, sigma: f64, t: f64, a: f64) -> Result<(f64, f64)> {
        let lam = self.prof.lambda_b;
        let bt = self.b(t);
        let bl = powf(bt, lam);
        let db = self.prof.b_tilde.deriv(t) / self.b_scale;
        let x = self.x_of(sigma, a)?;
        let e = exp(-self.maps.r(a)?);
        let ap = bl * x * e;
        let dx = sigma * self.maps.f_hat_integrand(a)? * ap / self.maps.kernel_integrand(x)?;
        let rho_a = match (&self.prof.rho, self.maps.has_rho()) {
            (Some(r), true) => r.eval(a),
            _ => 0.0,
        };
        let db_term = if db == 0.0 { 0.0 } else { lam * powf(bt, lam - 1.0) * db * x * e };
        let app = db_term + bl * e * dx - bl * x * rho_a * ap * e;
        Ok((ap, app))
    }

    /// Left and right sides of the target inequality at one point.
    fn sides(&self, t: f64, a: f64, ap: f64, app: f64) -> (f64, f64) {
        let p = &self.prof;
        let dphi = p.phi.deriv(ap);
        let mut lhs = dphi * app;
        if self.req.a_geom > 0.0 {
            lhs += self.req.a_geom * powf(t, self.req.beta / 2.0) * p.phi.eval(ap);
        }
        if self.maps.has_rho() {
            if let Some(r) = &p.rho {
                lhs += r.eval(a) * dphi * ap * ap;
            }
        }
        let rhs = self.b(t) * p.f.eval(a) * p.ell.eval(ap);
        (lhs, rhs)
    }

    /// Terms of `N_sigma` on grid points `t` with `u = int_{t0}^t b^lambda`.
    fn n_sigma_on(&self, sigma: f64, ts: &[f64], us: &[f64]) -> Result<NSigma> {
        let p = &self.prof;
        let (lam, th, c) = (p.lambda_b, p.theta, self.c_const);
        let eps = self.req.epsilon;
        let x0 = self.x_of(sigma, eps)?;
        let ii_coef = p.phi.eval(x0) / (p.ell.eval(x0) * p.f.eval(eps));
        let a = self.req.a_geom;
        let mut terms = Vec::with_capacity(ts.len());
        let (mut max, mut at) = (f64::NEG_INFINITY, f64::NAN);
        for (&t, &u) in ts.iter().zip(us) {
            let bt = self.b(t);
            let one = c * sigma * powf(bt, lam * (2.0 - th) - 1.0);
            let (two, three) = if a > 0.0 {
                let w = a * c * powf(t, self.req.beta / 2.0) * powf(bt, lam * (1.0 - th) - 1.0);
                (w * ii_coef, w * sigma * u)
            } else {
                (0.0, 0.0)
            };
            let n = one + two + three;
            if !(n <= max) {
                max = n;
                at = t;
            }
            terms.push([one, two, three]);
        }
        Ok(NSigma { max, at, c, terms })
    }

    /// Grid points `(t_i, u_i)` and the number of dropped points. `alpha` is
    /// the costly part (one tail inversion per point); probes skip it.
    fn grid(&self, sm: &mut SigmaMaps, with_alpha: bool) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, usize)> {
        let n = self.req.grid_points;
        let t0 = self.req.t0;
        let (mut ts, mut us, mut alphas) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut truncated = 0;
        match sm {
            SigmaMaps::Ko { tail, c_sigma, t_sigma } => {
                let c = *c_sigma;
                for i in 0..n {
                    let u = c * i as f64 / n as f64;
                    let t = if i == 0 { t0 } else { self.b_int_inv(u)? };
                    if *t_sigma - t < BLOWUP_GAP {
                        truncated += 1;
                        continue;
                    }
                    let rest = c * (n - i) as f64 / n as f64;
                    let a = if i == 0 || !with_alpha { self.req.epsilon } else { tail.inverse(rest)? };
                    ts.push(t);
                    us.push(u);
                    alphas.push(a);
                }
            }
            SigmaMaps::NegKo { fwd } => {
                let u_t = self.b_int(NEGKO_T_MAX.max(self.req.t1))?;
                let u_a = match fwd.forward(NEGKO_ALPHA_CAP) {
                    Ok(v) => v,
                    Err(Error::Overflow { .. }) | Err(Error::Numerical(_)) => fwd.value_at_cap(),
                    Err(e) => return Err(e),
                };
                let u_end = u_t.min(u_a);
                for i in 0..n {
                    let u = u_end * i as f64 / (n - 1) as f64;
                    let t = if i == 0 { t0 } else { self.b_int_inv(u)? };
                    let a = if i == 0 || !with_alpha { self.req.epsilon } else { fwd.inverse(u)? };
                    ts.push(t);
                    us.push(u);
                    alphas.push(a);
                }
            }
        }
        Ok((ts, us, alphas, truncated))
    }

    /// Builds the profile at `sigma`, with `N_sigma` and residual tables.
    pub fn build(&self, sigma: f64) -> Result<RadialProfile> {
        let mut sm = self.sigma_maps(sigma)?;
        let (t, us, alpha, truncated) = self.grid(&mut sm, true)?;
        let n = t.len();
        let (mut ap, mut app) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut lhs, mut rhs, mut margin) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut min_margin = f64::INFINITY;
        for i in 0..n {
            let (d1, d2) = self.derivatives(sigma, t[i], alpha[i])?;
            let (l, r) = self.sides(t[i], alpha[i], d1, d2);
            let m = relative_margin(l, r);
            if !m.is_finite() {
                return Err(Error::Numerical(format!("residual not representable at t = {:e}", t[i])));
            }
            min_margin = min_margin.min(m);
            ap.push(d1);
            app.push(d2);
            lhs.push(l);
            rhs.push(r);
            margin.push(m);
        }
        let n_sigma = self.n_sigma_on(sigma, &t, &us)?;
        let (t_sigma, c_sigma) = match sm {
            SigmaMaps::Ko { t_sigma, c_sigma, .. } => (Some(t_sigma), Some(c_sigma)),
            SigmaMaps::NegKo { .. } => (None, None),
        };
        Ok(RadialProfile {
            t,
            alpha,
            alpha_prime: ap,
            alpha_second: app,
            lhs,
            rhs,
            margin,
            sigma,
            t_sigma,
            c_sigma,
            n_sigma,
            residual_margin: min_margin,
            blow_up: self.req.ko_mode == KoMode::Ko,
            b_scale: self.b_scale,
            truncated,
        })
    }

    /// Evaluates the sigma predicate without building the full profile.
    pub fn probe(&self, sigma: f64) -> SigmaProbe {
        let mut probe = SigmaProbe {
            sigma,
            passed: false,
            n_sigma_max: None,
            alpha_t1: None,
            t_sigma: None,
            failed: Vec::new(),
        };
        if let Err(e) = self.probe_into(sigma, &mut probe) {
            probe.failed.push(e.to_string());
        }
        probe.passed = probe.failed.is_empty();
        probe
    }

    fn probe_into(&self, sigma: f64, probe: &mut SigmaProbe) -> Result<()> {
        let mut sm = self.sigma_maps(sigma)?;
        let t1 = self.req.t1;
        if let SigmaMaps::Ko { t_sigma, .. } = &sm {
            probe.t_sigma = Some(*t_sigma);
            if !(*t_sigma > t1) {
                probe.failed.push("T_sigma > t1".into());
                return Ok(());
            }
        }
        let a1 = self.alpha_from(&mut sm, t1)?;
        probe.alpha_t1 = Some(a1);
        if !(a1 <= self.req.eta) {
            probe.failed.push("alpha(t1) <= eta".into());
        }
        let (t, us, _, _) = self.grid(&mut sm, false)?;
        let ns = self.n_sigma_on(sigma, &t, &us)?;
        probe.n_sigma_max = Some(ns.max);
        if !(ns.max <= 1.0) {
            probe.failed.push("N_sigma <= 1".into());
        }
        Ok(())
    }

    /// Largest passing sigma: decades `1, 0.1, ..., 1e-12`, then bisection
    /// in `ln sigma` above the first passing decade. Every probe is kept.
    pub fn search(&self) -> Result<SearchOutcome> {
        let mut probes: Vec<SigmaProbe> = Vec::new();
        let mut first = None;
        for k in 0..=12 {
            let p = self.probe(powf(10.0, -(k as f64)));
            let ok = p.passed;
            probes.push(p);
            if ok {
                first = Some(k);
                break;
            }
        }
        let Some(k) = first else {
            let trace: Vec<String> =
                probes.iter().map(|p| format!("sigma={:e}: {}", p.sigma, p.failed.join(", "))).collect();
            return Err(Error::NotFound(format!("no sigma in [1e-12, 1] passes: {}", trace.join("; "))));
        };
        if k > 0 {
            let (mut lo, mut hi) = (-(k as f64) * ln(10.0), -((k - 1) as f64) * ln(10.0));
            for _ in 0..60 {
                if hi - lo < 1e-6 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let p = self.probe(exp(mid));
                if p.passed {
                    lo = mid;
                } else {
                    hi = mid;
                }
                probes.push(p);
            }
        }
        let sigma = probes
            .iter()
            .filter(|p| p.passed)
            .map(|p| p.sigma)
            .fold(f64::NEG_INFINITY, f64::max);
        let profile = self.build(sigma)?;
        Ok(SearchOutcome { sigma, profile, probes })
    }

    /// Largest relative gap between a five-point difference of `alpha`
    /// (step `1e-3` of the distance to the nearest end) and the closed-form
    /// `alpha'`, on every `stride`-th interior grid point.
    pub fn derivative_consistency(&self, profile: &RadialProfile, stride: usize) -> Result<f64> {
        let mut sm = self.sigma_maps(profile.sigma)?;
        let n = profile.t.len();
        let end = profile.t_sigma.unwrap_or(profile.t[n - 1]);
        let mut worst: f64 = 0.0;
        for i in (1..n.saturating_sub(1)).step_by(stride.max(1)) {
            let t = profile.t[i];
            let h = 1e-3 * (t - self.req.t0).min(end - t);
            let mut a = [0.0; 4];
            for (k, off) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
                a[k] = self.alpha_from(&mut sm, t + off * h)?;
            }
            let d = (a[0] - 8.0 * a[1] + 8.0 * a[2] - a[3]) / (12.0 * h);
            worst = worst.max(((d - profile.alpha_prime[i]) / profile.alpha_prime[i]).abs());
        }
        Ok(worst)
    }
}

/// `(rhs - lhs) / max(|lhs|, |rhs|)`, zero when both vanish.
pub fn relative_margin(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (rhs - lhs) / scale
    }
}

/// `C_sigma = int_eps^inf ds / K^{-1}(sigma F(s))` for the plain data of `p`.
pub fn compute_csigma(p: &StructuralProfile, kernel: Kernel, sigma: f64, epsilon: f64) -> Result<f64> {
    let variant = if kernel == Kernel::K { KoVariant::Ko } else { KoVariant::KhatO };
    let v = classify_ko(p, variant, 1.0)?;
    if v.verdict != Verdict::Convergent {
        return Err(Error::ModeGuard(format!("C_sigma needs a convergent integral condition, found {:?}", v.verdict)));
    }
    if !(sigma > 0.0 && epsilon > 0.0) {
        return invalid("sigma and epsilon must be positive");
    }
    let maps = KoMaps::new(p, kernel, None)?;
    let tail = TailMap::new(epsilon, T_CAP, alloc::boxed::Box::new(move |s| Ok(exp(maps.ln_ko_integrand(sigma, s)?))))?;
    Ok(tail.total())
}

/// `T_sigma` solving `int_{t0}^{T_sigma} b^lambda = C_sigma` (`b` as given,
/// not rescaled).
pub fn solve_tsigma(p: &StructuralProfile, kernel: Kernel, sigma: f64, t0: f64, epsilon: f64) -> Result<f64> {
    let c = compute_csigma(p, kernel, sigma, epsilon)?;
    if !c.is_finite() {
        return Err(Error::Numerical("C_sigma is not finite".into()));
    }
    let b = p.b_tilde.clone();
    let lam = p.lambda_b;
    let mut map = MonotoneMap::new(t0, alloc::boxed::Box::new(move |t| Ok(powf(b.eval(t), lam))))?;
    invert_monotone(&mut map, c)
}

pub fn build_alpha(req: &BuildRequest, sigma: f64) -> Result<RadialProfile> {
    Barrier::new(req)?.build(sigma)
}

pub fn compute_nsigma(req: &BuildRequest, sigma: f64) -> Result<NSigma> {
    Ok(build_alpha(req, sigma)?.n_sigma)
}

pub fn search_sigma(req: &BuildRequest) -> Result<SearchOutcome> {
    Barrier::new(req)?.search()
}

/// Minimum relative margin of a built profile.
pub fn residual_check(profile: &RadialProfile) -> f64 {
    profile.residual_margin
}
