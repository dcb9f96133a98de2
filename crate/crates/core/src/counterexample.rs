//! The entire subsolution of `Delta_p u >= f(u) ell(|grad u|)` on flat
//! `R^m` when the Keller-Osserman integral diverges: the implicit profile
//! `w` (with `int_1^w ds / K^{-1}(F(s)) = r`) outside a ball, glued `C^1`
//! to the cap `Lambda r^{p'}/p' + beta0` inside.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::function::FunctionSpec;
use crate::grid::linspace;
use crate::math::{exp, powf};
use crate::primitive::MonotoneMap;
use crate::structural::{estimate_c_increasing, StructuralProfile};
use crate::transforms::{classify_ko, Kernel, KoMaps, KoVariant, Verdict};

/// Scan depth: `lambda = 1 + 2^-k` for `k = 0..=MAX_K`.
pub const MAX_K: u32 = 40;
/// Allowed slack in the C-increasing constant of `f`.
pub const F_MONOTONE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct GlueParams {
    pub p: f64,
    pub m: usize,
    pub glue_lambda: f64,
    pub t_bar: f64,
    pub beta0: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub p_conj: f64,
    /// `K^{-1}(F(lambda))`, the slope at the glue point.
    pub slope: f64,
    /// `f(lambda) ell(K^{-1}(F(lambda)))`.
    pub rhs_iii: f64,
    /// The same with `ell` at the cap slope `Lambda t_bar^{p'-1}`.
    pub rhs_iii_cap: f64,
}

impl GlueParams {
    /// Residuals of the glue system: (i), (ii) as equalities, (iii) as
    /// `m Lambda^{p-1} - f ell` (must be `>= 0`).
    pub fn residuals(&self) -> [f64; 3] {
        let i = self.slope * self.t_bar / self.p_conj + self.beta0 - self.glue_lambda;
        let ii = self.big_lambda * powf(self.t_bar, self.p_conj - 1.0) - self.slope;
        let iii = self.m as f64 * powf(self.big_lambda, self.p - 1.0) - self.rhs_iii;
        [i, ii, iii]
    }
}

/// Outcome of one lambda probe.
#[derive(Clone, Debug, Serialize)]
pub struct GlueProbe {
    pub lambda: f64,
    pub t_bar: f64,
    pub beta0: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub passed: bool,
    pub failed: Option<String>,
}

/// `p`, `m`, the data and the tabulated maps.
pub struct GlueProblem {
    pub p: f64,
    pub m: usize,
    prof: StructuralProfile,
    maps: KoMaps,
    w_map: RefCell<MonotoneMap>,
}

impl GlueProblem {
    /// Checks `p > 1`, `m >= 2`, `f(0) = 0`, `f > 0` and increasing, `ell`
    /// non-decreasing and the divergence of the integral condition.
    pub fn new(p: f64, m: usize, f: FunctionSpec, ell: FunctionSpec) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) || m < 2 {
            return invalid("need p > 1 and m >= 2");
        }
        let prof = StructuralProfile::new(FunctionSpec::power(1.0, p - 1.0), ell, f);
        if prof.f.eval(0.0) != 0.0 {
            return Err(Error::ConditionFailed("f(0) must vanish".into()));
        }
        let pts = prof.grid.points();
        if let Some(&t) = pts.iter().find(|&&t| !(prof.f.eval(t) > 0.0)) {
            return Err(Error::NonPositiveSample { t, value: prof.f.eval(t) });
        }
        let cf = estimate_c_increasing(&prof.f, &prof.grid)?;
        if !(cf.c_est <= 1.0 + F_MONOTONE_TOL) {
            return Err(Error::ConditionFailed(format!("f is not increasing (C = {})", cf.c_est)));
        }
        let cl = estimate_c_increasing(&prof.ell, &prof.grid)?;
        if !(cl.c_est <= 1.0 + F_MONOTONE_TOL) {
            return Err(Error::ConditionFailed(format!("ell is not non-decreasing (C = {})", cl.c_est)));
        }
        let v = classify_ko(&prof, KoVariant::Ko, 1.0)?;
        if v.verdict != Verdict::Divergent {
            return Err(Error::ModeGuard(format!(
                "the glued subsolution needs a divergent integral condition, found {:?}",
                v.verdict
            )));
        }
        let maps = KoMaps::new(&prof, Kernel::K, None)?;
        let mw = maps.clone();
        let w_map = MonotoneMap::new(1.0, Box::new(move |s| Ok(exp(mw.ln_ko_integrand(1.0, s)?))))?;
        Ok(GlueProblem { p, m, prof, maps, w_map: RefCell::new(w_map) })
    }

    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `K^{-1}(F(s))`.
    pub fn slope_at(&self, s: f64) -> Result<f64> {
        self.maps.k_inv(self.maps.f_hat(s)?)
    }

    /// `int_1^s dx / K^{-1}(F(x))`.
    pub fn w_inverse(&self, s: f64) -> Result<f64> {
        if s < 1.0 {
            return invalid("w takes values >= 1");
        }
        self.w_map.borrow_mut().forward(s)
    }

    /// `w(r)` for `r >= 0`.
    pub fn w(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return invalid("w is defined for r >= 0");
        }
        self.w_map.borrow_mut().inverse(r)
    }

    /// `(w, w', w'')`, with `w' = K^{-1}(F(w))` and `w'' = f(w) w' / K'(w')`.
    pub fn w_jet(&self, r: f64) -> Result<(f64, f64, f64)> {
        let w = self.w(r)?;
        let x = self.slope_at(w)?;
        let xx = self.prof.f.eval(w) * x / self.maps.kernel_integrand(x)?;
        Ok((w, x, xx))
    }

    /// Probes the glue system at one `lambda in (1, 2]`.
    pub fn probe_at(&self, lambda: f64) -> Result<(GlueProbe, Option<GlueParams>)> {
        if !(lambda > 1.0 && lambda <= 2.0) {
            return invalid("glue lambda must lie in (1, 2]");
        }
        let pc = self.p_conj();
        let t_bar = self.w_inverse(lambda)?;
        let slope = self.slope_at(lambda)?;
        let beta0 = lambda - slope * t_bar / pc;
        let big_lambda = slope / powf(t_bar, pc - 1.0);
        let rhs_iii = self.prof.f.eval(lambda) * self.prof.ell.eval(slope);
        let cap_slope = big_lambda * powf(t_bar, pc - 1.0);
        let rhs_iii_cap = self.prof.f.eval(lambda) * self.prof.ell.eval(cap_slope);
        let lhs_iii = self.m as f64 * powf(big_lambda, self.p - 1.0);
        let failed = if !(beta0 > 0.0) {
            Some(format!("(i): slope * t_bar / p' = {} >= lambda", slope * t_bar / pc))
        } else if !(lhs_iii >= rhs_iii.max(rhs_iii_cap)) {
            Some(format!("(iii): m Lambda^(p-1) = {lhs_iii} < f ell = {rhs_iii}"))
        } else {
            None
        };
        let probe = GlueProbe { lambda, t_bar, beta0, big_lambda, passed: failed.is_none(), failed };
        let params = probe.passed.then(|| GlueParams {
            p: self.p,
            m: self.m,
            glue_lambda: lambda,
            t_bar,
            beta0,
            big_lambda,
            p_conj: pc,
            slope,
            rhs_iii,
            rhs_iii_cap,
        });
        Ok((probe, params))
    }

    /// First passing `lambda = 1 + 2^-k`, with the probes that preceded it.
    pub fn solve(&self) -> Result<(GlueParams, Vec<GlueProbe>)> {
        let mut probes = Vec::new();
        for k in 0..=MAX_K {
            let lambda = 1.0 + powf(2.0, -(k as f64));
            let (probe, params) = self.probe_at(lambda)?;
            probes.push(probe);
            if let Some(params) = params {
                return Ok((params, probes));
            }
        }
        let trace: Vec<String> =
            probes.iter().map(|p| format!("lambda={}: {}", p.lambda, p.failed.as_deref().unwrap_or(""))).collect();
        Err(Error::NotFound(format!("no glue parameter passes: {}", trace.join("; "))))
    }

    /// Samples the glued `u` on `n_inner` points of `[0, t_bar]` and
    /// `n_outer` points of `[t_bar, r_max]`.
    pub fn assemble(&self, params: &GlueParams, r_max: f64, n_inner: usize, n_outer: usize) -> Result<GluedSolution> {
        if !(r_max > params.t_bar) || n_inner < 2 || n_outer < 2 {
            return invalid("need r_max > t_bar and at least two points per piece");
        }
        let (p, m) = (self.p, self.m as f64);
        let pc = params.p_conj;
        let mut rows = Vec::with_capacity(n_inner + n_outer);
        for r in linspace(0.0, params.t_bar, n_inner) {
            let u = params.big_lambda * powf(r, pc) / pc + params.beta0;
            let up = params.big_lambda * powf(r, pc - 1.0);
            let plap = if r == 0.0 {
                m * powf(params.big_lambda, p - 1.0)
            } else {
                let upp = params.big_lambda * (pc - 1.0) * powf(r, pc - 2.0);
                radial_plap(p, m, r, up, upp)
            };
            rows.push(GluedRow::new(r, u, up, plap, self.f_term(u, up), Piece::Inner));
        }
        for r in linspace(params.t_bar, r_max, n_outer) {
            let (w, wp, wpp) = self.w_jet(r)?;
            let plap = radial_plap(p, m, r, wp, wpp);
            rows.push(GluedRow::new(r, w, wp, plap, self.f_term(w, wp), Piece::Outer));
        }
        let inner_end = &rows[n_inner - 1];
        let outer_start = &rows[n_inner];
        let value_gap = (inner_end.u - outer_start.u).abs();
        let slope_gap = (inner_end.u_prime - outer_start.u_prime).abs();
        if value_gap > 1e-8 * outer_start.u.max(1.0) || slope_gap > 1e-6 * outer_start.u_prime.max(1.0) {
            return Err(Error::Numerical(format!(
                "C1 match failed at t_bar: |du| = {value_gap:e}, |du'| = {slope_gap:e}"
            )));
        }
        Ok(GluedSolution { params: params.clone(), rows, value_gap, slope_gap })
    }

    fn f_term(&self, u: f64, up: f64) -> f64 {
        self.prof.f.eval(u) * self.prof.ell.eval(up)
    }

    /// Largest relative deviation of a five-point difference of `w` from
    /// `K^{-1}(F(w))` over `radii`.
    pub fn w_identity_error(&self, radii: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &r in radii {
            let h = 1e-3 * r.clamp(1e-3, 1.0);
            let d = (self.w(r - 2.0 * h)? - 8.0 * self.w(r - h)? + 8.0 * self.w(r + h)? - self.w(r + 2.0 * h)?)
                / (12.0 * h);
            let x = self.slope_at(self.w(r)?)?;
            worst = worst.max(((d - x) / x).abs());
        }
        Ok(worst)
    }
}

/// `(p-1) u'^{p-2} u'' + (m-1)/r u'^{p-1}` for `u' > 0`.
pub fn radial_plap(p: f64, m: f64, r: f64, up: f64, upp: f64) -> f64 {
    (p - 1.0) * powf(up, p - 2.0) * upp + (m - 1.0) / r * powf(up, p - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    Inner,
    Outer,
}

#[derive(Clone, Debug, Serialize)]
pub struct GluedRow {
    pub r: f64,
    pub u: f64,
    pub u_prime: f64,
    pub plap_u: f64,
    pub f_term: f64,
    /// `plap_u - f_term`.
    pub residual: f64,
    pub piece: Piece,
}

impl GluedRow {
    fn new(r: f64, u: f64, u_prime: f64, plap_u: f64, f_term: f64, piece: Piece) -> Self {
        GluedRow { r, u, u_prime, plap_u, f_term, residual: plap_u - f_term, piece }
    }
}

#[derive(Clone, Debug)]
pub struct GluedSolution {
    pub params: GlueParams,
    /// Inner rows then outer rows; `t_bar` appears once in each.
    pub rows: Vec<GluedRow>,
    pub value_gap: f64,
    pub slope_gap: f64,
}

pub const GLUED_HEADER: [&str; 6] = ["r", "u", "u_prime", "plap_u", "f_term", "residual"];

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SubsolutionCheck {
    /// Smallest `residual / max(plap_u, f_term, 1)`.
    pub min_relative: f64,
    pub min_absolute: f64,
    pub at: f64,
    /// Largest `|plap_u - m Lambda^{p-1}|` on the cap.
    pub inner_identity: f64,
}

impl GluedSolution {
    pub fn csv_rows(&self) -> Vec<[f64; 6]> {
        self.rows.iter().map(|r| [r.r, r.u, r.u_prime, r.plap_u, r.f_term, r.residual]).collect()
    }

    pub fn verify(&self) -> SubsolutionCheck {
        let target = self.params.m as f64 * powf(self.params.big_lambda, self.params.p - 1.0);
        let mut out = SubsolutionCheck {
            min_relative: f64::INFINITY,
            min_absolute: f64::INFINITY,
            at: f64::NAN,
            inner_identity: 0.0,
        };
        for row in &self.rows {
            let scale = row.plap_u.abs().max(row.f_term.abs()).max(1.0);
            let rel = row.residual / scale;
            if !(rel >= out.min_relative) {
                out.min_relative = rel;
                out.at = row.r;
            }
            out.min_absolute = out.min_absolute.min(row.residual);
            if row.piece == Piece::Inner {
                out.inner_identity = out.inner_identity.max((row.plap_u - target).abs());
            }
        }
        out
    }

    pub fn max_u(&self) -> f64 {
        self.rows.iter().map(|r| r.u).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `w(t)` for the data `(p, f, ell)`.
pub fn build_w(p: f64, f: FunctionSpec, ell: FunctionSpec, t: f64) -> Result<f64> {
    GlueProblem::new(p, 2, f, ell)?.w(t)
}

pub fn solve_glue_params(p: f64, m: usize, f: FunctionSpec, ell: FunctionSpec) -> Result<GlueParams> {
    Ok(GlueProblem::new(p, m, f, ell)?.solve()?.0)
}

/// Lower and upper bounds `(lambda-1)/K^{-1}(F(2))`, `(lambda-1)/K^{-1}(F(1))`
/// on `t_bar`.
pub fn t_bar_bracket(problem: &GlueProblem, lambda: f64) -> Result<(f64, f64)> {
    Ok(((lambda - 1.0) / problem.slope_at(2.0)?, (lambda - 1.0) / problem.slope_at(1.0)?))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{close, ln};

    fn linear() -> GlueProblem {
        GlueProblem::new(2.0, 2, FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(1.0)).unwrap()
    }

    #[test]
    fn w_is_exponential() {
        let g = linear();
        assert_eq!(g.w(0.0).unwrap(), 1.0);
        for r in [0.1, 1.0, 5.0, 20.0] {
            assert!(close(g.w(r).unwrap(), exp(r), 1e-10));
        }
        assert!(g.w_identity_error(&[0.5, 2.0, 10.0]).unwrap() < 1e-7);
    }

    #[test]
    fn glue_probe_at_one_point_two() {
        let g = linear();
        let (probe, params) = g.probe_at(1.2).unwrap();
        let params = params.unwrap();
        assert!(probe.passed);
        assert!(close(params.t_bar, ln(1.2), 1e-10));
        assert!((params.beta0 - 1.090_607).abs() < 1e-5, "{}", params.beta0);
        assert!((params.big_lambda - 6.581_75).abs() < 1e-4, "{}", params.big_lambda);
        let [i, ii, iii] = params.residuals();
        assert!(i.abs() < 1e-12 && ii.abs() < 1e-12 && iii >= 0.0);
        assert!(close(params.rhs_iii, params.rhs_iii_cap, 1e-12));
    }

    #[test]
    fn glued_solution_is_a_subsolution() {
        let g = linear();
        let (_, params) = g.probe_at(1.2).unwrap();
        let sol = g.assemble(&params.unwrap(), 10.0, 200, 2000).unwrap();
        assert!(sol.value_gap <= 1e-8 && sol.slope_gap <= 1e-6);
        let chk = sol.verify();
        assert!(chk.min_relative >= -1e-6, "{chk:?}");
        assert!(chk.inner_identity < 1e-10);
        assert!(close(sol.rows[0].u, sol.params.beta0, 0.0));
        assert_eq!(sol.rows[0].u_prime, 0.0);
    }

    #[test]
    fn scan_and_guards() {
        let g = linear();
        let (params, probes) = g.solve().unwrap();
        assert!(params.beta0 > 0.0);
        assert_eq!(probes.len(), 1);
        let conv = GlueProblem::new(2.0, 2, FunctionSpec::power(1.0, 2.0), FunctionSpec::constant(1.0));
        assert!(matches!(conv, Err(Error::ModeGuard(_))));
        let (lo, hi) = t_bar_bracket(&g, 1.5).unwrap();
        let tb = g.w_inverse(1.5).unwrap();
        assert!(lo <= tb && tb <= hi);
    }
}
