//! Comparison geometry on radial weighted models `dr^2 + s(r)^2 g_{S^{m-1}}`
//! with weight `D = e^{h_w(r)}` and synthetic dimension `n > m`.
//!
//! On such models the weighted Laplacian of the distance, the radial
//! component of the modified Bakry-Emery Ricci tensor and all volume
//! functions are one-dimensional formulas, so the comparison theorems can
//! be checked pointwise.

use alloc::vec::Vec;
use serde::Serialize;

use crate::error::{invalid, numerical, Result};
use crate::function::FunctionSpec;
use crate::grid::linspace;
use crate::math::{ceil, gamma, powf, sqrt, PI};
use crate::quad::{integrate, Tol};

const VOL_TOL: Tol = Tol::new(1e-300, 1e-12);
/// Checks stay this far from the coordinate singularity at the origin.
pub const R_MIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelManifold {
    pub m: usize,
    pub n: f64,
    pub warp: FunctionSpec,
    pub log_weight: FunctionSpec,
}

impl ModelManifold {
    pub fn new(m: usize, n: f64, warp: FunctionSpec, log_weight: FunctionSpec) -> Result<Self> {
        if m < 2 {
            return invalid("model dimension m must be at least 2");
        }
        if !(n > m as f64) {
            return invalid("synthetic dimension n must exceed m");
        }
        Ok(ModelManifold { m, n, warp, log_weight })
    }

    /// Flat unweighted model `R^m`.
    pub fn flat(m: usize, n: f64) -> Result<Self> {
        Self::new(m, n, FunctionSpec::power(1.0, 1.0), FunctionSpec::constant(0.0))
    }

    /// Area of the unit `(m-1)`-sphere.
    pub fn sphere_constant(&self) -> f64 {
        let h = self.m as f64 / 2.0;
        2.0 * powf(PI, h) / gamma(h)
    }

    /// `vol_D(dB_r) = |S^{m-1}| s(r)^{m-1} e^{h_w(r)}`.
    pub fn area_d(&self, r: f64) -> f64 {
        self.sphere_constant() * powf(self.warp.eval(r), (self.m - 1) as f64) * crate::math::exp(self.log_weight.eval(r))
    }

    /// `vol_D(B_r)` by quadrature of the area.
    pub fn ball_d(&self, r: f64) -> Result<f64> {
        integrate(|x| self.area_d(x), 0.0, r, VOL_TOL)
    }
}

/// `L_D r = (m-1) s'/s + h_w'`.
pub fn model_lr(model: &ModelManifold, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return invalid("L r is defined for r > 0");
    }
    let s = model.warp.jet(r);
    Ok((model.m - 1) as f64 * s.d1 / s.v + model.log_weight.deriv(r))
}

/// `d/dr L_D r`.
fn model_lr_deriv(model: &ModelManifold, r: f64) -> f64 {
    let s = model.warp.jet(r);
    let a = s.d1 / s.v;
    (model.m - 1) as f64 * (s.d2 / s.v - a * a) + model.log_weight.jet(r).d2
}

/// Radial-radial component of `Ric_{n,m}`:
/// `-(m-1) s''/s - h_w'' - h_w'^2 / (n - m)`.
pub fn ricci_nm_radial(model: &ModelManifold, r: f64) -> f64 {
    let s = model.warp.jet(r);
    let w = model.log_weight.jet(r);
    -((model.m - 1) as f64) * s.d2 / s.v - w.d2 - w.d1 * w.d1 / (model.n - model.m as f64)
}

/// `(L r)^2 / (n_eff - 1) + (L r)' + Ric_{n,m}`, non-positive on models when
/// `n_eff = n`.
pub fn riccati_residual(model: &ModelManifold, r: f64, n_eff: f64) -> Result<f64> {
    let lr = model_lr(model, r)?;
    Ok(lr * lr / (n_eff - 1.0) + model_lr_deriv(model, r) + ricci_nm_radial(model, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualMax {
    pub max: f64,
    pub at: f64,
}

/// Largest Riccati residual on `n_pts` uniform points of `[lo, hi]`.
pub fn check_riccati_inequality(model: &ModelManifold, lo: f64, hi: f64, n_pts: usize) -> Result<ResidualMax> {
    if lo < R_MIN {
        return invalid("radial checks start at r >= 1e-3");
    }
    let mut best = ResidualMax { max: f64::NEG_INFINITY, at: lo };
    for r in linspace(lo, hi, n_pts) {
        let v = riccati_residual(model, r, model.n)?;
        if v > best.max {
            best = ResidualMax { max: v, at: r };
        }
    }
    Ok(best)
}

/// Both sides of the radial weighted Bochner formula
/// `1/2 L(u'^2) = |Hess u|^2 + <grad L u, grad u> + Ric(L)(grad u, grad u)`
/// for a radial `u`; the left side uses finite differences of `u'^2`.
pub fn bochner_sides(model: &ModelManifold, u: &FunctionSpec, r: f64) -> Result<(f64, f64)> {
    let lr = model_lr(model, r)?;
    let v = |x: f64| {
        let d = u.deriv(x);
        d * d
    };
    let h = (2e-3 * r).min(1e-2);
    let (vm2, vm1, v0, vp1, vp2) = (v(r - 2.0 * h), v(r - h), v(r), v(r + h), v(r + 2.0 * h));
    let v1 = (vm2 - 8.0 * vm1 + 8.0 * vp1 - vp2) / (12.0 * h);
    let v2 = (-vm2 + 16.0 * vm1 - 30.0 * v0 + 16.0 * vp1 - vp2) / (12.0 * h * h);
    let lhs = 0.5 * (v2 + lr * v1);

    let j = u.jet(r);
    let s = model.warp.jet(r);
    let a = s.d1 / s.v;
    let m1 = (model.m - 1) as f64;
    let hess2 = j.d2 * j.d2 + m1 * (j.d1 * a) * (j.d1 * a);
    let lu_prime = j.d3 + model_lr_deriv(model, r) * j.d1 + lr * j.d2;
    let ric_l = -m1 * s.d2 / s.v - model.log_weight.jet(r).d2;
    let rhs = hess2 + lu_prime * j.d1 + ric_l * j.d1 * j.d1;
    Ok((lhs, rhs))
}

/// Largest `|lhs - rhs|` of [`bochner_sides`] on `n_pts` points of `[lo, hi]`.
pub fn verify_bochner_radial(
    model: &ModelManifold,
    u: &FunctionSpec,
    lo: f64,
    hi: f64,
    n_pts: usize,
) -> Result<ResidualMax> {
    if lo < R_MIN {
        return invalid("radial checks start at r >= 1e-3");
    }
    let mut best = ResidualMax { max: 0.0, at: lo };
    for r in linspace(lo, hi, n_pts) {
        let (l, rr) = bochner_sides(model, u, r)?;
        let d = (l - rr).abs();
        if !d.is_finite() {
            return numerical("Bochner sides are not finite");
        }
        if d > best.max {
            best = ResidualMax { max: d, at: r };
        }
    }
    Ok(best)
}

/// Solution of `h'' = G h`, `h(0) = 0`, `h'(0) = 1`, on an RK4 grid with
/// quintic Hermite interpolation between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSolution {
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
    /// `G` at the grid points (so `h'' = G h` is known without `G`).
    pub g: Vec<f64>,
    pub first_zero: Option<f64>,
}

pub fn solve_h(g: &FunctionSpec, r_max: f64) -> Result<ComparisonSolution> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return invalid("r_max must be positive");
    }
    let gmax = linspace(0.0, r_max, 2001)
        .into_iter()
        .map(|r| g.eval(r).abs())
        .fold(0.0, f64::max);
    if !gmax.is_finite() {
        return numerical("G is not finite on [0, r_max]");
    }
    let mut dr: f64 = 1e-3;
    if gmax > 0.0 {
        dr = dr.min(0.02 / sqrt(gmax));
    }
    let steps = ceil(r_max / dr) as usize;
    let dr = r_max / steps as f64;
    let mut sol = ComparisonSolution {
        r: Vec::with_capacity(steps + 1),
        h: Vec::with_capacity(steps + 1),
        hp: Vec::with_capacity(steps + 1),
        g: Vec::with_capacity(steps + 1),
        first_zero: None,
    };
    let (mut h, mut hp) = (0.0f64, 1.0f64);
    sol.r.push(0.0);
    sol.h.push(h);
    sol.hp.push(hp);
    sol.g.push(g.eval(0.0));
    for i in 0..steps {
        let r = i as f64 * dr;
        let gm = g.eval(r + 0.5 * dr);
        let g1 = g.eval(r + dr);
        let (k1h, k1p) = (hp, sol.g[i] * h);
        let (k2h, k2p) = (hp + 0.5 * dr * k1p, gm * (h + 0.5 * dr * k1h));
        let (k3h, k3p) = (hp + 0.5 * dr * k2p, gm * (h + 0.5 * dr * k2h));
        let (k4h, k4p) = (hp + dr * k3p, g1 * (h + dr * k3h));
        h += dr / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
        hp += dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if !(h.is_finite() && hp.is_finite()) {
            return numerical("comparison ODE step failed");
        }
        let r1 = if i + 1 == steps { r_max } else { (i + 1) as f64 * dr };
        sol.r.push(r1);
        sol.h.push(h);
        sol.hp.push(hp);
        sol.g.push(g1);
        if h <= 0.0 {
            let i0 = sol.r.len() - 2;
            let (mut a, mut b) = (sol.r[i0], r1);
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if c <= a || c >= b {
                    break;
                }
                if sol.eval_in(i0, c).0 > 0.0 {
                    a = c;
                } else {
                    b = c;
                }
            }
            sol.first_zero = Some(0.5 * (a + b));
            break;
        }
    }
    Ok(sol)
}

impl ComparisonSolution {
    pub fn r_end(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn eval_in(&self, i: usize, x: f64) -> (f64, f64) {
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let d = r1 - r0;
        let t = (x - r0) / d;
        let (y0, y1) = (self.h[i], self.h[i + 1]);
        let (p0, p1) = (self.hp[i], self.hp[i + 1]);
        let (a0, a1) = (self.g[i] * y0, self.g[i + 1] * y1);
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let v = h0 * y0 + h1 * d * p0 + h2 * d * d * a0 + h3 * d * d * a1 + h4 * d * p1 + h5 * y1;
        // Cubic Hermite for h' with slopes h'' = G h.
        let c00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let c10 = t3 - 2.0 * t2 + t;
        let c01 = -2.0 * t3 + 3.0 * t2;
        let c11 = t3 - t2;
        let dv = c00 * p0 + c10 * d * a0 + c01 * p1 + c11 * d * a1;
        (v, dv)
    }

    /// `(h(r), h'(r))` for `0 <= r <= r_end`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r >= 0.0) || r > self.r_end() * (1.0 + 1e-14) {
            return invalid("r outside the solved range");
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1) - 1;
        Ok(self.eval_in(i, r.min(self.r_end())))
    }
}

/// `(n - 1) h'(r) / h(r)`, the upper bound for `L_D r`.
pub fn lr_comparison_bound(sol: &ComparisonSolution, n: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return invalid("the bound is defined for r > 0");
    }
    if let Some(z) = sol.first_zero {
        if r >= z {
            return invalid("r is beyond the first zero of h");
        }
    }
    let (h, hp) = sol.eval(r)?;
    Ok((n - 1.0) * hp / h)
}

/// Whether `Ric_{n,m} >= -(n - 1) G` at every radius (with slack `tol`).
pub fn ricci_lower_bound_holds(model: &ModelManifold, g: &FunctionSpec, radii: &[f64], tol: f64) -> bool {
    radii
        .iter()
        .all(|&r| ricci_nm_radial(model, r) + (model.n - 1.0) * g.eval(r) >= -tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeTable {
    pub radii: Vec<f64>,
    pub area_d: Vec<f64>,
    pub ball_d: Vec<f64>,
    pub a_gn: Vec<f64>,
    pub v_gn: Vec<f64>,
    pub ratio_area: Vec<f64>,
    pub ratio_ball: Vec<f64>,
}

impl VolumeTable {
    pub const HEADER: [&'static str; 7] = ["r", "area_D", "ball_D", "A_Gn", "V_Gn", "ratio_area", "ratio_ball"];

    pub fn rows(&self) -> impl Iterator<Item = [f64; 7]> + '_ {
        (0..self.radii.len()).map(move |i| {
            [
                self.radii[i],
                self.area_d[i],
                self.ball_d[i],
                self.a_gn[i],
                self.v_gn[i],
                self.ratio_area[i],
                self.ratio_ball[i],
            ]
        })
    }
}

/// Weighted areas and volumes against the comparison model functions
/// `A_{G,n} = h^{n-1}` and `V_{G,n} = int_0^r h^{n-1}`.
pub fn volume_table(model: &ModelManifold, sol: &ComparisonSolution, radii: &[f64]) -> Result<VolumeTable> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.first().map_or(true, |&r| r <= 0.0) {
        return invalid("radii must be positive and increasing");
    }
    let limit = sol.first_zero.unwrap_or(sol.r_end());
    if *radii.last().unwrap() > limit {
        return invalid("radii must stay inside the positivity range of h");
    }
    let e = model.n - 1.0;
    let a_of = |r: f64| sol.eval(r).map(|(h, _)| powf(h, e)).unwrap_or(f64::NAN);
    let mut t = VolumeTable {
        radii: radii.to_vec(),
        area_d: Vec::new(),
        ball_d: Vec::new(),
        a_gn: Vec::new(),
        v_gn: Vec::new(),
        ratio_area: Vec::new(),
        ratio_ball: Vec::new(),
    };
    let (mut ball, mut vol, mut prev) = (0.0, 0.0, 0.0);
    for &r in radii {
        ball += integrate(|x| model.area_d(x), prev, r, VOL_TOL)?;
        vol += integrate(a_of, prev, r, VOL_TOL)?;
        prev = r;
        let area = model.area_d(r);
        let a = a_of(r);
        t.area_d.push(area);
        t.ball_d.push(ball);
        t.a_gn.push(a);
        t.v_gn.push(vol);
        t.ratio_area.push(area / a);
        t.ratio_ball.push(ball / vol);
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioViolation {
    pub column: &'static str,
    pub r: f64,
    pub relative_increase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioCheck {
    pub monotone: bool,
    pub first_violation: Option<RatioViolation>,
}

/// Scans both ratio columns for a relative increase above `1e-9`.
pub fn check_ratio_monotonicity(table: &VolumeTable) -> RatioCheck {
    let mut first: Option<RatioViolation> = None;
    for (column, col) in [("ratio_area", &table.ratio_area), ("ratio_ball", &table.ratio_ball)] {
        for i in 1..col.len() {
            let inc = (col[i] - col[i - 1]) / col[i - 1].abs();
            if inc > 1e-9 {
                let v = RatioViolation { column, r: table.radii[i], relative_increase: inc };
                if first.map_or(true, |f| v.r < f.r) {
                    first = Some(v);
                }
                break;
            }
        }
    }
    RatioCheck { monotone: first.is_none(), first_violation: first }
}

/// `C(n, p) = (1/(n-1) - 1/(2p-1))^{-p}` for `p > n/2`.
pub fn petersen_constant(n: f64, p: f64) -> Result<f64> {
    if !(p > n / 2.0) || !(n > 1.0) {
        return invalid("the constant needs n > 1 and p > n/2");
    }
    // Same as (1/(n-1) - 1/(2p-1))^{-p}, written without cancellation.
    Ok(powf((n - 1.0) * (2.0 * p - 1.0) / (2.0 * p - n), p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PetersenReport {
    /// Upper bound for `vol_D B_R / V_{G,n}(R)`.
    pub bound: f64,
    /// The actual ratio on the model.
    pub ratio: f64,
    pub c_r0: f64,
    pub f_integral: f64,
    /// `max psi` over the radial grid.
    pub psi_excess: f64,
    /// `int_{B_R} rho^p D dV`.
    pub ricci_deficit: f64,
    pub lemma26_lhs: f64,
    pub lemma26_rhs: f64,
}

/// Integral-curvature volume bound on `B_R` with reference curvature `G`.
pub fn petersen_volume_bound(
    model: &ModelManifold,
    g: &FunctionSpec,
    p: f64,
    r0: f64,
    r_big: f64,
) -> Result<PetersenReport> {
    let n = model.n;
    let c = petersen_constant(n, p)?;
    if !(r0 > 0.0 && r_big > r0) {
        return invalid("need 0 < r0 < R");
    }
    let sol = solve_h(g, r_big)?;
    if sol.first_zero.is_some() {
        return invalid("h vanishes before R");
    }
    let rho = |r: f64| (-(ricci_nm_radial(model, r) + (n - 1.0) * g.eval(r))).max(0.0);
    let psi = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let lr = model_lr(model, r).unwrap_or(f64::NAN);
        let b = lr_comparison_bound(&sol, n, r).unwrap_or(f64::NAN);
        (lr - b).max(0.0)
    };
    let a_gn = |r: f64| sol.eval(r).map(|(h, _)| powf(h, n - 1.0)).unwrap_or(f64::NAN);
    let rho_p = |r: f64| powf(rho(r), p) * model.area_d(r);

    // Uniform grid on [r0, R] with an even number of cells for Simpson.
    let cells = 2000usize;
    let grid = linspace(r0, r_big, cells + 1);
    let mut i_rho = integrate(rho_p, 0.0, r0, VOL_TOL)?;
    let mut vol = integrate(a_gn, 0.0, r0, VOL_TOL)?;
    let ball_r0 = integrate(|x| model.area_d(x), 0.0, r0, VOL_TOL)?;
    let c_r0 = powf(ball_r0 / vol, 1.0 / (2.0 * p));
    let q = 1.0 / (2.0 * p);
    let f_at = |t: f64, i_rho: f64, vol: f64| -> f64 {
        powf(c, q) * t * a_gn(t) / powf(vol, 1.0 + q) * powf(i_rho, q)
    };
    let mut fvals = Vec::with_capacity(cells + 1);
    fvals.push(f_at(grid[0], i_rho, vol));
    for k in 1..=cells {
        i_rho += integrate(rho_p, grid[k - 1], grid[k], VOL_TOL)?;
        vol += integrate(a_gn, grid[k - 1], grid[k], VOL_TOL)?;
        fvals.push(f_at(grid[k], i_rho, vol));
    }
    let hstep = (r_big - r0) / cells as f64;
    let mut simpson = fvals[0] + fvals[cells];
    for (k, v) in fvals.iter().enumerate().take(cells).skip(1) {
        simpson += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let f_integral = simpson * hstep / 3.0;
    let bound = powf(c_r0 + q * f_integral, 2.0 * p);
    let ball = integrate(|x| model.area_d(x), 0.0, r_big, VOL_TOL)?;
    let ratio = ball / vol;

    let radial = linspace(R_MIN, r_big, 4001);
    let psi_excess = radial.iter().map(|&r| psi(r)).fold(0.0, f64::max);
    let lhs = integrate(|r| powf(psi(r), 2.0 * p) * model.area_d(r), 0.0, r_big, VOL_TOL)?;
    Ok(PetersenReport {
        bound,
        ratio,
        c_r0,
        f_integral,
        psi_excess,
        ricci_deficit: i_rho,
        lemma26_lhs: lhs,
        lemma26_rhs: c * i_rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{close, sinh};

    #[test]
    fn comparison_ode_closed_forms() {
        let s = solve_h(&FunctionSpec::constant(0.0), 3.0).unwrap();
        assert!(close(s.eval(2.5).unwrap().0, 2.5, 1e-13));
        let s = solve_h(&FunctionSpec::constant(1.0), 5.0).unwrap();
        for r in linspace(0.0, 5.0, 101) {
            assert!((s.eval(r).unwrap().0 - sinh(r)).abs() <= 1e-8 * sinh(r).max(1.0), "{r}");
        }
        assert!(s.first_zero.is_none());
        let s = solve_h(&FunctionSpec::constant(-1.0), 5.0).unwrap();
        assert!((s.first_zero.unwrap() - PI).abs() < 1e-9);
    }

    #[test]
    fn lr_and_bound_formulas() {
        let flat = ModelManifold::flat(3, 4.0).unwrap();
        assert!(close(model_lr(&flat, 0.5).unwrap(), 4.0, 1e-15));
        let w = ModelManifold::new(3, 4.0, FunctionSpec::power(1.0, 1.0), FunctionSpec::power(-1.0, 2.0)).unwrap();
        assert!(close(model_lr(&w, 2.0).unwrap(), 1.0 - 4.0, 1e-14));
        assert!(close(ricci_nm_radial(&w, 2.0), 2.0 - 16.0, 1e-14));
        let hyp = ModelManifold::new(2, 3.0, FunctionSpec::sinh(1.0, 1.0), FunctionSpec::constant(0.0)).unwrap();
        assert!(close(model_lr(&hyp, 1.0).unwrap(), 1.0 / libm::tanh(1.0), 1e-14));
        assert!(close(ricci_nm_radial(&hyp, 1.0), -1.0, 1e-14));
        let s = solve_h(&FunctionSpec::constant(1.0), 3.0).unwrap();
        let b = lr_comparison_bound(&s, 4.0, 1.5).unwrap();
        assert!(close(b, 3.0 / libm::tanh(1.5), 1e-9));
    }

    #[test]
    fn riccati_residuals() {
        let flat = ModelManifold::flat(2, 3.0).unwrap();
        let r = riccati_residual(&flat, 0.5, 3.0).unwrap();
        assert!(close(r, -0.5 / 0.25, 1e-12));
        let hyp = ModelManifold::new(2, 3.0, FunctionSpec::sinh(1.0, 1.0), FunctionSpec::constant(0.0)).unwrap();
        assert!(check_riccati_inequality(&hyp, 0.1, 5.0, 200).unwrap().max <= 1e-12);
        assert!(check_riccati_inequality(&hyp, 1e-4, 5.0, 10).is_err());
    }

    #[test]
    fn bochner_identity() {
        let flat = ModelManifold::flat(3, 4.0).unwrap();
        let u = FunctionSpec::power(0.5, 2.0);
        let (l, r) = bochner_sides(&flat, &u, 1.0).unwrap();
        assert!((l - 3.0).abs() < 1e-8 && (r - 3.0).abs() < 1e-12);
        let w = ModelManifold::new(3, 4.0, FunctionSpec::power(1.0, 1.0), FunctionSpec::power(-1.0, 2.0)).unwrap();
        assert!(verify_bochner_radial(&w, &u, 0.1, 3.0, 100).unwrap().max < 1e-6);
    }

    #[test]
    fn volumes_and_ratios() {
        let flat = ModelManifold::flat(3, 3.5).unwrap();
        assert!(close(flat.area_d(1.0), 4.0 * PI, 1e-14));
        assert!(close(flat.ball_d(1.0).unwrap(), 4.0 * PI / 3.0, 1e-12));
        let s = solve_h(&FunctionSpec::constant(0.0), 5.0).unwrap();
        let radii = linspace(0.05, 5.0, 100);
        let t = volume_table(&flat, &s, &radii).unwrap();
        assert!(check_ratio_monotonicity(&t).monotone);
        let bad = ModelManifold::new(3, 3.5, FunctionSpec::power(1.0, 1.0), FunctionSpec::power(1.0, 3.0)).unwrap();
        let t = volume_table(&bad, &s, &radii).unwrap();
        let c = check_ratio_monotonicity(&t);
        assert!(!c.monotone && c.first_violation.unwrap().r < 2.0);
    }

    #[test]
    fn petersen_constant_values() {
        assert_eq!(petersen_constant(3.0, 2.0).unwrap(), 36.0);
        assert!(close(petersen_constant(4.0, 3.0).unwrap(), 3375.0 / 8.0, 1e-12));
        assert!(petersen_constant(4.0, 2.0).is_err());
    }

    #[test]
    fn petersen_bound_flat_and_perturbed() {
        let flat = ModelManifold::flat(3, 4.0).unwrap();
        let zero = FunctionSpec::constant(0.0);
        let r = petersen_volume_bound(&flat, &zero, 3.0, 1.0, 4.0).unwrap();
        assert_eq!(r.ricci_deficit, 0.0);
        assert!(close(r.bound, powf(r.c_r0, 6.0), 1e-12));
        let r2 = petersen_volume_bound(&flat, &zero, 3.0, 1.0, 8.0).unwrap();
        assert!(close(r.bound, r2.bound, 1e-12));
        assert!(r2.ratio < r.ratio && r.ratio < r.bound);
        let pert = ModelManifold::new(3, 4.0, FunctionSpec::power(1.0, 1.0), FunctionSpec::power(0.1, 2.0)).unwrap();
        let r = petersen_volume_bound(&pert, &zero, 3.0, 1.0, 6.0).unwrap();
        assert!(r.psi_excess > 0.0);
        assert!(r.lemma26_lhs <= r.lemma26_rhs);
        assert!(r.ratio <= r.bound * (1.0 + 1e-9));
    }
}
