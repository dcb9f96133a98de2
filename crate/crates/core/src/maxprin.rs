//! Weak maximum principle constants and the growth threshold for
//! unbounded solutions.
//!
//! With `eta = mu + (sigma - 1)(1 + delta - chi)` the constant `C` bounding
//! `K <= C max(u_hat, 0)^(delta - chi)` is piecewise: one formula family
//! when `sigma - eta > 0` (exponential volume growth scale), another when
//! `sigma = eta` (polynomial scale).

use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::counterexample::radial_plap;
use crate::error::{invalid, Result};
use crate::geometry::ModelManifold;
use crate::math::{ln, powf};

/// `|sigma - eta|` at most this (relative to `max(1, sigma)`) counts as 0.
pub const EQUAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WmpParams {
    pub sigma_growth: f64,
    pub delta: f64,
    pub chi: f64,
    pub mu: f64,
    pub d0: f64,
    pub a_bound: f64,
}

impl WmpParams {
    pub fn eta(&self) -> f64 {
        self.mu + (self.sigma_growth - 1.0) * (1.0 + self.delta - self.chi)
    }

    /// `sigma - eta`, snapped to 0 within [`EQUAL_TOL`].
    pub fn gap(&self) -> f64 {
        let g = self.sigma_growth - self.eta();
        if g.abs() <= EQUAL_TOL * self.sigma_growth.abs().max(1.0) {
            0.0
        } else {
            g
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.sigma_growth, self.delta, self.chi, self.mu, self.d0, self.a_bound];
        if all.iter().any(|v| !v.is_finite()) {
            return invalid("parameters must be finite");
        }
        if self.sigma_growth < 0.0 {
            return invalid("sigma must be non-negative");
        }
        if !(0.0 <= self.chi && self.chi < self.delta) {
            return invalid("need 0 <= chi < delta");
        }
        if self.gap() < 0.0 {
            return invalid("need sigma >= eta");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WmpBranch {
    SigmaZero,
    /// `sigma - eta > 0`, `eta < 0`: `A d0 (sigma - eta)^(1+delta-chi)`.
    GapNegativeEta,
    /// `sigma - eta > 0`, `eta >= 0`: `A d0 sigma^(delta-chi) (sigma - eta)`.
    GapNonnegativeEta,
    /// `sigma = eta`, `delta (sigma-1) + d0 - 1 <= 0`.
    EqualNonpositive,
    /// `sigma = eta`: `A sigma^(delta-chi) [delta (sigma-1) + d0 - 1]`.
    EqualPositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WmpConstant {
    pub branch: WmpBranch,
    pub value: f64,
    pub eta: f64,
}

pub fn wmp_constant(params: &WmpParams) -> Result<WmpConstant> {
    params.validate()?;
    let WmpParams { sigma_growth: s, delta, chi, d0, a_bound: a, .. } = *params;
    let eta = params.eta();
    let gap = params.gap();
    let (branch, value) = if s == 0.0 {
        (WmpBranch::SigmaZero, 0.0)
    } else if gap > 0.0 {
        if eta < 0.0 {
            (WmpBranch::GapNegativeEta, a * d0 * powf(gap, 1.0 + delta - chi))
        } else {
            (WmpBranch::GapNonnegativeEta, a * d0 * powf(s, delta - chi) * gap)
        }
    } else {
        let bracket = delta * (s - 1.0) + d0 - 1.0;
        if bracket <= 0.0 {
            (WmpBranch::EqualNonpositive, 0.0)
        } else {
            (WmpBranch::EqualPositive, a * powf(s, delta - chi) * bracket)
        }
    };
    Ok(WmpConstant { branch, value, eta })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdClass {
    /// Every solution has `u* < inf` and `f(u*) <= 0`.
    ForcesBound,
    Inconclusive,
}

/// Volume growth quotient along a table of radii.
#[derive(Clone, Debug, Serialize)]
pub struct VolumeQuotient {
    /// `log vol_D B_r / r^(sigma-eta)` or `/ log r`.
    pub quotient: Vec<(f64, f64)>,
    /// Minimum over the last decade of radii.
    pub d0: f64,
    /// Log-log slope of the quotient over the last decade.
    pub slope: f64,
    pub diverging: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub class: ThresholdClass,
    pub eta: f64,
    pub gap: f64,
    pub d0: f64,
    pub volume: Option<VolumeQuotient>,
    pub reasons: Vec<String>,
}

/// Quotients above this log-log slope are treated as unbounded.
pub const DIVERGING_SLOPE: f64 = 0.1;

/// The liminf proxy for `log vol / r^gap` (`gap > 0`) or `log vol / log r`.
pub fn volume_quotient(gap: f64, radii: &[f64], log_volume: &[f64]) -> Result<VolumeQuotient> {
    if radii.len() != log_volume.len() || radii.len() < 2 {
        return invalid("need matching radii and volumes");
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 1.0 {
        return invalid("radii must be increasing and above 1");
    }
    let quotient: Vec<(f64, f64)> = radii
        .iter()
        .zip(log_volume)
        .map(|(&r, &lv)| (r, if gap > 0.0 { lv / powf(r, gap) } else { lv / ln(r) }))
        .collect();
    let r_max = *radii.last().unwrap();
    let tail: Vec<(f64, f64)> = quotient.iter().copied().filter(|&(r, _)| r >= r_max / 10.0).collect();
    let d0 = tail.iter().map(|&(_, q)| q).fold(f64::INFINITY, f64::min);
    let (r_a, q_a) = tail[0];
    let (r_b, q_b) = *tail.last().unwrap();
    let slope = if tail.len() >= 2 && q_a > 0.0 && q_b > 0.0 {
        (ln(q_b) - ln(q_a)) / (ln(r_b) - ln(r_a))
    } else {
        0.0
    };
    Ok(VolumeQuotient { quotient, d0, slope, diverging: slope > DIVERGING_SLOPE || !d0.is_finite() })
}

/// `ln vol_D(B_r)` of a model on each radius.
pub fn model_log_volume(model: &ModelManifold, radii: &[f64]) -> Result<Vec<f64>> {
    radii.iter().map(|&r| model.ball_d(r).map(ln)).collect()
}

/// Pure logic over the growth-threshold hypotheses. `volume` is
/// `(radii, ln vol_D B_r)`; without it `params.d0` is taken as given.
/// `u_star_finite` is only consulted when `sigma = 0`.
pub fn theorem_b_threshold(
    params: &WmpParams,
    f_liminf_positive: bool,
    u_star_finite: bool,
    volume: Option<(&[f64], &[f64])>,
) -> Result<ThresholdReport> {
    let eta = params.eta();
    let mut reasons = Vec::new();
    if params.sigma_growth < 0.0 {
        return invalid("sigma must be non-negative");
    }
    if !(0.0 <= params.chi && params.chi < params.delta) {
        reasons.push("0 <= chi < delta fails".into());
    }
    let gap = params.gap();
    if gap < 0.0 {
        reasons.push("sigma >= eta fails".into());
    }
    if params.sigma_growth > 0.0 && !f_liminf_positive {
        reasons.push("liminf f > 0 is needed when sigma > 0".into());
    }
    if params.sigma_growth == 0.0 && !u_star_finite {
        return invalid("sigma = 0 needs a finite supremum of u");
    }
    let mut d0 = params.d0;
    let vol = match volume {
        Some((radii, lv)) if gap >= 0.0 => {
            let q = volume_quotient(gap, radii, lv)?;
            d0 = q.d0;
            if q.diverging {
                reasons.push("volume growth quotient diverges".into());
            }
            Some(q)
        }
        _ => None,
    };
    if !d0.is_finite() {
        reasons.push("volume growth liminf is infinite".into());
    }
    let class = if reasons.is_empty() { ThresholdClass::ForcesBound } else { ThresholdClass::Inconclusive };
    Ok(ThresholdReport { class, eta, gap, d0, volume: vol, reasons })
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpnessReport {
    pub p: f64,
    pub m: usize,
    pub p_conj: f64,
    /// Largest `|Delta_p u - m|` on the grid.
    pub residual_max: f64,
    /// `u(r)/r^{p'}` at the largest radius.
    pub u_hat: f64,
    /// The maximum principle constant at `sigma = p'` on flat space.
    pub wmp: WmpConstant,
    /// `C u_hat^(delta-chi)`, the admissible `K`...
    pub k_bound: f64,
    /// ...against the actual `K = m`.
    pub k_actual: f64,
}

/// `u = r^{p'}/p'` solves `Delta_p u = m` on flat `R^m`; reports the
/// residual, `u_hat` and both sides of `K <= C u_hat^(delta-chi)` at
/// `sigma = p'` with `delta = p - 1`, `chi = mu = 0`, `d0 = m`, `A = 1`.
pub fn sharpness_example(p: f64, m: usize, r_grid: &[f64]) -> Result<SharpnessReport> {
    if !(p > 1.0) || m < 1 || r_grid.is_empty() || r_grid.iter().any(|&r| !(r > 0.0)) {
        return invalid("need p > 1, m >= 1 and positive radii");
    }
    let pc = p / (p - 1.0);
    let mf = m as f64;
    let mut residual_max: f64 = 0.0;
    for &r in r_grid {
        let up = powf(r, pc - 1.0);
        let upp = (pc - 1.0) * powf(r, pc - 2.0);
        residual_max = residual_max.max((radial_plap(p, mf, r, up, upp) - mf).abs());
    }
    let r_last = *r_grid.last().unwrap();
    let u_hat = (powf(r_last, pc) / pc) / powf(r_last, pc);
    let params = WmpParams { sigma_growth: pc, delta: p - 1.0, chi: 0.0, mu: 0.0, d0: mf, a_bound: 1.0 };
    let wmp = wmp_constant(&params)?;
    let k_bound = wmp.value * powf(u_hat.max(0.0), params.delta - params.chi);
    Ok(SharpnessReport { p, m, p_conj: pc, residual_max, u_hat, wmp, k_bound, k_actual: mf })
}
