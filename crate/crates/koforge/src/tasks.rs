//! Task execution. Each task turns a scenario entry into a JSON data block
//! and, for grid-valued results, one CSV table.

use koforge_core::counterexample::{GlueProblem, GLUED_HEADER};
use koforge_core::geometry::{
    check_ratio_monotonicity, check_riccati_inequality, petersen_constant, petersen_volume_bound,
    ricci_lower_bound_holds, solve_h, verify_bochner_radial, volume_table, ModelManifold, VolumeTable, R_MIN,
};
use koforge_core::grid::linspace;
use koforge_core::math::powf;
use koforge_core::maxprin::{
    model_log_volume, sharpness_example, theorem_b_threshold, wmp_constant, WmpBranch, WmpParams,
};
use koforge_core::structural::{
    check_b_tilde, check_f, check_grad_ell, check_parameter_regimes, check_phi, check_phi_ell, check_rho_terms,
    check_theta, ConditionReport, StructuralProfile,
};
use koforge_core::supersolution::{Barrier, BuildRequest, KoMode, RhoMode, BLOWUP_GAP, NEGKO_T_MAX, PROFILE_HEADER};
use koforge_core::transforms::classify_ko_with;
use koforge_core::{FunctionSpec, LogGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::scenario::{
    CheckName, ConditionsTask, CounterexampleTask, GeometryTask, KoTask, MaxprinTask, ModeName, ModelBlock,
    ProfileBlock, Scenario, SupersolutionTask, Task,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// A structural check answered "no".
    No,
    Error,
    Skipped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct TaskOutput {
    pub index: usize,
    pub name: &'static str,
    pub status: Status,
    pub data: Value,
    pub csv: Option<Csv>,
}

impl TaskOutput {
    pub fn csv_name(&self) -> String {
        format!("{}_{}.csv", self.name, self.index)
    }
}

type TaskResult = Result<(Status, Value, Option<Csv>), String>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Effective core profile for a task: its own block or the scenario's.
fn profile_for(sc: &Scenario, own: Option<&ProfileBlock>) -> Result<(StructuralProfile, Vec<String>), String> {
    let block = own.or(sc.profile.as_ref()).ok_or("missing profile block")?;
    block.to_core(&sc.numeric).map_err(err)
}

fn model_for(sc: &Scenario, own: Option<&ModelBlock>) -> Result<(ModelManifold, FunctionSpec), String> {
    let block = own.or(sc.model.as_ref()).ok_or("missing model block")?;
    block.to_core().map_err(err)
}

pub fn run_task(sc: &Scenario, index: usize, task: &Task) -> TaskOutput {
    let res = match task {
        Task::Conditions(t) => conditions(sc, t),
        Task::Ko(t) => ko(sc, t),
        Task::Supersolution(t) => supersolution(sc, t),
        Task::Counterexample(t) => counterexample(sc, t),
        Task::Geometry(t) => geometry(sc, t),
        Task::Maxprin(t) => maxprin(sc, t),
    };
    let (status, data, csv) = match res {
        Ok(r) => r,
        Err(e) => (Status::Error, json!({ "error": e }), None),
    };
    let mut out = TaskOutput { index, name: task.kind(), status, data, csv };
    if out.csv.is_some() {
        let name = out.csv_name();
        if let Value::Object(m) = &mut out.data {
            m.insert("csv".into(), Value::String(name));
        }
    }
    out
}

pub fn skipped(index: usize, task: &Task, reason: &str) -> TaskOutput {
    TaskOutput { index, name: task.kind(), status: Status::Skipped, data: json!({ "reason": reason }), csv: None }
}

fn conditions(sc: &Scenario, t: &ConditionsTask) -> TaskResult {
    let (p, warnings) = profile_for(sc, t.profile.as_ref())?;
    let mut checks = Map::new();
    let mut failures = Vec::new();
    let mut note = |name: &str, rep: &ConditionReport, out: &mut Map<String, Value>| {
        failures.extend(rep.failures().map(|f| format!("{name}.{f}")));
        out.insert(name.to_string(), to_value(rep));
    };
    for c in &t.checks {
        let (name, rep) = match c {
            CheckName::Phi => ("phi", check_phi(&p)),
            CheckName::GradEll => ("grad_ell", check_grad_ell(&p)),
            CheckName::Theta => ("theta", check_theta(&p)),
            CheckName::PhiEll => ("phi_ell", check_phi_ell(&p)),
            CheckName::F => ("f", check_f(&p)),
            CheckName::BTilde => ("b_tilde", check_b_tilde(&p)),
            CheckName::Rho => {
                if p.rho.is_none() && p.g_fn.is_none() {
                    continue;
                }
                ("rho", check_rho_terms(&p))
            }
        };
        note(name, &rep.map_err(err)?, &mut checks);
    }
    let mut regimes = Map::new();
    for r in &t.regimes {
        let rep = check_parameter_regimes(&p, r.kind()).map_err(err)?;
        let name = serde_json::to_value(r).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        note(&name, &rep, &mut regimes);
    }
    let status = if failures.is_empty() { Status::Ok } else { Status::No };
    Ok((status, json!({ "checks": checks, "regimes": regimes, "failures": failures, "warnings": warnings }), None))
}

fn ko(sc: &Scenario, t: &KoTask) -> TaskResult {
    let (p, warnings) = profile_for(sc, t.profile.as_ref())?;
    let force = t.force_numeric.unwrap_or(sc.numeric.force_numeric);
    let mut results = Vec::new();
    for v in &t.variants {
        for &s in &t.sigma {
            let verdict = classify_ko_with(&p, v.variant(), s, force).map_err(err)?;
            results.push(json!({ "variant": v, "sigma": s, "result": verdict }));
        }
    }
    Ok((Status::Ok, json!({ "force_numeric": force, "results": results, "warnings": warnings }), None))
}

fn supersolution(sc: &Scenario, t: &SupersolutionTask) -> TaskResult {
    let (p, warnings) = profile_for(sc, t.profile.as_ref())?;
    let beta = t.beta.unwrap_or(p.beta);
    let mut req = BuildRequest::new(p, t.epsilon, t.eta, t.t0, t.t1, t.a_geom);
    req.kernel = t.kernel.kernel();
    req.rho_mode = if t.rho { RhoMode::On } else { RhoMode::Off };
    req.ko_mode = match t.mode {
        ModeName::Ko => KoMode::Ko,
        ModeName::NegKo => KoMode::NegKo,
    };
    req.beta = beta;
    req.grid_points = sc.numeric.grid_points;
    let barrier = Barrier::new(&req).map_err(err)?;
    let (profile, probes) = match t.sigma {
        Some(s) => (barrier.build(s).map_err(err)?, Vec::new()),
        None => {
            let out = barrier.search().map_err(err)?;
            (out.profile, out.probes)
        }
    };
    let sigma = profile.sigma;
    let stride = (profile.t.len() / 64).max(1);
    let consistency = barrier.derivative_consistency(&profile, stride).map_err(err)?;
    let mut data = json!({
        "mode": t.mode,
        "kernel": t.kernel,
        "rho": t.rho,
        "threshold_T": barrier.threshold(),
        "c_const": barrier.c_const(),
        "summary": profile.summary(),
        "probes": probes,
        "derivative_consistency": consistency,
        "warnings": warnings,
    });
    let extra = match profile.t_sigma {
        Some(ts) => {
            let near = barrier.alpha_at(sigma, ts - BLOWUP_GAP).map_err(err)?;
            json!({ "alpha_near_blowup": near, "blowup_gap": BLOWUP_GAP })
        }
        None => {
            let (t_end, a_end) = (*profile.t.last().unwrap(), *profile.alpha.last().unwrap());
            let first_above = profile.t.iter().zip(&profile.alpha).find(|(_, a)| **a > 1e6).map(|(t, _)| *t);
            let at_t_max = if t_end >= NEGKO_T_MAX { Some(barrier.alpha_at(sigma, NEGKO_T_MAX).map_err(err)?) } else { None };
            json!({
                "t_end": t_end,
                "alpha_end": a_end,
                "alpha_finite": profile.alpha.iter().all(|a| a.is_finite()),
                "first_t_alpha_above_1e6": first_above,
                "alpha_at_t_max": at_t_max,
            })
        }
    };
    if let (Value::Object(d), Value::Object(e)) = (&mut data, extra) {
        d.extend(e);
    }
    let csv = Csv { header: PROFILE_HEADER.to_vec(), rows: profile.rows().into_iter().map(|r| r.to_vec()).collect() };
    Ok((Status::Ok, data, Some(csv)))
}

fn counterexample(sc: &Scenario, t: &CounterexampleTask) -> TaskResult {
    let (p, warnings) = profile_for(sc, t.profile.as_ref())?;
    let problem = GlueProblem::new(t.p, t.m, p.f.clone(), p.ell.clone()).map_err(err)?;
    let (params, probes) = problem.solve().map_err(err)?;
    let mut extra_probes = Vec::new();
    for &l in &t.probe_lambda {
        let (probe, glue) = problem.probe_at(l).map_err(err)?;
        extra_probes.push(json!({ "probe": probe, "params": glue }));
    }
    let r_max = t.r_max.unwrap_or(params.t_bar + 10.0);
    let sol = problem.assemble(&params, r_max, t.n_inner, t.n_outer).map_err(err)?;
    let check = sol.verify();
    let mut growth = vec![json!({ "r_max": r_max, "max_u": sol.max_u() })];
    let mut r = r_max;
    for _ in 0..t.doublings {
        r *= 2.0;
        let s = problem.assemble(&params, r, t.n_inner, t.n_outer).map_err(err)?;
        growth.push(json!({ "r_max": r, "max_u": s.max_u() }));
    }
    let radii = linspace(params.t_bar + 0.1, r_max, 25);
    let w_identity = problem.w_identity_error(&radii).map_err(err)?;
    let data = json!({
        "params": params,
        "residuals": params.residuals(),
        "probes": probes,
        "extra_probes": extra_probes,
        "value_gap": sol.value_gap,
        "slope_gap": sol.slope_gap,
        "check": check,
        "growth": growth,
        "w_identity": w_identity,
        "warnings": warnings,
    });
    let csv = Csv { header: GLUED_HEADER.to_vec(), rows: sol.csv_rows().into_iter().map(|r| r.to_vec()).collect() };
    Ok((Status::Ok, data, Some(csv)))
}

/// `sinh(sqrt(G) r)/sqrt(G)`, `r` or `sin(sqrt(-G) r)/sqrt(-G)`.
fn h_closed_form(g: f64, r: f64) -> f64 {
    if g > 0.0 {
        (g.sqrt() * r).sinh() / g.sqrt()
    } else if g == 0.0 {
        r
    } else {
        ((-g).sqrt() * r).sin() / (-g).sqrt()
    }
}

fn geometry(sc: &Scenario, t: &GeometryTask) -> TaskResult {
    let (model, g) = model_for(sc, t.model.as_ref())?;
    let radii = t.radii.linear();
    let r_max = t.radii.hi;
    let sol = solve_h(&g, r_max).map_err(err)?;
    let table: VolumeTable = volume_table(&model, &sol, &radii).map_err(err)?;
    let ratios = check_ratio_monotonicity(&table);
    let lower_bound = ricci_lower_bound_holds(&model, &g, &radii, 1e-12);
    let lo = t.radii.lo.max(10.0 * R_MIN);
    let mut data = json!({
        "ricci_lower_bound_holds": lower_bound,
        "ratio_check": ratios,
        "first_zero": sol.first_zero,
    });
    let d = data.as_object_mut().unwrap();
    if let Some((gc, _)) = g.as_monomial().filter(|(_, a)| *a == 0.0) {
        // constant G: compare with the closed form up to the first zero
        let end = sol.first_zero.unwrap_or(f64::INFINITY);
        let worst = sol
            .r
            .iter()
            .zip(&sol.h)
            .filter(|(r, _)| **r < 0.99 * end)
            .map(|(&r, &h)| {
                let exact = h_closed_form(gc, r);
                (h - exact).abs() / exact.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        d.insert("h_closed_form_error".into(), json!(worst));
    }
    if t.riccati {
        let r = check_riccati_inequality(&model, lo, r_max, 200).map_err(err)?;
        d.insert("riccati".into(), to_value(&r));
    }
    if let Some(u) = &t.bochner {
        let u = u.to_core().map_err(err)?;
        let b = verify_bochner_radial(&model, &u, lo, r_max, 100).map_err(err)?;
        d.insert("bochner".into(), to_value(&b));
    }
    if let Some(ps) = &t.petersen {
        let c = petersen_constant(model.n, ps.p).map_err(err)?;
        let rep = petersen_volume_bound(&model, &g, ps.p, ps.r0, ps.r_big).map_err(err)?;
        let mut pj = json!({ "p": ps.p, "constant": c, "report": rep });
        if let Some(grid) = &ps.growth {
            let Some((b2, _)) = g.as_monomial().filter(|(c, a)| *a == 0.0 && *c > 0.0) else {
                return Err("petersen.growth needs a positive constant G".into());
            };
            let b = b2.sqrt();
            let rs = grid.linear();
            let mut q = Vec::with_capacity(rs.len());
            for &r in &rs {
                let v = model.ball_d(r).map_err(err)?;
                q.push(v.ln() - (model.n - 1.0) * b * r);
            }
            // slope of ln quotient over the last quarter
            let k = rs.len() * 3 / 4;
            let slope = (q[rs.len() - 1] - q[k]) / (rs[rs.len() - 1] - rs[k]);
            let q_max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();
            pj.as_object_mut().unwrap().insert(
                "growth".into(),
                json!({ "B": b, "quotient_max": q_max, "log_slope_tail": slope, "bounded": slope <= 1e-3 && q_max.is_finite() }),
            );
        }
        d.insert("petersen".into(), pj);
    }
    let csv = Csv { header: VolumeTable::HEADER.to_vec(), rows: table.rows().map(|r| r.to_vec()).collect() };
    Ok((Status::Ok, data, Some(csv)))
}

/// Branch value written out directly from the case list (same `powf` as
/// the core, so agreement is exact).
fn wmp_by_hand(p: &WmpParams) -> (WmpBranch, f64) {
    let (s, d, c, a) = (p.sigma_growth, p.delta, p.chi, p.a_bound);
    let eta = p.mu - (1.0 + d - c) * (1.0 - s);
    if s == 0.0 {
        (WmpBranch::SigmaZero, 0.0)
    } else if s > eta && eta < 0.0 {
        (WmpBranch::GapNegativeEta, a * p.d0 * powf(s - eta, 1.0 + d - c))
    } else if s > eta {
        (WmpBranch::GapNonnegativeEta, a * p.d0 * powf(s, d - c) * (s - eta))
    } else if d * (s - 1.0) + p.d0 - 1.0 <= 0.0 {
        (WmpBranch::EqualNonpositive, 0.0)
    } else {
        (WmpBranch::EqualPositive, a * powf(s, d - c) * (d * (s - 1.0) + p.d0 - 1.0))
    }
}

fn dyadic(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    rng.gen_range(lo..hi) as f64 / 4.0
}

fn maxprin(sc: &Scenario, t: &MaxprinTask) -> TaskResult {
    let mut data = Map::new();
    if let Some(sigma) = t.sigma {
        let prof = sc.profile.as_ref().ok_or("missing profile block")?;
        let missing = |k: &str| format!("maxprin needs profile.{k}");
        let mut params = WmpParams {
            sigma_growth: sigma,
            delta: prof.delta.ok_or_else(|| missing("delta"))?,
            chi: prof.chi.ok_or_else(|| missing("chi"))?,
            mu: prof.mu,
            d0: t.d0.unwrap_or(f64::NAN),
            a_bound: prof.a_bound.ok_or_else(|| missing("A"))?,
        };
        let volume = match (&t.volume_radii, &sc.model) {
            (Some(g), Some(m)) if t.d0.is_none() => {
                let (model, _) = m.to_core().map_err(err)?;
                let radii = LogGrid::new(g.lo, g.hi, g.n).map_err(err)?.points();
                let lv = model_log_volume(&model, &radii).map_err(err)?;
                Some((radii, lv))
            }
            _ => None,
        };
        let thr = theorem_b_threshold(
            &params,
            t.f_liminf_positive,
            t.u_star_finite,
            volume.as_ref().map(|(r, v)| (r.as_slice(), v.as_slice())),
        )
        .map_err(err)?;
        params.d0 = thr.d0;
        data.insert("inputs".into(), to_value(&params));
        match wmp_constant(&params) {
            Ok(c) => {
                data.insert("branch".into(), to_value(&c.branch));
                data.insert("C_value".into(), json!(c.value));
                data.insert("eta".into(), json!(c.eta));
            }
            Err(e) => {
                data.insert("branch".into(), Value::Null);
                data.insert("C_value".into(), Value::Null);
                data.insert("constant_error".into(), json!(e.to_string()));
            }
        }
        data.insert("threshold".into(), to_value(&thr));
    }
    if let Some(s) = &t.sharpness {
        let mut rep = sharpness_example(s.p, s.m, &s.radii.linear()).map_err(err)?;
        if let Some(r) = s.u_hat_at {
            rep.u_hat = sharpness_example(s.p, s.m, &[r]).map_err(err)?.u_hat;
        }
        let mut v = to_value(&rep);
        v.as_object_mut().unwrap().insert("u_hat_at".into(), json!(s.u_hat_at.unwrap_or(s.radii.hi)));
        data.insert("sharpness".into(), v);
    }
    if t.draws > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(sc.numeric.seed);
        let (mut checked, mut mismatches) = (0usize, Vec::new());
        let mut branches: std::collections::BTreeMap<String, usize> = Default::default();
        while checked < t.draws {
            let delta = dyadic(&mut rng, 1, 12);
            let chi = dyadic(&mut rng, 0, (delta * 4.0) as i32);
            let p = WmpParams {
                sigma_growth: dyadic(&mut rng, 0, 12),
                delta,
                chi,
                mu: dyadic(&mut rng, -12, 12),
                d0: dyadic(&mut rng, 0, 16),
                a_bound: dyadic(&mut rng, 1, 12),
            };
            if p.sigma_growth - p.eta() < 0.0 {
                continue;
            }
            checked += 1;
            let got = wmp_constant(&p).map_err(err)?;
            let (branch, value) = wmp_by_hand(&p);
            *branches.entry(to_value(&branch).as_str().unwrap_or("").to_string()).or_default() += 1;
            if got.branch != branch || got.value != value {
                mismatches.push(json!({ "inputs": p, "got": got, "expected": value }));
            }
        }
        let n_bad = mismatches.len();
        data.insert(
            "draws".into(),
            json!({ "seed": sc.numeric.seed, "count": checked, "branches": branches, "mismatches": mismatches }),
        );
        if n_bad > 0 {
            return Err(format!("{n_bad} draws disagree with the branch formulas"));
        }
    }
    Ok((Status::Ok, Value::Object(data), None))
}
