//! Acceptance criteria 1-10, one line each. Oracles are closed forms written
//! out here, not read back from the code under test.
//!
//! cargo test -p koforge --test acceptance

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use koforge::{demos, run_scenario, RunOptions, RunOutcome};
use koforge_core::geometry::{petersen_constant, solve_h};
use koforge_core::math::powf;
use koforge_core::maxprin::{sharpness_example, wmp_constant, WmpBranch, WmpParams};
use koforge_core::FunctionSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;

fn demo(name: &str) -> RunOutcome {
    let d = demos::find(name).unwrap_or_else(|| panic!("no demo {name}"));
    run_scenario(&(d.build)(), &RunOptions::default())
}

fn at<'a>(v: &'a Value, path: &str) -> &'a Value {
    v.pointer(path).unwrap_or(&Value::Null)
}

fn num(v: &Value, path: &str) -> f64 {
    at(v, path).as_f64().unwrap_or(f64::NAN)
}

fn verdict(out: &RunOutcome, task: usize, k: usize) -> String {
    at(&out.task(task).data, &format!("/results/{k}/result/verdict")).as_str().unwrap_or("missing").to_string()
}

fn all_ok(out: &RunOutcome) -> Result<(), String> {
    match out.outputs.iter().find(|o| o.status != koforge::Status::Ok) {
        Some(o) => Err(format!("task {} ({}) is {:?}: {}", o.index, o.name, o.status, o.data)),
        None => Ok(()),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// phi = t, ell = 1, f = t^q: KO holds iff q > 1.
fn c1_ko_threshold() -> Verdict {
    let out = demo("ko-threshold");
    all_ok(&out)?;
    let mut seen = Vec::new();
    for (i, q) in [0.5, 1.0, 1.5, 3.0].into_iter().enumerate() {
        let want = if q > 1.0 { "convergent" } else { "divergent" };
        let got = verdict(&out, i, 0);
        let method = at(&out.task(i).data, "/results/0/result/method").as_str().unwrap_or("");
        ensure(got == want, || format!("q = {q}: {got}, expected {want}"))?;
        ensure(method == "exact_exponent", || format!("q = {q}: method {method}"))?;
        seen.push(format!("q={q} {got}"));
    }
    Ok(seen.join(", "))
}

/// f = t log^b(1+t): convergent for b > 2.
fn c2_log_refinement() -> Verdict {
    let out = demo("log-refinement");
    all_ok(&out)?;
    let (b3, b1, b2) = (verdict(&out, 0, 0), verdict(&out, 1, 0), verdict(&out, 5, 0));
    ensure(b3 == "convergent", || format!("beta = 3: {b3}"))?;
    ensure(b1 == "divergent", || format!("beta = 1: {b1}"))?;
    // beta = 2 diverges (log log growth), so any firm answer must say so
    ensure(b2 != "convergent", || format!("beta = 2 numeric: {b2}"))?;
    Ok(format!("beta=3 {b3}, beta=1 {b1}, beta=2 numeric {b2}"))
}

/// With K(s) = s^2/2 and F(s) = c s^3/3, sigma = eps = 1:
/// int_alpha^inf ds / sqrt(2c s^3/3) = 2 sqrt(3/(2c)) / sqrt(alpha), so
/// alpha = (6/c) / (Tbar - t)^2 with Tbar = sqrt(6/c).
fn c3_closed_form() -> Verdict {
    let out = demo("closed-form");
    all_ok(&out)?;
    let mut notes = Vec::new();
    for (i, c) in [3.0f64, 1.0].into_iter().enumerate() {
        let o = out.task(i);
        let k = 6.0 / c;
        let tbar = k.sqrt();
        let ts = num(&o.data, "/summary/t_sigma");
        ensure((ts - tbar).abs() <= 1e-9 * tbar, || format!("c = {c}: T_sigma {ts} vs {tbar}"))?;
        let csv = o.csv.as_ref().ok_or("no profile grid")?;
        let pts = csv.rows.len() + num(&o.data, "/summary/truncated") as usize;
        ensure(pts == 4096, || format!("c = {c}: {pts} grid points"))?;
        let mut worst: f64 = 0.0;
        for r in &csv.rows {
            let exact = k / ((tbar - r[0]) * (tbar - r[0]));
            worst = worst.max(((r[1] - exact) / exact).abs());
        }
        ensure(worst <= 1e-6, || format!("c = {c}: relative error {worst:e}"))?;
        let margin = csv.rows.iter().map(|r| r[5]).fold(f64::INFINITY, f64::min);
        ensure(margin >= -1e-8, || format!("c = {c}: margin {margin:e}"))?;
        notes.push(format!("f={c}t^2 err {worst:.1e} margin {margin:.1e}"));
    }
    Ok(notes.join("; "))
}

/// f = c t^q, sigma = eps = 1, t0 = 0.
/// q > 1: T = sqrt((q+1)/(2c)) 2/(q-1) and
///        alpha(T - d) = (d (q-1)/2 sqrt(2c/(q+1)))^(-2/(q-1)).
/// q < 1: alpha(t)^((1-q)/2) = 1 + t (1-q)/2 sqrt(2c/(q+1)).
fn c4_blowup() -> Verdict {
    let out = demo("blowup");
    all_ok(&out)?;
    let sc = (demos::find("blowup").unwrap().build)();
    let (mut ko, mut neg) = (0, 0);
    for o in &out.outputs {
        let prof = match &sc.tasks[o.index] {
            koforge::scenario::Task::Supersolution(t) => t.profile.clone().unwrap(),
            _ => return Err("unexpected task".into()),
        };
        let (c, q) = match prof.f.to_core().map_err(|e| e.to_string())?.as_monomial() {
            Some(cq) => cq,
            None => return Err(format!("task {}: f is not a power", o.index)),
        };
        let s = (2.0 * c / (q + 1.0)).sqrt();
        let d = &o.data;
        if at(d, "/mode") == "KO" {
            let t = 2.0 / ((q - 1.0) * s);
            let ts = num(d, "/summary/t_sigma");
            ensure((ts - t).abs() <= 1e-8 * t, || format!("task {}: T {ts} vs {t}", o.index))?;
            let near = num(d, "/alpha_near_blowup");
            let exact = (1e-6 * (q - 1.0) / 2.0 * s).powf(-2.0 / (q - 1.0));
            ensure(near > 1e8, || format!("task {}: alpha(T - 1e-6) = {near:e}", o.index))?;
            ensure(((near - exact) / exact).abs() <= 1e-3, || format!("task {}: {near:e} vs {exact:e}", o.index))?;
            ko += 1;
        } else {
            let g = (1.0 - q) / 2.0;
            let alpha = |t: f64| (1.0 + t * g * s).powf(1.0 / g);
            ensure(at(d, "/summary/blow_up") == false && at(d, "/alpha_finite") == true, || {
                format!("task {}: blew up", o.index)
            })?;
            let (t_end, a_end) = (num(d, "/t_end"), num(d, "/alpha_at_t_max"));
            ensure(t_end >= 1e6, || format!("task {}: stops at t = {t_end:e}", o.index))?;
            let exact = alpha(1e6);
            ensure(((a_end - exact) / exact).abs() <= 1e-6, || format!("task {}: alpha(1e6) {a_end:e} vs {exact:e}", o.index))?;
            // first grid point past the crossing, so only one-sided
            let cross = num(d, "/first_t_alpha_above_1e6");
            let t_star = (powf(1e6, g) - 1.0) / (g * s);
            ensure(t_star < 1e6 && cross >= t_star * (1.0 - 1e-9) && cross <= 1e6, || {
                format!("task {}: first grid point above 1e6 at {cross}, crossing at {t_star}", o.index)
            })?;
            neg += 1;
        }
    }
    ensure(ko == 10 && neg == 10, || format!("{ko} KO and {neg} negKO profiles"))?;
    Ok(format!("{ko} KO blow up, {neg} negKO finite up to 1e6"))
}

/// p = 2, f = t, ell = 1 at lambda = 1.2:
/// t_bar = ln lambda, beta0 = lambda - (lambda/2) ln lambda, Lambda = lambda / ln lambda.
fn c5_counterexample() -> Verdict {
    let out = demo("counterexample");
    all_ok(&out)?;
    let d = &out.task(0).data;
    let lam = 1.2f64;
    let l = lam.ln();
    let want = [("t_bar", l), ("beta0", lam - 0.5 * lam * l), ("Lambda", lam / l)];
    for (k, v) in want {
        let got = num(d, &format!("/extra_probes/0/probe/{k}"));
        ensure((got - v).abs() <= 1e-5, || format!("{k} = {got}, expected {v}"))?;
    }
    let (vg, sg) = (num(d, "/value_gap"), num(d, "/slope_gap"));
    ensure(vg <= 1e-8 && sg <= 1e-8, || format!("C1 gaps {vg:e}, {sg:e}"))?;
    let mr = num(d, "/check/min_relative");
    ensure(mr >= -1e-6, || format!("residual {mr:e}"))?;
    let ii = num(d, "/check/inner_identity");
    ensure(ii <= 1e-10, || format!("inner identity {ii:e}"))?;
    let big = num(d, "/extra_probes/0/probe/Lambda");
    Ok(format!(
        "Lambda {big:.7} (|.-6.58175| = {:.1e}), gaps {vg:.0e}/{sg:.0e}, residual {mr:.2e}, inner {ii:.0e}",
        (big - 6.58175).abs()
    ))
}

fn csv_column(dir: &Path, file: &str, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(dir.join(file)).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

fn emit(name: &str, out: &RunOutcome, dir: &Path) {
    let sc = (demos::find(name).unwrap().build)();
    koforge::emit_report(dir, &sc, &out.outputs, false).unwrap();
}

fn c6_comparison() -> Verdict {
    let sol = solve_h(&FunctionSpec::constant(1.0), 5.0).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (r, h) in sol.r.iter().zip(&sol.h) {
        worst = worst.max((h - r.sinh()).abs() / r.sinh().max(1.0));
    }
    ensure(worst <= 1e-8, || format!("sinh error {worst:e}"))?;
    ensure(sol.r.last().copied().unwrap_or(0.0) >= 5.0, || "grid stops short of 5".into())?;

    let out = demo("comparison");
    all_ok(&out)?;
    let dir = tempfile::tempdir().unwrap();
    emit("comparison", &out, dir.path());
    let increases = |i: usize| -> Option<f64> {
        let file = format!("geometry_{i}.csv");
        let r = csv_column(dir.path(), &file, "r");
        let mut first: Option<f64> = None;
        for col in ["ratio_area", "ratio_ball"] {
            let v = csv_column(dir.path(), &file, col);
            if let Some(j) = (1..v.len()).find(|&j| v[j] > v[j - 1] * (1.0 + 1e-9)) {
                first = Some(first.map_or(r[j], |f| f.min(r[j])));
            }
        }
        first
    };
    for i in 0..3 {
        ensure(at(&out.task(i).data, "/ricci_lower_bound_holds") == true, || format!("model {i}: bound fails"))?;
        ensure(increases(i).is_none(), || format!("model {i}: ratio increases at r = {:?}", increases(i)))?;
    }
    let reported = num(&out.task(3).data, "/ratio_check/first_violation/r");
    let found = increases(3).ok_or("violating model has monotone ratios")?;
    ensure(reported == found, || format!("violation reported at {reported}, found at {found}"))?;
    Ok(format!("sinh err {worst:.1e}, 3 models monotone, violation at r = {reported}"))
}

/// C(n, p) = ((n-1)(2p-1)/(2p-n))^p.
fn c7_petersen() -> Verdict {
    let c = petersen_constant(3.0, 2.0).map_err(|e| e.to_string())?;
    ensure(c == 36.0, || format!("C(3, 2) = {c}"))?;
    for (n, p) in [(3.5, 2.0), (4.0, 3.0), (2.5, 1.5)] {
        let want = powf((n - 1.0) * (2.0 * p - 1.0) / (2.0 * p - n), p);
        let got = petersen_constant(n, p).map_err(|e| e.to_string())?;
        ensure(((got - want) / want).abs() <= 1e-12, || format!("C({n}, {p}) = {got} vs {want}"))?;
    }

    let out = demo("petersen");
    all_ok(&out)?;
    let d = &out.task(0).data;
    let (lhs, rhs) = (num(d, "/petersen/report/lemma26_lhs"), num(d, "/petersen/report/lemma26_rhs"));
    ensure(lhs > 0.0, || "cutoff integral vanishes; nothing tested".into())?;
    ensure(rhs - lhs >= -1e-8 * rhs, || format!("{lhs:e} > {rhs:e}"))?;

    // hyperbolic model, n = 3.5, B = 1: ln vol B_R - 2.5 R stays bounded
    let dir = tempfile::tempdir().unwrap();
    emit("petersen", &out, dir.path());
    let r = csv_column(dir.path(), "geometry_1.csv", "r");
    let ball = csv_column(dir.path(), "geometry_1.csv", "ball_D");
    let q: Vec<(f64, f64)> =
        r.iter().zip(&ball).filter(|(r, _)| (1.0..=20.0).contains(*r)).map(|(r, b)| (*r, b.ln() - 2.5 * r)).collect();
    ensure(q.len() > 50, || format!("{} radii in [1, 20]", q.len()))?;
    let hi = q.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = q.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let tail = q.iter().filter(|x| x.0 >= 10.0).collect::<Vec<_>>();
    let slope = (tail[tail.len() - 1].1 - tail[0].1) / (tail[tail.len() - 1].0 - tail[0].0);
    ensure(slope <= 1e-3, || format!("log quotient still growing, slope {slope}"))?;
    ensure(at(&out.task(1).data, "/petersen/growth/bounded") == true, || "report says unbounded".into())?;
    Ok(format!("C=36, lemma {lhs:.3e} <= {rhs:.3e}, log quotient in [{lo:.2}, {hi:.2}], tail slope {slope:.2}"))
}

fn c8_equivalence() -> Verdict {
    let out = demo("equivalence");
    all_ok(&out)?;
    let battery = demos::equivalence_battery();
    ensure(out.outputs.len() == 2 * battery.len() && battery.len() == 30, || "battery size".into())?;
    let (mut firm_sigma, mut firm_rho) = (0, 0);
    let mut omegas = BTreeMap::new();
    for (k, prof) in battery.iter().enumerate() {
        let s: Vec<String> = (0..3).map(|j| verdict(&out, 2 * k, j)).collect();
        let firm: Vec<&String> = s.iter().filter(|v| *v != "inconclusive").collect();
        ensure(firm.windows(2).all(|w| w[0] == w[1]), || format!("profile {k}: sigma verdicts {s:?}"))?;
        firm_sigma += usize::from(firm.len() == 3);
        let (a, b) = (verdict(&out, 2 * k + 1, 0), verdict(&out, 2 * k + 1, 1));
        if a != "inconclusive" && b != "inconclusive" {
            ensure(a == b, || format!("profile {k}: KO {a}, rhoKO {b}"))?;
            firm_rho += 1;
            *omegas.entry(prof.omega as i64).or_insert(0) += 1;
        }
    }
    ensure(omegas.len() == 3, || format!("omega coverage {omegas:?}"))?;
    ensure(firm_sigma >= 20 && firm_rho >= 20, || format!("too few decided: {firm_sigma}, {firm_rho}"))?;
    Ok(format!("{firm_sigma}/30 decided at all sigma, {firm_rho}/30 KO vs rhoKO, omega counts {omegas:?}"))
}

fn wmp_hand(s: f64, d: f64, c: f64, mu: f64, d0: f64, a: f64) -> (WmpBranch, f64) {
    let eta = mu + (s - 1.0) * (1.0 + d - c);
    if s == 0.0 {
        return (WmpBranch::SigmaZero, 0.0);
    }
    if s > eta {
        if eta < 0.0 {
            (WmpBranch::GapNegativeEta, a * d0 * powf(s - eta, 1.0 + d - c))
        } else {
            (WmpBranch::GapNonnegativeEta, a * d0 * powf(s, d - c) * (s - eta))
        }
    } else {
        let k = d * (s - 1.0) + d0 - 1.0;
        if k <= 0.0 {
            (WmpBranch::EqualNonpositive, 0.0)
        } else {
            (WmpBranch::EqualPositive, a * powf(s, d - c) * k)
        }
    }
}

/// Draws are multiples of 1/8 so sigma - eta is exact and the branch is
/// unambiguous; a third of the draws sit exactly on sigma = eta.
fn c9_maxprin() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2024);
    let mut eighth = |lo: i32, hi: i32| rng.gen_range(lo..hi) as f64 / 8.0;
    let mut counts = BTreeMap::new();
    let mut n = 0;
    while n < 100 {
        let s = if n % 10 == 0 { 0.0 } else { eighth(1, 24) };
        let d = eighth(1, 24);
        let c = eighth(0, (8.0 * d) as i32);
        let mu = if n % 3 == 0 { s - (s - 1.0) * (1.0 + d - c) } else { eighth(-24, 24) };
        let (d0, a) = (eighth(1, 32), eighth(1, 16));
        if s < mu + (s - 1.0) * (1.0 + d - c) {
            continue;
        }
        let got = wmp_constant(&WmpParams { sigma_growth: s, delta: d, chi: c, mu, d0, a_bound: a })
            .map_err(|e| format!("draw {n}: {e}"))?;
        let (branch, value) = wmp_hand(s, d, c, mu, d0, a);
        ensure(got.branch == branch && got.value == value, || {
            format!("draw {n} (s {s}, d {d}, c {c}, mu {mu}): {:?} {} vs {branch:?} {value}", got.branch, got.value)
        })?;
        *counts.entry(format!("{branch:?}")).or_insert(0) += 1;
        n += 1;
    }
    ensure(counts.len() == 5, || format!("branches hit: {counts:?}"))?;

    // Delta_p (r^{p'}/p') = m on R^m
    let radii: Vec<f64> = (0..200).map(|i| 0.1 + 9.9 * i as f64 / 199.0).collect();
    let rep = sharpness_example(3.0, 3, &radii).map_err(|e| e.to_string())?;
    ensure(rep.residual_max < 1e-8, || format!("residual {:e}", rep.residual_max))?;
    let far = sharpness_example(3.0, 3, &[1.0, 10.0, 100.0, 1e3]).map_err(|e| e.to_string())?;
    let pc = 1.5;
    ensure((far.u_hat - 1.0 / pc).abs() <= 1e-4, || format!("u/r^p' = {}", far.u_hat))?;
    Ok(format!("100 draws exact ({} branches), residual {:.1e}, u/r^p' {:.6}", counts.len(), rep.residual_max, far.u_hat))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        for f in fs::read_dir(&p).unwrap() {
            let f = f.unwrap().path();
            let key = f.strip_prefix(dir).unwrap().display().to_string();
            out.insert(key, fs::read(&f).unwrap());
        }
    }
    out
}

fn c10_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_koforge");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let st = Command::new(bin).args(["demo", "all", "--out"]).arg(dir.path()).output().map_err(|e| e.to_string())?;
        ensure(st.status.success(), || format!("demo all exited {:?}", st.status.code()))?;
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    ensure(fa.len() >= 10, || format!("only {} files", fa.len()))?;
    ensure(fa.keys().eq(fb.keys()), || "different file sets".into())?;
    for (k, v) in &fa {
        ensure(&fb[k] == v, || format!("{k} differs"))?;
    }
    let bytes: usize = fa.values().map(|v| v.len()).sum();
    Ok(format!("{} files, {bytes} bytes identical", fa.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("KO threshold", c1_ko_threshold),
        ("log refinement", c2_log_refinement),
        ("closed-form supersolution", c3_closed_form),
        ("blow-up dichotomy", c4_blowup),
        ("counterexample certificate", c5_counterexample),
        ("comparison geometry", c6_comparison),
        ("integral curvature bounds", c7_petersen),
        ("equivalence lemmas", c8_equivalence),
        ("weak maximum principle", c9_maxprin),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} pass  {name}: {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
