//! Built-in scenarios, one per acceptance check, each with a verifier that
//! reads the run outcome and reports pass/fail lines.

use serde_json::Value;

use crate::scenario::{
    ConditionsTask, CounterexampleTask, FnSpec, GeometryTask, GridSpec, KoTask, MaxprinTask, ModeName, ModelBlock,
    NumericBlock, PetersenSpec, ProfileBlock, RegimeName, Scenario, SharpnessSpec, SupersolutionTask, Task,
    VariantName,
};
use crate::tasks::Status;
use crate::RunOutcome;

pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { label: label.into(), pass, detail: detail.into() }
    }
}

pub struct Demo {
    pub name: &'static str,
    pub about: &'static str,
    pub build: fn() -> Scenario,
    pub verify: fn(&RunOutcome) -> Vec<Check>,
}

pub const DEMOS: &[Demo] = &[
    Demo { name: "ko-threshold", about: "KO verdicts for f = t^q, phi = t", build: ko_threshold, verify: verify_ko_threshold },
    Demo { name: "log-refinement", about: "KO verdicts for f = t log^b(1+t)", build: log_refinement, verify: verify_log_refinement },
    Demo { name: "closed-form", about: "closed-form blow-up barriers", build: closed_form, verify: verify_closed_form },
    Demo { name: "blowup", about: "blow-up dichotomy over a 20-profile battery", build: blowup, verify: verify_blowup },
    Demo { name: "counterexample", about: "glued entire subsolution for p = 2, f = t", build: counterexample, verify: verify_counterexample },
    Demo { name: "comparison", about: "comparison ODE and volume ratio monotonicity", build: comparison, verify: verify_comparison },
    Demo { name: "petersen", about: "integral curvature volume bounds", build: petersen, verify: verify_petersen },
    Demo { name: "equivalence", about: "sigma scaling and rho twisting of KO", build: equivalence, verify: verify_equivalence },
    Demo { name: "maxprin", about: "maximum principle constants and sharpness", build: maxprin, verify: verify_maxprin },
    Demo { name: "cor-a1", about: "parameter regime check", build: cor_a1, verify: verify_cor_a1 },
];

pub fn find(name: &str) -> Option<&'static Demo> {
    DEMOS.iter().find(|d| d.name == name)
}

fn scenario(name: &str, profile: Option<ProfileBlock>, tasks: Vec<Task>) -> Scenario {
    Scenario { name: name.into(), profile, model: None, tasks, numeric: NumericBlock::default(), output: None }
}

fn lin_profile(f: FnSpec) -> ProfileBlock {
    ProfileBlock::new(FnSpec::power(1.0, 1.0), FnSpec::constant(1.0), f)
}

fn ko_task(profile: ProfileBlock, variants: Vec<VariantName>, sigma: Vec<f64>, force: Option<bool>) -> Task {
    Task::Ko(KoTask { variants, sigma, force_numeric: force, profile: Some(profile) })
}

fn get<'a>(v: &'a Value, path: &str) -> &'a Value {
    v.pointer(path).unwrap_or(&Value::Null)
}

fn num(v: &Value, path: &str) -> f64 {
    get(v, path).as_f64().unwrap_or(f64::NAN)
}

fn status_ok(out: &RunOutcome) -> Check {
    let bad: Vec<String> = out
        .outputs
        .iter()
        .filter(|o| o.status != Status::Ok)
        .map(|o| format!("{}_{}: {}", o.name, o.index, get(&o.data, "/error")))
        .collect();
    Check::new("all tasks ok", bad.is_empty(), bad.join("; "))
}

fn verdict(out: &RunOutcome, task: usize, k: usize) -> String {
    get(&out.task(task).data, &format!("/results/{k}/result/verdict")).as_str().unwrap_or("?").to_string()
}

const KO_Q: [f64; 4] = [0.5, 1.0, 1.5, 3.0];

fn ko_threshold() -> Scenario {
    let tasks = KO_Q
        .iter()
        .map(|&q| ko_task(lin_profile(FnSpec::power(1.0, q)), vec![VariantName::Ko], vec![1.0], None))
        .collect();
    scenario("ko-threshold", None, tasks)
}

fn verify_ko_threshold(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    for (i, &q) in KO_Q.iter().enumerate() {
        let want = if q > 1.0 { "convergent" } else { "divergent" };
        let got = verdict(out, i, 0);
        let method = get(&out.task(i).data, "/results/0/result/method").as_str().unwrap_or("?").to_string();
        checks.push(Check::new(format!("q = {q}"), got == want && method == "exact_exponent", format!("{got} ({method})")));
    }
    checks
}

const LOG_BETA: [f64; 3] = [3.0, 1.0, 2.0];

fn log_refinement() -> Scenario {
    let mut tasks: Vec<Task> = LOG_BETA
        .iter()
        .map(|&b| {
            let f = FnSpec::PowerLog { c: 1.0, a: 1.0, beta: b };
            ko_task(lin_profile(f), vec![VariantName::Ko], vec![1.0], None)
        })
        .collect();
    for &b in &LOG_BETA {
        let f = FnSpec::PowerLog { c: 1.0, a: 1.0, beta: b };
        tasks.push(ko_task(lin_profile(f), vec![VariantName::Ko], vec![1.0], Some(true)));
    }
    scenario("log-refinement", None, tasks)
}

fn verify_log_refinement(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    checks.push(Check::new("beta = 3 exact", verdict(out, 0, 0) == "convergent", verdict(out, 0, 0)));
    checks.push(Check::new("beta = 1 exact", verdict(out, 1, 0) == "divergent", verdict(out, 1, 0)));
    for (i, b) in LOG_BETA.iter().enumerate() {
        let got = verdict(out, 3 + i, 0);
        // numeric mode may leave near-critical tails undecided, but a firm
        // answer must be right; beta = 2 diverges like log log t
        let ok = match i {
            0 => got != "divergent",
            _ => got != "convergent",
        };
        checks.push(Check::new(format!("beta = {b} numeric"), ok, got));
    }
    checks
}

fn closed_form_task(c: f64, sigma: Option<f64>) -> Task {
    Task::Supersolution(SupersolutionTask {
        mode: ModeName::Ko,
        kernel: crate::scenario::KernelName::K,
        rho: false,
        epsilon: 1.0,
        eta: 2.0,
        t0: 0.0,
        t1: 0.5,
        a_geom: 0.0,
        beta: None,
        sigma,
        profile: Some(lin_profile(FnSpec::power(c, 2.0))),
    })
}

fn closed_form() -> Scenario {
    // the third task searches sigma instead, so the report carries a probe trace
    let tasks = vec![closed_form_task(3.0, Some(1.0)), closed_form_task(1.0, Some(1.0)), closed_form_task(3.0, None)];
    scenario("closed-form", None, tasks)
}

fn verify_closed_form(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    // alpha = k / (Tbar - t)^2 with k = 6/c, Tbar = sqrt(k)
    for (i, c) in [3.0f64, 1.0].iter().enumerate() {
        let k = 6.0 / c;
        let tb = k.sqrt();
        let o = out.task(i);
        let Some(csv) = &o.csv else {
            checks.push(Check::new(format!("f = {c} t^2 profile"), false, "no profile"));
            continue;
        };
        let worst = csv
            .rows
            .iter()
            .map(|r| {
                let exact = k / (tb - r[0]).powi(2);
                ((r[1] - exact) / exact).abs()
            })
            .fold(0.0, f64::max);
        let n = csv.rows.len() + num(&o.data, "/summary/truncated") as usize;
        checks.push(Check::new(
            format!("f = {c} t^2 matches {k}/({tb:.6} - t)^2"),
            worst <= 1e-6 && n == 4096,
            format!("max rel err {worst:.3e} on {n} grid points"),
        ));
        let m = num(&o.data, "/summary/residual_margin");
        checks.push(Check::new(format!("f = {c} t^2 residual margin"), m >= -1e-8, format!("{m:.3e}")));
    }
    let probes = get(&out.task(2).data, "/probes").as_array().map(|a| a.as_slice()).unwrap_or(&[]);
    let passing = probes.iter().filter(|p| p["passed"] == Value::Bool(true)).count();
    let s = num(&out.task(2).data, "/summary/sigma");
    checks.push(Check::new(
        "sigma search probe trace",
        passing > 0 && s > 0.0 && s < 1.0,
        format!("{} probes, {passing} passing, sigma {s:.6}", probes.len()),
    ));
    checks
}

/// `(c, q)` pairs with blow-up rate fast enough to pass `1e8` at `1e-6`.
const KO_BATTERY: [(f64, f64); 10] =
    [(1.0, 1.3), (1.0, 1.5), (1.0, 1.7), (1.0, 1.9), (1.0, 2.1), (1.0, 2.3), (0.5, 1.5), (2.0, 1.5), (0.5, 2.0), (3.0, 2.2)];
const NEGKO_BATTERY: [(f64, f64); 10] =
    [(1.0, 0.0), (1.0, 0.25), (1.0, 0.5), (1.0, 0.75), (1.0, 0.9), (2.0, 0.0), (2.0, 0.5), (0.5, 0.25), (0.5, 0.75), (3.0, 0.6)];

fn blowup() -> Scenario {
    let task = |mode, c, q| {
        Task::Supersolution(SupersolutionTask {
            mode,
            kernel: crate::scenario::KernelName::K,
            rho: false,
            epsilon: 1.0,
            eta: 2.0,
            t0: 0.0,
            t1: 0.5,
            a_geom: 0.0,
            beta: None,
            sigma: Some(1.0),
            profile: Some(lin_profile(FnSpec::power(c, q))),
        })
    };
    let mut tasks: Vec<Task> = KO_BATTERY.iter().map(|&(c, q)| task(ModeName::Ko, c, q)).collect();
    tasks.extend(NEGKO_BATTERY.iter().map(|&(c, q)| task(ModeName::NegKo, c, q)));
    let mut sc = scenario("blowup", None, tasks);
    sc.numeric.grid_points = 1024;
    sc
}

fn verify_blowup(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    let (mut ko_bad, mut neg_bad) = (Vec::new(), Vec::new());
    for o in &out.outputs[..KO_BATTERY.len()] {
        let ts = num(&o.data, "/summary/t_sigma");
        let near = num(&o.data, "/alpha_near_blowup");
        if !(ts.is_finite() && near > 1e8) {
            ko_bad.push(format!("task {}: T = {ts}, alpha = {near:e}", o.index));
        }
    }
    for o in &out.outputs[KO_BATTERY.len()..] {
        let ok = get(&o.data, "/summary/t_sigma").is_null()
            && get(&o.data, "/summary/blow_up") == &Value::Bool(false)
            && get(&o.data, "/alpha_finite") == &Value::Bool(true)
            && num(&o.data, "/t_end") >= 1e6
            && num(&o.data, "/alpha_at_t_max").is_finite()
            && !get(&o.data, "/first_t_alpha_above_1e6").is_null();
        if !ok {
            neg_bad.push(format!("task {}", o.index));
        }
    }
    checks.push(Check::new("KO builds blow up past 1e8", ko_bad.is_empty(), ko_bad.join("; ")));
    checks.push(Check::new("negKO builds stay finite on [t0, 1e6] and pass 1e6", neg_bad.is_empty(), neg_bad.join("; ")));
    checks
}

fn counterexample() -> Scenario {
    let t = Task::Counterexample(CounterexampleTask {
        p: 2.0,
        m: 2,
        r_max: None,
        n_inner: 200,
        n_outer: 2000,
        doublings: 3,
        probe_lambda: vec![1.2],
        profile: None,
    });
    scenario("counterexample", Some(lin_profile(FnSpec::power(1.0, 1.0))), vec![t])
}

fn verify_counterexample(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    let d = &out.task(0).data;
    let tb = num(d, "/extra_probes/0/probe/t_bar");
    let b0 = num(d, "/extra_probes/0/probe/beta0");
    let lam = num(d, "/extra_probes/0/probe/Lambda");
    // w = e^r here: t_bar = ln 1.2, beta0 = 1.2 - 0.6 ln 1.2, Lambda = 1.2 / ln 1.2
    let l = 1.2f64.ln();
    let ok = (tb - l).abs() <= 1e-5 && (b0 - (1.2 - 0.6 * l)).abs() <= 1e-5 && (lam - 1.2 / l).abs() <= 1e-5;
    checks.push(Check::new("lambda = 1.2 glue values", ok, format!("t_bar {tb:.7}, beta0 {b0:.7}, Lambda {lam:.6}")));
    let (vg, sg) = (num(d, "/value_gap"), num(d, "/slope_gap"));
    checks.push(Check::new("C1 match at t_bar", vg <= 1e-8 && sg <= 1e-8, format!("{vg:.2e}, {sg:.2e}")));
    let mr = num(d, "/check/min_relative");
    checks.push(Check::new("subsolution residual", mr >= -1e-6, format!("{mr:.3e}")));
    let ii = num(d, "/check/inner_identity");
    checks.push(Check::new("inner cap identity", ii <= 1e-10, format!("{ii:.2e}")));
    let g: Vec<f64> = get(d, "/growth").as_array().map_or(vec![], |a| a.iter().map(|x| num(x, "/max_u")).collect());
    let grows = g.len() == 4 && g.windows(2).all(|w| w[1] > 2.0 * w[0]);
    checks.push(Check::new("max u grows over 3 doublings", grows, format!("{g:?}")));
    checks
}

fn sinh_warp() -> FnSpec {
    FnSpec::Sinh { c: 1.0, k: 1.0 }
}

fn geometry_task(model: ModelBlock, hi: f64) -> Task {
    Task::Geometry(GeometryTask {
        radii: GridSpec::new(0.05, hi, 100),
        riccati: true,
        bochner: Some(FnSpec::power(0.5, 2.0)),
        petersen: None,
        model: Some(model),
    })
}

fn comparison() -> Scenario {
    let flat = ModelBlock { m: 3, n: 3.5, warp: FnSpec::power(1.0, 1.0), log_weight: FnSpec::constant(0.0), g: FnSpec::constant(0.0) };
    let hyp = ModelBlock { m: 3, n: 3.5, warp: sinh_warp(), log_weight: FnSpec::constant(0.0), g: FnSpec::constant(1.0) };
    // Ric_{n,m} = 0.2 - 0.02 r^2 on flat R^2 with weight e^{-0.1 r^2}, n = 4
    let weighted =
        ModelBlock { m: 2, n: 4.0, warp: FnSpec::power(1.0, 1.0), log_weight: FnSpec::power(-0.1, 2.0), g: FnSpec::constant(0.15) };
    let bad = ModelBlock { m: 3, n: 3.5, warp: FnSpec::power(1.0, 1.0), log_weight: FnSpec::power(1.0, 3.0), g: FnSpec::constant(0.0) };
    let tasks = vec![geometry_task(hyp, 5.0), geometry_task(flat, 5.0), geometry_task(weighted, 5.0), geometry_task(bad, 5.0)];
    scenario("comparison", None, tasks)
}

fn verify_comparison(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    let e = num(&out.task(0).data, "/h_closed_form_error");
    checks.push(Check::new("h = sinh r on [0, 5]", e <= 1e-8, format!("{e:.2e}")));
    for i in 0..3 {
        let d = &out.task(i).data;
        let lb = get(d, "/ricci_lower_bound_holds") == &Value::Bool(true);
        let mono = get(d, "/ratio_check/monotone") == &Value::Bool(true);
        checks.push(Check::new(format!("battery model {i}: ratios non-increasing"), lb && mono, format!("bound {lb}, monotone {mono}")));
    }
    let d = &out.task(3).data;
    let r = num(d, "/ratio_check/first_violation/r");
    let lb = get(d, "/ricci_lower_bound_holds") == &Value::Bool(true);
    checks.push(Check::new("violating model reports a radius", !lb && r.is_finite(), format!("r = {r}")));
    checks
}

fn petersen() -> Scenario {
    let pert = ModelBlock { m: 2, n: 3.0, warp: FnSpec::power(1.0, 1.0), log_weight: FnSpec::power(0.05, 2.0), g: FnSpec::constant(0.0) };
    let hyp = ModelBlock {
        m: 3,
        n: 3.5,
        warp: sinh_warp(),
        log_weight: FnSpec::InvOnePlusPow { c: 0.2, a: 2.0 },
        g: FnSpec::constant(1.0),
    };
    let t1 = Task::Geometry(GeometryTask {
        radii: GridSpec::new(0.05, 6.0, 100),
        riccati: false,
        bochner: None,
        petersen: Some(PetersenSpec { p: 2.0, r0: 1.0, r_big: 6.0, growth: None }),
        model: Some(pert),
    });
    let t2 = Task::Geometry(GeometryTask {
        radii: GridSpec::new(0.05, 20.0, 200),
        riccati: false,
        bochner: None,
        petersen: Some(PetersenSpec { p: 2.0, r0: 1.0, r_big: 20.0, growth: Some(GridSpec::new(1.0, 20.0, 96)) }),
        model: Some(hyp),
    });
    scenario("petersen", None, vec![t1, t2])
}

fn verify_petersen(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    let d = &out.task(0).data;
    let c = num(d, "/petersen/constant");
    checks.push(Check::new("C(3, 2) = 36", c == 36.0, format!("{c}")));
    let (l, r) = (num(d, "/petersen/report/lemma26_lhs"), num(d, "/petersen/report/lemma26_rhs"));
    let psi = num(d, "/petersen/report/psi_excess");
    checks.push(Check::new(
        "cutoff integral bounded by curvature deficit",
        l <= r * (1.0 + 1e-8) && psi > 0.0,
        format!("{l:.6e} <= {r:.6e}"),
    ));
    let d = &out.task(1).data;
    let b = get(d, "/petersen/growth/bounded") == &Value::Bool(true);
    checks.push(Check::new(
        "vol B_R / e^{(n-1) B R} bounded on [1, 20]",
        b,
        format!("max {:.4e}, tail slope {:.2e}", num(d, "/petersen/growth/quotient_max"), num(d, "/petersen/growth/log_slope_tail")),
    ));
    checks
}

/// Thirty power-log profiles away from the critical exponent.
pub fn equivalence_battery() -> Vec<ProfileBlock> {
    let ps = [1.5, 2.0, 2.5, 3.0, 1.75, 2.25];
    let offs = [-0.5, -0.3, 0.3, 0.8, 1.2];
    let mut out = Vec::new();
    for (i, &p) in ps.iter().enumerate() {
        for (j, &off) in offs.iter().enumerate() {
            let q = [0.0, 0.25, 0.5][(i + j) % 3];
            let b = [-1.0, 0.0, 1.0][(2 * i + j) % 3];
            let mut prof = ProfileBlock::new(
                FnSpec::power(1.0, p - 1.0),
                FnSpec::power(1.0, q),
                FnSpec::PowerLog { c: 1.0, a: p - 1.0 + q + off, beta: b },
            );
            prof.rho = Some(FnSpec::InvOnePlusPow { c: 1.0, a: 2.0 });
            prof.omega = ((i + j) % 3) as f64;
            out.push(prof);
        }
    }
    out
}

fn equivalence() -> Scenario {
    let mut tasks = Vec::new();
    for prof in equivalence_battery() {
        tasks.push(ko_task(prof.clone(), vec![VariantName::Ko], vec![1.0, 0.25, 4.0], Some(true)));
        tasks.push(ko_task(prof, vec![VariantName::Ko, VariantName::RhoKo], vec![1.0], None));
    }
    scenario("equivalence", None, tasks)
}

fn verify_equivalence(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    let (mut sigma_bad, mut rho_bad, mut decided) = (Vec::new(), Vec::new(), 0);
    for k in 0..out.outputs.len() / 2 {
        let s: Vec<String> = (0..3).map(|j| verdict(out, 2 * k, j)).collect();
        let firm: Vec<&String> = s.iter().filter(|v| *v != "inconclusive").collect();
        decided += firm.len();
        if firm.windows(2).any(|w| w[0] != w[1]) {
            sigma_bad.push(format!("profile {k}: {s:?}"));
        }
        let (a, b) = (verdict(out, 2 * k + 1, 0), verdict(out, 2 * k + 1, 1));
        if a != "inconclusive" && b != "inconclusive" && a != b {
            rho_bad.push(format!("profile {k}: {a} vs {b}"));
        }
    }
    checks.push(Check::new("sigma in {0.25, 4} keeps the verdict", sigma_bad.is_empty(), format!("{decided} decided; {}", sigma_bad.join("; "))));
    checks.push(Check::new("rhoKO agrees with KO", rho_bad.is_empty(), rho_bad.join("; ")));
    checks
}

fn maxprin() -> Scenario {
    let mut prof = lin_profile(FnSpec::power(1.0, 1.0));
    prof.delta = Some(2.0);
    prof.chi = Some(0.0);
    prof.mu = 0.0;
    prof.a_bound = Some(1.0);
    let t = Task::Maxprin(MaxprinTask {
        sigma: Some(1.5),
        d0: None,
        f_liminf_positive: true,
        u_star_finite: false,
        volume_radii: Some(GridSpec::new(1.5, 1e4, 200)),
        sharpness: Some(SharpnessSpec { p: 3.0, m: 3, radii: GridSpec::new(0.1, 10.0, 200), u_hat_at: Some(1e3) }),
        draws: 100,
    });
    let mut sc = scenario("maxprin", Some(prof), vec![t]);
    sc.model = Some(ModelBlock { m: 3, n: 3.5, warp: FnSpec::power(1.0, 1.0), log_weight: FnSpec::constant(0.0), g: FnSpec::constant(0.0) });
    sc.numeric.seed = 7;
    sc
}

fn verify_maxprin(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    let d = &out.task(0).data;
    let n = num(d, "/draws/count");
    let bad = get(d, "/draws/mismatches").as_array().map_or(usize::MAX, |a| a.len());
    checks.push(Check::new("100 draws match the branch formulas", n == 100.0 && bad == 0, format!("{bad} mismatches")));
    let r = num(d, "/sharpness/residual_max");
    checks.push(Check::new("Delta_p u = m on [0.1, 10]", r < 1e-8, format!("{r:.2e}")));
    let u = num(d, "/sharpness/u_hat");
    let pc = num(d, "/sharpness/p_conj");
    checks.push(Check::new("u / r^{p'} = 1/p' at r = 1e3", (u - 1.0 / pc).abs() <= 1e-4, format!("{u}")));
    checks
}

fn cor_a1() -> Scenario {
    let mut prof = lin_profile(FnSpec::power(1.0, 2.0));
    prof.beta = 2.0;
    let t = Task::Conditions(ConditionsTask { checks: vec![], regimes: vec![RegimeName::CorA1], profile: None });
    scenario("cor-a1", Some(prof), vec![t])
}

fn verify_cor_a1(out: &RunOutcome) -> Vec<Check> {
    let mut checks = vec![status_ok(out)];
    let d = &out.task(0).data;
    let all = get(d, "/regimes/cor_a1")
        .as_object()
        .is_some_and(|m| !m.is_empty() && m.values().all(|e| get(e, "/holds") == "yes"));
    checks.push(Check::new("p = 2, q = 0, mu = 0, beta = 2 holds", all, get(d, "/failures").to_string()));
    checks
}
