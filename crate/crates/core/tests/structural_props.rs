use koforge_core::function::{Endpoint, FunctionSpec, Sampled};
use koforge_core::structural::{
    check_parameter_regimes, check_phi_ell, check_theta, estimate_c_increasing, Holds, RegimeKind,
    StructuralProfile,
};
use koforge_core::transforms::{classify_improper, numeric_verdict, Verdict};
use koforge_core::{LogGrid, RealFn};
use proptest::prelude::*;

/// Built-in families whose integrability at infinity is decided away from
/// the critical exponent, paired with the expected verdict.
fn integrable_family() -> impl Strategy<Value = FunctionSpec> {
    prop_oneof![
        (0.1f64..5.0, prop_oneof![-3.0f64..-1.3, -0.7f64..2.0]).prop_map(|(c, a)| FunctionSpec::power(c, a)),
        (0.1f64..5.0, prop_oneof![-3.0f64..-1.3, -0.7f64..1.0], -2.0f64..2.0)
            .prop_map(|(c, a, b)| FunctionSpec::power_log(c, a, b)),
        (0.1f64..5.0, prop_oneof![-2.0f64..-0.2, 0.2f64..2.0]).prop_map(|(c, k)| FunctionSpec::exponential(c, k)),
        (0.1f64..5.0, prop_oneof![0.1f64..0.7, 1.3f64..4.0]).prop_map(|(c, a)| FunctionSpec::inv_one_plus_pow(c, a)),
        (0.1f64..5.0, 0.2f64..3.0).prop_map(|(c, a)| FunctionSpec::log_one_plus_pow(c, a)),
        (0.1f64..5.0).prop_map(FunctionSpec::constant),
        Just(FunctionSpec::mean_curvature()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_and_sampled_integrability_agree(f in integrable_family()) {
        let exact = classify_improper(&f, Endpoint::Infinity).unwrap();
        prop_assert!(exact.is_exact());
        let g = Sampled(|t| f.eval(t));
        let num = numeric_verdict(&g, Endpoint::Infinity).unwrap();
        prop_assert_eq!(exact.verdict, num.verdict, "{:?}", f);
    }

    #[test]
    fn exact_and_sampled_c_increasing_agree(
        e in prop_oneof![0.0f64..3.0, -3.0f64..-0.6],
        c in 0.1f64..10.0,
    ) {
        // exact: c t^e is C-increasing on (0, inf) iff e >= 0. The sampled
        // estimate on a 12-decade grid sees 10^(12|e|), beyond the cap for
        // e < -0.5.
        let g = FunctionSpec::power(c, e);
        let est = estimate_c_increasing(&g, &LogGrid::default()).unwrap();
        prop_assert_eq!(est.holds, e >= 0.0);
    }
}

fn monomial_profile() -> impl Strategy<Value = StructuralProfile> {
    (0.05f64..3.0, -1.0f64..2.0, 0.0f64..1.0).prop_map(|(a, q, theta)| {
        let mut p = StructuralProfile::new(
            FunctionSpec::power(1.0, a),
            FunctionSpec::power(1.0, q),
            FunctionSpec::power(1.0, 1.0),
        );
        p.theta = theta;
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn theta_below_one_implies_phi_ell(p in monomial_profile()) {
        let th = check_theta(&p).unwrap();
        if th.holds("theta_1") == Holds::Yes && th.holds("theta_2") == Holds::Yes && p.theta < 1.0 {
            prop_assert_eq!(check_phi_ell(&p).unwrap().holds("phi_ell"), Holds::Yes);
        }
    }

    #[test]
    fn nondecreasing_builtins_have_unit_constant(
        f in prop_oneof![
            (0.1f64..5.0, 0.0f64..3.0).prop_map(|(c, a)| FunctionSpec::power(c, a)),
            (0.1f64..5.0, 0.0f64..2.0, 0.0f64..2.0).prop_map(|(c, a, b)| FunctionSpec::power_log(c, a, b)),
            (0.1f64..5.0, 0.2f64..3.0).prop_map(|(c, a)| FunctionSpec::log_one_plus_pow(c, a)),
            (0.1f64..5.0, 0.0f64..1e-4).prop_map(|(c, k)| FunctionSpec::exponential(c, k)),
            (0.1f64..5.0, 0.01f64..0.5).prop_map(|(c, k)| FunctionSpec::sinh(c, k)),
            Just(FunctionSpec::mean_curvature()),
        ]
    ) {
        let grid = LogGrid::new(1e-4, 1e3, 1024).unwrap();
        let est = estimate_c_increasing(&f, &grid).unwrap();
        prop_assert!(est.c_est <= 1.0 + 1e-9, "{:?} {}", f, est.c_est);
    }

    #[test]
    fn regime_checks_are_pure(
        theta in -1.0f64..2.0, beta in -2.0f64..4.0, mu in -1.0f64..2.0, lambda in 0.1f64..3.0,
    ) {
        let mut p = StructuralProfile::new(
            FunctionSpec::power(1.0, 1.0),
            FunctionSpec::constant(1.0),
            FunctionSpec::power(1.0, 2.0),
        );
        p.theta = theta;
        p.beta = beta;
        p.mu = mu;
        p.lambda_b = lambda;
        for kind in [RegimeKind::Thetabetamu, RegimeKind::ThetabetamuPrime, RegimeKind::Eq38, RegimeKind::Eq66] {
            let a = check_parameter_regimes(&p, kind);
            let b = check_parameter_regimes(&p, kind);
            prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }
    }
}

#[test]
fn sampled_wrapper_has_no_asymptotics() {
    let g = Sampled(|t: f64| t);
    assert!(g.asym(Endpoint::Infinity).is_none());
    let v = numeric_verdict(&g, Endpoint::Infinity).unwrap();
    assert_eq!(v.verdict, Verdict::Divergent);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // 1/(t log^g(1+t)) at infinity and 1/(t log^g(1+1/t)) at zero: a power
    // fit alone sees slope -1 - g/ln t and cannot tell these from t^-(1+e).
    #[test]
    fn log_critical_tails_never_get_the_wrong_verdict(g in prop_oneof![0.0f64..0.6, 1.4f64..3.0], zero in any::<bool>()) {
        let v = if zero {
            numeric_verdict(&Sampled(move |t: f64| 1.0 / (t * (1.0 / t).ln_1p().powf(g))), Endpoint::Zero)
        } else {
            numeric_verdict(&Sampled(move |t: f64| 1.0 / (t * t.ln_1p().powf(g))), Endpoint::Infinity)
        }
        .unwrap();
        let wrong = if g > 1.0 { Verdict::Divergent } else { Verdict::Convergent };
        prop_assert_ne!(v.verdict, wrong);
        if g >= 2.0 {
            prop_assert_eq!(v.verdict, Verdict::Convergent);
        }
    }
}

#[test]
fn near_critical_tails_are_inconclusive() {
    for g in [0.9, 1.0, 1.2] {
        let v = numeric_verdict(&Sampled(move |t: f64| 1.0 / (t * t.ln_1p().powf(g))), Endpoint::Infinity).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive, "gamma {g}");
    }
    let v = numeric_verdict(&Sampled(|t: f64| 1.0 / (t.powf(1.05))), Endpoint::Infinity).unwrap();
    assert_eq!(v.verdict, Verdict::Inconclusive);
}
