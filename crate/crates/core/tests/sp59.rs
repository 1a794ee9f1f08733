use proptest::prelude::*;
use spherebound::numerics::{integrate_ln, ln_gamma, QuadratureSpec};
use spherebound::sp59::*;
use spherebound::Error;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// ln f_N(x) straight from its defining integral over z ∈ (0, ∞).
fn ln_f_quadrature(n: u64, x: f64) -> f64 {
    let nf = n as f64;
    let zs = 0.5 * (x + (x * x + 4.0 * (nf - 1.0)).sqrt());
    let spec = QuadratureSpec { rel_tol: 1e-14, ..QuadratureSpec::default() };
    let f = |z: f64| (nf - 1.0) * z.ln() - 0.5 * z * z + z * x;
    let i = integrate_ln(f, 0.0, zs + 40.0, &spec).unwrap();
    i - 0.5 * (nf - 1.0) * LN_2 - ln_gamma(0.5 * (nf + 1.0)).unwrap()
}

#[test]
fn solid_angle_examples() {
    for theta in [0.1, 0.7, 1.5] {
        let r = ln_solid_angle_ratio(2, theta).unwrap();
        assert!((r.exact - (theta / PI).ln()).abs() < 1e-14);
    }
    let r = ln_solid_angle_ratio(3, PI / 3.0).unwrap();
    assert!((r.exact - 0.25f64.ln()).abs() < 1e-12);
    let r = ln_solid_angle_ratio(100, 0.5).unwrap();
    assert!(r.lower <= r.exact && r.exact <= r.upper);
    let t = 0.5f64.tan();
    assert!(r.upper - r.lower <= -(1.0 - t * t / 100.0).ln() + 1e-12);
}

#[test]
fn solid_angle_rejects_right_angle() {
    assert!(matches!(ln_solid_angle_ratio(10, FRAC_PI_2), Err(Error::Domain(_))));
    assert!(matches!(ln_solid_angle_ratio(10, 2.0), Err(Error::Domain(_))));
    assert!(ln_solid_angle_ratio(1, 0.3).is_err());
}

#[test]
fn solid_angle_gap_vanishes_with_n() {
    let mut prev = f64::INFINITY;
    for n in [10u64, 100, 1000, 10_000, 100_000] {
        let r = ln_solid_angle_ratio(n, 0.9).unwrap();
        assert!(r.lower <= r.exact && r.exact <= r.upper);
        let gap = r.upper - r.lower;
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-4);
}

#[test]
fn cone_angle_examples() {
    for r in [0.5, 1.0, 2.0] {
        let c = solve_cone_angle(2, r, ConeMode::ExactTheta1).unwrap();
        assert!((c.theta - PI * (-2.0 * r).exp()).abs() < 1e-12);
        assert!((c.ln_solid_angle_ratio + 2.0 * r).abs() < 1e-10);
    }
    // e^{−NR} ≥ 1/2 has no cone below π/2
    assert!(matches!(solve_cone_angle(10, 0.05, ConeMode::ExactTheta1), Err(Error::RateTooLow(_))));
    assert!(matches!(solve_cone_angle(10, 0.05, ConeMode::ShannonThetaStar), Err(Error::RateTooLow(_))));
}

#[test]
fn theta_star_never_below_theta_one() {
    for (n, rb) in [(40u64, 0.5), (500, 0.8), (2000, 0.25), (10_000, 0.9)] {
        let r = rb * LN_2;
        let t1 = solve_cone_angle(n, r, ConeMode::ExactTheta1).unwrap();
        let ts = solve_cone_angle(n, r, ConeMode::ShannonThetaStar).unwrap();
        assert_eq!(ts.mode, ConeMode::ShannonThetaStar);
        assert!(ts.ln_solid_angle_ratio >= -(n as f64) * r - 1e-9);
        assert!(ts.theta >= t1.theta - 1e-12);
    }
}

#[test]
fn ln_f_n_examples() {
    let a = ln_f_n(1, 0.0).unwrap();
    assert!((a - ((2.0 * PI).sqrt() / 2.0).ln()).abs() < 1e-14);
    assert!((a - 0.225791).abs() < 1e-6);
    let b = ln_f_n(2, 0.0).unwrap();
    assert!((b - (2.0 / PI).sqrt().ln()).abs() < 1e-14);
    assert!((b + 0.225791).abs() < 1e-6);
    // extended-precision quadrature (40 digits) of the defining integral
    let x = 750f64.sqrt() * 0.5;
    let v = ln_f_n(750, x).unwrap();
    assert!((v - 422.296_838_167_989).abs() < 1e-9, "{v}");
    assert!((v - ln_f_quadrature(750, x)).abs() < 1e-9);
    for (x, want) in [(0.0, -0.755_037_900_366_998_8), (1.0, 1.628_517_683_361_892_2), (3.0, 8.266_749_602_079_554)] {
        assert!((ln_f_n(5, x).unwrap() - want).abs() < 1e-12, "x={x}");
    }
    let x = 100_000f64.sqrt() * 0.3;
    assert!((ln_f_n(100_000, x).unwrap() - 32_356.286_586_230_274).abs() < 1e-8 * 32_356.0);
}

#[test]
fn ln_f_n_rejects_negative_argument() {
    assert!(matches!(ln_f_n(10, -0.1), Err(Error::Domain(_))));
    assert!(ln_f_n(10, f64::NAN).is_err());
    assert!(ln_f_n(0, 1.0).is_err());
}

#[test]
fn recursion_examples() {
    let phi1 = 0.841_344_746_068_542_9;
    let want = 0.5 + 0.5f64.exp() * (2.0 * PI).sqrt() * phi1;
    assert!((f_n_recursive(3, 1.0).unwrap() - want).abs() < 1e-12);
    assert!((want - 3.977).abs() < 1e-3);
    for x in [-1.0, 0.0, 0.7, 2.0] {
        let phi = spherebound::numerics::ln_q(-x).exp();
        let want = (0.5 * x * x).exp() * (2.0 * PI).sqrt() * phi;
        assert!((f_n_recursive(1, x).unwrap() - want).abs() < 1e-12 * want);
    }
    for x in [0.0, 1.0, 3.0] {
        let r = f_n_recursive(5, x).unwrap();
        let q = ln_f_quadrature(5, x).exp();
        assert!((r - q).abs() < 1e-10 * q, "x={x}: {r} vs {q}");
    }
    assert!(matches!(f_n_recursive(201, 1.0), Err(Error::Domain(_))));
}

#[test]
fn log_domain_matches_recursion() {
    for n in 1..=200u64 {
        for x in [0.0, 0.5, 1.0, 2.0, 5.0, 0.3 * (n as f64).sqrt()] {
            let a = ln_f_n(n, x).unwrap().exp();
            let b = f_n_recursive(n, x).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs(), "n={n} x={x}: {a} vs {b}");
        }
    }
}

#[test]
fn max_star_within_ln_n_of_largest_term() {
    for (n, x) in [(10u64, 1.0), (300, 4.0), (5000, 30.0), (5000, 1e-3)] {
        let t = LnFn::new(n).unwrap();
        let f = t.eval(x).unwrap();
        let dmax = (0..n).map(|j| t.d(j, x).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        assert!(dmax <= f + 1e-12 && f <= dmax + (n as f64).ln() + 1e-12, "n={n} x={x}");
    }
}

#[test]
fn bound_decreases_in_snr() {
    let mut prev = 0.0;
    for i in 0..12 {
        let p = Sp59Params::from_ebn0_db(500, 0.8, 0.5 * i as f64).unwrap();
        let v = sp59_bound(&p, ConeMode::ExactTheta1).unwrap().ln_pe_lower;
        assert!(v < prev, "step {i}: {v} after {prev}");
        prev = v;
    }
}

#[test]
fn large_n_is_finite_and_close_to_approximation() {
    for n in [1_000u64, 10_000, 100_000] {
        let p = Sp59Params::from_ebn0_db(n, 0.5, 1.0).unwrap();
        let r = sp59_bound(&p, ConeMode::ExactTheta1).unwrap();
        assert!(r.ln_pe_lower.is_finite() && r.ln_pe_lower < 0.0);
        assert_eq!(r.method, Sp59Method::ExactLogDomain);
        let a = sp59_asymptotic(n, r.cone.theta, p.a, AsymptoticMode::Approx).unwrap();
        assert!((a - r.ln_pe_lower).abs() < 0.05 * r.ln_pe_lower.abs(), "N={n}: {a} vs {}", r.ln_pe_lower);
    }
    let p = Sp59Params::from_ebn0_db(2000, 0.8, 3.0).unwrap();
    let r = sp59_bound(&p, ConeMode::ExactTheta1).unwrap();
    let a = sp59_asymptotic(2000, r.cone.theta, p.a, AsymptoticMode::Approx).unwrap();
    assert!((a - r.ln_pe_lower).abs() < 0.05 * r.ln_pe_lower.abs());
}

#[test]
fn asymptotic_examples() {
    assert!((sp59_g(FRAC_PI_2, 3.0) - 1.0).abs() < 1e-15);
    let g = sp59_g(0.4, 2.0);
    assert!((g * g - 2.0 * 0.4f64.cos() * g - 1.0).abs() < 1e-14);
    // the approximation needs θ > arccot(A)
    assert!(matches!(sp59_asymptotic(100, 0.3, 2.0, AsymptoticMode::Approx), Err(Error::Domain(_))));
    assert!(sp59_asymptotic(100, 0.3, 2.0, AsymptoticMode::Lower).is_ok());
    let p = Sp59Params::from_ebn0_db(1000, 0.5, 2.0).unwrap();
    let c = solve_cone_angle(1000, 0.5 * LN_2, ConeMode::ExactTheta1).unwrap();
    let spec = QuadratureSpec::default();
    for m in [Sp59Method::AsymptoticLower, Sp59Method::ShannonApprox] {
        let r = sp59_evaluate(&p, ConeMode::ExactTheta1, m, &spec).unwrap();
        assert_eq!(r.method, m);
        assert_eq!(r.cone.theta, c.theta);
    }
}

#[test]
fn params_validation() {
    assert!(Sp59Params::new(1, 0.5, 1.0).is_err());
    assert!(Sp59Params::new(10, 0.0, 1.0).is_err());
    assert!(Sp59Params::new(10, 0.5, 0.0).is_err());
    let p = Sp59Params::from_ebn0_db(10, 0.5, 0.0).unwrap();
    assert!((p.a - 1.0).abs() < 1e-15);
    assert!((p.rate_nats_per_dim - 0.5 * LN_2).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn solid_angle_sandwich(n in 2u64..5000, theta in 0.01f64..1.55) {
        let r = ln_solid_angle_ratio(n, theta).unwrap();
        prop_assert!(r.lower <= r.exact + 1e-12 && r.exact <= r.upper + 1e-12, "{r:?}");
    }

    #[test]
    fn theta_star_meets_target(n in 2u64..3000, rb in 0.05f64..2.0) {
        let r = rb * LN_2;
        match solve_cone_angle(n, r, ConeMode::ShannonThetaStar) {
            Ok(c) => prop_assert!(c.ln_solid_angle_ratio >= -(n as f64) * r - 1e-9),
            Err(e) => prop_assert!(matches!(e, Error::RateTooLow(_))),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn asymptotic_lower_is_below_exact(n in 10u64..3000, theta in 0.2f64..1.4, a in 0.3f64..4.0) {
        let exact = ln_p_spb(n, theta, a, &QuadratureSpec::default()).unwrap();
        let lower = sp59_asymptotic(n, theta, a, AsymptoticMode::Lower).unwrap();
        prop_assert!(lower <= exact, "lower {lower} exact {exact}");
    }
}
