//! Property tests for the built-in models and their thresholds.

use affine_shapes::long_end::{find_c, DEFAULT_TOL};
use affine_shapes::model::*;
use affine_shapes::thresholds::compute_thresholds;
use proptest::prelude::*;

fn vasicek_params() -> impl Strategy<Value = VasicekParams> {
    (0.05f64..5.0, -0.05f64..0.15, 0.01f64..0.5)
        .prop_map(|(lambda, theta, sigma)| VasicekParams { lambda, theta, sigma })
}

fn cir_params() -> impl Strategy<Value = CirParams> {
    (0.05f64..5.0, 0.005f64..0.15, 0.01f64..0.5).prop_map(|(a, theta, sigma)| CirParams { a, theta, sigma })
}

fn gamma_params() -> impl Strategy<Value = GammaOuParams> {
    (0.05f64..5.0, 0.1f64..5.0, 0.05f64..2.0).prop_map(|(lambda, k, theta)| GammaOuParams { lambda, k, theta })
}

fn any_model() -> impl Strategy<Value = AffineModel> {
    prop_oneof![
        vasicek_params().prop_map(|p| make_vasicek(p).unwrap()),
        cir_params().prop_map(|p| make_cir(p).unwrap()),
        gamma_params().prop_map(|p| make_gamma_ou(p).unwrap()),
    ]
}

/// Sample points on [c, 0] used by the direct checks below.
fn sample(m: &AffineModel, n: usize) -> Vec<f64> {
    let c = find_c(m, DEFAULT_TOL).unwrap().c;
    (0..=n).map(|i| c * (1.0 - i as f64 / n as f64)).collect()
}

fn convex_on(g: impl Fn(f64) -> f64, us: &[f64]) -> Result<(), TestCaseError> {
    let scale = us.iter().map(|&u| g(u).abs()).fold(1e-300, f64::max);
    for w in us.windows(3) {
        let (u1, u2, u3) = (w[0], w[1], w[2]);
        let chord = ((u3 - u2) * g(u1) + (u2 - u1) * g(u3)) / (u3 - u1);
        prop_assert!(g(u2) <= chord + 1e-12 * scale, "not convex at {u2}");
    }
    Ok(())
}

fn derivative_matches(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, us: &[f64]) -> Result<(), TestCaseError> {
    let dscale = us.iter().map(|&u| dg(u).abs()).fold(0.0, f64::max);
    for &u in &us[1..us.len() - 1] {
        let h = 1e-6 * u.abs().max(1.0);
        let fd = (g(u + h) - g(u - h)) / (2.0 * h);
        let d = dg(u);
        prop_assert!((fd - d).abs() <= 1e-5 * d.abs().max(1e-3 * dscale), "dg({u}) = {d}, fd = {fd}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn vasicek_draws_validate(p in vasicek_params()) {
        let m = make_vasicek(p).unwrap();
        prop_assert!(m.validate().is_ok(), "{:?}", m.validate());
    }

    #[test]
    fn cir_draws_validate(p in cir_params()) {
        let m = make_cir(p).unwrap();
        prop_assert!(m.validate().is_ok(), "{:?}", m.validate());
        prop_assert!(p.gamma() > p.a);
    }

    #[test]
    fn gamma_draws_validate(p in gamma_params()) {
        let m = make_gamma_ou(p).unwrap();
        prop_assert!(m.validate().is_ok(), "{:?}", m.validate());
    }

    #[test]
    fn f_and_r_vanish_at_zero(m in any_model()) {
        prop_assert_eq!(m.f(0.0), 0.0);
        prop_assert_eq!(m.r(0.0), 0.0);
    }

    #[test]
    fn f_and_r_convex_on_root_interval(m in any_model()) {
        let us = sample(&m, 64);
        convex_on(|u| m.f(u), &us)?;
        convex_on(|u| m.r(u), &us)?;
    }

    #[test]
    fn derivatives_match_centered_differences(m in any_model()) {
        let us = sample(&m, 51);
        derivative_matches(|u| m.f(u), |u| m.df(u), &us)?;
        derivative_matches(|u| m.r(u), |u| m.dr(u), &us)?;
    }

    #[test]
    fn long_end_root_is_accurate(m in any_model()) {
        let le = find_c(&m, DEFAULT_TOL).unwrap();
        prop_assert!(le.c < 0.0);
        prop_assert!((m.r(le.c) - 1.0).abs() <= 1e-12);
        prop_assert_eq!(le.lambda_qmr, -1.0 / le.c);
        prop_assert_eq!(le.b_asymp, -m.f(le.c));
    }

    #[test]
    fn cir_b_y_norm_matches_closed_form(p in cir_params()) {
        let th = compute_thresholds(&make_cir(p).unwrap()).unwrap();
        let g = p.gamma();
        let closed = 2.0 * p.a * p.theta / (g - p.a) * (2.0 * g / (p.a + g)).ln();
        prop_assert!((th.b_y_norm - closed).abs() <= 1e-8);
        prop_assert!((th.b_fw_norm - p.a * p.theta / g).abs() <= 1e-12);
    }

    #[test]
    fn gamma_b_y_norm_matches_closed_form(p in gamma_params()) {
        let th = compute_thresholds(&make_gamma_ou(p).unwrap()).unwrap();
        let q = 1.0 + p.theta / p.lambda;
        prop_assert!((th.b_y_norm - p.k * p.lambda / q * q.ln()).abs() <= 1e-8);
        prop_assert!((th.b_fw_norm - p.k * p.theta / (q * q)).abs() <= 1e-12);
        prop_assert!((th.b_inv.finite().unwrap() - p.k * p.theta).abs() <= 1e-12);
    }

    #[test]
    fn vasicek_thresholds_match_closed_form(p in vasicek_params()) {
        let th = compute_thresholds(&make_vasicek(p).unwrap()).unwrap();
        let s2 = p.sigma * p.sigma / (p.lambda * p.lambda);
        prop_assert!((th.b_fw_norm - (p.theta - s2)).abs() <= 1e-10);
        prop_assert!((th.b_y_norm - (p.theta - 0.75 * s2)).abs() <= 1e-10);
        prop_assert!((th.b_asymp() - (p.theta - 0.5 * s2)).abs() <= 1e-10);
        prop_assert!((th.b_inv.finite().unwrap() - p.theta).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn thresholds_are_strictly_ordered(m in any_model()) {
        let th = compute_thresholds(&m).unwrap();
        prop_assert!(th.b_fw_norm < th.b_y_norm);
        prop_assert!(th.b_y_norm < th.b_asymp());
        prop_assert!(th.b_asymp() < th.b_inv);
    }
}

#[test]
fn spec_file_round_trip() {
    let text = r#"{"kind": "gamma_ou", "params": {"lambda": 1.0, "k": 1.0, "theta": 0.5}}"#;
    let spec = ModelSpec::from_json(text).unwrap();
    assert_eq!(spec.kind(), ModelKind::GammaOu);
    assert_eq!(ModelSpec::from_json(&spec.to_json()).unwrap(), spec);
    let th = compute_thresholds(&spec.build().unwrap()).unwrap();
    assert!((th.b_inv.finite().unwrap() - 0.5).abs() < 1e-15);
}
