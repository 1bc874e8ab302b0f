//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use affine_shapes::classifier::{classify_forward, classify_yield, ShapeLabel};
use affine_shapes::long_end::{find_c, DEFAULT_TOL};
use affine_shapes::model::*;
use affine_shapes::montecarlo::mc_check;
use affine_shapes::oracle::{
    classify_numeric, oracle_solution, random_model, sample_rates, sweep_model_seed, verify_rates,
    DEFAULT_DEAD_ZONE,
};
use affine_shapes::quad;
use affine_shapes::riccati::{closed_form_b, forward_curve, solve_ab, yield_curve};
use affine_shapes::rng::stream;
use affine_shapes::thresholds::{compute_thresholds, ExtendedRate};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn vasicek() -> AffineModel {
    make_vasicek(VasicekParams { lambda: 1.0, theta: 0.05, sigma: 0.1 }).unwrap()
}

fn cir() -> AffineModel {
    make_cir(CirParams { a: 1.0, theta: 0.05, sigma: 0.2 }).unwrap()
}

fn gamma_ou() -> AffineModel {
    make_gamma_ou(GammaOuParams { lambda: 1.0, k: 1.0, theta: 0.5 }).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1_vasicek_thresholds() -> Outcome {
    let (lambda, theta, sigma): (f64, f64, f64) = (1.0, 0.05, 0.1);
    let th = compute_thresholds(&vasicek()).map_err(|e| e.to_string())?;
    let expected = [
        ("b_fw_norm", th.b_fw_norm, theta - sigma * sigma / (lambda * lambda)),
        ("b_y_norm", th.b_y_norm, theta - 3.0 * sigma * sigma / (4.0 * lambda * lambda)),
        ("b_asymp", th.b_asymp(), theta - sigma * sigma / (2.0 * lambda * lambda)),
        ("b_inv", th.b_inv.finite().ok_or("b_inv infinite")?, theta),
    ];
    let mut worst = 0.0_f64;
    for (name, got, want) in expected {
        let err = (got - want).abs();
        ensure(err <= 1e-10, || format!("{name} = {got}, expected {want}"))?;
        worst = worst.max(err);
    }
    Ok(format!("(0.04, 0.0425, 0.045, 0.05) reproduced, max |err| = {worst:.1e}"))
}

fn ac2_closed_form_quadrature() -> Outcome {
    let mut worst_cir = 0.0_f64;
    let mut worst_gamma = 0.0_f64;
    for i in 0..100 {
        let m = random_model(sweep_model_seed(2002, i), Some(ModelKind::Cir)).map_err(|e| e.to_string())?;
        let Some(ModelSpec::Cir(p)) = m.spec().copied() else { unreachable!() };
        let th = compute_thresholds(&m).map_err(|e| format!("{}: {e}", m.name()))?;
        let g = p.gamma();
        let closed = 2.0 * p.a * p.theta / (g - p.a) * (2.0 * g / (p.a + g)).ln();
        let err = (th.b_y_norm - closed).abs();
        ensure(err <= 1e-8, || format!("{}: b_y_norm {} vs {closed}", m.name(), th.b_y_norm))?;
        worst_cir = worst_cir.max(err);

        let m = random_model(sweep_model_seed(2003, i), Some(ModelKind::GammaOu)).map_err(|e| e.to_string())?;
        let Some(ModelSpec::GammaOu(p)) = m.spec().copied() else { unreachable!() };
        let th = compute_thresholds(&m).map_err(|e| format!("{}: {e}", m.name()))?;
        let ratio = 1.0 + p.theta / p.lambda;
        let closed = p.k * p.lambda / ratio * ratio.ln();
        let err = (th.b_y_norm - closed).abs();
        ensure(err <= 1e-8, || format!("{}: b_y_norm {} vs {closed}", m.name(), th.b_y_norm))?;
        worst_gamma = worst_gamma.max(err);
    }
    Ok(format!("100 CIR + 100 gamma draws, max |err| CIR {worst_cir:.1e}, gamma {worst_gamma:.1e}"))
}

fn ac3_ordering() -> Outcome {
    let mut violations = Vec::new();
    for i in 0..1000 {
        let m = random_model(sweep_model_seed(3003, i), None).map_err(|e| e.to_string())?;
        match compute_thresholds(&m) {
            Ok(th) => {
                let ok = th.b_fw_norm < th.b_y_norm && th.b_y_norm < th.b_asymp() && th.b_asymp() < th.b_inv;
                if !ok {
                    violations.push(m.name().to_string());
                }
            }
            Err(e) => violations.push(format!("{}: {e}", m.name())),
        }
    }
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok("1000 random models, zero ordering violations".into())
}

fn ac4_signature_regime() -> Outcome {
    let m = vasicek();
    let th = compute_thresholds(&m).map_err(|e| e.to_string())?;
    let r = 0.0415;
    ensure(th.b_fw_norm < r && r < th.b_y_norm, || "r is not in (b_fw_norm, b_y_norm)".into())?;
    let ty = classify_yield(&th, r).map_err(|e| e.to_string())?.label;
    let tf = classify_forward(&th, r).map_err(|e| e.to_string())?.label;
    ensure(ty == ShapeLabel::Normal, || format!("theorem yield {ty}"))?;
    ensure(tf == ShapeLabel::Humped, || format!("theorem forward {tf}"))?;

    let ab = oracle_solution(&m, &th).map_err(|e| e.to_string())?;
    let oy = classify_numeric(&yield_curve(r, &ab), DEFAULT_DEAD_ZONE);
    let of = classify_numeric(&forward_curve(&m, r, &ab), DEFAULT_DEAD_ZONE);
    ensure(oy.label == ShapeLabel::Normal, || format!("oracle yield {}", oy.label))?;
    ensure(of.label == ShapeLabel::Humped, || format!("oracle forward {}", of.label))?;

    // Pre-correction rule: the yield threshold was taken to be -F'(c)/R'(c).
    let le = find_c(&m, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let old_threshold = -m.df(le.c) / m.dr(le.c);
    ensure((old_threshold - 0.04).abs() < 1e-15, || format!("old threshold {old_threshold}"))?;
    let old_label = if r <= old_threshold {
        ShapeLabel::Normal
    } else if r >= th.b_inv {
        ShapeLabel::Inverse
    } else {
        ShapeLabel::Humped
    };
    ensure(old_label == ShapeLabel::Humped && old_label != oy.label, || {
        format!("old rule gave {old_label}")
    })?;
    Ok(format!(
        "r = 0.0415: yield normal, forward humped (oracle hump at x = {:.3}); old rule would say humped",
        of.hump_location.unwrap_or(f64::NAN)
    ))
}

fn ac5_theorem_oracle_equivalence() -> Outcome {
    const TARGET: usize = 500;
    let exclusion = 1e-4;
    let mut evaluated = 0;
    let mut skipped = 0;
    let mut models = 0;
    let mut disagreements = Vec::new();
    let mut indeterminate = 0;
    while evaluated < TARGET {
        let seed = sweep_model_seed(5005, models);
        let m = random_model(seed, None).map_err(|e| e.to_string())?;
        let th = compute_thresholds(&m).map_err(|e| format!("{}: {e}", m.name()))?;
        let rates = sample_rates(&th, 12, &mut stream(seed, 1));
        let report = verify_rates(&m, &th, &rates, exclusion).map_err(|e| format!("{}: {e}", m.name()))?;
        evaluated += report.rows.len();
        skipped += report.skipped.len();
        models += 1;
        for row in &report.rows {
            if row.oracle_yield == ShapeLabel::Indeterminate || row.oracle_forward == ShapeLabel::Indeterminate {
                indeterminate += 1;
            }
            if !row.agree {
                disagreements.push(format!("{row:?}"));
            }
        }
    }
    ensure(disagreements.is_empty() && indeterminate == 0, || {
        format!(
            "{} disagreements, {indeterminate} indeterminate out of {evaluated}; first: {}",
            disagreements.len(),
            disagreements.first().cloned().unwrap_or_default()
        )
    })?;
    Ok(format!("{evaluated} (model, r) pairs over {models} models agree ({skipped} skipped near thresholds)"))
}

fn ac6_riccati_accuracy() -> Outcome {
    let mut worst_b = 0.0_f64;
    let mut worst_a = 0.0_f64;
    for m in [vasicek(), cir()] {
        let ab = solve_ab(&m, 30.0, 1e-10).map_err(|e| e.to_string())?;
        for (i, &x) in ab.xs.iter().enumerate() {
            let exact = closed_form_b(&m, x).map_err(|e| e.to_string())?;
            worst_b = worst_b.max((ab.b[i] - exact).abs());
        }
        // A(x) = ∫₀ˣ F(B(s)) ds with the closed-form B.
        for (i, &x) in ab.xs.iter().enumerate().step_by(5) {
            let q = quad::integrate(|s| m.f(closed_form_b(&m, s).unwrap()), 0.0, x, 1e-13, 100_000)
                .map_err(|e| e.to_string())?;
            worst_a = worst_a.max((ab.a[i] - q.value).abs());
        }
    }
    ensure(worst_b <= 1e-8, || format!("max |B - closed form| = {worst_b:e}"))?;
    ensure(worst_a <= 1e-7, || format!("max |A - quadrature| = {worst_a:e}"))?;
    Ok(format!("x in [0, 30]: max |dB| = {worst_b:.1e}, max |dA| = {worst_a:.1e}"))
}

fn ac7_long_end() -> Outcome {
    let mut worst = 0.0_f64;
    for m in [vasicek(), cir(), gamma_ou()] {
        let th = compute_thresholds(&m).map_err(|e| e.to_string())?;
        let x_max = 1e3 / th.long_end.lambda_qmr;
        let ab = solve_ab(&m, x_max, 1e-10).map_err(|e| e.to_string())?;
        let inv = match th.b_inv {
            ExtendedRate::Finite(v) => v,
            ExtendedRate::PosInfinity => 2.0 * th.b_asymp(),
        };
        let b_asymp = th.b_asymp();
        let bound = 0.02 * b_asymp.abs().max(0.01);
        for r in [th.b_fw_norm.max(0.0), th.b_y_norm, b_asymp, 1.5 * inv] {
            let y = *yield_curve(r, &ab).values.last().unwrap();
            let f = *forward_curve(&m, r, &ab).values.last().unwrap();
            for (kind, v) in [("yield", y), ("forward", f)] {
                let err = (v - b_asymp).abs();
                ensure(err <= bound, || format!("{} r = {r}: {kind}({x_max}) = {v}, b_asymp = {b_asymp}", m.name()))?;
                worst = worst.max(err / bound);
            }
        }
    }
    Ok(format!("yield and forward at x = 1000/lambda within {:.0}% of the allowed band", 100.0 * worst))
}

fn ac8_monte_carlo() -> Outcome {
    let cases = [(vasicek(), 0.0425), (cir(), 0.03), (gamma_ou(), 0.3)];
    let mut summary = Vec::new();
    for (m, r0) in &cases {
        for x in [1.0, 5.0] {
            let n_steps = (200.0 * x) as usize;
            let check = mc_check(m, *r0, x, 100_000, n_steps, 8008).map_err(|e| e.to_string())?;
            ensure(check.passed(), || format!("{} x = {x}: {check:?}", m.name()))?;
            summary.push(format!("{:+.2}{}", check.z_score, if check.retried { "*" } else { "" }));
        }
    }
    Ok(format!("z-scores [{}] (* = fresh-seed retry)", summary.join(", ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1 Vasicek closed-form thresholds", ac1_vasicek_thresholds, Duration::from_secs(1)),
        ("AC2 CIR/gamma b_y_norm quadrature", ac2_closed_form_quadrature, Duration::from_secs(10)),
        ("AC3 threshold ordering", ac3_ordering, Duration::from_secs(60)),
        ("AC4 corrected-threshold signature", ac4_signature_regime, Duration::from_secs(1)),
        ("AC5 theorem/oracle equivalence", ac5_theorem_oracle_equivalence, Duration::from_secs(300)),
        ("AC6 Riccati accuracy", ac6_riccati_accuracy, Duration::from_secs(5)),
        ("AC7 long-end convergence", ac7_long_end, Duration::from_secs(5)),
        ("AC8 Monte Carlo pricing", ac8_monte_carlo, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed <= budget => Ok(msg),
            Ok(msg) => Err(format!("{msg}; exceeded runtime budget {budget:?}")),
            Err(e) => Err(e),
        };
        match outcome {
            Ok(msg) => println!("PASS  {name} ({elapsed:.2?}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name} ({elapsed:.2?}): {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
