//! Numerical shape detection, independent of the threshold formulas.
//!
//! Curves are generated from the Riccati solution on a dense geometric grid;
//! their slopes are estimated by finite differences and reduced to a sign
//! sequence. `(+)` is normal, `(-)` inverse, `(+,-)` humped, and anything else
//! is reported as indeterminate.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{classify_forward, classify_yield, ShapeClass, ShapeLabel};
use crate::error::{Error, Result};
use crate::model::{
    AffineModel, CirParams, GammaOuParams, ModelKind, ModelSpec, StateSpace, VasicekParams,
};
use crate::riccati::{forward_curve, geometric_grid, solve_ab_on_grid, yield_curve, AbCurve, Curve};
use crate::rng::{derive_seed, stream, StreamRng};
use crate::thresholds::{compute_thresholds, ExtendedRate, Thresholds};

/// Dead-zone tolerance, relative to the largest sampled magnitude.
pub const DEFAULT_DEAD_ZONE: f64 = 1e-9;
pub const MIN_SAMPLES: usize = 16;
pub const MIN_CURVE_POINTS: usize = 400;
pub const ORACLE_POINTS: usize = 2000;
/// Shortest maturity on the oracle grid; humps can sit very close to `x = 0`
/// when `r` is just below `b_inv`.
pub const ORACLE_X_MIN: f64 = 1e-7;
pub const ORACLE_ODE_TOL: f64 = 1e-12;
pub const MAX_DRAWS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignSequence {
    pub signs: Vec<Sign>,
    /// Estimated abscissas of each sign change; one fewer than `signs`.
    pub crossings: Vec<f64>,
    /// Closed intervals of consecutive samples inside the dead zone.
    pub dead_zones: Vec<(f64, f64)>,
}

/// Compresses the signs of `vs` into runs, ignoring samples with
/// `|v| <= tol * max|v|`.
pub fn sign_sequence(xs: &[f64], vs: &[f64], tol: f64) -> Result<SignSequence> {
    if xs.len() != vs.len() {
        return Err(Error::InvalidInput("abscissas and values differ in length".into()));
    }
    if xs.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("need at least {MIN_SAMPLES} samples, got {}", xs.len())));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("abscissas must be strictly increasing".into()));
    }
    if vs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let scale = vs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cutoff = tol * scale;

    let mut seq = SignSequence { signs: Vec::new(), crossings: Vec::new(), dead_zones: Vec::new() };
    let mut last_live: Option<usize> = None;
    let mut dead_start: Option<usize> = None;
    for (i, &v) in vs.iter().enumerate() {
        if v.abs() <= cutoff {
            dead_start.get_or_insert(i);
            continue;
        }
        if let Some(start) = dead_start.take() {
            seq.dead_zones.push((xs[start], xs[i - 1]));
        }
        let sign = if v > 0.0 { Sign::Plus } else { Sign::Minus };
        match (seq.signs.last(), last_live) {
            (Some(&prev), Some(p)) if prev != sign => {
                let crossing = if p + 1 == i {
                    xs[p] + (xs[i] - xs[p]) * vs[p] / (vs[p] - v)
                } else {
                    0.5 * (xs[p + 1] + xs[i - 1])
                };
                seq.signs.push(sign);
                seq.crossings.push(crossing);
            }
            (None, _) => seq.signs.push(sign),
            _ => {}
        }
        last_live = Some(i);
    }
    if let Some(start) = dead_start {
        seq.dead_zones.push((xs[start], xs[xs.len() - 1]));
    }
    if seq.signs.is_empty() {
        return Err(Error::AllDead);
    }
    Ok(seq)
}

/// Second-order centered differences on a non-uniform grid, at interior nodes.
pub fn centered_slopes(xs: &[f64], vs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let mut mid = Vec::with_capacity(n.saturating_sub(2));
    let mut slopes = Vec::with_capacity(n.saturating_sub(2));
    for i in 1..n.saturating_sub(1) {
        let h1 = xs[i] - xs[i - 1];
        let h2 = xs[i + 1] - xs[i];
        let d = (h1 * h1 * (vs[i + 1] - vs[i]) + h2 * h2 * (vs[i] - vs[i - 1])) / (h1 * h2 * (h1 + h2));
        mid.push(xs[i]);
        slopes.push(d);
    }
    (mid, slopes)
}

/// Classifies a sampled curve from the sign sequence of its slope. Curves
/// with fewer than 400 points, or whose slopes all sit in the dead zone, are
/// indeterminate.
pub fn classify_numeric(curve: &Curve, tol: f64) -> ShapeClass {
    if curve.len() < MIN_CURVE_POINTS {
        return ShapeClass::new(ShapeLabel::Indeterminate);
    }
    let (mid, slopes) = centered_slopes(&curve.xs, &curve.values);
    let Ok(seq) = sign_sequence(&mid, &slopes, tol) else {
        return ShapeClass::new(ShapeLabel::Indeterminate);
    };
    match seq.signs.as_slice() {
        [Sign::Plus] => ShapeClass::new(ShapeLabel::Normal),
        [Sign::Minus] => ShapeClass::new(ShapeLabel::Inverse),
        [Sign::Plus, Sign::Minus] => ShapeClass {
            label: ShapeLabel::Humped,
            hump_location: Some(seq.crossings[0]),
        },
        _ => ShapeClass::new(ShapeLabel::Indeterminate),
    }
}

fn log_uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn draw_spec(rng: &mut StreamRng, kind: Option<ModelKind>) -> ModelSpec {
    let kind = kind.unwrap_or_else(|| ModelKind::ALL[rng.gen_range(0..3)]);
    match kind {
        ModelKind::Vasicek => ModelSpec::Vasicek(VasicekParams {
            lambda: log_uniform(rng, 0.05, 5.0),
            theta: log_uniform(rng, 0.005, 0.15),
            sigma: log_uniform(rng, 0.01, 0.5),
        }),
        ModelKind::Cir => ModelSpec::Cir(CirParams {
            a: log_uniform(rng, 0.05, 5.0),
            theta: log_uniform(rng, 0.005, 0.15),
            sigma: log_uniform(rng, 0.01, 0.5),
        }),
        ModelKind::GammaOu => ModelSpec::GammaOu(GammaOuParams {
            lambda: log_uniform(rng, 0.05, 5.0),
            k: log_uniform(rng, 0.1, 5.0),
            theta: log_uniform(rng, 0.05, 2.0),
        }),
    }
}

/// Deterministic random built-in model. Draw `i` uses stream `(seed, i)`;
/// draws failing validation are retried up to 100 times.
pub fn random_model(seed: u64, kind: Option<ModelKind>) -> Result<AffineModel> {
    for attempt in 0..MAX_DRAWS {
        let mut rng = stream(seed, attempt as u64);
        let spec = draw_spec(&mut rng, kind);
        if let Ok(m) = spec.build() {
            if m.validate().is_ok() {
                return Ok(m);
            }
        }
    }
    Err(Error::GenerationExhausted { seed, attempts: MAX_DRAWS })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub model: String,
    pub r: f64,
    pub theorem_yield: ShapeLabel,
    pub oracle_yield: ShapeLabel,
    pub theorem_forward: ShapeLabel,
    pub oracle_forward: ShapeLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yield_hump: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward_hump: Option<f64>,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub model: String,
    pub thresholds: Thresholds,
    pub rows: Vec<VerificationRow>,
    pub skipped: Vec<f64>,
}

impl VerificationReport {
    pub fn disagreements(&self) -> impl Iterator<Item = &VerificationRow> {
        self.rows.iter().filter(|r| !r.agree)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.agree)
    }

    /// Fails with the first disagreeing row.
    pub fn check(&self) -> Result<()> {
        match self.disagreements().next() {
            Some(row) => Err(Error::Disagreement(Box::new(row.clone()))),
            None => Ok(()),
        }
    }
}

/// The theorem regions `(lo, hi)` for `r`: below `b_fw_norm`, between the
/// normal thresholds, humped-yield, and at or above `b_inv`, each clipped to
/// the state space. Unbounded regions are truncated to the threshold span.
pub fn theorem_regions(th: &Thresholds) -> Vec<(f64, f64)> {
    let span = match th.b_inv {
        ExtendedRate::Finite(v) => v - th.b_fw_norm,
        ExtendedRate::PosInfinity => 4.0 * (th.b_asymp() - th.b_fw_norm),
    };
    let floor = match th.state_space {
        StateSpace::NonNegativeReals => 0.0,
        StateSpace::AllReals => f64::NEG_INFINITY,
    };
    let top = th.b_inv.finite().unwrap_or(th.b_y_norm + span);
    let mut regions = vec![
        ((th.b_fw_norm - span).max(floor), th.b_fw_norm),
        (th.b_fw_norm.max(floor), th.b_y_norm),
        (th.b_y_norm.max(floor), top),
    ];
    if let ExtendedRate::Finite(inv) = th.b_inv {
        regions.push((inv.max(floor), inv + span));
    }
    regions.retain(|(lo, hi)| hi > lo);
    regions
}

/// `n` short rates spread over the theorem regions, placed at cell midpoints.
pub fn region_rates(th: &Thresholds, n: usize) -> Vec<f64> {
    let regions = theorem_regions(th);
    let mut rates = Vec::with_capacity(n);
    for (i, &(lo, hi)) in regions.iter().enumerate() {
        let count = n / regions.len() + usize::from(i < n % regions.len());
        rates.extend((0..count).map(|j| lo + (hi - lo) * (j as f64 + 0.5) / count as f64));
    }
    rates
}

/// `n` short rates drawn by picking a theorem region uniformly, then a point
/// uniformly inside it.
pub fn sample_rates(th: &Thresholds, n: usize, rng: &mut StreamRng) -> Vec<f64> {
    let regions = theorem_regions(th);
    (0..n)
        .map(|_| {
            let (lo, hi) = regions[rng.gen_range(0..regions.len())];
            rng.gen_range(lo..hi)
        })
        .collect()
}

/// Dense Riccati solution used by the oracle: geometric grid up to
/// `max(30, 30/λ)`.
pub fn oracle_solution(m: &AffineModel, th: &Thresholds) -> Result<AbCurve> {
    let x_max = 30.0_f64.max(30.0 / th.long_end.lambda_qmr);
    let grid = geometric_grid(ORACLE_X_MIN, x_max, ORACLE_POINTS)?;
    solve_ab_on_grid(m, &grid, ORACLE_ODE_TOL)
}

fn near_threshold(th: &Thresholds, r: f64, exclusion: f64) -> bool {
    let mut thresholds = vec![th.b_fw_norm, th.b_y_norm];
    thresholds.extend(th.b_inv.finite());
    thresholds.iter().any(|&t| (r - t).abs() < exclusion * t.abs().max(1.0))
}

/// Compares theorem and oracle labels at each of `rates`. Rates within
/// `exclusion·max(1, |t|)` of a threshold `t`, or outside the state space,
/// are skipped.
pub fn verify_rates(
    m: &AffineModel,
    th: &Thresholds,
    rates: &[f64],
    exclusion: f64,
) -> Result<VerificationReport> {
    let ab = oracle_solution(m, th)?;
    let mut rows = Vec::with_capacity(rates.len());
    let mut skipped = Vec::new();
    for &r in rates {
        if !th.state_space.contains(r) || near_threshold(th, r, exclusion) {
            skipped.push(r);
            continue;
        }
        let theorem_yield = classify_yield(th, r)?.label;
        let theorem_forward = classify_forward(th, r)?.label;
        let oy = classify_numeric(&yield_curve(r, &ab), DEFAULT_DEAD_ZONE);
        let of = classify_numeric(&forward_curve(m, r, &ab), DEFAULT_DEAD_ZONE);
        rows.push(VerificationRow {
            model: m.name().to_string(),
            r,
            theorem_yield,
            oracle_yield: oy.label,
            theorem_forward,
            oracle_forward: of.label,
            yield_hump: oy.hump_location,
            forward_hump: of.hump_location,
            agree: theorem_yield == oy.label && theorem_forward == of.label,
        });
    }
    Ok(VerificationReport {
        model: m.name().to_string(),
        thresholds: *th,
        rows,
        skipped,
    })
}

/// End-to-end check of the shape theorems for one model at `n_r` short rates
/// covering every theorem region.
pub fn verify_model(m: &AffineModel, n_r: usize, exclusion: f64) -> Result<VerificationReport> {
    let th = compute_thresholds(m)?;
    verify_rates(m, &th, &region_rates(&th, n_r), exclusion)
}

/// Seed of the `index`-th model in a sweep.
pub fn sweep_model_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// Runs [`verify_model`] on `n_models` random models in parallel; reports come
/// back in model order.
pub fn verify_sweep(
    seed: u64,
    n_models: usize,
    n_r: usize,
    exclusion: f64,
) -> Vec<Result<VerificationReport>> {
    (0..n_models)
        .into_par_iter()
        .map(|i| {
            let m = random_model(sweep_model_seed(seed, i), None)?;
            verify_model(&m, n_r, exclusion)
        })
        .collect()
}
