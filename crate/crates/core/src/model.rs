//! Affine one-factor short-rate models described by the pair of functions
//! `F` and `R` that drive the Riccati system
//!
//! ```text
//! A'(x) = F(B(x)),      A(0) = 0
//! B'(x) = R(B(x)) - 1,  B(0) = 0
//! ```
//!
//! Bond prices are `P(t, t + x) = exp(A(x) + r_t B(x))`. The built-in models
//! (Vasicek, CIR, gamma-OU) are closed-form evaluators; anything else can be
//! supplied through [`CustomModel`]. Every model must pass [`validate`] before
//! the threshold and classification machinery will accept it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::long_end;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// State space `D` of the short rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpace {
    NonNegativeReals,
    AllReals,
}

impl StateSpace {
    pub fn contains(self, r: f64) -> bool {
        match self {
            StateSpace::NonNegativeReals => r.is_finite() && r >= 0.0,
            StateSpace::AllReals => r.is_finite(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StateSpace::NonNegativeReals => "[0, inf)",
            StateSpace::AllReals => "(-inf, inf)",
        }
    }
}

impl fmt::Display for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One of the two Lévy–Khintchine-type functions, held as value/derivative
/// evaluators on the effective domain `[domain_lower, 0]`.
#[derive(Clone)]
pub struct Component {
    value: ScalarFn,
    derivative: ScalarFn,
    domain_lower: f64,
    linear: bool,
}

impl Component {
    pub fn new<V, D>(value: V, derivative: D) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Component {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            domain_lower: f64::NEG_INFINITY,
            linear: false,
        }
    }

    /// Left edge of the effective domain; evaluation below it yields `+inf`.
    pub fn with_domain_lower(mut self, lower: f64) -> Self {
        self.domain_lower = lower;
        self
    }

    pub fn linear(mut self, linear: bool) -> Self {
        self.linear = linear;
        self
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        if u < self.domain_lower {
            f64::INFINITY
        } else {
            (self.value)(u)
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        if u < self.domain_lower {
            f64::INFINITY
        } else {
            (self.derivative)(u)
        }
    }

    pub fn domain_lower(&self) -> f64 {
        self.domain_lower
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VasicekParams {
    pub lambda: f64,
    pub theta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirParams {
    pub a: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl CirParams {
    /// `γ = sqrt(2σ² + a²)`.
    pub fn gamma(&self) -> f64 {
        (2.0 * self.sigma * self.sigma + self.a * self.a).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaOuParams {
    pub lambda: f64,
    pub k: f64,
    pub theta: f64,
}

/// Built-in parameterizations, and also the on-disk model file format:
/// `{"kind": "vasicek" | "cir" | "gamma_ou", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Vasicek(VasicekParams),
    Cir(CirParams),
    GammaOu(GammaOuParams),
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model spec serializes")
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Vasicek(_) => ModelKind::Vasicek,
            ModelSpec::Cir(_) => ModelKind::Cir,
            ModelSpec::GammaOu(_) => ModelKind::GammaOu,
        }
    }

    pub fn build(&self) -> Result<AffineModel> {
        match *self {
            ModelSpec::Vasicek(p) => make_vasicek(p),
            ModelSpec::Cir(p) => make_cir(p),
            ModelSpec::GammaOu(p) => make_gamma_ou(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Vasicek,
    Cir,
    GammaOu,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Vasicek, ModelKind::Cir, ModelKind::GammaOu];
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vasicek" => Ok(ModelKind::Vasicek),
            "cir" => Ok(ModelKind::Cir),
            "gamma_ou" | "gamma-ou" | "gamma" => Ok(ModelKind::GammaOu),
            other => Err(Error::InvalidInput(format!("unknown model kind `{other}`"))),
        }
    }
}

/// An affine one-factor model. Immutable once built.
#[derive(Clone)]
pub struct AffineModel {
    name: String,
    f: Component,
    r: Component,
    state_space: StateSpace,
    spec: Option<ModelSpec>,
}

impl fmt::Debug for AffineModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineModel")
            .field("name", &self.name)
            .field("state_space", &self.state_space)
            .field("f_is_linear", &self.f.linear)
            .field("r_is_linear", &self.r.linear)
            .field("spec", &self.spec)
            .finish()
    }
}

impl AffineModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_space(&self) -> StateSpace {
        self.state_space
    }

    /// The built-in parameterization, if this model is one.
    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        self.f.value(u)
    }

    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        self.f.derivative(u)
    }

    #[inline]
    pub fn r(&self, u: f64) -> f64 {
        self.r.value(u)
    }

    #[inline]
    pub fn dr(&self, u: f64) -> f64 {
        self.r.derivative(u)
    }

    pub fn f_component(&self) -> &Component {
        &self.f
    }

    pub fn r_component(&self) -> &Component {
        &self.r
    }

    pub fn f_is_linear(&self) -> bool {
        self.f.linear
    }

    pub fn r_is_linear(&self) -> bool {
        self.r.linear
    }

    pub fn f_domain_lower(&self) -> f64 {
        self.f.domain_lower
    }

    pub fn r_domain_lower(&self) -> f64 {
        self.r.domain_lower
    }

    /// Largest of the two domain edges.
    pub fn domain_lower(&self) -> f64 {
        self.f.domain_lower.max(self.r.domain_lower)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Validates and turns a failing report into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        validate(self).into_result()
    }
}

/// User-supplied model through the same evaluator interface as the built-ins.
pub struct CustomModel {
    pub name: String,
    pub f: Component,
    pub r: Component,
    pub state_space: StateSpace,
}

impl CustomModel {
    pub fn build(self) -> AffineModel {
        AffineModel {
            name: self.name,
            f: self.f,
            r: self.r,
            state_space: self.state_space,
            spec: None,
        }
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

/// Vasicek: `F(u) = λθu + σ²u²/2`, `R(u) = -λu`, state space ℝ.
pub fn make_vasicek(p: VasicekParams) -> Result<AffineModel> {
    require_positive("lambda", p.lambda)?;
    require_finite("theta", p.theta)?;
    require_positive("sigma", p.sigma)?;
    let VasicekParams { lambda, theta, sigma } = p;
    let half_var = 0.5 * sigma * sigma;
    Ok(AffineModel {
        name: format!("vasicek(lambda={lambda}, theta={theta}, sigma={sigma})"),
        f: Component::new(
            move |u| lambda * theta * u + half_var * u * u,
            move |u| lambda * theta + 2.0 * half_var * u,
        ),
        r: Component::new(move |u| -lambda * u, move |_| -lambda).linear(true),
        state_space: StateSpace::AllReals,
        spec: Some(ModelSpec::Vasicek(p)),
    })
}

/// CIR: `F(u) = aθu`, `R(u) = σ²u²/2 - au`, state space ℝ≥0.
///
/// The quadratic term carries a plus sign: the Riccati equation of
/// `dr = -a(r - θ)dt + σ√r dW` is `B' = σ²B²/2 - aB - 1`, and only this sign
/// makes `R` convex.
pub fn make_cir(p: CirParams) -> Result<AffineModel> {
    require_positive("a", p.a)?;
    require_positive("theta", p.theta)?;
    require_positive("sigma", p.sigma)?;
    let CirParams { a, theta, sigma } = p;
    let half_var = 0.5 * sigma * sigma;
    Ok(AffineModel {
        name: format!("cir(a={a}, theta={theta}, sigma={sigma})"),
        f: Component::new(move |u| a * theta * u, move |_| a * theta).linear(true),
        r: Component::new(
            move |u| half_var * u * u - a * u,
            move |u| 2.0 * half_var * u - a,
        ),
        state_space: StateSpace::NonNegativeReals,
        spec: Some(ModelSpec::Cir(p)),
    })
}

/// Gamma-OU: `F(u) = λθku / (1 - θu)`, `R(u) = -λu`, state space ℝ≥0.
///
/// `F` has a pole at `u = 1/θ > 0`, so it is finite on all of `u ≤ 0`.
pub fn make_gamma_ou(p: GammaOuParams) -> Result<AffineModel> {
    require_positive("lambda", p.lambda)?;
    require_positive("k", p.k)?;
    require_positive("theta", p.theta)?;
    let GammaOuParams { lambda, k, theta } = p;
    let scale = lambda * theta * k;
    Ok(AffineModel {
        name: format!("gamma_ou(lambda={lambda}, k={k}, theta={theta})"),
        f: Component::new(
            move |u| scale * u / (1.0 - theta * u),
            move |u| {
                let d = 1.0 - theta * u;
                scale / (d * d)
            },
        ),
        r: Component::new(move |u| -lambda * u, move |_| -lambda).linear(true),
        state_space: StateSpace::NonNegativeReals,
        spec: Some(ModelSpec::GammaOu(p)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub model: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            return Ok(());
        }
        let failed = self
            .failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        Err(Error::Validation {
            model: self.model,
            failed,
        })
    }
}

pub const CHECK_F_ZERO: &str = "F(0) = 0";
pub const CHECK_R_ZERO: &str = "R(0) = 0";
pub const CHECK_F_CONVEX: &str = "F convex";
pub const CHECK_R_CONVEX: &str = "R convex";
pub const CHECK_F_LINEARITY: &str = "F linearity flag";
pub const CHECK_R_LINEARITY: &str = "R linearity flag";
pub const CHECK_F_DERIVATIVE: &str = "dF consistent";
pub const CHECK_R_DERIVATIVE: &str = "dR consistent";
pub const CHECK_NOT_BOTH_LINEAR: &str = "F or R non-linear";
pub const CHECK_F_NONZERO: &str = "F not identically zero";
pub const CHECK_STATE_SPACE: &str = "state space consistent with R";
pub const CHECK_CONDITION_ONE: &str = "F finite where bond prices require";
pub const CHECK_R_SLOPE_AT_ROOT: &str = "R'(c) < 0";
pub const CHECK_F_SLOPE_AT_ZERO: &str = "F'(0) > 0 on non-negative state space";

const SAMPLES: usize = 50;
const DERIVATIVE_RTOL: f64 = 1e-5;
const CONVEXITY_SLACK: f64 = 1e-12;

/// Interval `[lo, 0]` on which the structural checks sample `F` and `R`.
/// Uses `[c, 0]` when the long-end root exists.
fn probe_interval(m: &AffineModel) -> f64 {
    match long_end::locate_root(m, long_end::DEFAULT_TOL) {
        Ok(c) => c,
        Err(_) => {
            let edge = m.domain_lower();
            if edge.is_finite() {
                (edge * 0.999).max(-1.0)
            } else {
                -1.0
            }
        }
    }
}

fn samples(lo: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (0.0 - lo) * i as f64 / n as f64).collect()
}

/// Returns (max convexity violation, max strict-convexity gap), both relative
/// to the sampled scale of `g`.
fn convexity_gaps(g: &dyn Fn(f64) -> f64, us: &[f64]) -> (f64, f64) {
    let vals: Vec<f64> = us.iter().map(|&u| g(u)).collect();
    let scale = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut violation = 0.0_f64;
    let mut gap = 0.0_f64;
    let n = us.len();
    for stride in [1, 3, 7] {
        for i in 0..n.saturating_sub(2 * stride) {
            let (u1, u2, u3) = (us[i], us[i + stride], us[i + 2 * stride]);
            let (g1, g2, g3) = (vals[i], vals[i + stride], vals[i + 2 * stride]);
            let chord = ((u3 - u2) * g1 + (u2 - u1) * g3) / (u3 - u1);
            violation = violation.max((g2 - chord) / scale);
            gap = gap.max((chord - g2) / scale);
        }
    }
    (violation, gap)
}

fn derivative_mismatch(value: &dyn Fn(f64) -> f64, derivative: &dyn Fn(f64) -> f64, lo: f64) -> f64 {
    let pts: Vec<f64> = (0..SAMPLES)
        .map(|i| lo * (1.0 - (i as f64 + 0.5) / SAMPLES as f64))
        .collect();
    let exact: Vec<f64> = pts.iter().map(|&u| derivative(u)).collect();
    let dscale = exact.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let mut worst = 0.0_f64;
    for (&u, &d) in pts.iter().zip(&exact) {
        let h = 1e-6 * u.abs().max(1.0);
        let fd = (value(u + h) - value(u - h)) / (2.0 * h);
        let denom = d.abs().max(1e-3 * dscale);
        let err = if denom > 0.0 { (fd - d).abs() / denom } else { (fd - d).abs() };
        if !err.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(err);
    }
    worst
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        passed,
        detail: detail.into(),
    }
}

/// Checks the structural assumptions the shape theorems rely on: `F(0) = R(0)
/// = 0`, convexity, derivative consistency, the non-degeneracy hypotheses and
/// the state-space conditions. Never fails; the caller inspects the report.
pub fn validate(m: &AffineModel) -> ValidationReport {
    let mut checks = Vec::new();
    let lo = probe_interval(m);
    let us = samples(lo, 40);
    let fv = |u: f64| m.f(u);
    let rv = |u: f64| m.r(u);

    let f0 = m.f(0.0);
    let r0 = m.r(0.0);
    checks.push(check(CHECK_F_ZERO, f0.abs() <= 1e-15, format!("F(0) = {f0:e}")));
    checks.push(check(CHECK_R_ZERO, r0.abs() <= 1e-15, format!("R(0) = {r0:e}")));

    for (name, lin_name, g, linear) in [
        (CHECK_F_CONVEX, CHECK_F_LINEARITY, &fv as &dyn Fn(f64) -> f64, m.f_is_linear()),
        (CHECK_R_CONVEX, CHECK_R_LINEARITY, &rv as &dyn Fn(f64) -> f64, m.r_is_linear()),
    ] {
        let (violation, gap) = convexity_gaps(g, &us);
        checks.push(check(
            name,
            violation <= CONVEXITY_SLACK,
            format!("max relative violation {violation:e} on [{lo}, 0]"),
        ));
        let consistent = if linear {
            gap <= 1e-10 && violation <= 1e-10
        } else {
            gap > CONVEXITY_SLACK
        };
        checks.push(check(
            lin_name,
            consistent,
            format!("declared linear = {linear}, max relative curvature {gap:e}"),
        ));
    }

    let fd = |u: f64| m.df(u);
    let rd = |u: f64| m.dr(u);
    let f_err = derivative_mismatch(&fv, &fd, lo);
    let r_err = derivative_mismatch(&rv, &rd, lo);
    checks.push(check(
        CHECK_F_DERIVATIVE,
        f_err <= DERIVATIVE_RTOL,
        format!("max relative error {f_err:e}"),
    ));
    checks.push(check(
        CHECK_R_DERIVATIVE,
        r_err <= DERIVATIVE_RTOL,
        format!("max relative error {r_err:e}"),
    ));

    checks.push(check(
        CHECK_NOT_BOTH_LINEAR,
        !(m.f_is_linear() && m.r_is_linear()),
        "at least one of F and R must be non-linear",
    ));

    let f_nonzero = us.iter().any(|&u| m.f(u) != 0.0);
    checks.push(check(CHECK_F_NONZERO, f_nonzero, "F must not vanish identically"));

    let beta = m.dr(0.0);
    match m.state_space() {
        StateSpace::AllReals => {
            let ok = m.r_is_linear() && beta < 0.0;
            checks.push(check(
                CHECK_STATE_SPACE,
                ok,
                format!("state space ℝ requires R(u) = βu with β < 0; β = {beta}"),
            ));
            // F must be finite on (1/β, 0] when β < 0 and on (-∞, 0] otherwise.
            let probe: Vec<f64> = if beta < 0.0 {
                let edge = 1.0 / beta;
                (0..SAMPLES)
                    .map(|i| edge * (1.0 - (i as f64 + 0.5) / SAMPLES as f64))
                    .collect()
            } else {
                (0..SAMPLES).map(|i| -(10f64.powf(-6.0 + 12.0 * i as f64 / SAMPLES as f64))).collect()
            };
            let finite = probe.iter().all(|&u| m.f(u).is_finite());
            checks.push(check(CHECK_CONDITION_ONE, finite, "F finite on the required interval"));
        }
        StateSpace::NonNegativeReals => {
            checks.push(check(CHECK_STATE_SPACE, true, "state space ℝ≥0"));
            let slope = m.df(0.0);
            checks.push(check(CHECK_F_SLOPE_AT_ZERO, slope > 0.0, format!("F'(0) = {slope}")));
        }
    }

    if let Ok(c) = long_end::locate_root(m, long_end::DEFAULT_TOL) {
        let slope = m.dr(c);
        checks.push(check(CHECK_R_SLOPE_AT_ROOT, slope < 0.0, format!("R'({c}) = {slope}")));
    }

    ValidationReport {
        model: m.name.clone(),
        checks,
    }
}
