//! Bond-price exponents `A`, `B` from the Riccati system and the yield and
//! forward curves derived from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::model::{AffineModel, ModelSpec};
use crate::ode::{self, OdeOptions, Record};

/// Default shortest maturity on output grids (years).
pub const DEFAULT_X_MIN: f64 = 1e-4;
pub const DEFAULT_POINTS: usize = 400;
pub const MAX_TOL: f64 = 1e-3;

/// Solution of the Riccati system on a maturity grid starting at `x = 0`.
/// `da`, `db` are the ODE slopes `F(B)` and `R(B) - 1` at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct AbCurve {
    pub xs: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub da: Vec<f64>,
    pub db: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Yield,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub kind: CurveKind,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    /// `x,value` header, one row per grid point, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * (self.xs.len() + 1));
        out.push_str("x,value\n");
        for (x, v) in self.xs.iter().zip(&self.values) {
            out.push_str(&g17(*x));
            out.push(',');
            out.push_str(&g17(*v));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= MAX_TOL {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tolerance {tol} must lie in (0, {MAX_TOL}]")))
    }
}

fn riccati_rhs(m: &AffineModel) -> impl FnMut(f64, &[f64; 2]) -> Result<[f64; 2]> + '_ {
    let lower = m.domain_lower();
    move |x, y| {
        let b = y[1];
        if b < lower {
            return Err(Error::DomainEscape { x, b });
        }
        let fb = m.f(b);
        let rb = m.r(b);
        if fb == f64::INFINITY || rb == f64::INFINITY {
            return Err(Error::DomainEscape { x, b });
        }
        if !(fb.is_finite() && rb.is_finite()) {
            return Err(Error::NonFinite { x });
        }
        Ok([fb, rb - 1.0])
    }
}

fn options(x_max: f64, tol: f64) -> OdeOptions {
    OdeOptions {
        tol,
        initial_step: x_max * 1e-4,
        min_step: x_max * 1e-12,
    }
}

fn collect(points: Vec<ode::OdePoint<2>>) -> AbCurve {
    let n = points.len();
    let mut ab = AbCurve {
        xs: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        da: Vec::with_capacity(n),
        db: Vec::with_capacity(n),
    };
    for p in points {
        ab.xs.push(p.x);
        ab.a.push(p.y[0]);
        ab.b.push(p.y[1]);
        ab.da.push(p.dy[0]);
        ab.db.push(p.dy[1]);
    }
    ab
}

/// Integrates `A' = F(B)`, `B' = R(B) - 1` from 0 to `x_max`; the result holds
/// every accepted step. The model is assumed to have passed validation.
pub fn solve_ab(m: &AffineModel, x_max: f64, tol: f64) -> Result<AbCurve> {
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(Error::InvalidInput(format!("x_max = {x_max} must be positive")));
    }
    check_tol(tol)?;
    let pts = ode::integrate(riccati_rhs(m), [0.0, 0.0], &[x_max], options(x_max, tol), Record::AllSteps)?;
    Ok(collect(pts))
}

/// Like [`solve_ab`], but lands exactly on each maturity of `grid` (positive,
/// strictly increasing) and records only those points, after `x = 0`.
pub fn solve_ab_on_grid(m: &AffineModel, grid: &[f64], tol: f64) -> Result<AbCurve> {
    check_grid(grid)?;
    check_tol(tol)?;
    let x_max = *grid.last().expect("non-empty grid");
    let pts = ode::integrate(riccati_rhs(m), [0.0, 0.0], grid, options(x_max, tol), Record::OutputsOnly)?;
    Ok(collect(pts))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid[0] <= 0.0 || !grid.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("grid must be non-empty, finite and positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` geometrically spaced maturities from `x_min` to `x_max` inclusive.
pub fn geometric_grid(x_min: f64, x_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) || n < 2 {
        return Err(Error::InvalidInput(format!(
            "geometric grid needs 0 < x_min < x_max and n >= 2 (got {x_min}, {x_max}, {n})"
        )));
    }
    let ratio = (x_max / x_min).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| x_min * (ratio * i as f64).exp()).collect();
    grid[0] = x_min;
    grid[n - 1] = x_max;
    Ok(grid)
}

impl AbCurve {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Cubic Hermite interpolation onto `xs` (within `[0, last node]`), using
    /// the ODE slopes at the nodes. `x = 0` is prepended if absent.
    pub fn interpolate(&self, xs: &[f64]) -> Result<AbCurve> {
        let last = *self.xs.last().ok_or_else(|| Error::InvalidInput("empty ABCurve".into()))?;
        let mut out = AbCurve {
            xs: vec![0.0],
            a: vec![0.0],
            b: vec![0.0],
            da: vec![self.da[0]],
            db: vec![self.db[0]],
        };
        let mut seg = 0;
        for &x in xs {
            if x == 0.0 {
                continue;
            }
            if !(x > 0.0 && x <= last * (1.0 + 1e-14)) {
                return Err(Error::InvalidInput(format!("maturity {x} outside [0, {last}]")));
            }
            if x <= *out.xs.last().unwrap() {
                return Err(Error::InvalidInput("interpolation grid must be strictly increasing".into()));
            }
            while seg + 2 < self.xs.len() && self.xs[seg + 1] < x {
                seg += 1;
            }
            let (x0, x1) = (self.xs[seg], self.xs[seg + 1]);
            let h = x1 - x0;
            let t = ((x - x0) / h).clamp(0.0, 1.0);
            let (va, sa) = hermite(t, h, self.a[seg], self.a[seg + 1], self.da[seg], self.da[seg + 1]);
            let (vb, sb) = hermite(t, h, self.b[seg], self.b[seg + 1], self.db[seg], self.db[seg + 1]);
            out.xs.push(x);
            out.a.push(va);
            out.b.push(vb);
            out.da.push(sa);
            out.db.push(sb);
        }
        Ok(out)
    }
}

/// Value and derivative of the cubic Hermite interpolant at `t ∈ [0, 1]`.
fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let slope = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
    (value, slope)
}

/// Solves to `x_max` and interpolates onto the default geometric grid
/// `[1e-4, x_max]` with 400 points (plus `x = 0`).
pub fn solve_default(m: &AffineModel, x_max: f64, tol: f64) -> Result<AbCurve> {
    let ab = solve_ab(m, x_max, tol)?;
    let x_min = DEFAULT_X_MIN.min(x_max * 1e-4);
    ab.interpolate(&geometric_grid(x_min, x_max, DEFAULT_POINTS)?)
}

/// Closed-form `B(x)` for the built-in Vasicek and CIR models.
pub fn closed_form_b(m: &AffineModel, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidInput(format!("maturity {x} must be non-negative")));
    }
    match m.spec() {
        Some(ModelSpec::Vasicek(p)) => Ok((-p.lambda * x).exp_m1() / p.lambda),
        Some(ModelSpec::Cir(p)) => {
            let gamma = p.gamma();
            // Written in e^{-γx} so that large maturities do not overflow.
            let one_minus = -(-gamma * x).exp_m1();
            let decay = (-gamma * x).exp();
            Ok(-2.0 * one_minus / ((p.a + gamma) * one_minus + 2.0 * gamma * decay))
        }
        _ => Err(Error::UnsupportedModel(format!(
            "closed-form B is only available for Vasicek and CIR, not {}",
            m.name()
        ))),
    }
}

/// `Y(x, r) = -A(x)/x - r B(x)/x` at every grid point with `x > 0`.
pub fn yield_curve(r: f64, ab: &AbCurve) -> Curve {
    let mut xs = Vec::with_capacity(ab.len());
    let mut values = Vec::with_capacity(ab.len());
    for i in 0..ab.len() {
        let x = ab.xs[i];
        if x > 0.0 {
            xs.push(x);
            values.push(-(ab.a[i] + r * ab.b[i]) / x);
        }
    }
    Curve { kind: CurveKind::Yield, xs, values }
}

/// `f(x, r) = -F(B(x)) - r (R(B(x)) - 1)`, i.e. `-A' - r B'` without numerical
/// differentiation. At `x = 0` this is exactly `r`.
pub fn forward_curve(m: &AffineModel, r: f64, ab: &AbCurve) -> Curve {
    let values = ab.b.iter().map(|&b| forward_rate(m, r, b)).collect();
    Curve {
        kind: CurveKind::Forward,
        xs: ab.xs.clone(),
        values,
    }
}

#[inline]
pub(crate) fn forward_rate(m: &AffineModel, r: f64, b: f64) -> f64 {
    -m.f(b) - r * (m.r(b) - 1.0)
}
