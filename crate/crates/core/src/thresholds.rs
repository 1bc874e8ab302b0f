//! Shape thresholds for an affine one-factor model.
//!
//! * `b_fw_norm = -F'(c)/R'(c)`: forward curve normal at or below it.
//! * `b_y_norm = (1/c) ∫_c^0 (F(u) - F(c)) / (R(u) - 1) du`: yield curve normal
//!   at or below it.
//! * `b_inv = -F'(0)/R'(0)` when `R'(0) < 0`, otherwise `+∞`: both curves are
//!   inverse at or above it.
//!
//! They satisfy `b_fw_norm < b_y_norm < b_asymp < b_inv`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::long_end::{self, LongEnd};
use crate::model::{AffineModel, StateSpace};
use crate::quad;

pub const DEFAULT_QUAD_TOL: f64 = 1e-12;
pub const MAX_SUBINTERVALS: usize = 1_000_000;

/// A rate that may be `+∞`. Never converted to a float infinity implicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedRate {
    Finite(f64),
    PosInfinity,
}

impl ExtendedRate {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedRate::Finite(v) => Some(v),
            ExtendedRate::PosInfinity => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedRate::Finite(_))
    }
}

impl fmt::Display for ExtendedRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedRate::Finite(v) => write!(f, "{v}"),
            ExtendedRate::PosInfinity => f.write_str("inf"),
        }
    }
}

impl PartialEq<f64> for ExtendedRate {
    fn eq(&self, other: &f64) -> bool {
        matches!(self, ExtendedRate::Finite(v) if v == other)
    }
}

impl PartialOrd<f64> for ExtendedRate {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        match self {
            ExtendedRate::Finite(v) => v.partial_cmp(other),
            ExtendedRate::PosInfinity if other.is_nan() => None,
            ExtendedRate::PosInfinity => Some(Ordering::Greater),
        }
    }
}

impl PartialEq<ExtendedRate> for f64 {
    fn eq(&self, other: &ExtendedRate) -> bool {
        other == self
    }
}

impl PartialOrd<ExtendedRate> for f64 {
    fn partial_cmp(&self, other: &ExtendedRate) -> Option<Ordering> {
        other.partial_cmp(self).map(Ordering::reverse)
    }
}

impl Serialize for ExtendedRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedRate::Finite(v) => s.serialize_f64(*v),
            ExtendedRate::PosInfinity => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub long_end: LongEnd,
    pub b_fw_norm: f64,
    pub b_y_norm: f64,
    pub b_inv: ExtendedRate,
    pub state_space: StateSpace,
}

/// Wire layout of [`Thresholds`].
#[derive(Serialize)]
struct ThresholdsJson {
    c: f64,
    lambda: f64,
    b_asymp: f64,
    b_fw_norm: f64,
    b_y_norm: f64,
    b_inv: ExtendedRate,
}

impl Serialize for Thresholds {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ThresholdsJson {
            c: self.long_end.c,
            lambda: self.long_end.lambda_qmr,
            b_asymp: self.long_end.b_asymp,
            b_fw_norm: self.b_fw_norm,
            b_y_norm: self.b_y_norm,
            b_inv: self.b_inv,
        }
        .serialize(s)
    }
}

impl Thresholds {
    pub fn b_asymp(&self) -> f64 {
        self.long_end.b_asymp
    }

    pub fn c(&self) -> f64 {
        self.long_end.c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("thresholds serialize")
    }
}

/// `-F'(c)/R'(c)`.
pub fn b_fw_norm(m: &AffineModel, le: &LongEnd) -> Result<f64> {
    let dr = m.dr(le.c);
    let df = m.df(le.c);
    if !dr.is_finite() || dr == 0.0 {
        return Err(Error::DerivativeUnavailable("R'(c) is zero or non-finite"));
    }
    if !df.is_finite() {
        return Err(Error::DerivativeUnavailable("F'(c) is non-finite"));
    }
    Ok(-df / dr)
}

/// Width of the interval next to `c` on which the integrand is replaced by
/// its limit `F'(c)/R'(c)`.
fn singular_width(c: f64) -> f64 {
    (1e-8 * c.abs()).max(1e-10)
}

/// The `b_y_norm` integrand `(F(u) - F(c)) / (R(u) - 1)`; removable 0/0 at `c`.
pub fn y_norm_integrand(m: &AffineModel, c: f64, u: f64) -> f64 {
    (m.f(u) - m.f(c)) / (m.r(u) - 1.0)
}

/// Adaptive Gauss–Kronrod evaluation of the corrected yield threshold.
/// `tol` is the absolute error allowed on the integral.
pub fn b_y_norm(m: &AffineModel, le: &LongEnd, tol: f64) -> Result<f64> {
    let c = le.c;
    let fc = m.f(c);
    let limit = m.df(c) / m.dr(c);
    if !limit.is_finite() {
        return Err(Error::DerivativeUnavailable("F'(c)/R'(c) is non-finite"));
    }
    let eps = singular_width(c);
    let body = quad::integrate(
        |u| (m.f(u) - fc) / (m.r(u) - 1.0),
        c + eps,
        0.0,
        tol,
        MAX_SUBINTERVALS,
    )?;
    Ok((limit * eps + body.value) / c)
}

pub fn b_inv(m: &AffineModel) -> ExtendedRate {
    let dr0 = m.dr(0.0);
    if dr0 < 0.0 {
        ExtendedRate::Finite(-m.df(0.0) / dr0)
    } else {
        ExtendedRate::PosInfinity
    }
}

/// Validates the model, finds the long end and all thresholds, and checks the
/// ordering `b_fw_norm < b_y_norm < b_asymp < b_inv` together with
/// `D ∩ (b_y_norm, b_inv) ≠ ∅`.
pub fn compute_thresholds(m: &AffineModel) -> Result<Thresholds> {
    m.ensure_valid()?;
    thresholds_unchecked(m)
}

/// [`compute_thresholds`] without re-running validation.
pub fn thresholds_unchecked(m: &AffineModel) -> Result<Thresholds> {
    let le = long_end::find_c(m, long_end::DEFAULT_TOL)?;
    let th = Thresholds {
        long_end: le,
        b_fw_norm: b_fw_norm(m, &le)?,
        b_y_norm: b_y_norm(m, &le, DEFAULT_QUAD_TOL)?,
        b_inv: b_inv(m),
        state_space: m.state_space(),
    };
    check_ordering(&th)?;
    Ok(th)
}

pub fn check_ordering(th: &Thresholds) -> Result<()> {
    let b_asymp = th.long_end.b_asymp;
    let ordered = th.b_fw_norm < th.b_y_norm && th.b_y_norm < b_asymp && b_asymp < th.b_inv;
    if !ordered {
        return Err(Error::OrderingViolation(format!(
            "expected b_fw_norm < b_y_norm < b_asymp < b_inv, got {} , {} , {} , {}",
            th.b_fw_norm, th.b_y_norm, b_asymp, th.b_inv
        )));
    }
    let humped_region_reachable = match th.state_space {
        StateSpace::AllReals => true,
        StateSpace::NonNegativeReals => 0.0 < th.b_inv,
    };
    if !humped_region_reachable {
        return Err(Error::OrderingViolation(format!(
            "state space misses (b_y_norm, b_inv) = ({}, {})",
            th.b_y_norm, th.b_inv
        )));
    }
    Ok(())
}
