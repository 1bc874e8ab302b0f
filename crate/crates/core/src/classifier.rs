//! Theorem-based shape classification and the proof diagnostics `k(x)` and
//! `M(x)`.
//!
//! The forward slope is `∂f = -B'(x)·k(x)` with `k(x) = F'(B) + r R'(B)`, and
//! `x²·∂Y = M(x) = [A - xF(B)] + r [B - x(R(B) - 1)]`, whose limit is
//! `c·(r - b_y_norm)`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::AffineModel;
use crate::riccati::AbCurve;
use crate::thresholds::Thresholds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeLabel {
    Normal,
    Humped,
    Inverse,
    Indeterminate,
}

impl fmt::Display for ShapeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeLabel::Normal => "normal",
            ShapeLabel::Humped => "humped",
            ShapeLabel::Inverse => "inverse",
            ShapeLabel::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeClass {
    pub label: ShapeLabel,
    /// Maturity of the maximum; only the numerical oracle fills this in.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hump_location: Option<f64>,
}

impl ShapeClass {
    pub fn new(label: ShapeLabel) -> Self {
        ShapeClass { label, hump_location: None }
    }
}

fn ensure_in_state_space(th: &Thresholds, r: f64) -> Result<()> {
    if th.state_space.contains(r) {
        Ok(())
    } else {
        Err(Error::OutOfStateSpace {
            r,
            state_space: th.state_space.label(),
        })
    }
}

fn classify(normal_below: f64, th: &Thresholds, r: f64) -> Result<ShapeClass> {
    ensure_in_state_space(th, r)?;
    let label = if r <= normal_below {
        ShapeLabel::Normal
    } else if r >= th.b_inv {
        ShapeLabel::Inverse
    } else {
        ShapeLabel::Humped
    };
    Ok(ShapeClass::new(label))
}

/// Normal if `r <= b_y_norm`, inverse if `r >= b_inv`, humped in between.
pub fn classify_yield(th: &Thresholds, r: f64) -> Result<ShapeClass> {
    classify(th.b_y_norm, th, r)
}

/// Normal if `r <= b_fw_norm`, inverse if `r >= b_inv`, humped in between.
pub fn classify_forward(th: &Thresholds, r: f64) -> Result<ShapeClass> {
    classify(th.b_fw_norm, th, r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub xs: Vec<f64>,
    pub k_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub m_limit: f64,
}

/// `k(x) = F'(B(x)) + r R'(B(x))`.
#[inline]
pub fn k_value(m: &AffineModel, r: f64, b: f64) -> f64 {
    m.df(b) + r * m.dr(b)
}

/// `M(x) = [A - xF(B)] + r [B - x(R(B) - 1)]`.
#[inline]
pub fn m_value(m: &AffineModel, r: f64, x: f64, a: f64, b: f64) -> f64 {
    (a - x * m.f(b)) + r * (b - x * (m.r(b) - 1.0))
}

/// Samples `k` and `M` on the nodes of `ab`.
pub fn diagnostics(m: &AffineModel, th: &Thresholds, r: f64, ab: &AbCurve) -> Diagnostics {
    let k_values = ab.b.iter().map(|&b| k_value(m, r, b)).collect();
    let m_values = (0..ab.len())
        .map(|i| m_value(m, r, ab.xs[i], ab.a[i], ab.b[i]))
        .collect();
    Diagnostics {
        xs: ab.xs.clone(),
        k_values,
        m_values,
        m_limit: th.c() * (r - th.b_y_norm),
    }
}
