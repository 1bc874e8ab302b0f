//! Long end of the curve: the negative root `c` of `R(c) = 1`, the
//! quasi-mean-reversion `λ = -1/c` and the long-term rate `b_asymp = -F(c)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::AffineModel;
use crate::root::brent;

/// Residual tolerance on `R(c) - 1`.
pub const DEFAULT_TOL: f64 = 1e-13;
const ABSCISSA_TOL: f64 = 1e-14;
const BRACKET_START: f64 = -1e-6;
const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongEnd {
    pub c: f64,
    pub lambda_qmr: f64,
    pub b_asymp: f64,
}

/// Locates `c < 0` with `R(c) = 1` without validating the model first.
pub(crate) fn locate_root(m: &AffineModel, tol: f64) -> Result<f64> {
    if m.r_is_linear() {
        let beta = m.dr(0.0);
        return if beta < 0.0 { Ok(1.0 / beta) } else { Err(Error::NoRoot) };
    }

    let edge = m.r_domain_lower();
    let g = |u: f64| m.r(u) - 1.0;
    let mut right = 0.0;
    let mut u = BRACKET_START;
    for _ in 0..MAX_DOUBLINGS {
        if u <= edge {
            u = edge;
        }
        let value = g(u);
        if value.is_nan() {
            return Err(Error::NoRoot);
        }
        if value >= 0.0 {
            if value == 0.0 {
                return Ok(u);
            }
            return brent(g, u, right, ABSCISSA_TOL, tol);
        }
        if u == edge {
            return Err(Error::NoRoot);
        }
        right = u;
        u *= 2.0;
    }
    Err(Error::NoRoot)
}

/// Finds the long-end quantities. Linear `R(u) = βu` with `β < 0` gives
/// `c = 1/β` exactly; otherwise the root is bracketed by leftward doubling
/// and polished with Brent's method to `|R(c) - 1| <= tol`.
pub fn find_c(m: &AffineModel, tol: f64) -> Result<LongEnd> {
    let c = locate_root(m, tol)?;
    let b_asymp = -m.f(c);
    if !b_asymp.is_finite() {
        return Err(Error::NonFinite { x: f64::INFINITY });
    }
    Ok(LongEnd {
        c,
        lambda_qmr: -1.0 / c,
        b_asymp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    #[test]
    fn vasicek_root_is_exact() {
        let m = make_vasicek(VasicekParams { lambda: 1.0, theta: 0.05, sigma: 0.1 }).unwrap();
        let le = find_c(&m, DEFAULT_TOL).unwrap();
        assert_eq!(le.c, -1.0);
        assert_eq!(le.lambda_qmr, 1.0);
        assert!((le.b_asymp - 0.045).abs() < 1e-15);
    }

    #[test]
    fn cir_root_matches_quadratic() {
        let p = CirParams { a: 1.0, theta: 0.05, sigma: 0.2 };
        let m = make_cir(p).unwrap();
        let le = find_c(&m, DEFAULT_TOL).unwrap();
        let c = (p.a - p.gamma()) / (p.sigma * p.sigma);
        assert!((le.c - c).abs() < 1e-13, "{} vs {}", le.c, c);
        assert!((m.r(le.c) - 1.0).abs() <= DEFAULT_TOL);
        assert!((le.b_asymp - 0.049_038_105_676_658).abs() < 1e-12);
    }

    #[test]
    fn gamma_root() {
        let m = make_gamma_ou(GammaOuParams { lambda: 1.0, k: 1.0, theta: 0.5 }).unwrap();
        let le = find_c(&m, DEFAULT_TOL).unwrap();
        assert_eq!(le.c, -1.0);
        assert!((le.b_asymp - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_root_for_non_decreasing_linear_r() {
        let m = CustomModel {
            name: "flat".into(),
            f: Component::new(|u| 0.05 * u + u * u, |u| 0.05 + 2.0 * u),
            r: Component::new(|u| 0.1 * u, |_| 0.1).linear(true),
            state_space: StateSpace::NonNegativeReals,
        }
        .build();
        assert!(matches!(find_c(&m, DEFAULT_TOL), Err(Error::NoRoot)));
    }

    #[test]
    fn no_root_when_domain_edge_blocks() {
        // R = u² - u stays below 1 on [-0.5, 0].
        let m = CustomModel {
            name: "edge".into(),
            f: Component::new(|u| 0.05 * u, |_| 0.05).linear(true),
            r: Component::new(|u| u * u - u, |u| 2.0 * u - 1.0).with_domain_lower(-0.5),
            state_space: StateSpace::NonNegativeReals,
        }
        .build();
        assert!(matches!(find_c(&m, DEFAULT_TOL), Err(Error::NoRoot)));
    }

    #[test]
    fn huge_and_tiny_mean_reversion() {
        for a in [1e-4, 1e4] {
            let m = make_cir(CirParams { a, theta: 0.05, sigma: 0.1 }).unwrap();
            let le = find_c(&m, DEFAULT_TOL).unwrap();
            assert!((m.r(le.c) - 1.0).abs() <= 1e-12, "a = {a}");
            let samples = (1..50).map(|i| le.c * i as f64 / 50.0);
            assert!(samples.into_iter().all(|u| m.r(u) < 1.0));
        }
    }
}
