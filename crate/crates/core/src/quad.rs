//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the even-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]` to absolute error `tol`, bisecting the
/// segment with the largest error estimate until the summed estimate drops
/// below `tol` or `max_intervals` segments exist.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64, max_intervals: usize) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let first = kronrod(&f, a, b);
    if !first.value.is_finite() {
        return Err(Error::QuadratureFailure { intervals: 1, estimate: f64::INFINITY });
    }
    let mut total_error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while total_error > tol {
        if heap.len() >= max_intervals {
            return Err(Error::QuadratureFailure {
                intervals: heap.len(),
                estimate: total_error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Cannot split any further in floating point.
            return Err(Error::QuadratureFailure {
                intervals: heap.len() + 1,
                estimate: total_error,
            });
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(Error::QuadratureFailure {
                intervals: heap.len() + 2,
                estimate: f64::INFINITY,
            });
        }
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Guard against cancellation drift in the running total.
        if total_error <= tol {
            total_error = heap.iter().map(|s| s.error).sum();
        }
    }

    // Sum small contributions first.
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.value.abs().total_cmp(&y.value.abs()));
    let value = segments.iter().map(|s| s.value).sum();
    Ok(QuadResult {
        value,
        error: total_error,
        intervals: segments.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1e-14, 100).unwrap();
        assert!((r.value - (32.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn smooth_transcendental() {
        let r = integrate(f64::exp, -1.0, 0.0, 1e-13, 1000).unwrap();
        assert!((r.value - (1.0 - (-1.0f64).exp())).abs() < 1e-13);
        let r = integrate(|x| 1.0 / (1.0 + 25.0 * x * x), -1.0, 1.0, 1e-12, 1000).unwrap();
        assert!((r.value - 0.4 * 5f64.atan()).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x| x.sin(), std::f64::consts::PI, 0.0, 1e-13, 100).unwrap();
        assert!((r.value + 2.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_endpoint_needs_subdivision() {
        let r = integrate(f64::sqrt, 0.0, 1.0, 1e-12, 100_000).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11);
        assert!(r.intervals > 1);
    }

    #[test]
    fn interval_cap_reports_failure() {
        let r = integrate(|x: f64| 1.0 / x.abs().sqrt(), -1.0, 1.0, 1e-14, 8);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
