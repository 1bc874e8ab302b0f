//! Embedded Runge–Kutta 5(4) integrator (Dormand–Prince coefficients) with
//! mixed absolute/relative error control and exact landing on requested
//! output abscissas.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Used as both absolute and relative tolerance.
    pub tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
}

/// One recorded point of the solution together with its slope.
#[derive(Debug, Clone, Copy)]
pub struct OdePoint<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    /// Every accepted step (output abscissas included).
    AllSteps,
    /// Only the starting point and the requested output abscissas.
    OutputsOnly,
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Integrates `y' = rhs(x, y)` from `x = 0` to the last entry of `outputs`,
/// landing exactly on every entry of `outputs` (which must be positive and
/// strictly increasing).
pub fn integrate<const N: usize, F>(
    mut rhs: F,
    y0: [f64; N],
    outputs: &[f64],
    opts: OdeOptions,
    record: Record,
) -> Result<Vec<OdePoint<N>>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut x = 0.0;
    let mut y = y0;
    let mut k1 = rhs(x, &y)?;
    let mut out = vec![OdePoint { x, y, dy: k1 }];
    let mut h = opts.initial_step;
    let mut next = 0;

    while next < outputs.len() {
        let target = outputs[next];
        let mut step = h;
        let mut lands = false;
        if x + step >= target - 1e-12 * target.abs() {
            step = target - x;
            lands = true;
        }

        let k2 = rhs(x + C2 * step, &combine(&y, step, &[(A21, &k1)]))?;
        let k3 = rhs(x + C3 * step, &combine(&y, step, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs(
            x + C4 * step,
            &combine(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = rhs(
            x + C5 * step,
            &combine(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            x + step,
            &combine(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = combine(&y, step, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let x_new = if lands { target } else { x + step };
        let k7 = rhs(x_new, &y_new)?;

        let mut err = 0.0_f64;
        for i in 0..N {
            let e = step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || y_new.iter().chain(&k7).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { x: x_new });
        }

        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };

        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            if lands {
                next += 1;
                out.push(OdePoint { x, y, dy: k1 });
                // A truncated landing step says nothing about the natural step size.
                h = h.max(step * factor);
            } else {
                if record == Record::AllSteps {
                    out.push(OdePoint { x, y, dy: k1 });
                }
                h = step * factor;
            }
        } else {
            h = step * factor;
            if h < opts.min_step {
                return Err(Error::StepSizeUnderflow { x, min_step: opts.min_step });
            }
        }
    }
    Ok(out)
}
