//! Monte Carlo zero-coupon bond prices `E[exp(-∫₀ˣ r ds)]` for the built-in
//! models, as an independent check of `P = exp(A(x) + r₀B(x))`.
//!
//! * Vasicek: exact Gaussian OU transitions, trapezoidal integral, antithetic.
//! * CIR: full-truncation Euler, trapezoidal integral of `max(r, 0)`,
//!   antithetic.
//! * Gamma-OU: exact. Jumps arrive at rate `λk` with exponential sizes of mean
//!   `θ` (the jump law behind `F(u) = λθku/(1 - θu)`); between jumps the rate
//!   decays as `e^{-λt}`, so the integral is accumulated in closed form.
//!
//! Paths are simulated in fixed-size batches, batch `i` drawing from stream
//! `(seed, i)`; batch statistics are merged in batch order, so results do not
//! depend on the thread count.

use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AffineModel, CirParams, GammaOuParams, ModelSpec, VasicekParams};
use crate::riccati::solve_ab_on_grid;
use crate::rng::{derive_seed, stream, StreamRng};

pub const MIN_PATHS: usize = 1000;
/// Minimum time steps per year of maturity.
pub const MIN_STEPS_PER_YEAR: f64 = 50.0;
pub const Z_LIMIT: f64 = 3.0;
const BATCH: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

/// Smallest admissible step count for maturity `x`.
pub fn min_steps(x: f64) -> usize {
    ((MIN_STEPS_PER_YEAR * x).ceil() as usize).max(1)
}

/// Running mean / sum of squared deviations (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn variance(&self) -> f64 {
        if self.n > 1.0 {
            self.m2 / (self.n - 1.0)
        } else {
            0.0
        }
    }
}

/// Discount factors of one antithetic Vasicek pair.
fn vasicek_pair(p: &VasicekParams, r0: f64, dt: f64, n_steps: usize, rng: &mut StreamRng) -> (f64, f64) {
    let decay = (-p.lambda * dt).exp();
    let sd = p.sigma * (-(-2.0 * p.lambda * dt).exp_m1() / (2.0 * p.lambda)).sqrt();
    let (mut ra, mut rb) = (r0, r0);
    let (mut ia, mut ib) = (0.0, 0.0);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let na = p.theta + (ra - p.theta) * decay + sd * z;
        let nb = p.theta + (rb - p.theta) * decay - sd * z;
        ia += 0.5 * (ra + na) * dt;
        ib += 0.5 * (rb + nb) * dt;
        ra = na;
        rb = nb;
    }
    ((-ia).exp(), (-ib).exp())
}

/// Discount factors of one antithetic full-truncation CIR pair.
fn cir_pair(p: &CirParams, r0: f64, dt: f64, n_steps: usize, rng: &mut StreamRng) -> (f64, f64) {
    let sqrt_dt = dt.sqrt();
    let (mut ra, mut rb) = (r0, r0);
    let (mut ia, mut ib) = (0.0, 0.0);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let (pa, pb) = (ra.max(0.0), rb.max(0.0));
        let na = ra + p.a * (p.theta - pa) * dt + p.sigma * pa.sqrt() * sqrt_dt * z;
        let nb = rb + p.a * (p.theta - pb) * dt - p.sigma * pb.sqrt() * sqrt_dt * z;
        ia += 0.5 * (pa + na.max(0.0)) * dt;
        ib += 0.5 * (pb + nb.max(0.0)) * dt;
        ra = na;
        rb = nb;
    }
    ((-ia).exp(), (-ib).exp())
}

/// Discount factor of one exact gamma-OU path.
fn gamma_path(p: &GammaOuParams, r0: f64, x: f64, arrivals: &Exp<f64>, sizes: &Exp<f64>, rng: &mut StreamRng) -> f64 {
    let lambda = p.lambda;
    let mut integral = -r0 * (-lambda * x).exp_m1() / lambda;
    let mut t: f64 = rng.sample(arrivals);
    while t < x {
        let jump: f64 = rng.sample(sizes);
        integral += -jump * (-lambda * (x - t)).exp_m1() / lambda;
        t += rng.sample(arrivals);
    }
    (-integral).exp()
}

/// Estimates the zero-coupon bond price for maturity `x` from short rate `r0`.
/// For the antithetic schemes `n_paths` is rounded up to an even count and
/// the standard error is computed from pair averages.
pub fn mc_bond_price(
    m: &AffineModel,
    r0: f64,
    x: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let spec = *m.spec().ok_or_else(|| {
        Error::UnsupportedModel(format!("Monte Carlo needs a built-in model, got {}", m.name()))
    })?;
    if !m.state_space().contains(r0) {
        return Err(Error::OutOfStateSpace { r: r0, state_space: m.state_space().label() });
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidInput(format!("maturity {x} must be positive")));
    }
    if n_paths < MIN_PATHS {
        return Err(Error::InvalidInput(format!("n_paths = {n_paths} is below the minimum {MIN_PATHS}")));
    }
    if n_steps < min_steps(x) {
        return Err(Error::InvalidInput(format!(
            "n_steps = {n_steps} is below the minimum {} for x = {x}",
            min_steps(x)
        )));
    }

    let dt = x / n_steps as f64;
    let antithetic = !matches!(spec, ModelSpec::GammaOu(_));
    let samples = if antithetic { n_paths.div_ceil(2) } else { n_paths };
    let n_batches = samples.div_ceil(BATCH);

    let gamma_laws = match spec {
        ModelSpec::GammaOu(p) => Some((
            Exp::new(p.lambda * p.k).map_err(|e| Error::InvalidInput(e.to_string()))?,
            Exp::new(1.0 / p.theta).map_err(|e| Error::InvalidInput(e.to_string()))?,
        )),
        _ => None,
    };

    let batches: Vec<Moments> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let count = BATCH.min(samples - b * BATCH);
            let mut acc = Moments::default();
            for _ in 0..count {
                let v = match (&spec, &gamma_laws) {
                    (ModelSpec::Vasicek(p), _) => {
                        let (u, w) = vasicek_pair(p, r0, dt, n_steps, &mut rng);
                        0.5 * (u + w)
                    }
                    (ModelSpec::Cir(p), _) => {
                        let (u, w) = cir_pair(p, r0, dt, n_steps, &mut rng);
                        0.5 * (u + w)
                    }
                    (ModelSpec::GammaOu(p), Some((arrivals, sizes))) => {
                        gamma_path(p, r0, x, arrivals, sizes, &mut rng)
                    }
                    (ModelSpec::GammaOu(_), None) => unreachable!("gamma laws are built above"),
                };
                acc.push(v);
            }
            acc
        })
        .collect();
    let total = batches.into_iter().fold(Moments::default(), Moments::merge);

    Ok(McEstimate {
        price: total.mean,
        std_error: (total.variance() / total.n).sqrt(),
        n_paths: if antithetic { 2 * samples } else { samples },
        n_steps,
        seed,
    })
}

/// `exp(A(x) + r₀ B(x))` from a tight Riccati solve.
pub fn affine_price(m: &AffineModel, r0: f64, x: f64) -> Result<f64> {
    let ab = solve_ab_on_grid(m, &[x], 1e-12)?;
    let last = ab.len() - 1;
    Ok((ab.a[last] + r0 * ab.b[last]).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCheck {
    pub estimate: McEstimate,
    pub affine_price: f64,
    pub z_score: f64,
    pub retried: bool,
}

impl McCheck {
    pub fn passed(&self) -> bool {
        self.z_score.abs() <= Z_LIMIT
    }

    /// `{"price", "std_error", "affine_price", "z_score"}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "price": self.estimate.price,
            "std_error": self.estimate.std_error,
            "affine_price": self.affine_price,
            "z_score": self.z_score,
        })
        .to_string()
    }
}

fn z_score(estimate: &McEstimate, reference: f64) -> f64 {
    let diff = estimate.price - reference;
    if estimate.std_error > 0.0 {
        diff / estimate.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Compares the Monte Carlo price with the affine price; a failing 3-sigma
/// test is repeated once on a fresh seed derived from `seed`.
pub fn mc_check(m: &AffineModel, r0: f64, x: f64, n_paths: usize, n_steps: usize, seed: u64) -> Result<McCheck> {
    let reference = affine_price(m, r0, x)?;
    let estimate = mc_bond_price(m, r0, x, n_paths, n_steps, seed)?;
    let first = McCheck { estimate, affine_price: reference, z_score: z_score(&estimate, reference), retried: false };
    if first.passed() {
        return Ok(first);
    }
    let estimate = mc_bond_price(m, r0, x, n_paths, n_steps, derive_seed(seed, u64::MAX >> 1))?;
    Ok(McCheck { estimate, affine_price: reference, z_score: z_score(&estimate, reference), retried: true })
}
