//! Random increments: one-sided stable (for the subordinator clock) and
//! Gaussian (for the Brownian path).
//!
//! A subordinator increment over a step `dt` is `dt^(1/a) * S`, where `S`
//! follows the totally skewed a-stable law normalized so that
//! `E[exp(-s * increment)] = exp(-dt * s^a)`. `S` is produced by the
//! Chambers-Mallows-Stuck transform from one uniform and one exponential
//! draw, in the Samorodnitsky-Taqqu parametrization with skewness 1, and
//! then scaled by `cos(pi*a/2)^(1/a)`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SolverError};
use crate::rng::RngStream;

/// Largest accepted stability index. The CMS transform degenerates as the
/// index approaches 1 (the scale `cos(pi*a/2)^(1/a)` collapses to 0), so
/// indices above this cap are rejected.
pub const MAX_STABLE_INDEX: f64 = 0.995;

/// Parameters of the one-sided stable law driving the subordinator.
///
/// Skewness and center are fixed at 1 and 0: the law is supported on the
/// positive half line. The scale is `cos(pi*a/2)^(1/a)`, which makes a unit
/// increment satisfy `E[exp(-s*T(1))] = exp(-s^a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    a: f64,
    skewness: f64,
    scale: f64,
    center: f64,
    /// Gain of the raw skewness-1 CMS variate, `cos(pi*a/2)^(-1/a)`; the
    /// public `scale` cancels it so increments are Kanter-normalized.
    cms_gain: f64,
    inv_a: f64,
}

impl StableParams {
    /// Builds subordinator parameters for index `a` in (0, 1), capped at
    /// [`MAX_STABLE_INDEX`].
    pub fn subordinator(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(SolverError::InvalidParameter(format!(
                "stable index a must lie in (0,1), got {a}"
            )));
        }
        if a > MAX_STABLE_INDEX {
            return Err(SolverError::InvalidParameter(format!(
                "stable index a = {a} exceeds {MAX_STABLE_INDEX}; the sampler \
                 is numerically unreliable this close to 1"
            )));
        }
        let cos_half = (FRAC_PI_2 * a).cos();
        let inv_a = a.recip();
        Ok(Self {
            a,
            skewness: 1.0,
            scale: cos_half.powf(inv_a),
            center: 0.0,
            cms_gain: cos_half.powf(-inv_a),
            inv_a,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn skewness(&self) -> f64 {
        self.skewness
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub(crate) fn inv_a(&self) -> f64 {
        self.inv_a
    }
}

/// Draws the skewness-1 stable variate with unit Samorodnitsky-Taqqu scale
/// via the CMS transform: `V` uniform on (-pi/2, pi/2), `W` standard
/// exponential, and for index a < 1 the shift angle is exactly pi/2.
///
/// Retries on the measure-zero float edge cases (`V` landing exactly on an
/// endpoint, `W = 0`) so the result is always finite and positive; the retry
/// consumes draws from the same stream and stays deterministic.
fn sample_unit_skew1(p: &StableParams, rng: &mut RngStream) -> f64 {
    loop {
        let u: f64 = rng.random();
        let w: f64 = rng.random();
        let v = (u - 0.5) * PI;
        let exp = -(1.0 - w).ln();
        let shifted = v + FRAC_PI_2;
        let x = p.cms_gain * (p.a * shifted).sin() / v.cos().powf(p.inv_a)
            * ((v - p.a * shifted).cos() / exp).powf((1.0 - p.a) * p.inv_a);
        if x.is_finite() && x > 0.0 {
            return x;
        }
    }
}

/// Draws one subordinator increment over a step of length `dt`:
/// `dt^(1/a) * scale * S` with `S` the unit CMS variate. Strictly positive.
pub fn stable_increment(params: &StableParams, dt: f64, rng: &mut RngStream) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    Ok(raw_stable_increment(params, dt.powf(params.inv_a), rng))
}

/// Increment with the step factor `dt^(1/a)` precomputed; the expression is
/// kept identical to `stable_increment` so cached and uncached call sites
/// produce bit-equal values from the same stream.
pub(crate) fn raw_stable_increment(
    params: &StableParams,
    dt_pow_inv_a: f64,
    rng: &mut RngStream,
) -> f64 {
    dt_pow_inv_a * params.scale * sample_unit_skew1(params, rng)
}

/// Draws a Brownian displacement over `dt` in `dim` dimensions:
/// `sqrt(2) * dt^(1/2) * z` with `z` standard normal per coordinate.
pub fn gaussian_increment(dim: usize, dt: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(SolverError::InvalidParameter(
            "dimension must be at least 1".to_string(),
        ));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::InvalidParameter(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    let step = SQRT_2 * dt.sqrt();
    let mut out = vec![0.0; dim];
    fill_gaussian_step(step, rng, &mut out);
    Ok(out)
}

/// Fills `out` with one Gaussian displacement, `step = sqrt(2)*sqrt(dt)`
/// precomputed; draw order matches `gaussian_increment` coordinate by
/// coordinate.
pub(crate) fn fill_gaussian_step(step: f64, rng: &mut RngStream, out: &mut [f64]) {
    for slot in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *slot = step * z;
    }
}
