//! Double-exponential quadrature.
//!
//! `tanh_sinh` integrates over a finite interval, `exp_sinh` over a half line
//! `[a, ∞)`. Both refine by halving the step on the transformed axis and stop
//! once two successive levels agree to within the requested tolerance.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_level: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_level: 12,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    pub fn rel(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub levels: u32,
    pub evaluations: usize,
}

const MIN_LEVEL: u32 = 3;
const TANH_SINH_TMAX: f64 = 4.0;
const EXP_SINH_TMIN: f64 = -4.5;
const EXP_SINH_TMAX: f64 = 4.0;

/// ∫_a^b f(x) dx.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!(
            "tanh_sinh needs finite limits, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            levels: 0,
            evaluations: 0,
        });
    }
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    // Returns the weighted contribution of the symmetric node pair at t > 0.
    let pair = |t: f64| -> Result<f64> {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (cu * cu);
        if w == 0.0 {
            return Ok(0.0);
        }
        // distance from the nearer endpoint, computed without cancellation
        let d = half * 2.0 / (1.0 + (2.0 * u).exp());
        let mut acc = 0.0;
        for x in [a + d, b - d] {
            if x <= a || x >= b {
                continue;
            }
            let fx = f(x);
            if !fx.is_finite() {
                return Err(Error::Numeric(format!("integrand not finite at x = {x}")));
            }
            acc += w * fx;
        }
        Ok(acc)
    };
    let f0 = f(center);
    if !f0.is_finite() {
        return Err(Error::Numeric(format!(
            "integrand not finite at x = {center}"
        )));
    }
    refine(half * FRAC_PI_2 * f0, pair, TANH_SINH_TMAX, opts)
}

/// ∫_a^∞ f(x) dx with nodes `a + scale·exp(π/2·sinh t)`.
///
/// `scale` should be of the order of the integrand's decay length.
pub fn exp_sinh<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<Quadrature> {
    if !(a.is_finite() && scale.is_finite() && scale > 0.0) {
        return Err(Error::Numeric(format!(
            "exp_sinh needs finite a and scale > 0, got a = {a}, scale = {scale}"
        )));
    }
    let node = |t: f64| -> Result<f64> {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let x = a + scale * e;
        if !x.is_finite() || x == a {
            return Ok(0.0);
        }
        let w = scale * FRAC_PI_2 * t.cosh() * e;
        let fx = f(x);
        if fx == 0.0 {
            return Ok(0.0);
        }
        if !fx.is_finite() || !w.is_finite() {
            return Err(Error::Numeric(format!("integrand not finite at x = {x}")));
        }
        Ok(w * fx)
    };
    let pair = |t: f64| -> Result<f64> {
        let right = if t <= EXP_SINH_TMAX { node(t)? } else { 0.0 };
        let left = if -t >= EXP_SINH_TMIN { node(-t)? } else { 0.0 };
        Ok(right + left)
    };
    let c = node(0.0)?;
    refine(c, pair, EXP_SINH_TMAX.max(-EXP_SINH_TMIN), opts)
}

fn refine<P: Fn(f64) -> Result<f64>>(
    center: f64,
    pair: P,
    tmax: f64,
    opts: QuadOptions,
) -> Result<Quadrature> {
    let mut sum = center;
    let mut evaluations = 1usize;
    // level 0: h = 1
    let mut j = 1usize;
    while (j as f64) <= tmax {
        sum += pair(j as f64)?;
        evaluations += 2;
        j += 1;
    }
    let mut h = 1.0;
    let mut estimate = h * sum;
    for level in 1..=opts.max_level {
        h *= 0.5;
        let mut k = 1usize;
        loop {
            let t = k as f64 * h;
            if t > tmax {
                break;
            }
            sum += pair(t)?;
            evaluations += 2;
            k += 2;
        }
        let next = h * sum;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVEL && diff <= opts.abs_tol.max(opts.rel_tol * next.abs()) {
            return Ok(Quadrature {
                value: next,
                error: diff,
                levels: level,
                evaluations,
            });
        }
        if level == opts.max_level {
            return Err(Error::Numeric(format!(
                "quadrature did not converge after {level} levels: estimate {next}, last change {diff}"
            )));
        }
    }
    unreachable!("max_level loop always returns")
}
