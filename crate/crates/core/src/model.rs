//! Exponents, load parameters and the scalar kernels of the model.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{exp_sinh, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Given {
    P,
    Q,
}

/// The Hölder pair (p, q) together with the derived exponents p+, q− and κ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub p: f64,
    pub q: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub kappa: f64,
}

pub fn exponents(value: f64, given: Given) -> Result<ExponentSet> {
    if !value.is_finite() || value <= 1.0 {
        return Err(domain(format!(
            "exponent must be finite and > 1, got {value}"
        )));
    }
    let conj = value / (value - 1.0);
    let (p, q) = match given {
        Given::P => (value, conj),
        Given::Q => (conj, value),
    };
    let p_plus = p.max(2.0);
    Ok(ExponentSet {
        p,
        q,
        p_plus,
        q_minus: q.min(2.0),
        kappa: 1.0 + p - p / p_plus,
    })
}

impl ExponentSet {
    pub fn from_p(p: f64) -> Result<Self> {
        exponents(p, Given::P)
    }

    pub fn from_q(q: f64) -> Result<Self> {
        exponents(q, Given::Q)
    }

    /// `Some(k)` when p is a small positive integer, so that |m|^p is exact in integers.
    pub fn integer_p(&self) -> Option<u32> {
        if self.p.fract() == 0.0 && self.p <= 8.0 {
            Some(self.p as u32)
        } else {
            None
        }
    }

    pub fn is_quadratic(&self) -> bool {
        self.p == 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadParams {
    pub n1: usize,
    pub n2: usize,
    pub alpha: f64,
}

impl LoadParams {
    pub fn new(n1: usize, n2: usize, exps: &ExponentSet) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(domain(format!(
                "n1 and n2 must be positive, got n1 = {n1}, n2 = {n2}"
            )));
        }
        Ok(Self {
            n1,
            n2,
            alpha: load(n1, n2, exps),
        })
    }
}

/// α = n2 / n1^(p+/2).
pub fn load(n1: usize, n2: usize, exps: &ExponentSet) -> f64 {
    n2 as f64 / (n1 as f64).powf(exps.p_plus / 2.0)
}

/// round(α · n1^(p+/2)); may be zero for small loads.
pub fn patterns_for_load(alpha: f64, n1: usize, exps: &ExponentSet) -> usize {
    (alpha * (n1 as f64).powf(exps.p_plus / 2.0)).round() as usize
}

pub fn entropy(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(domain(format!("entropy needs r in [0, 1], got {r}")));
    }
    Ok(xlogx_neg(r) + xlogx_neg(1.0 - r))
}

fn xlogx_neg(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

pub fn phi(x: f64, y: f64, p: f64) -> f64 {
    (x + y).abs().powf(p) - (x - y).abs().powf(p)
}

pub fn phi_bar(r: f64, p: f64) -> f64 {
    1.0 - (1.0 - 2.0 * r).powf(p)
}

pub fn threshold_t(r: f64, p: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 0.5) || !(p >= 2.0) || !p.is_finite() {
        return Err(domain(format!(
            "threshold_t needs r in (0, 1/2] and p >= 2, got r = {r}, p = {p}"
        )));
    }
    Ok(1.0 - (1.0 - 2.0 * r).powf(p) - r.powf(p / 2.0))
}

pub fn d_constant(p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(domain(format!("d(p) is defined for p in (1, 2], got {p}")));
    }
    let inner = 2f64.powf(p - 1.0) * ((p - 1.0) / p).powf(p - 1.0) * (3.0 * p - 2.0) / p;
    Ok(2f64.powf(p) * (2.0 * p - 1.0 - inner))
}

/// e(p) = ∫_0^∞ exp(−x^(2/p)/2) dx.
pub fn e_constant(p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain(format!("e(p) needs p > 0, got {p}")));
    }
    let s = 2.0 / p;
    // the integrand decays on the scale where x^s/2 ~ 1
    let scale = 2f64.powf(p / 2.0);
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-14,
        max_level: 14,
    };
    Ok(exp_sinh(|x| (-0.5 * x.powf(s)).exp(), 0.0, scale, opts)?.value)
}

pub fn kappa1(p: f64) -> Result<f64> {
    let gap = (d_constant(p)? - e_constant(p)?).abs();
    let a = 0.25 * (2.0f64 / 3.0).powf(p) * gap * gap;
    let b = (2.0 / 3.0) * 2f64.powf(-2.0 / p) * gap.powf(2.0 / p);
    Ok(a.min(b) / 8.0)
}

/// ln h where h = 2 Σ_{n≥1} exp(n^(2p−2) − (n−1)²/4); `None` when the series diverges (p ≥ 2).
pub fn ln_h_series(p: f64) -> Result<Option<f64>> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(domain(format!("h needs p > 1, got {p}")));
    }
    if p >= 2.0 {
        return Ok(None);
    }
    let a = 2.0 * p - 2.0;
    let exponent = |n: f64| n.powf(a) - (n - 1.0) * (n - 1.0) / 4.0;
    let mut peak = f64::NEG_INFINITY;
    let mut total = 0.0;
    let mut n = 1.0;
    loop {
        let e = exponent(n);
        if e > peak {
            total *= (peak - e).exp();
            peak = e;
        }
        total += (e - peak).exp();
        // past the maximum the terms decrease monotonically
        if (e - peak).exp() < 1e-14 && n > 2.0 && exponent(n + 1.0) < e {
            break;
        }
        n += 1.0;
        if n > 1e9 {
            return Err(Error::Numeric(format!(
                "h series for p = {p} did not settle"
            )));
        }
    }
    Ok(Some(std::f64::consts::LN_2 + peak + total.ln()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    pub p: f64,
    pub d_p: f64,
    pub e_p: f64,
    pub kappa1_p: f64,
    pub ln_h: Option<f64>,
}

impl ConstantsTable {
    pub fn new(p: f64) -> Result<Self> {
        Ok(Self {
            p,
            d_p: d_constant(p)?,
            e_p: e_constant(p)?,
            kappa1_p: kappa1(p)?,
            ln_h: ln_h_series(p)?,
        })
    }

    pub fn h(&self) -> Option<f64> {
        self.ln_h.map(f64::exp)
    }
}
