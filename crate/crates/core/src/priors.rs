//! Hidden-unit priors: sampling, the cumulant u(x) = log E[e^{xz}], ψ_r norms and
//! the growth of u(x)/|x|^p.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{exp_sinh, tanh_sinh, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorSpec {
    Gaussian,
    Rademacher,
    /// Density proportional to exp(−|z|^q).
    StretchedExp {
        q: f64,
    },
    /// Standard Gaussian with probability `weight`, otherwise ±1.
    GaussBernoulliMix {
        weight: f64,
    },
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Gaussian => write!(f, "gaussian"),
            PriorSpec::Rademacher => write!(f, "rademacher"),
            PriorSpec::StretchedExp { q } => write!(f, "stretched_exp:{q}"),
            PriorSpec::GaussBernoulliMix { weight } => write!(f, "mix:{weight}"),
        }
    }
}

/// Parses `gaussian`, `rademacher`, `stretched_exp:<q>` or `mix:<weight>`.
impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| {
                domain(format!("prior {name} needs a parameter, e.g. {name}:1.5"))
            })?;
            a.trim()
                .parse()
                .map_err(|_| domain(format!("bad prior parameter {a:?}")))
        };
        let spec = match name.trim() {
            "gaussian" => PriorSpec::Gaussian,
            "rademacher" => PriorSpec::Rademacher,
            "stretched_exp" | "stretched" => PriorSpec::StretchedExp { q: number(arg)? },
            "mix" | "gauss_bernoulli_mix" => PriorSpec::GaussBernoulliMix {
                weight: number(arg)?,
            },
            other => return Err(domain(format!("unknown prior family {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::StretchedExp { q } if !(q > 1.0 && q.is_finite()) => {
                Err(domain(format!("stretched_exp needs finite q > 1, got {q}")))
            }
            PriorSpec::GaussBernoulliMix { weight } if !(0.0..=1.0).contains(&weight) => Err(
                domain(format!("mixture weight must lie in [0, 1], got {weight}")),
            ),
            _ => Ok(()),
        }
    }

    /// The q in P(|z| ≥ t) ≃ e^{−t^q}; infinite for bounded priors.
    pub fn tail_exponent(&self) -> f64 {
        match *self {
            PriorSpec::Gaussian => 2.0,
            PriorSpec::Rademacher => f64::INFINITY,
            PriorSpec::StretchedExp { q } => q,
            PriorSpec::GaussBernoulliMix { weight } if weight > 0.0 => 2.0,
            PriorSpec::GaussBernoulliMix { .. } => f64::INFINITY,
        }
    }

    fn continuous_part(&self) -> Option<Tail> {
        match *self {
            PriorSpec::Gaussian | PriorSpec::GaussBernoulliMix { .. } => {
                Some(Tail { c: 0.5, q: 2.0 })
            }
            PriorSpec::StretchedExp { q } => Some(Tail { c: 1.0, q }),
            PriorSpec::Rademacher => None,
        }
    }
}

/// log cosh x without overflow.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn sample<R: Rng + ?Sized>(prior: &PriorSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    prior.validate()?;
    let sign = |rng: &mut R| if rng.random::<bool>() { 1.0 } else { -1.0 };
    Ok(match *prior {
        PriorSpec::Gaussian => (0..n).map(|_| StandardNormal.sample(rng)).collect(),
        PriorSpec::Rademacher => (0..n).map(|_| sign(rng)).collect(),
        PriorSpec::StretchedExp { q } => {
            // |z|^q ~ Gamma(1/q, 1)
            let g = Gamma::new(1.0 / q, 1.0).map_err(|e| domain(e.to_string()))?;
            (0..n)
                .map(|_| sign(rng) * g.sample(rng).powf(1.0 / q))
                .collect()
        }
        PriorSpec::GaussBernoulliMix { weight } => (0..n)
            .map(|_| {
                if rng.random::<f64>() < weight {
                    StandardNormal.sample(rng)
                } else {
                    sign(rng)
                }
            })
            .collect(),
    })
}

/// Unnormalized half-line density exp(−c z^q), z ≥ 0.
#[derive(Clone, Copy, Debug)]
struct Tail {
    c: f64,
    q: f64,
}

const U_OPTS: QuadOptions = QuadOptions {
    abs_tol: 0.0,
    rel_tol: 1e-13,
    max_level: 14,
};

impl Tail {
    /// ln ∫_0^∞ e^{−c z^q} (e^{xz} + e^{−xz}) dz for x ≥ 0.
    fn log_tilted(&self, x: f64) -> Result<f64> {
        let Tail { c, q } = *self;
        let x = x.abs();
        let zs = if x == 0.0 {
            0.0
        } else {
            (x / (c * q)).powf(1.0 / (q - 1.0))
        };
        let peak = x * zs - c * zs.powf(q);
        let czq = c * zs.powf(q);
        // exponent relative to the peak, as a function of t = z − z*
        let shifted = move |t: f64| {
            if zs > 0.0 {
                x * t - czq * (q * (t / zs).ln_1p()).exp_m1()
            } else {
                -c * t.powf(q)
            }
        };
        let integrand = move |t: f64| {
            let z = zs + t;
            shifted(t).exp() * (1.0 + (-2.0 * x * z).exp())
        };
        let width = if zs > 0.0 {
            1.0 / (c * q * (q - 1.0) * zs.powf(q - 2.0)).sqrt()
        } else {
            c.powf(-1.0 / q)
        };
        let right = exp_sinh(integrand, 0.0, width, U_OPTS)?.value;
        let left = if zs > 0.0 {
            tanh_sinh(integrand, -zs, 0.0, U_OPTS)?.value
        } else {
            0.0
        };
        Ok(peak + (left + right).ln())
    }

    /// ln ∫_0^∞ exp((z/λ)^r − c z^q) dz, or +∞ when the integral diverges.
    fn log_psi(&self, r: f64, lambda: f64) -> Result<f64> {
        let Tail { c, q } = *self;
        let li = lambda.powf(-r);
        if r > q {
            return Ok(f64::INFINITY);
        }
        if r == q {
            let a = c - li;
            if a <= 0.0 {
                return Ok(f64::INFINITY);
            }
            let f = move |z: f64| (-a * z.powf(q)).exp();
            return Ok(exp_sinh(f, 0.0, a.powf(-1.0 / q), U_OPTS)?.value.ln());
        }
        let g = move |z: f64| li * z.powf(r) - c * z.powf(q);
        let zm = (r * li / (c * q)).powf(1.0 / (q - r));
        let gmax = g(zm);
        let curv =
            (r * (r - 1.0) * li * zm.powf(r - 2.0) - c * q * (q - 1.0) * zm.powf(q - 2.0)).abs();
        let width = if curv > 0.0 && curv.is_finite() {
            1.0 / curv.sqrt()
        } else {
            1.0
        };
        let f = move |z: f64| (g(z) - gmax).exp();
        let left = tanh_sinh(f, 0.0, zm, U_OPTS)?.value;
        let right = exp_sinh(f, zm, width.min(zm.max(1e-3)), U_OPTS)?.value;
        Ok(gmax + (left + right).ln())
    }
}

/// u(x) by quadrature for families with a density part; Rademacher uses its closed form.
pub fn u_quadrature(prior: &PriorSpec, x: f64) -> Result<f64> {
    prior.validate()?;
    if !x.is_finite() {
        return Err(domain(format!("u(x) needs finite x, got {x}")));
    }
    let Some(tail) = prior.continuous_part() else {
        return Ok(log_cosh(x));
    };
    let dens = tail.log_tilted(x)? - tail.log_tilted(0.0)?;
    Ok(match *prior {
        PriorSpec::GaussBernoulliMix { weight } => {
            log_add_exp(weight.ln() + dens, (1.0 - weight).ln() + log_cosh(x))
        }
        _ => dens,
    })
}

pub fn u_eval(prior: &PriorSpec, x: f64) -> Result<f64> {
    prior.validate()?;
    if !x.is_finite() {
        return Err(domain(format!("u(x) needs finite x, got {x}")));
    }
    match *prior {
        PriorSpec::Gaussian => Ok(0.5 * x * x),
        PriorSpec::Rademacher => Ok(log_cosh(x)),
        PriorSpec::GaussBernoulliMix { weight } => Ok(log_add_exp(
            weight.ln() + 0.5 * x * x,
            (1.0 - weight).ln() + log_cosh(x),
        )),
        PriorSpec::StretchedExp { .. } => u_quadrature(prior, x),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub p: f64,
    pub x_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    pub ratio: Vec<f64>,
    pub limit_estimate: f64,
    /// Relative change of the ratio over the final grid decade below 1%.
    pub converged: bool,
}

pub const GROWTH_GRID_START: f64 = 1e-2;
pub const GROWTH_GRID_END: f64 = 1e3;
pub const GROWTH_POINTS_PER_DECADE: usize = 10;

impl CumulantReport {
    /// Smallest second divided difference of u on the grid.
    pub fn min_second_difference(&self) -> f64 {
        let (x, u) = (&self.x_grid, &self.u_values);
        (1..x.len().saturating_sub(1))
            .map(|i| {
                let left = (u[i] - u[i - 1]) / (x[i] - x[i - 1]);
                let right = (u[i + 1] - u[i]) / (x[i + 1] - x[i]);
                2.0 * (right - left) / (x[i + 1] - x[i - 1])
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "u", "ratio"])?;
        for i in 0..self.x_grid.len() {
            out.write_record([
                self.x_grid[i].to_string(),
                self.u_values[i].to_string(),
                self.ratio[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn pow_abs(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 64.0 {
        x.abs().powi(p as i32)
    } else {
        x.abs().powf(p)
    }
}

/// u(x)/|x|^p on a geometric grid; the grid stops early where quadrature fails.
pub fn growth_ratio(prior: &PriorSpec, p: f64) -> Result<CumulantReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(domain(format!("growth exponent must be positive, got {p}")));
    }
    let decades = (GROWTH_GRID_END / GROWTH_GRID_START).log10().round() as usize;
    let points = decades * GROWTH_POINTS_PER_DECADE + 1;
    let (mut xs, mut us, mut ratio) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..points {
        let x = GROWTH_GRID_START * 10f64.powf(i as f64 / GROWTH_POINTS_PER_DECADE as f64);
        let u = match u_eval(prior, x) {
            Ok(u) => u,
            Err(e) if xs.is_empty() => return Err(e),
            Err(_) => break,
        };
        xs.push(x);
        us.push(u);
        ratio.push(u / pow_abs(x, p));
    }
    let last = *ratio.last().expect("grid is non-empty");
    let converged = ratio.len() > GROWTH_POINTS_PER_DECADE && {
        let prev = ratio[ratio.len() - 1 - GROWTH_POINTS_PER_DECADE];
        last.is_finite() && last != 0.0 && ((last - prev) / last).abs() < 0.01
    };
    Ok(CumulantReport {
        p,
        x_grid: xs,
        u_values: us,
        ratio,
        limit_estimate: last,
        converged,
    })
}

/// ln E[exp((|Z|/λ)^r)], +∞ when infinite or not computable.
pub fn log_psi_expectation(prior: &PriorSpec, r: f64, lambda: f64) -> f64 {
    let discrete = lambda.powf(-r);
    let cont = |tail: Tail| -> f64 {
        match (tail.log_psi(r, lambda), tail.log_tilted(0.0)) {
            (Ok(a), Ok(n)) => std::f64::consts::LN_2 + a - n,
            _ => f64::INFINITY,
        }
    };
    match *prior {
        PriorSpec::Rademacher => discrete,
        PriorSpec::Gaussian | PriorSpec::StretchedExp { .. } => {
            cont(prior.continuous_part().unwrap())
        }
        PriorSpec::GaussBernoulliMix { weight } => {
            let g = if weight > 0.0 {
                weight.ln() + cont(Tail { c: 0.5, q: 2.0 })
            } else {
                f64::NEG_INFINITY
            };
            let b = if weight < 1.0 {
                (1.0 - weight).ln() + discrete
            } else {
                f64::NEG_INFINITY
            };
            if g == f64::INFINITY {
                f64::INFINITY
            } else {
                log_add_exp(g, b)
            }
        }
    }
}

/// The Orlicz norm inf{λ > 0 : E[exp((|Z|/λ)^r)] ≤ 2}.
pub fn psi_norm(prior: &PriorSpec, r: f64) -> Result<f64> {
    prior.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain(format!("psi_norm needs finite r > 0, got {r}")));
    }
    if r > prior.tail_exponent() {
        return Err(domain(format!(
            "E[exp((|Z|/λ)^{r})] diverges for every λ: r exceeds the tail exponent {}",
            prior.tail_exponent()
        )));
    }
    let target = std::f64::consts::LN_2;
    let above = |lambda: f64| log_psi_expectation(prior, r, lambda) > target;
    let mut hi = 1.0;
    while above(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numeric(format!(
                "no λ found with E[ψ_{r}] ≤ 2 for {prior}"
            )));
        }
    }
    let mut lo = hi / 2.0;
    while !above(lo) {
        lo /= 2.0;
        if lo < 1e-12 {
            return Err(Error::Numeric(format!(
                "ψ_{r} norm of {prior} is below 1e-12"
            )));
        }
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use statrs::function::gamma::{gamma, gamma_ui};

    #[test]
    fn parse_and_display() {
        for s in ["gaussian", "rademacher", "stretched_exp:1.5", "mix:0.25"] {
            let p: PriorSpec = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("stretched_exp:1".parse::<PriorSpec>().is_err());
        assert!("mix:2".parse::<PriorSpec>().is_err());
        assert!("cauchy".parse::<PriorSpec>().is_err());
        assert!("stretched_exp".parse::<PriorSpec>().is_err());
    }

    #[test]
    fn gaussian_sample_moments() {
        let n = 1_000_000;
        let z = sample(&PriorSpec::Gaussian, n, &mut stream(1, 0)).unwrap();
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() <= 0.01);
    }

    #[test]
    fn rademacher_and_mix_samples() {
        let z = sample(&PriorSpec::Rademacher, 1000, &mut stream(2, 0)).unwrap();
        assert!(z.iter().all(|&v| v == 1.0 || v == -1.0));
        let z = sample(
            &PriorSpec::GaussBernoulliMix { weight: 0.0 },
            1000,
            &mut stream(2, 0),
        )
        .unwrap();
        assert!(z.iter().all(|&v| v == 1.0 || v == -1.0));
        let z = sample(
            &PriorSpec::GaussBernoulliMix { weight: 0.5 },
            10_000,
            &mut stream(2, 0),
        )
        .unwrap();
        let units = z.iter().filter(|v| v.abs() == 1.0).count();
        assert!((units as f64 / 1e4 - 0.5).abs() < 0.03);
    }

    #[test]
    fn stretched_tail_exponent_fit() {
        let q = 1.5;
        let n = 4_000_000;
        let z = sample(&PriorSpec::StretchedExp { q }, n, &mut stream(3, 0)).unwrap();
        let ts: Vec<f64> = (0..=8).map(|i| 2.0 + 0.25 * i as f64).collect();
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let k = z.iter().filter(|v| v.abs() > t).count();
                (t.powf(q), (k as f64 / n as f64).ln())
            })
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = pts.iter().map(|p| (p.0 - sx / m).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - sx / m) * (p.1 - sy / m)).sum();
        let slope = sxy / sxx;
        assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
        // exact tail P(|z| > t) = Γ(1/q, t^q)/Γ(1/q)
        let t: f64 = 2.0;
        let exact = gamma_ui(1.0 / q, t.powf(q)) / gamma(1.0 / q);
        let emp = z.iter().filter(|v| v.abs() > t).count() as f64 / n as f64;
        assert!((emp - exact).abs() <= 4.0 * (exact / n as f64).sqrt());
    }

    #[test]
    fn u_closed_forms() {
        assert_eq!(u_eval(&PriorSpec::Gaussian, 3.0).unwrap(), 4.5);
        assert!((u_eval(&PriorSpec::Rademacher, 0.7).unwrap() - 0.7f64.cosh().ln()).abs() < 1e-15);
        assert!((log_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(
            u_eval(&PriorSpec::StretchedExp { q: 1.5 }, 0.0).unwrap(),
            0.0
        );
        let mix = PriorSpec::GaussBernoulliMix { weight: 0.3 };
        let want = (0.3 * (0.5f64 * 4.0).exp() + 0.7 * 2f64.cosh()).ln();
        assert!((u_eval(&mix, 2.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn gaussian_quadrature_matches_closed_form() {
        let mut worst: f64 = 0.0;
        for i in -100..=100 {
            let x = i as f64 / 10.0;
            let q = u_quadrature(&PriorSpec::Gaussian, x).unwrap();
            worst = worst.max((q - x * x / 2.0).abs());
        }
        assert!(worst <= 1e-8, "worst {worst}");
        let mix = PriorSpec::GaussBernoulliMix { weight: 0.4 };
        assert!((u_quadrature(&mix, 3.0).unwrap() - u_eval(&mix, 3.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn stretched_u_against_direct_integration() {
        // q = 2 with c = 1 is a Gaussian of variance 1/2: u = x²/4
        let u = u_eval(&PriorSpec::StretchedExp { q: 2.0 }, 5.0).unwrap();
        assert!((u - 25.0 / 4.0).abs() < 1e-9);
        // q = 1.5 against a brute-force midpoint sum
        let x: f64 = 1.3;
        let h = 1e-4;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..400_000 {
            let z = (i as f64 + 0.5) * h;
            let w = (-z.powf(1.5)).exp();
            num += w * (x * z).cosh();
            den += w;
        }
        let u = u_eval(&PriorSpec::StretchedExp { q: 1.5 }, x).unwrap();
        assert!((u - (num / den).ln()).abs() < 1e-7);
    }

    #[test]
    fn u_is_even_and_convex() {
        for prior in [
            PriorSpec::StretchedExp { q: 1.5 },
            PriorSpec::StretchedExp { q: 3.0 },
            PriorSpec::GaussBernoulliMix { weight: 0.1 },
        ] {
            for x in [0.1, 1.0, 7.0, 40.0] {
                assert_eq!(u_eval(&prior, x).unwrap(), u_eval(&prior, -x).unwrap());
            }
            let rep = growth_ratio(&prior, 2.0).unwrap();
            assert!(rep.min_second_difference() >= -1e-8, "{prior}");
        }
    }

    #[test]
    fn growth_examples() {
        let g = growth_ratio(&PriorSpec::Gaussian, 2.0).unwrap();
        assert!(g.ratio.iter().all(|&r| r == 0.5) && g.converged);
        let r = growth_ratio(&PriorSpec::Rademacher, 1.0).unwrap();
        assert!(r.converged && (r.limit_estimate - 1.0).abs() < 1e-3);
        let s = growth_ratio(&PriorSpec::StretchedExp { q: 1.5 }, 3.0).unwrap();
        assert!(s.converged && s.limit_estimate > 0.0);
        // Legendre asymptote (q − 1) q^{−p}
        assert!(
            (s.limit_estimate - 0.5 / 3.375).abs() < 1e-3,
            "{}",
            s.limit_estimate
        );
        assert_eq!(s.x_grid.len(), 51);
        let m = growth_ratio(&PriorSpec::GaussBernoulliMix { weight: 0.01 }, 2.0).unwrap();
        assert!(m.converged && m.limit_estimate > 0.0);
    }

    #[test]
    fn psi_norm_examples() {
        let g = psi_norm(&PriorSpec::Gaussian, 2.0).unwrap();
        assert!((g - (8.0f64 / 3.0).sqrt()).abs() < 1e-6, "{g}");
        let r = psi_norm(&PriorSpec::Rademacher, 2.0).unwrap();
        assert!((r - 1.0 / std::f64::consts::LN_2.sqrt()).abs() < 1e-9);
        assert!(matches!(
            psi_norm(&PriorSpec::Gaussian, 4.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            psi_norm(&PriorSpec::StretchedExp { q: 1.5 }, 2.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn psi_norm_growth_in_r() {
        for prior in [PriorSpec::Gaussian, PriorSpec::StretchedExp { q: 1.5 }] {
            let mut last = 0.0;
            for r in [1.0, 1.25, 1.5] {
                let v = psi_norm(&prior, r).unwrap();
                assert!(v >= last - 1e-9, "{prior} r = {r}");
                last = v;
            }
        }
        // not monotone in general: (1/ln 2)^{1/r} for ±1 decreases
        let a = psi_norm(&PriorSpec::Rademacher, 1.0).unwrap();
        let b = psi_norm(&PriorSpec::Rademacher, 2.0).unwrap();
        assert!((a - 1.0 / std::f64::consts::LN_2).abs() < 1e-9 && b < a);
        let c = PriorSpec::StretchedExp { q: 3.0 };
        assert!(psi_norm(&c, 1.25).unwrap() < psi_norm(&c, 1.0).unwrap());
        assert!(psi_norm(&c, 3.0).unwrap() > psi_norm(&c, 2.0).unwrap());
        // ψ_1 of a standard Gaussian: E e^{|Z|/λ} = 2 e^{1/(2λ²)} Φ(1/λ)
        let l = psi_norm(&PriorSpec::Gaussian, 1.0).unwrap();
        let phi = 0.5 * (1.0 + statrs::function::erf::erf(1.0 / l / 2f64.sqrt()));
        assert!((2.0 * (0.5 / (l * l)).exp() * phi - 2.0).abs() < 1e-8);
    }
}
