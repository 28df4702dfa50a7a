//! Greedy single-flip descent.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::OverlapState;
use crate::error::{domain, Result};
use crate::landscape::{certify_with, Certification, Convention};
use crate::model::ExponentSet;
use crate::patterns::{PatternMatrix, SpinState};

pub use crate::patterns::perturb;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    #[default]
    FirstImprovement,
    Steepest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    Fixed,
    #[default]
    RandomPermutation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescentPolicy {
    pub rule: Rule,
    pub sweep_order: SweepOrder,
    /// For `Steepest` every sweep is one full scan followed by at most one flip.
    pub max_sweeps: usize,
    /// `None` selects [`default_tie_epsilon`].
    pub tie_epsilon: Option<f64>,
}

impl Default for DescentPolicy {
    fn default() -> Self {
        Self {
            rule: Rule::FirstImprovement,
            sweep_order: SweepOrder::RandomPermutation,
            max_sweeps: 100_000,
            tie_epsilon: None,
        }
    }
}

impl DescentPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(domain("max_sweeps must be at least 1"));
        }
        if let Some(eps) = self.tie_epsilon {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(domain(format!(
                    "tie_epsilon must be finite and >= 0, got {eps}"
                )));
            }
        }
        Ok(())
    }

    pub fn tie_epsilon_for(&self, n1: usize, exps: &ExponentSet) -> f64 {
        self.tie_epsilon
            .unwrap_or_else(|| default_tie_epsilon(n1, exps))
    }
}

/// Zero when p is an integer (deltas are compared as exact integers),
/// 1e−12·n1^(p−κ) otherwise.
pub fn default_tie_epsilon(n1: usize, exps: &ExponentSet) -> f64 {
    if exps.integer_p().is_some() {
        0.0
    } else {
        1e-12 * (n1 as f64).powf(exps.p - exps.kappa)
    }
}

/// Whether flipping site k lowers the energy by more than `eps`.
pub(crate) fn lowers(state: &OverlapState, k: usize, eps: f64) -> Result<(bool, f64)> {
    if eps == 0.0 {
        if let Some(num) = state.delta_numerator(k)? {
            let delta = state.delta_flip(k)?;
            return Ok((num > 0, delta));
        }
    }
    let delta = state.delta_flip(k)?;
    Ok((delta < -eps, delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentResult {
    pub endpoint: SpinState,
    pub flips: usize,
    pub sweeps: usize,
    /// Energy before the first flip and after every flip.
    pub energy_trace: Vec<f64>,
    pub converged: bool,
    /// Strict local-minimum check of the endpoint, present when converged.
    pub certificate: Option<Certification>,
}

impl DescentResult {
    pub fn final_energy(&self) -> f64 {
        *self
            .energy_trace
            .last()
            .expect("trace holds the initial energy")
    }
}

pub fn descend<R: Rng + ?Sized>(
    sigma0: SpinState,
    xi: &PatternMatrix,
    exps: &ExponentSet,
    policy: &DescentPolicy,
    rng: &mut R,
) -> Result<DescentResult> {
    policy.validate()?;
    let n1 = xi.n1();
    let eps = policy.tie_epsilon_for(n1, exps);
    let mut state = OverlapState::new(sigma0, xi, *exps)?;
    let mut trace = vec![state.energy()];
    let mut order: Vec<usize> = (0..n1).collect();
    let mut flips = 0;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < policy.max_sweeps {
        sweeps += 1;
        if policy.sweep_order == SweepOrder::RandomPermutation {
            order.shuffle(rng);
        }
        let moved = match policy.rule {
            Rule::FirstImprovement => {
                let mut any = false;
                for &k in &order {
                    if lowers(&state, k, eps)?.0 {
                        state.apply_flip(k)?;
                        trace.push(state.energy());
                        flips += 1;
                        any = true;
                    }
                }
                any
            }
            Rule::Steepest => {
                let mut best: Option<(f64, usize)> = None;
                for &k in &order {
                    let (better, delta) = lowers(&state, k, eps)?;
                    if better && best.is_none_or(|(d, _)| delta < d) {
                        best = Some((delta, k));
                    }
                }
                if let Some((_, k)) = best {
                    state.apply_flip(k)?;
                    trace.push(state.energy());
                    flips += 1;
                }
                best.is_some()
            }
        };
        if !moved {
            converged = true;
            break;
        }
    }
    let certificate = if converged {
        Some(certify_with(
            state.sigma(),
            xi,
            exps,
            eps,
            Convention::Strict,
        )?)
    } else {
        None
    };
    Ok(DescentResult {
        endpoint: state.into_sigma(),
        flips,
        sweeps,
        energy_trace: trace,
        converged,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_full;
    use crate::landscape::certify_local_min;
    use crate::patterns::{hamming, FlipSet};
    use crate::rng::stream;

    fn exps(p: f64) -> ExponentSet {
        ExponentSet::from_p(p).unwrap()
    }

    #[test]
    fn perturb_examples() {
        let xi = PatternMatrix::generate(100, 1, 1).unwrap();
        let x = xi.pattern(0);
        assert_eq!(perturb(&x, 0.0, &mut stream(1, 1)).unwrap(), x);
        assert_eq!(
            hamming(&perturb(&x, 0.5, &mut stream(1, 1)).unwrap(), &x).unwrap(),
            50
        );
        assert_eq!(
            perturb(&x, 0.3, &mut stream(4, 1)).unwrap(),
            perturb(&x, 0.3, &mut stream(4, 1)).unwrap()
        );
    }

    #[test]
    fn local_minimum_start_does_not_move() {
        let xi = PatternMatrix::generate(40, 1, 3).unwrap();
        let res = descend(
            xi.pattern(0),
            &xi,
            &exps(2.0),
            &DescentPolicy::default(),
            &mut stream(0, 0),
        )
        .unwrap();
        assert_eq!((res.flips, res.sweeps, res.converged), (0, 1, true));
        assert!(res.certificate.unwrap().is_min);
    }

    #[test]
    fn single_pattern_retrieves() {
        for seed in 0..20 {
            let xi = PatternMatrix::generate(12, 1, seed).unwrap();
            let start = perturb(&xi.pattern(0), 0.2, &mut stream(seed, 1)).unwrap();
            for rule in [Rule::FirstImprovement, Rule::Steepest] {
                let policy = DescentPolicy {
                    rule,
                    ..DescentPolicy::default()
                };
                let res = descend(
                    start.clone(),
                    &xi,
                    &exps(2.0),
                    &policy,
                    &mut stream(seed, 2),
                )
                .unwrap();
                assert!(res.endpoint == xi.pattern(0) || res.endpoint == xi.pattern(0).negated());
                assert_eq!(res.flips, 2);
            }
        }
    }

    #[test]
    fn trace_is_strictly_decreasing_and_endpoint_certified() {
        for p in [1.5, 2.0, 3.0] {
            let e = exps(p);
            let xi = PatternMatrix::generate(60, 12, 17).unwrap();
            let policy = DescentPolicy::default();
            let eps = policy.tie_epsilon_for(60, &e);
            let start = SpinState::random(60, &mut stream(3, 0));
            let res = descend(start, &xi, &e, &policy, &mut stream(3, 1)).unwrap();
            assert!(res.converged);
            assert!(
                res.energy_trace.windows(2).all(|w| w[1] < w[0] - eps),
                "p = {p}"
            );
            assert_eq!(res.energy_trace.len(), res.flips + 1);
            let full = energy_full(&res.endpoint, &xi, &e).unwrap();
            assert!((res.final_energy() - full).abs() <= 1e-12);
            // no flip lowers the energy at a converged endpoint
            let st = OverlapState::new(res.endpoint.clone(), &xi, e).unwrap();
            assert!((0..60).all(|k| !lowers(&st, k, eps).unwrap().0));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let xi = PatternMatrix::generate(80, 20, 2).unwrap();
        let start = SpinState::random(80, &mut stream(1, 0));
        let a = descend(
            start.clone(),
            &xi,
            &exps(1.5),
            &DescentPolicy::default(),
            &mut stream(9, 2),
        )
        .unwrap();
        let b = descend(
            start,
            &xi,
            &exps(1.5),
            &DescentPolicy::default(),
            &mut stream(9, 2),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_budget_exhaustion_is_not_an_error() {
        let xi = PatternMatrix::generate(200, 1, 2).unwrap();
        let start = crate::patterns::flip(
            &xi.pattern(0),
            &FlipSet::new((0..60).collect(), 200).unwrap(),
        )
        .unwrap();
        let policy = DescentPolicy {
            rule: Rule::Steepest,
            max_sweeps: 3,
            ..DescentPolicy::default()
        };
        let res = descend(start, &xi, &exps(2.0), &policy, &mut stream(0, 0)).unwrap();
        assert!(!res.converged && res.certificate.is_none());
        assert_eq!((res.flips, res.sweeps), (3, 3));
    }

    #[test]
    fn invalid_policy_rejected() {
        let xi = PatternMatrix::generate(8, 1, 2).unwrap();
        let bad = DescentPolicy {
            max_sweeps: 0,
            ..DescentPolicy::default()
        };
        assert!(descend(xi.pattern(0), &xi, &exps(2.0), &bad, &mut stream(0, 0)).is_err());
        let bad = DescentPolicy {
            tie_epsilon: Some(-1.0),
            ..DescentPolicy::default()
        };
        assert!(descend(xi.pattern(0), &xi, &exps(2.0), &bad, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn integer_p_descent_terminates_at_large_n() {
        let xi = PatternMatrix::generate(1024, 30, 5).unwrap();
        let start = SpinState::random(1024, &mut stream(5, 0));
        let res = descend(
            start,
            &xi,
            &exps(2.0),
            &DescentPolicy::default(),
            &mut stream(5, 1),
        )
        .unwrap();
        assert!(res.converged && res.sweeps < DescentPolicy::default().max_sweeps);
        let weak =
            crate::landscape::certify_with(&res.endpoint, &xi, &exps(2.0), 0.0, Convention::Weak)
                .unwrap();
        assert!(weak.is_min);
        assert_eq!(
            certify_local_min(&res.endpoint, &xi, &exps(2.0)).unwrap(),
            res.certificate.unwrap()
        );
    }
}
