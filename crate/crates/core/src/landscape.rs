//! Local minima, Hamming-sphere barrier scans and ground states.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinations::{binomial, RevolvingDoor};
use crate::dynamics::{default_tie_epsilon, descend, lowers, DescentPolicy};
use crate::energy::{energy_full, OverlapState};
use crate::error::{domain, Error, Result};
use crate::model::ExponentSet;
use crate::patterns::{flip, symmetric_distance, FlipSet, PatternMatrix, SpinState};
use crate::rng::{derive_seed, stream};

/// Largest number of subsets an exhaustive sphere scan may visit.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000_000;
/// Largest number of distinct subsets drawn by a sampled scan.
pub const SAMPLE_LIMIT: usize = 100_000;
/// Largest n1 for which all 2^n1 states are enumerated.
pub const ALL_STATES_MAX_N1: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Every neighbour strictly higher.
    #[default]
    Strict,
    /// No neighbour strictly lower.
    Weak,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub is_min: bool,
    /// Lowest-index site violating the convention.
    pub witness: Option<usize>,
    /// Smallest single-flip energy change.
    pub min_delta: f64,
}

pub fn certify_local_min(
    sigma: &SpinState,
    xi: &PatternMatrix,
    exps: &ExponentSet,
) -> Result<Certification> {
    certify_with(
        sigma,
        xi,
        exps,
        default_tie_epsilon(xi.n1(), exps),
        Convention::Strict,
    )
}

pub fn certify_with(
    sigma: &SpinState,
    xi: &PatternMatrix,
    exps: &ExponentSet,
    eps: f64,
    convention: Convention,
) -> Result<Certification> {
    let state = OverlapState::new(sigma.clone(), xi, *exps)?;
    certify_state(&state, eps, convention)
}

fn certify_state(state: &OverlapState, eps: f64, convention: Convention) -> Result<Certification> {
    let mut witness = None;
    let mut min_delta = f64::INFINITY;
    for k in 0..state.n1() {
        let violates = match convention {
            Convention::Weak => {
                let (lower, delta) = lowers(state, k, eps)?;
                min_delta = min_delta.min(delta);
                lower
            }
            Convention::Strict => {
                let delta = state.delta_flip(k)?;
                min_delta = min_delta.min(delta);
                match state.delta_numerator(k)? {
                    Some(num) if eps == 0.0 => num >= 0,
                    _ => delta <= eps,
                }
            }
        };
        if violates && witness.is_none() {
            witness = Some(k);
        }
    }
    Ok(Certification {
        is_min: witness.is_none(),
        witness,
        min_delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Scope {
    AllStates,
    /// Configurations within ⌊r0·n1⌋ flips of pattern `mu`.
    Ball {
        mu: usize,
        r0: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalMinSet {
    /// Sorted, so membership is a binary search.
    pub states: Vec<SpinState>,
    pub energies: Vec<f64>,
    /// Pattern nearest up to global sign.
    pub owner: Vec<usize>,
    /// Energy strictly below the owner's energy.
    pub deep: Vec<bool>,
}

impl LocalMinSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, sigma: &SpinState) -> bool {
        self.states.binary_search(sigma).is_ok()
    }

    fn from_members(
        mut members: Vec<(SpinState, f64)>,
        xi: &PatternMatrix,
        exps: &ExponentSet,
        eps: f64,
    ) -> Result<Self> {
        members.sort_by(|a, b| a.0.cmp(&b.0));
        members.dedup_by(|a, b| a.0 == b.0);
        let pattern_energy: Vec<f64> = (0..xi.n2())
            .map(|mu| energy_full(&xi.pattern(mu), xi, exps))
            .collect::<Result<_>>()?;
        let mut set = LocalMinSet::default();
        for (s, e) in members {
            let (mu, _) = xi.nearest(&s)?;
            set.deep.push(e < pattern_energy[mu] - eps);
            set.owner.push(mu);
            set.energies.push(e);
            set.states.push(s);
        }
        Ok(set)
    }
}

/// Energies of all 2^n1 states, indexed by the state's bit code.
fn all_energies(xi: &PatternMatrix, exps: &ExponentSet) -> Result<Vec<f64>> {
    let n1 = xi.n1();
    if n1 > ALL_STATES_MAX_N1 {
        return Err(Error::Budget {
            needed: 1u128 << n1.min(127),
            limit: 1u128 << ALL_STATES_MAX_N1,
        });
    }
    let mut energies = vec![0.0; 1 << n1];
    let mut state = OverlapState::new(SpinState::from_code(n1, 0), xi, *exps)?;
    let mut code = 0usize;
    energies[0] = state.exact_energy();
    for i in 1..1usize << n1 {
        let k = i.trailing_zeros() as usize;
        state.apply_flip(k)?;
        code ^= 1 << k;
        energies[code] = state.exact_energy();
    }
    Ok(energies)
}

pub fn enumerate_local_minima(
    xi: &PatternMatrix,
    exps: &ExponentSet,
    scope: Scope,
) -> Result<LocalMinSet> {
    enumerate_local_minima_with(
        xi,
        exps,
        scope,
        default_tie_epsilon(xi.n1(), exps),
        Convention::Strict,
    )
}

pub fn enumerate_local_minima_with(
    xi: &PatternMatrix,
    exps: &ExponentSet,
    scope: Scope,
    eps: f64,
    convention: Convention,
) -> Result<LocalMinSet> {
    let n1 = xi.n1();
    let members = match scope {
        Scope::AllStates => {
            let energies = all_energies(xi, exps)?;
            let is_min = |code: usize| {
                let e = energies[code];
                (0..n1).all(|k| {
                    let d = energies[code ^ (1 << k)] - e;
                    match convention {
                        Convention::Strict => d > eps,
                        Convention::Weak => d >= -eps,
                    }
                })
            };
            (0..1usize << n1)
                .filter(|&c| is_min(c))
                .map(|c| (SpinState::from_code(n1, c as u64), energies[c]))
                .collect()
        }
        Scope::Ball { mu, r0 } => {
            if mu >= xi.n2() {
                return Err(Error::IndexOutOfRange {
                    index: mu,
                    len: xi.n2(),
                });
            }
            if !(0.0..=1.0).contains(&r0) {
                return Err(domain(format!(
                    "ball radius fraction must lie in [0, 1], got {r0}"
                )));
            }
            let radius = crate::patterns::flips_for_radius(r0, n1);
            let total: u128 = (0..=radius)
                .map(|n| binomial(n1 as u64, n as u64))
                .fold(0u128, u128::saturating_add);
            if total > EXHAUSTIVE_LIMIT {
                return Err(Error::Budget {
                    needed: total,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            let center = xi.pattern(mu);
            let mut found = Vec::new();
            for n in 0..=radius {
                let mut door = RevolvingDoor::new(n1, n);
                let start = flip(&center, &FlipSet::new(door.current().to_vec(), n1)?)?;
                let mut state = OverlapState::new(start, xi, *exps)?;
                loop {
                    if certify_state(&state, eps, convention)?.is_min {
                        found.push((state.sigma().clone(), state.exact_energy()));
                    }
                    match door.advance() {
                        Some((out, added)) => {
                            state.apply_flip(out)?;
                            state.apply_flip(added)?;
                        }
                        None => break,
                    }
                }
            }
            found
        }
    };
    LocalMinSet::from_members(members, xi, exps, eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Exhaustive,
    Sampled(usize),
}

impl ScanMode {
    pub fn label(&self) -> &'static str {
        match self {
            ScanMode::Exhaustive => "exhaustive",
            ScanMode::Sampled(_) => "sampled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    /// min over visited σ on the sphere of H(σ) − H(ξ^(μ)).
    pub min_gap: f64,
    pub argmin: FlipSet,
    pub visited: u64,
    /// Whether every point of the sphere was visited.
    pub complete: bool,
}

pub fn sphere_scan<R: Rng + ?Sized>(
    xi: &PatternMatrix,
    mu: usize,
    n: usize,
    exps: &ExponentSet,
    mode: ScanMode,
    rng: &mut R,
) -> Result<ScanOutcome> {
    let n1 = xi.n1();
    if mu >= xi.n2() {
        return Err(Error::IndexOutOfRange {
            index: mu,
            len: xi.n2(),
        });
    }
    if n > n1 {
        return Err(domain(format!("radius {n} exceeds n1 = {n1}")));
    }
    let total = binomial(n1 as u64, n as u64);
    match mode {
        ScanMode::Exhaustive => {
            if total > EXHAUSTIVE_LIMIT {
                return Err(Error::Budget {
                    needed: total,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            scan_exhaustive(xi, mu, n, exps)
        }
        ScanMode::Sampled(k) => {
            let k = (k.min(SAMPLE_LIMIT) as u128).min(total) as usize;
            if k as u128 == total && total <= EXHAUSTIVE_LIMIT {
                scan_exhaustive(xi, mu, n, exps)
            } else {
                scan_sampled(xi, mu, n, exps, k, rng)
            }
        }
    }
}

fn scan_exhaustive(
    xi: &PatternMatrix,
    mu: usize,
    n: usize,
    exps: &ExponentSet,
) -> Result<ScanOutcome> {
    let n1 = xi.n1();
    let center = xi.pattern(mu);
    let base = energy_full(&center, xi, exps)?;
    if n == 0 {
        return Ok(ScanOutcome {
            min_gap: 0.0,
            argmin: FlipSet::empty(),
            visited: 1,
            complete: true,
        });
    }
    // chunk m holds the subsets whose largest element is m
    let chunks: Vec<Result<(f64, Vec<usize>, u64)>> = (n - 1..n1)
        .into_par_iter()
        .map(|m| {
            let mut door = RevolvingDoor::new(m, n - 1);
            let with_max = |d: &RevolvingDoor| {
                let mut j = d.current().to_vec();
                j.push(m);
                j
            };
            let start = flip(&center, &FlipSet::new(with_max(&door), n1)?)?;
            let mut state = OverlapState::new(start, xi, *exps)?;
            let mut best = (state.energy(), with_max(&door));
            let mut visited = 1u64;
            while let Some((out, added)) = door.advance() {
                state.apply_flip(out)?;
                state.apply_flip(added)?;
                visited += 1;
                if state.energy() < best.0 {
                    best = (state.energy(), with_max(&door));
                }
            }
            Ok((best.0, best.1, visited))
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visited = 0;
    for chunk in chunks {
        let (e, j, v) = chunk?;
        visited += v;
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, j));
        }
    }
    let (_, j) = best.expect("at least one chunk");
    let argmin = FlipSet::new(j, n1)?;
    let min_gap = energy_full(&flip(&center, &argmin)?, xi, exps)? - base;
    Ok(ScanOutcome {
        min_gap,
        argmin,
        visited,
        complete: true,
    })
}

fn scan_sampled<R: Rng + ?Sized>(
    xi: &PatternMatrix,
    mu: usize,
    n: usize,
    exps: &ExponentSet,
    k: usize,
    rng: &mut R,
) -> Result<ScanOutcome> {
    let n1 = xi.n1();
    let center = xi.pattern(mu);
    let base = energy_full(&center, xi, exps)?;
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(k);
    let mut best: Option<(f64, FlipSet)> = None;
    while seen.len() < k {
        let mut j = rand::seq::index::sample(rng, n1, n).into_vec();
        j.sort_unstable();
        if !seen.insert(j.clone()) {
            continue;
        }
        let set = FlipSet::new(j, n1)?;
        let gap = energy_full(&flip(&center, &set)?, xi, exps)? - base;
        if best.as_ref().is_none_or(|(b, _)| gap < *b) {
            best = Some((gap, set));
        }
    }
    let (min_gap, argmin) = best.unwrap_or((f64::INFINITY, FlipSet::empty()));
    Ok(ScanOutcome {
        min_gap,
        argmin,
        visited: k as u64,
        complete: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierProfile {
    pub mu: usize,
    pub radii: Vec<usize>,
    pub min_gap: Vec<f64>,
    pub mode: ScanMode,
    pub samples_per_radius: Vec<u64>,
    pub seed: u64,
}

/// Sphere scans around pattern μ; the scan at radius n draws from stream n of a seed derived from (seed, μ).
pub fn barrier_profile(
    xi: &PatternMatrix,
    mu: usize,
    radii: &[usize],
    exps: &ExponentSet,
    mode: ScanMode,
    seed: u64,
) -> Result<BarrierProfile> {
    let scan_seed = derive_seed(seed, &[mu as u64]);
    let outcomes: Vec<ScanOutcome> = radii
        .iter()
        .map(|&n| sphere_scan(xi, mu, n, exps, mode, &mut stream(scan_seed, n as u64)))
        .collect::<Result<_>>()?;
    Ok(BarrierProfile {
        mu,
        radii: radii.to_vec(),
        min_gap: outcomes.iter().map(|o| o.min_gap).collect(),
        mode,
        samples_per_radius: outcomes.iter().map(|o| o.visited).collect(),
        seed,
    })
}

impl BarrierProfile {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["mu", "radius", "min_gap", "mode", "samples", "seed"])?;
        for i in 0..self.radii.len() {
            out.write_record([
                self.mu.to_string(),
                self.radii[i].to_string(),
                self.min_gap[i].to_string(),
                self.mode.label().to_string(),
                self.samples_per_radius[i].to_string(),
                self.seed.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundMode {
    Exhaustive,
    Multistart(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub sigma: SpinState,
    pub energy: f64,
}

pub fn ground_state<R: RngCore + ?Sized>(
    xi: &PatternMatrix,
    exps: &ExponentSet,
    mode: GroundMode,
    rng: &mut R,
) -> Result<GroundState> {
    let n1 = xi.n1();
    match mode {
        GroundMode::Exhaustive => {
            let energies = all_energies(xi, exps)?;
            let (code, &energy) =
                energies
                    .iter()
                    .enumerate()
                    .fold(
                        (0, &energies[0]),
                        |best, cur| if cur.1 < best.1 { cur } else { best },
                    );
            Ok(GroundState {
                sigma: SpinState::from_code(n1, code as u64),
                energy,
            })
        }
        GroundMode::Multistart(k) => {
            if k == 0 {
                return Err(domain("multistart needs at least one start"));
            }
            let base = rng.next_u64();
            let policy = DescentPolicy::default();
            let results: Vec<Result<(f64, SpinState)>> = (0..k)
                .into_par_iter()
                .map(|i| {
                    let mut r = stream(derive_seed(base, &[i as u64]), 0);
                    let start = SpinState::random(n1, &mut r);
                    let res = descend(start, xi, exps, &policy, &mut r)?;
                    let e = energy_full(&res.endpoint, xi, exps)?;
                    Ok((e, res.endpoint))
                })
                .collect();
            let mut best: Option<(f64, SpinState)> = None;
            for r in results {
                let (e, s) = r?;
                if best.as_ref().is_none_or(|(b, _)| e < *b) {
                    best = Some((e, s));
                }
            }
            let (energy, sigma) = best.expect("k >= 1");
            Ok(GroundState { sigma, energy })
        }
    }
}

/// Symmetric distance from σ to the nearest pattern, and that pattern's index.
pub fn distance_to_patterns(xi: &PatternMatrix, sigma: &SpinState) -> Result<(usize, usize)> {
    let (mu, d) = xi.nearest(sigma)?;
    debug_assert_eq!(d, symmetric_distance(&xi.pattern(mu), sigma)?);
    Ok((mu, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::phi_bar;
    use crate::patterns::hamming;
    use crate::rng::stream;

    fn exps(p: f64) -> ExponentSet {
        ExponentSet::from_p(p).unwrap()
    }

    fn naive_energy(sigma: &[i8], rows: &[Vec<i8>], p: f64) -> f64 {
        let e = exps(p);
        let s: f64 = rows
            .iter()
            .map(|row| {
                let m: i64 = row.iter().zip(sigma).map(|(&a, &b)| (a * b) as i64).sum();
                (m.abs() as f64).powf(p)
            })
            .sum();
        -s / (sigma.len() as f64).powf(e.kappa)
    }

    #[test]
    fn certify_examples() {
        let xi = PatternMatrix::generate(20, 1, 4).unwrap();
        let c = certify_local_min(&xi.pattern(0), &xi, &exps(2.0)).unwrap();
        assert!(c.is_min && c.witness.is_none());
        assert!((c.min_delta - (1.0 - (18.0f64 / 20.0).powi(2))).abs() <= 1e-15);
        let mut off = xi.pattern(0);
        off.flip_site(7).unwrap();
        let c = certify_local_min(&off, &xi, &exps(2.0)).unwrap();
        assert_eq!((c.is_min, c.witness), (false, Some(7)));
    }

    #[test]
    fn certify_agrees_with_neighbour_comparison() {
        for (n2, p) in [(2, 2.0), (3, 1.5), (3, 3.0)] {
            let xi = PatternMatrix::generate(12, n2, 21).unwrap();
            let e = exps(p);
            let energies = all_energies(&xi, &e).unwrap();
            let eps = default_tie_epsilon(12, &e);
            for code in 0..1usize << 12 {
                let want = (0..12).all(|k| energies[code ^ (1 << k)] - energies[code] > eps);
                let got = certify_local_min(&SpinState::from_code(12, code as u64), &xi, &e)
                    .unwrap()
                    .is_min;
                assert_eq!(got, want, "code {code}");
            }
        }
    }

    #[test]
    fn single_pattern_minima_are_the_pattern_pair() {
        for p in [2.0, 3.0] {
            let xi = PatternMatrix::generate(12, 1, 8).unwrap();
            let set = enumerate_local_minima(&xi, &exps(p), Scope::AllStates).unwrap();
            let mut want = vec![xi.pattern(0), xi.pattern(0).negated()];
            want.sort();
            assert_eq!(set.states, want);
            assert!(set.deep.iter().all(|d| !d));
            let gs =
                ground_state(&xi, &exps(p), GroundMode::Exhaustive, &mut stream(0, 0)).unwrap();
            assert_eq!(gs.energy, -1.0);
            assert!(want.contains(&gs.sigma));
        }
    }

    #[test]
    fn all_states_set_is_closed_under_global_flip() {
        let xi = PatternMatrix::generate(13, 4, 2).unwrap();
        let set = enumerate_local_minima(&xi, &exps(1.5), Scope::AllStates).unwrap();
        assert!(!set.is_empty());
        for s in &set.states {
            assert!(set.contains(&s.negated()));
        }
    }

    #[test]
    fn ball_scope_agrees_with_all_states() {
        let xi = PatternMatrix::generate(12, 3, 31).unwrap();
        let e = exps(2.0);
        let all = enumerate_local_minima(&xi, &e, Scope::AllStates).unwrap();
        let ball = enumerate_local_minima(&xi, &e, Scope::Ball { mu: 1, r0: 0.25 }).unwrap();
        let center = xi.pattern(1);
        let inside: Vec<_> = all
            .states
            .iter()
            .filter(|s| hamming(s, &center).unwrap() <= 3)
            .cloned()
            .collect();
        assert_eq!(ball.states, inside);
    }

    #[test]
    fn too_large_for_enumeration() {
        let xi = PatternMatrix::generate(21, 1, 1).unwrap();
        assert!(matches!(
            enumerate_local_minima(&xi, &exps(2.0), Scope::AllStates),
            Err(Error::Budget { .. })
        ));
        let xi = PatternMatrix::generate(60, 1, 1).unwrap();
        let r = sphere_scan(
            &xi,
            0,
            30,
            &exps(2.0),
            ScanMode::Exhaustive,
            &mut stream(0, 0),
        );
        assert!(matches!(r, Err(Error::Budget { .. })));
    }

    #[test]
    fn sphere_scan_single_pattern_closed_form() {
        let xi = PatternMatrix::generate(16, 1, 3).unwrap();
        for n in 0..=8 {
            let out = sphere_scan(
                &xi,
                0,
                n,
                &exps(2.0),
                ScanMode::Exhaustive,
                &mut stream(0, 0),
            )
            .unwrap();
            let want = phi_bar(n as f64 / 16.0, 2.0);
            assert!((out.min_gap - want).abs() <= 1e-12, "n = {n}");
            assert_eq!(out.visited as u128, binomial(16, n as u64));
        }
    }

    #[test]
    fn sphere_scan_matches_naive_loop() {
        for (p, seed) in [(2.0, 1u64), (1.5, 2), (3.0, 3)] {
            let n1 = 14;
            let xi = PatternMatrix::generate(n1, 5, seed).unwrap();
            let rows: Vec<Vec<i8>> = (0..5).map(|mu| xi.pattern(mu).to_spins()).collect();
            let center = rows[2].clone();
            let base = naive_energy(&center, &rows, p);
            for n in [1, 3, 6] {
                let mut naive = f64::INFINITY;
                for code in 0u32..1 << n1 {
                    if code.count_ones() as usize != n {
                        continue;
                    }
                    let s: Vec<i8> = (0..n1)
                        .map(|i| {
                            if code >> i & 1 == 1 {
                                -center[i]
                            } else {
                                center[i]
                            }
                        })
                        .collect();
                    naive = naive.min(naive_energy(&s, &rows, p) - base);
                }
                let got = sphere_scan(&xi, 2, n, &exps(p), ScanMode::Exhaustive, &mut stream(0, 0))
                    .unwrap();
                assert!(
                    (got.min_gap - naive).abs() <= 1e-12,
                    "p = {p}, n = {n}: {} vs {naive}",
                    got.min_gap
                );
            }
        }
    }

    #[test]
    fn sampled_scans_are_one_sided_and_nested() {
        let xi = PatternMatrix::generate(24, 6, 5).unwrap();
        let e = exps(2.0);
        let full = sphere_scan(&xi, 0, 5, &e, ScanMode::Exhaustive, &mut stream(0, 0)).unwrap();
        let mut last = f64::INFINITY;
        for k in [10, 100, 1000, 10_000] {
            let s = sphere_scan(&xi, 0, 5, &e, ScanMode::Sampled(k), &mut stream(9, 3)).unwrap();
            assert!(s.min_gap >= full.min_gap - 1e-15);
            assert!(s.min_gap <= last);
            assert_eq!(s.visited, k as u64);
            last = s.min_gap;
        }
        let all = sphere_scan(&xi, 0, 2, &e, ScanMode::Sampled(1000), &mut stream(9, 3)).unwrap();
        assert!(all.complete && all.visited == 276);
    }

    #[test]
    fn barrier_profile_csv() {
        let xi = PatternMatrix::generate(16, 2, 5).unwrap();
        let prof =
            barrier_profile(&xi, 1, &[0, 1, 2], &exps(2.0), ScanMode::Exhaustive, 11).unwrap();
        assert_eq!(prof.min_gap[0], 0.0);
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mu,radius,min_gap,mode,samples,seed\n1,0,0,exhaustive,1,11\n"));
    }

    #[test]
    fn multistart_is_an_upper_bound() {
        for seed in 0..4 {
            let xi = PatternMatrix::generate(16, 8, seed).unwrap();
            let e = exps(2.0);
            let exact = ground_state(&xi, &e, GroundMode::Exhaustive, &mut stream(0, 0)).unwrap();
            let multi =
                ground_state(&xi, &e, GroundMode::Multistart(20), &mut stream(seed, 0)).unwrap();
            assert!(multi.energy >= exact.energy);
            assert_eq!(exact.energy, energy_full(&exact.sigma, &xi, &e).unwrap());
            // the ground energy stays within a constant multiple of 1 + α
            assert!(
                exact.energy >= -2.0 * (1.0 + 0.5),
                "seed {seed}: {}",
                exact.energy
            );
        }
    }
}
