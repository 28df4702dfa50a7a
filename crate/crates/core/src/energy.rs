//! The p-spin energy H(σ) = −n1^(−κ) Σ_μ |(ξ^(μ), σ)|^p and its flip differences.

use crate::error::{domain, ensure_len, Error, Result};
use crate::model::{phi, phi_bar, ExponentSet};
use crate::patterns::{flip, words_for, FlipSet, PatternMatrix, SpinState, WORD_BITS};

const REFRESH_EVERY: u32 = 1 << 16;

/// |m|^p with |0|^p = 0.
#[inline]
pub fn abs_pow(m: i64, exps: &ExponentSet) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let a = m.unsigned_abs() as f64;
    match exps.integer_p() {
        Some(k) => a.powi(k as i32),
        None => a.powf(exps.p),
    }
}

#[inline]
fn abs_pow_int(m: i64, k: u32) -> i128 {
    (m.unsigned_abs() as i128).pow(k)
}

/// n1^κ, computed exactly when κ is an integer.
pub fn energy_norm(n1: usize, exps: &ExponentSet) -> f64 {
    let n = n1 as f64;
    if exps.kappa.fract() == 0.0 {
        n.powi(exps.kappa as i32)
    } else {
        n.powf(exps.kappa)
    }
}

pub fn energy_from_overlaps(m: &[i64], n1: usize, exps: &ExponentSet) -> f64 {
    let norm = energy_norm(n1, exps);
    match exps.integer_p() {
        Some(k) => -(m.iter().map(|&x| abs_pow_int(x, k)).sum::<i128>() as f64) / norm,
        None => -m.iter().map(|&x| abs_pow(x, exps)).sum::<f64>() / norm,
    }
}

pub fn energy_full(sigma: &SpinState, xi: &PatternMatrix, exps: &ExponentSet) -> Result<f64> {
    let m = xi.overlaps(sigma)?;
    Ok(energy_from_overlaps(&m, xi.n1(), exps))
}

/// A configuration together with its exact overlaps against every pattern.
#[derive(Clone, Debug)]
pub struct OverlapState<'a> {
    xi: &'a PatternMatrix,
    sigma: SpinState,
    m: Vec<i64>,
    exps: ExponentSet,
    norm: f64,
    energy: f64,
    since_refresh: u32,
}

pub fn init_overlaps<'a>(
    sigma: SpinState,
    xi: &'a PatternMatrix,
    exps: ExponentSet,
) -> Result<OverlapState<'a>> {
    OverlapState::new(sigma, xi, exps)
}

impl<'a> OverlapState<'a> {
    pub fn new(sigma: SpinState, xi: &'a PatternMatrix, exps: ExponentSet) -> Result<Self> {
        let m = xi.overlaps(&sigma)?;
        let norm = energy_norm(xi.n1(), &exps);
        let energy = energy_from_overlaps(&m, xi.n1(), &exps);
        Ok(Self {
            xi,
            sigma,
            m,
            exps,
            norm,
            energy,
            since_refresh: 0,
        })
    }

    pub fn sigma(&self) -> &SpinState {
        &self.sigma
    }

    pub fn into_sigma(self) -> SpinState {
        self.sigma
    }

    pub fn overlaps(&self) -> &[i64] {
        &self.m
    }

    pub fn patterns(&self) -> &'a PatternMatrix {
        self.xi
    }

    pub fn exponents(&self) -> &ExponentSet {
        &self.exps
    }

    pub fn n1(&self) -> usize {
        self.xi.n1()
    }

    /// The cached energy.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    fn check(&self, k: usize) -> Result<()> {
        if k >= self.n1() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.n1(),
            });
        }
        Ok(())
    }

    /// Calls `f(μ, s)` with s = ξ^(μ)_k σ_k for every pattern.
    #[inline]
    fn for_each_sign(&self, k: usize, mut f: impl FnMut(usize, i64)) {
        let col = self.xi.column(k);
        let flip_mask = if self.sigma.is_up(k) { 0 } else { u64::MAX };
        let n2 = self.xi.n2();
        for (w, &word) in col.iter().enumerate() {
            let agree = word ^ flip_mask;
            let base = w * WORD_BITS;
            for b in 0..WORD_BITS.min(n2 - base) {
                let s = if agree >> b & 1 == 1 { 1 } else { -1 };
                f(base + b, s);
            }
        }
    }

    /// Σ_μ (|m_μ − 2s_μ|^p − |m_μ|^p) in exact integers, for integer p.
    pub fn delta_numerator(&self, k: usize) -> Result<Option<i128>> {
        self.check(k)?;
        let Some(pk) = self.exps.integer_p() else {
            return Ok(None);
        };
        let mut acc: i128 = 0;
        if pk == 2 {
            let mut sm: i64 = 0;
            self.for_each_sign(k, |mu, s| sm += s * self.m[mu]);
            // (m − 2s)² − m² = 4 − 4sm
            acc = 4 * self.xi.n2() as i128 - 4 * sm as i128;
        } else {
            self.for_each_sign(k, |mu, s| {
                let m = self.m[mu];
                acc += abs_pow_int(m - 2 * s, pk) - abs_pow_int(m, pk);
            });
        }
        Ok(Some(acc))
    }

    /// H(σ with site k flipped) − H(σ); the state is not modified.
    pub fn delta_flip(&self, k: usize) -> Result<f64> {
        if let Some(num) = self.delta_numerator(k)? {
            return Ok(-(num as f64) / self.norm);
        }
        let mut acc = 0.0;
        self.for_each_sign(k, |mu, s| {
            let m = self.m[mu];
            acc += abs_pow(m - 2 * s, &self.exps) - abs_pow(m, &self.exps);
        });
        Ok(-acc / self.norm)
    }

    /// Flips site k, returning the energy change.
    pub fn apply_flip(&mut self, k: usize) -> Result<f64> {
        let delta = self.delta_flip(k)?;
        let col = self.xi.column(k);
        let up = self.sigma.is_up(k);
        for (mu, m) in self.m.iter_mut().enumerate() {
            let c = col[mu / WORD_BITS] >> (mu % WORD_BITS) & 1 == 1;
            *m -= if c == up { 2 } else { -2 };
        }
        self.sigma.flip_site(k)?;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh();
        } else {
            self.energy += delta;
        }
        Ok(delta)
    }

    /// Recomputes the cached energy from the overlaps.
    pub fn refresh(&mut self) {
        self.energy = energy_from_overlaps(&self.m, self.n1(), &self.exps);
        self.since_refresh = 0;
    }

    /// Energy recomputed from the overlaps without touching the cache.
    pub fn exact_energy(&self) -> f64 {
        energy_from_overlaps(&self.m, self.n1(), &self.exps)
    }
}

/// X_J^(μ)(σ) and Y_J^(μ)(σ): the normalized overlaps restricted to J and to its complement.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitOverlaps {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Exact integer parts (ξ_J, σ_J) and (ξ_{J^c}, σ_{J^c}) for every μ.
pub fn split_overlap_counts(
    xi: &PatternMatrix,
    sigma: &SpinState,
    j: &FlipSet,
) -> Result<Vec<(i64, i64)>> {
    let n1 = xi.n1();
    ensure_len(n1, sigma.len())?;
    if j.indices().last().is_some_and(|&i| i >= n1) {
        return Err(domain("flip set exceeds n1"));
    }
    let in_mask = j.mask(n1);
    let all = SpinState::all_up(n1);
    let out_mask: Vec<u64> = in_mask
        .iter()
        .zip(all.words())
        .map(|(a, b)| !a & b)
        .collect();
    let nj = j.len() as i64;
    let nc = n1 as i64 - nj;
    let mut out = Vec::with_capacity(xi.n2());
    for mu in 0..xi.n2() {
        let row = xi.row(mu);
        let (mut dj, mut dc) = (0i64, 0i64);
        for w in 0..words_for(n1) {
            let d = row[w] ^ sigma.words()[w];
            dj += (d & in_mask[w]).count_ones() as i64;
            dc += (d & out_mask[w]).count_ones() as i64;
        }
        out.push((nj - 2 * dj, nc - 2 * dc));
    }
    Ok(out)
}

pub fn split_overlaps(xi: &PatternMatrix, sigma: &SpinState, j: &FlipSet) -> Result<SplitOverlaps> {
    let s = (xi.n1() as f64).sqrt();
    let counts = split_overlap_counts(xi, sigma, j)?;
    Ok(SplitOverlaps {
        x: counts.iter().map(|c| c.0 as f64 / s).collect(),
        y: counts.iter().map(|c| c.1 as f64 / s).collect(),
    })
}

/// Both sides of H(ξ¹) − H(F_J ξ¹) = −n1^(−(p+−p)/2) Φ̄_p(r) − n1^(−p+/2) Σ_{μ≥2} Φ_p(X_J^(μ), Y_J^(μ)),
/// with r = |J|/n1 and the overlaps taken at σ = ξ¹.
pub fn gap_representation(
    xi: &PatternMatrix,
    j: &FlipSet,
    exps: &ExponentSet,
) -> Result<(f64, f64)> {
    let n1 = xi.n1();
    if 2 * j.len() >= n1 && !j.is_empty() {
        return Err(domain(format!(
            "|J| = {} must be below n1/2 = {}",
            j.len(),
            n1 as f64 / 2.0
        )));
    }
    let xi1 = xi.pattern(0);
    let lhs = energy_full(&xi1, xi, exps)? - energy_full(&flip(&xi1, j)?, xi, exps)?;
    let n = n1 as f64;
    let r = j.len() as f64 / n;
    let split = split_overlaps(xi, &xi1, j)?;
    let interference: f64 = (1..xi.n2())
        .map(|mu| phi(split.x[mu], split.y[mu], exps.p))
        .sum();
    let rhs = -n.powf(-(exps.p_plus - exps.p) / 2.0) * phi_bar(r, exps.p)
        - n.powf(-exps.p_plus / 2.0) * interference;
    Ok((lhs, rhs))
}

/// Both sides of the exact quadratic single-flip identity
/// (n1/4)(H(F_{J△k} ξ¹) − H(F_J ξ¹)) = ε Σ_{μ≥2} ξ¹_k ξ^(μ)_k Z_J^(μ)/√n1 + ε(1 − 2r) − n2/n1,
/// where ε = +1 when k ∉ J and −1 when k ∈ J, and Z_J^(μ) = (ξ^(μ), F_J ξ¹)/√n1.
pub fn quadratic_flip_identity(xi: &PatternMatrix, j: &FlipSet, k: usize) -> Result<(f64, f64)> {
    let n1 = xi.n1();
    if k >= n1 {
        return Err(Error::IndexOutOfRange { index: k, len: n1 });
    }
    let exps = ExponentSet::from_p(2.0)?;
    let xi1 = xi.pattern(0);
    let base = flip(&xi1, j)?;
    let moved = flip(&xi1, &j.toggled(k))?;
    let n = n1 as f64;
    let lhs = n / 4.0 * (energy_full(&moved, xi, &exps)? - energy_full(&base, xi, &exps)?);
    let eps = if j.contains(k) { -1.0 } else { 1.0 };
    let r = j.len() as f64 / n;
    let sum: f64 = (1..xi.n2())
        .map(|mu| {
            let z = xi.overlap(mu, &base) as f64 / n.sqrt();
            (xi.entry(0, k) * xi.entry(mu, k)) as f64 * z / n.sqrt()
        })
        .sum();
    let rhs = eps * sum + eps * (1.0 - 2.0 * r) - xi.n2() as f64 / n;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn exps(p: f64) -> ExponentSet {
        ExponentSet::from_p(p).unwrap()
    }

    fn naive_energy(sigma: &[i8], rows: &[Vec<i8>], p: f64) -> f64 {
        let e = exps(p);
        let n1 = sigma.len() as f64;
        let s: f64 = rows
            .iter()
            .map(|row| {
                let m: i64 = row.iter().zip(sigma).map(|(&a, &b)| (a * b) as i64).sum();
                (m.abs() as f64).powf(p)
            })
            .sum();
        -s / n1.powf(e.kappa)
    }

    fn random_instance(n1: usize, n2: usize, seed: u64) -> (PatternMatrix, SpinState) {
        let xi = PatternMatrix::generate(n1, n2, seed).unwrap();
        let sigma = SpinState::random(n1, &mut stream(seed, 99));
        (xi, sigma)
    }

    #[test]
    fn energy_examples() {
        let xi = PatternMatrix::from_states(&[SpinState::all_up(4)], 0).unwrap();
        let up = SpinState::all_up(4);
        assert_eq!(energy_full(&up, &xi, &exps(2.0)).unwrap(), -1.0);
        let one = SpinState::from_spins(&[1, 1, 1, -1]).unwrap();
        assert_eq!(energy_full(&one, &xi, &exps(2.0)).unwrap(), -0.25);
        for n1 in [5, 64, 100, 400] {
            let xi = PatternMatrix::generate(n1, 1, 3).unwrap();
            assert_eq!(energy_full(&xi.pattern(0), &xi, &exps(3.0)).unwrap(), -1.0);
        }
        assert!(energy_full(&SpinState::all_up(5), &xi, &exps(2.0)).is_err());
    }

    #[test]
    fn init_examples() {
        let xi = PatternMatrix::generate(33, 1, 1).unwrap();
        let st = OverlapState::new(xi.pattern(0), &xi, exps(2.0)).unwrap();
        assert_eq!(st.overlaps(), &[33]);
        let st = OverlapState::new(xi.pattern(0).negated(), &xi, exps(2.0)).unwrap();
        assert_eq!(st.overlaps(), &[-33]);
        let (xi, s) = random_instance(37, 20, 4);
        let st = OverlapState::new(s, &xi, exps(1.5)).unwrap();
        assert!(st
            .overlaps()
            .iter()
            .all(|m| m.rem_euclid(2) == 1 && m.abs() <= 37));
    }

    #[test]
    fn matches_naive_energy() {
        for p in [1.5, 2.0, 2.5, 3.0, 4.0] {
            let (xi, s) = random_instance(70, 9, 2);
            let rows: Vec<Vec<i8>> = (0..9).map(|mu| xi.pattern(mu).to_spins()).collect();
            let got = energy_full(&s, &xi, &exps(p)).unwrap();
            let want = naive_energy(&s.to_spins(), &rows, p);
            assert!((got - want).abs() <= 1e-12 * want.abs(), "p = {p}");
        }
    }

    #[test]
    fn delta_matches_recompute_small() {
        for p in [1.5, 2.0, 3.0] {
            for seed in 0..20 {
                let n1 = 4 + (seed as usize % 13);
                let (xi, s) = random_instance(n1, 1 + seed as usize % 5, seed);
                let st = OverlapState::new(s.clone(), &xi, exps(p)).unwrap();
                for k in 0..n1 {
                    let mut t = s.clone();
                    t.flip_site(k).unwrap();
                    let want = energy_full(&t, &xi, &exps(p)).unwrap()
                        - energy_full(&s, &xi, &exps(p)).unwrap();
                    assert!((st.delta_flip(k).unwrap() - want).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn delta_zero_when_overlap_magnitudes_preserved() {
        // m = 1 and flipping an agreeing site gives m = −1
        let xi =
            PatternMatrix::from_states(&[SpinState::from_spins(&[1, 1, -1]).unwrap()], 0).unwrap();
        let sigma = SpinState::from_spins(&[1, 1, 1]).unwrap();
        let st = OverlapState::new(sigma, &xi, exps(1.5)).unwrap();
        assert_eq!(st.overlaps(), &[1]);
        assert_eq!(st.delta_flip(0).unwrap(), 0.0);
    }

    #[test]
    fn apply_twice_restores() {
        let (xi, s) = random_instance(90, 17, 8);
        let mut st = OverlapState::new(s.clone(), &xi, exps(1.5)).unwrap();
        let (m0, e0) = (st.overlaps().to_vec(), st.energy());
        st.apply_flip(31).unwrap();
        st.apply_flip(31).unwrap();
        assert_eq!(st.sigma(), &s);
        assert_eq!(st.overlaps(), &m0[..]);
        assert!((st.energy() - e0).abs() <= 1e-12);
        assert!(st.apply_flip(90).is_err() && st.delta_flip(90).is_err());
    }

    #[test]
    fn quadratic_form_agrees() {
        let (xi, s) = random_instance(120, 30, 6);
        let direct: f64 = -(0..30)
            .map(|mu| (xi.overlap(mu, &s) as f64).powi(2))
            .sum::<f64>()
            / 120f64.powi(2);
        assert!((energy_full(&s, &xi, &exps(2.0)).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn split_examples() {
        let (xi, s) = random_instance(75, 6, 3);
        let j = FlipSet::new(vec![0, 5, 64, 70], 75).unwrap();
        let split = split_overlaps(&xi, &s, &j).unwrap();
        for mu in 0..6 {
            let full = xi.overlap(mu, &s) as f64 / 75f64.sqrt();
            assert!((split.x[mu] + split.y[mu] - full).abs() <= 1e-12);
            let xj: i64 = j
                .indices()
                .iter()
                .map(|&i| (xi.entry(mu, i) * s.spin(i)) as i64)
                .sum();
            assert!((split.x[mu] - xj as f64 / 75f64.sqrt()).abs() <= 1e-15);
        }
    }

    #[test]
    fn gap_single_pattern_closed_form() {
        for p in [1.5, 2.0, 3.0] {
            let e = exps(p);
            let xi = PatternMatrix::generate(64, 1, 12).unwrap();
            for size in [1, 7, 20, 31] {
                let j = FlipSet::new((0..size).collect(), 64).unwrap();
                let (lhs, rhs) = gap_representation(&xi, &j, &e).unwrap();
                let r = size as f64 / 64.0;
                let closed = -64f64.powf(-(e.p_plus - p) / 2.0) * phi_bar(r, p);
                assert!(
                    (lhs - closed).abs() <= 1e-12 && (rhs - closed).abs() <= 1e-12,
                    "p = {p}, |J| = {size}"
                );
            }
            let (lhs, rhs) = gap_representation(&xi, &FlipSet::empty(), &e).unwrap();
            assert_eq!((lhs, rhs), (0.0, 0.0));
            assert!(
                gap_representation(&xi, &FlipSet::new((0..32).collect(), 64).unwrap(), &e).is_err()
            );
        }
    }

    #[test]
    fn gap_identity_random() {
        let mut rng = stream(77, 0);
        for p in [1.5, 2.0, 3.0] {
            for seed in 0..30 {
                let xi = PatternMatrix::generate(64, 16, seed).unwrap();
                let size = rng.random_range(1..32);
                let j = FlipSet::new(rand::seq::index::sample(&mut rng, 64, size).into_vec(), 64)
                    .unwrap();
                let (lhs, rhs) = gap_representation(&xi, &j, &exps(p)).unwrap();
                assert!((lhs - rhs).abs() <= 1e-9, "p = {p}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn quadratic_identity_matches_delta() {
        let mut rng = stream(5, 0);
        for seed in 0..50 {
            let xi = PatternMatrix::generate(128, 10, seed).unwrap();
            let size = rng.random_range(0..64);
            let j = FlipSet::new(
                rand::seq::index::sample(&mut rng, 128, size).into_vec(),
                128,
            )
            .unwrap();
            let k = rng.random_range(0..128);
            let (lhs, rhs) = quadratic_flip_identity(&xi, &j, k).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
            let st = OverlapState::new(flip(&xi.pattern(0), &j).unwrap(), &xi, exps(2.0)).unwrap();
            assert!((st.delta_flip(k).unwrap() * 128.0 / 4.0 - lhs).abs() <= 1e-10);
        }
    }

    #[test]
    fn subquadratic_single_flip_expansion() {
        // N1(H(F_{J∪k}ξ¹) − H(F_Jξ¹)) = N1^{p/2}(|1−2r|^p − |1−2r−2/N1|^p) + Σ_{μ≥2}(|Z|^p − |Z − 2s/√N1|^p)
        let p = 1.5;
        let e = exps(p);
        let xi = PatternMatrix::generate(100, 12, 4).unwrap();
        let j = FlipSet::new((0..20).collect(), 100).unwrap();
        let base = flip(&xi.pattern(0), &j).unwrap();
        let st = OverlapState::new(base.clone(), &xi, e).unwrap();
        let n = 100f64;
        let k = 50;
        let r: f64 = 0.2;
        let mut rhs =
            n.powf(p / 2.0) * ((1.0 - 2.0 * r).powf(p) - (1.0 - 2.0 * r - 2.0 / n).abs().powf(p));
        for mu in 1..12 {
            let z = xi.overlap(mu, &base) as f64 / n.sqrt();
            let s = (xi.entry(mu, k) * base.spin(k)) as f64;
            rhs += z.abs().powf(p) - (z - 2.0 * s / n.sqrt()).abs().powf(p);
        }
        assert!((n * st.delta_flip(k).unwrap() - rhs).abs() <= 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn global_flip_and_row_permutation(n1 in 1usize..90, n2 in 1usize..8, seed: u64, p in 1.1f64..4.0) {
            let (xi, s) = random_instance(n1, n2, seed);
            let e = exps(p);
            let h = energy_full(&s, &xi, &e).unwrap();
            prop_assert_eq!(h, energy_full(&s.negated(), &xi, &e).unwrap());
            let mut rows: Vec<SpinState> = (0..n2).map(|mu| xi.pattern(mu)).collect();
            rows.reverse();
            let rev = PatternMatrix::from_states(&rows, 0).unwrap();
            prop_assert!((energy_full(&s, &rev, &e).unwrap() - h).abs() <= 1e-12 * h.abs().max(1e-300));
        }

        #[test]
        fn reverse_move_negates_delta(n1 in 2usize..90, n2 in 1usize..8, seed: u64, p in prop::sample::select(vec![1.5, 2.0, 2.7, 3.0])) {
            let (xi, s) = random_instance(n1, n2, seed);
            let mut st = OverlapState::new(s, &xi, exps(p)).unwrap();
            let k = (seed % n1 as u64) as usize;
            let d = st.delta_flip(k).unwrap();
            st.apply_flip(k).unwrap();
            prop_assert!((d + st.delta_flip(k).unwrap()).abs() <= 1e-10);
            prop_assert!(st.overlaps().iter().all(|m| (m - n1 as i64).rem_euclid(2) == 0));
        }
    }
}
