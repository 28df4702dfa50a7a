//! Bit-packed ±1 vectors: spin configurations, flip sets and pattern matrices.
//!
//! Entry i of a vector lives in bit `i % 64` of word `i / 64`; a set bit is +1.
//! Bits past the logical length are always zero, so XOR/popcount inner products
//! need no masking.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_len, Error, Result};
use crate::rng::{derive_seed, stream, streams};

pub const WORD_BITS: usize = 64;

pub fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

fn tail_mask(n: usize) -> u64 {
    match n % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[inline]
fn bit(words: &[u64], i: usize) -> bool {
    words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
}

/// Σ_i a_i b_i for two packed vectors of logical length `n`.
#[inline]
pub fn packed_dot(a: &[u64], b: &[u64], n: usize) -> i64 {
    let diff: u32 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum();
    n as i64 - 2 * diff as i64
}

/// Serialized as a string of `+` and `-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SpinState {
    n1: usize,
    bits: Vec<u64>,
}

impl SpinState {
    pub fn all_up(n1: usize) -> Self {
        let mut bits = vec![u64::MAX; words_for(n1)];
        if let Some(last) = bits.last_mut() {
            *last &= tail_mask(n1);
        }
        Self { n1, bits }
    }

    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut bits = vec![0u64; words_for(spins.len())];
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => bits[i / WORD_BITS] |= 1 << (i % WORD_BITS),
                -1 => {}
                other => return Err(domain(format!("spin {i} is {other}, expected ±1"))),
            }
        }
        Ok(Self {
            n1: spins.len(),
            bits,
        })
    }

    pub fn from_words(n1: usize, bits: Vec<u64>) -> Result<Self> {
        ensure_len(words_for(n1), bits.len())?;
        if let Some(&last) = bits.last() {
            if last & !tail_mask(n1) != 0 {
                return Err(domain("padding bits past n1 must be zero"));
            }
        }
        Ok(Self { n1, bits })
    }

    pub fn random<R: RngCore + ?Sized>(n1: usize, rng: &mut R) -> Self {
        let mut bits: Vec<u64> = (0..words_for(n1)).map(|_| rng.next_u64()).collect();
        if let Some(last) = bits.last_mut() {
            *last &= tail_mask(n1);
        }
        Self { n1, bits }
    }

    /// The state whose bit pattern is the low `n1` bits of `code`.
    pub fn from_code(n1: usize, code: u64) -> Self {
        assert!(n1 <= 64, "from_code needs n1 <= 64");
        let bits = if n1 == 0 {
            vec![]
        } else {
            vec![code & tail_mask(n1)]
        };
        Self { n1, bits }
    }

    pub fn len(&self) -> usize {
        self.n1
    }

    pub fn is_empty(&self) -> bool {
        self.n1 == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn spin(&self, i: usize) -> i8 {
        if bit(&self.bits, i) {
            1
        } else {
            -1
        }
    }

    pub fn is_up(&self, i: usize) -> bool {
        bit(&self.bits, i)
    }

    pub fn flip_site(&mut self, i: usize) -> Result<()> {
        if i >= self.n1 {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n1,
            });
        }
        self.bits[i / WORD_BITS] ^= 1 << (i % WORD_BITS);
        Ok(())
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.bits {
            *w = !*w;
        }
        if let Some(last) = out.bits.last_mut() {
            *last &= tail_mask(self.n1);
        }
        out
    }

    pub fn to_spins(&self) -> Vec<i8> {
        (0..self.n1).map(|i| self.spin(i)).collect()
    }

    pub fn dot(&self, other: &SpinState) -> Result<i64> {
        ensure_len(self.n1, other.n1)?;
        Ok(packed_dot(&self.bits, &other.bits, self.n1))
    }
}

impl std::fmt::Display for SpinState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n1 {
            f.write_str(if self.is_up(i) { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SpinState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(domain(format!("unexpected spin character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::from_spins(&spins)
    }
}

impl TryFrom<String> for SpinState {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SpinState> for String {
    fn from(s: SpinState) -> String {
        s.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlipSet {
    indices: Vec<usize>,
}

impl FlipSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts the indices; duplicates and indices ≥ n1 are rejected.
    pub fn new(mut indices: Vec<usize>, n1: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&last) = indices.last() {
            if last >= n1 {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    len: n1,
                });
            }
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("flip set has duplicate indices"));
        }
        Ok(Self { indices })
    }

    pub fn all(n1: usize) -> Self {
        Self {
            indices: (0..n1).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// J △ {k}.
    pub fn toggled(&self, k: usize) -> Self {
        let mut indices = self.indices.clone();
        match indices.binary_search(&k) {
            Ok(pos) => {
                indices.remove(pos);
            }
            Err(pos) => indices.insert(pos, k),
        }
        Self { indices }
    }

    pub fn mask(&self, n1: usize) -> Vec<u64> {
        let mut words = vec![0u64; words_for(n1)];
        for &i in &self.indices {
            words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
        }
        words
    }
}

pub fn flip(sigma: &SpinState, j: &FlipSet) -> Result<SpinState> {
    let mut out = sigma.clone();
    for &i in j.indices() {
        out.flip_site(i)?;
    }
    Ok(out)
}

pub fn hamming(a: &SpinState, b: &SpinState) -> Result<usize> {
    ensure_len(a.n1, b.n1)?;
    Ok(a.bits
        .iter()
        .zip(&b.bits)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// min(d(a, b), d(a, −b)).
pub fn symmetric_distance(a: &SpinState, b: &SpinState) -> Result<usize> {
    let d = hamming(a, b)?;
    Ok(d.min(a.n1 - d))
}

/// n2 patterns of length n1, stored row-major with a column-major copy for
/// per-site access.
#[derive(Clone, Debug)]
pub struct PatternMatrix {
    n1: usize,
    n2: usize,
    seed: u64,
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl PartialEq for PatternMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n1 == other.n1
            && self.n2 == other.n2
            && self.seed == other.seed
            && self.rows == other.rows
    }
}

impl Eq for PatternMatrix {}

const MAGIC: &[u8; 4] = b"PSPN";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 3 * 8;

impl PatternMatrix {
    pub fn generate(n1: usize, n2: usize, seed: u64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(domain(format!(
                "pattern dimensions must be positive, got {n1} x {n2}"
            )));
        }
        let wpr = words_for(n1);
        let row_seed = derive_seed(seed, &[streams::PATTERNS]);
        let mut rows = Vec::with_capacity(n2 * wpr);
        for mu in 0..n2 {
            let mut rng = stream(row_seed, mu as u64);
            for w in 0..wpr {
                let word = rng.next_u64();
                rows.push(if w + 1 == wpr {
                    word & tail_mask(n1)
                } else {
                    word
                });
            }
        }
        Ok(Self::assemble(n1, n2, seed, rows))
    }

    pub fn from_states(states: &[SpinState], seed: u64) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| domain("need at least one pattern"))?;
        let n1 = first.len();
        if n1 == 0 {
            return Err(domain("patterns must have positive length"));
        }
        let mut rows = Vec::with_capacity(states.len() * words_for(n1));
        for s in states {
            ensure_len(n1, s.len())?;
            rows.extend_from_slice(s.words());
        }
        Ok(Self::assemble(n1, states.len(), seed, rows))
    }

    fn assemble(n1: usize, n2: usize, seed: u64, rows: Vec<u64>) -> Self {
        let wpr = words_for(n1);
        let wpc = words_for(n2);
        let mut cols = vec![0u64; n1 * wpc];
        for mu in 0..n2 {
            let row = &rows[mu * wpr..(mu + 1) * wpr];
            for k in 0..n1 {
                if bit(row, k) {
                    cols[k * wpc + mu / WORD_BITS] |= 1 << (mu % WORD_BITS);
                }
            }
        }
        Self {
            n1,
            n2,
            seed,
            rows,
            cols,
        }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn words_per_row(&self) -> usize {
        words_for(self.n1)
    }

    pub fn row(&self, mu: usize) -> &[u64] {
        let wpr = self.words_per_row();
        &self.rows[mu * wpr..(mu + 1) * wpr]
    }

    /// Bit μ of the returned words is ξ^(μ)_k.
    pub fn column(&self, k: usize) -> &[u64] {
        let wpc = words_for(self.n2);
        &self.cols[k * wpc..(k + 1) * wpc]
    }

    pub fn pattern(&self, mu: usize) -> SpinState {
        SpinState {
            n1: self.n1,
            bits: self.row(mu).to_vec(),
        }
    }

    pub fn entry(&self, mu: usize, k: usize) -> i8 {
        if bit(self.row(mu), k) {
            1
        } else {
            -1
        }
    }

    pub fn overlap(&self, mu: usize, sigma: &SpinState) -> i64 {
        packed_dot(self.row(mu), sigma.words(), self.n1)
    }

    pub fn overlaps(&self, sigma: &SpinState) -> Result<Vec<i64>> {
        ensure_len(self.n1, sigma.len())?;
        Ok((0..self.n2).map(|mu| self.overlap(mu, sigma)).collect())
    }

    /// The pattern closest to σ up to global sign, with that distance.
    pub fn nearest(&self, sigma: &SpinState) -> Result<(usize, usize)> {
        ensure_len(self.n1, sigma.len())?;
        let mut best = (0, usize::MAX);
        for mu in 0..self.n2 {
            let m = self.overlap(mu, sigma);
            let d = (self.n1 - m.unsigned_abs() as usize) / 2;
            if d < best.1 {
                best = (mu, d);
            }
        }
        Ok(best)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION])?;
        for v in [self.n1 as u64, self.n2 as u64, self.seed] {
            w.write_all(&v.to_le_bytes())?;
        }
        for word in &self.rows {
            w.write_all(&word.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::decode(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }

    fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() < MAGIC.len() {
            return Err(Error::Truncated {
                expected: HEADER_LEN as u64,
                found: buf.len() as u64,
            });
        }
        if &buf[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if buf.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN as u64,
                found: buf.len() as u64,
            });
        }
        if buf[4] != VERSION {
            return Err(Error::UnsupportedVersion(buf[4]));
        }
        let field = |i: usize| u64::from_le_bytes(buf[5 + 8 * i..13 + 8 * i].try_into().unwrap());
        let (n1, n2, seed) = (field(0), field(1), field(2));
        if n1 == 0 || n2 == 0 {
            return Err(Error::Format(format!("zero dimension {n1} x {n2}")));
        }
        let body = n1
            .div_ceil(WORD_BITS as u64)
            .checked_mul(n2)
            .and_then(|w| w.checked_mul(8))
            .and_then(|b| b.checked_add(HEADER_LEN as u64))
            .ok_or_else(|| Error::Format(format!("dimensions {n1} x {n2} overflow")))?;
        if (buf.len() as u64) < body {
            return Err(Error::Truncated {
                expected: body,
                found: buf.len() as u64,
            });
        }
        if (buf.len() as u64) > body {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                buf.len() as u64 - body
            )));
        }
        let (n1, n2) = (n1 as usize, n2 as usize);
        let wpr = words_for(n1);
        let rows: Vec<u64> = buf[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mask = tail_mask(n1);
        if rows.chunks_exact(wpr).any(|row| row[wpr - 1] & !mask != 0) {
            return Err(Error::Format("nonzero padding bits".into()));
        }
        Ok(Self::assemble(n1, n2, seed, rows))
    }
}

/// Number of sites flipped for a radius fraction r: ⌊r·n1⌋, robust to
/// decimal fractions like 0.29 that are not exact in binary.
pub fn flips_for_radius(r: f64, n1: usize) -> usize {
    (r * n1 as f64 + 1e-9).floor().max(0.0) as usize
}

/// F_J σ for J a uniformly random set of ⌊r·n1⌋ distinct sites.
pub fn perturb<R: Rng + ?Sized>(sigma: &SpinState, r: f64, rng: &mut R) -> Result<SpinState> {
    if !(0.0..=1.0).contains(&r) {
        return Err(domain(format!(
            "perturbation radius must lie in [0, 1], got {r}"
        )));
    }
    let n = flips_for_radius(r, sigma.len()).min(sigma.len());
    let j = FlipSet::new(
        rand::seq::index::sample(rng, sigma.len(), n).into_vec(),
        sigma.len(),
    )?;
    flip(sigma, &j)
}
