//! Seeded Monte Carlo campaigns over (p, α, n1) cells.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{descend, DescentPolicy};
use crate::energy::energy_full;
use crate::error::{domain, Result};
use crate::landscape::{barrier_profile, distance_to_patterns, ScanMode};
use crate::model::{entropy, patterns_for_load, threshold_t, ExponentSet};
use crate::patterns::{flips_for_radius, hamming, perturb, symmetric_distance, PatternMatrix};
use crate::rng::{derive_seed, stream, streams};

pub const SWEEP_HEADER: [&str; 17] = [
    "p",
    "q",
    "alpha",
    "n1",
    "n2",
    "r",
    "trial",
    "seed",
    "init_dist",
    "final_dist",
    "nearest_mu",
    "flips",
    "converged",
    "endpoint_energy",
    "pattern_energy",
    "cond_theorem1",
    "cond_theorem2",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Energy exponents p; q values are converted by the caller.
    pub p: Vec<f64>,
    pub alpha: Vec<f64>,
    pub n1: Vec<usize>,
    /// Perturbation fraction for sweeps, distance threshold for probes.
    pub r: f64,
    pub trials: usize,
    pub seed: u64,
    pub policy: DescentPolicy,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            p: vec![3.0],
            alpha: vec![0.1],
            n1: vec![200],
            r: 0.1,
            trials: 10,
            seed: 0,
            policy: DescentPolicy::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub exps: ExponentSet,
    pub alpha: f64,
    pub n1: usize,
    /// round(α n1^{p+/2}), forced to 1 when α = 0; zero marks an invalid cell.
    pub n2: usize,
    pub r: f64,
}

impl Cell {
    pub fn seed(&self, master: u64, trial: usize) -> u64 {
        derive_seed(
            master,
            &[
                self.exps.p.to_bits(),
                self.alpha.to_bits(),
                self.n1 as u64,
                self.r.to_bits(),
                trial as u64,
            ],
        )
    }

    /// q ∈ (1, 2); or q = 2 with r < 3/8 and α < min(√(r/(1−r))/3, √r/(25 S(r))).
    pub fn cond_theorem1(&self) -> bool {
        let q = self.exps.q;
        if q > 1.0 && q < 2.0 {
            return true;
        }
        if q == 2.0 && self.r > 0.0 && self.r < 0.375 {
            let s = entropy(self.r).unwrap_or(f64::NAN);
            let bound = ((self.r / (1.0 - self.r)).sqrt() / 3.0).min(self.r.sqrt() / (25.0 * s));
            return self.alpha < bound;
        }
        false
    }

    /// q ≥ 2 and α ≥ α_q(r), reading the unspecified constant f(q) as 1.
    pub fn cond_theorem2(&self) -> bool {
        let q = self.exps.q;
        if !(q >= 2.0) || !(self.r >= 0.0 && self.r <= 0.5) {
            return false;
        }
        let s = entropy(self.r).unwrap_or(f64::NAN);
        let aq = if q == 2.0 {
            s / (1.0 - 2.0 * self.r).powi(2)
        } else {
            s
        };
        self.alpha >= aq
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.alpha.is_empty() || self.n1.is_empty() {
            return Err(domain("sweep needs at least one p, alpha and n1 value"));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(domain(format!("r must lie in [0, 1], got {}", self.r)));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(domain(format!("alpha must be finite and >= 0, got {a}")));
        }
        if self.n1.contains(&0) {
            return Err(domain("n1 must be positive"));
        }
        self.policy.validate()
    }

    /// Cells in (p, α, n1) order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.validate()?;
        let mut cells = Vec::new();
        for &p in &self.p {
            let exps = ExponentSet::from_p(p)?;
            for &alpha in &self.alpha {
                for &n1 in &self.n1 {
                    let n2 = if alpha == 0.0 {
                        1
                    } else {
                        patterns_for_load(alpha, n1, &exps)
                    };
                    cells.push(Cell {
                        exps,
                        alpha,
                        n1,
                        n2,
                        r: self.r,
                    });
                }
            }
        }
        Ok(cells)
    }
}

/// One row of a sweep; `warning` rows stand for trials of cells without patterns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub init_dist: Option<usize>,
    /// Symmetric distance to the nearest pattern.
    pub final_dist: Option<usize>,
    pub nearest_mu: Option<usize>,
    /// Symmetric distance to the first pattern.
    pub dist_to_first: Option<usize>,
    pub flips: Option<usize>,
    pub converged: Option<bool>,
    pub endpoint_energy: Option<f64>,
    pub pattern_energy: Option<f64>,
    pub warning: Option<String>,
}

impl TrialRecord {
    fn warning(cell: Cell, trial: usize, seed: u64) -> Self {
        Self {
            cell,
            trial,
            seed,
            init_dist: None,
            final_dist: None,
            nearest_mu: None,
            dist_to_first: None,
            flips: None,
            converged: None,
            endpoint_energy: None,
            pattern_energy: None,
            warning: Some(format!(
                "alpha = {} gives n2 = 0 at n1 = {}; cell skipped",
                cell.alpha, cell.n1
            )),
        }
    }

    pub fn csv_row(&self) -> [String; 17] {
        let c = &self.cell;
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            c.exps.p.to_string(),
            c.exps.q.to_string(),
            c.alpha.to_string(),
            c.n1.to_string(),
            c.n2.to_string(),
            c.r.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
            opt(self.init_dist.map(|v| v.to_string())),
            opt(self.final_dist.map(|v| v.to_string())),
            opt(self.nearest_mu.map(|v| v.to_string())),
            opt(self.flips.map(|v| v.to_string())),
            opt(self.converged.map(|v| v.to_string())),
            opt(self.endpoint_energy.map(|v| v.to_string())),
            opt(self.pattern_energy.map(|v| v.to_string())),
            c.cond_theorem1().to_string(),
            c.cond_theorem2().to_string(),
        ]
    }
}

pub fn write_records<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in records {
        out.write_record(r.csv_row())?;
    }
    out.flush()?;
    Ok(())
}

fn run_trial(
    cell: Cell,
    trial: usize,
    master: u64,
    policy: &DescentPolicy,
    perturb_r: f64,
) -> Result<TrialRecord> {
    let seed = cell.seed(master, trial);
    if cell.n2 == 0 {
        return Ok(TrialRecord::warning(cell, trial, seed));
    }
    let xi = PatternMatrix::generate(cell.n1, cell.n2, seed)?;
    let target = xi.pattern(0);
    let start = perturb(&target, perturb_r, &mut stream(seed, streams::PERTURB))?;
    let init_dist = hamming(&start, &target)?;
    let res = descend(
        start,
        &xi,
        &cell.exps,
        policy,
        &mut stream(seed, streams::DESCENT),
    )?;
    let (nearest_mu, final_dist) = distance_to_patterns(&xi, &res.endpoint)?;
    Ok(TrialRecord {
        cell,
        trial,
        seed,
        init_dist: Some(init_dist),
        final_dist: Some(final_dist),
        nearest_mu: Some(nearest_mu),
        dist_to_first: Some(symmetric_distance(&res.endpoint, &target)?),
        flips: Some(res.flips),
        converged: Some(res.converged),
        endpoint_energy: Some(res.final_energy()),
        pattern_energy: Some(energy_full(&target, &xi, &cell.exps)?),
        warning: None,
    })
}

fn run_cells(config: &SweepConfig, perturb_r: f64) -> Result<Vec<TrialRecord>> {
    let cells = config.cells()?;
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    jobs.into_par_iter()
        .map(|(cell, trial)| run_trial(cell, trial, config.seed, &config.policy, perturb_r))
        .collect()
}

/// Descents from ξ1 perturbed by ⌊r n1⌋ flips, one per (cell, trial), in (cell, trial) order.
pub fn retrieval_sweep(config: &SweepConfig) -> Result<Vec<TrialRecord>> {
    run_cells(config, config.r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub cell: Cell,
    pub trials: usize,
    pub threshold: usize,
    /// Fraction of trials ending at least ⌊r n1⌋ from every pattern.
    pub far_fraction: f64,
    pub median_final_dist: f64,
}

/// Descents started at ξ1 itself; `r` is the distance threshold of the summary.
pub fn non_retrieval_probe(config: &SweepConfig) -> Result<(Vec<TrialRecord>, Vec<ProbeSummary>)> {
    if let Some(p) = config.p.iter().find(|p| !(**p > 1.0 && **p <= 2.0)) {
        return Err(domain(format!("the probe needs p in (1, 2], got {p}")));
    }
    let records = run_cells(config, 0.0)?;
    let summaries = summarize(config, &records)?;
    Ok((records, summaries))
}

pub fn summarize(config: &SweepConfig, records: &[TrialRecord]) -> Result<Vec<ProbeSummary>> {
    let cells = config.cells()?;
    Ok(cells
        .into_iter()
        .map(|cell| {
            let threshold = flips_for_radius(cell.r, cell.n1);
            let dists: Vec<usize> = records
                .iter()
                .filter(|r| r.cell == cell)
                .filter_map(|r| r.final_dist)
                .collect();
            let far = dists.iter().filter(|&&d| d >= threshold).count();
            ProbeSummary {
                cell,
                trials: dists.len(),
                threshold,
                far_fraction: if dists.is_empty() {
                    f64::NAN
                } else {
                    far as f64 / dists.len() as f64
                },
                median_final_dist: median(dists.iter().map(|&d| d as f64).collect()),
            }
        })
        .collect())
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub radius: usize,
    pub min_gap: f64,
    pub mode: ScanMode,
    pub samples: u64,
    /// t(r) at r = radius/n1, empty outside p ≥ 2 and r ∈ (0, 1/2].
    pub threshold_t: Option<f64>,
}

pub const BARRIER_HEADER: [&str; 13] = [
    "p",
    "q",
    "alpha",
    "n1",
    "n2",
    "trial",
    "seed",
    "radius",
    "min_gap",
    "mode",
    "samples",
    "requested",
    "threshold_t",
];

/// Barrier profiles around ξ1 for radii given as fractions of n1.
pub fn barrier_profile_experiment(
    config: &SweepConfig,
    radius_fractions: &[f64],
    mode: ScanMode,
) -> Result<Vec<BarrierRow>> {
    let cells = config.cells()?;
    if let Some(f) = radius_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(domain(format!(
            "radius fractions must lie in [0, 1], got {f}"
        )));
    }
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .filter(|c| c.n2 > 0)
        .flat_map(|&c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let per_job: Vec<Vec<BarrierRow>> = jobs
        .into_par_iter()
        .map(|(cell, trial)| {
            let seed = cell.seed(config.seed, trial);
            let xi = PatternMatrix::generate(cell.n1, cell.n2, seed)?;
            let mut radii: Vec<usize> = radius_fractions
                .iter()
                .map(|&f| flips_for_radius(f, cell.n1))
                .collect();
            radii.dedup();
            let prof = barrier_profile(
                &xi,
                0,
                &radii,
                &cell.exps,
                mode,
                derive_seed(seed, &[streams::SCAN]),
            )?;
            Ok(radii
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let r = n as f64 / cell.n1 as f64;
                    BarrierRow {
                        cell,
                        trial,
                        seed,
                        radius: n,
                        min_gap: prof.min_gap[i],
                        mode,
                        samples: prof.samples_per_radius[i],
                        threshold_t: threshold_t(r, cell.exps.p).ok(),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

pub fn write_barrier_rows<W: Write>(rows: &[BarrierRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BARRIER_HEADER)?;
    for b in rows {
        let c = &b.cell;
        let requested = match b.mode {
            ScanMode::Exhaustive => "exhaustive".to_string(),
            ScanMode::Sampled(k) => k.to_string(),
        };
        out.write_record([
            c.exps.p.to_string(),
            c.exps.q.to_string(),
            c.alpha.to_string(),
            c.n1.to_string(),
            c.n2.to_string(),
            b.trial.to_string(),
            b.seed.to_string(),
            b.radius.to_string(),
            b.min_gap.to_string(),
            b.mode.label().to_string(),
            b.samples.to_string(),
            requested,
            b.threshold_t.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
