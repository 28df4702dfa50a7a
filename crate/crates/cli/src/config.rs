//! The TOML run file. Every key is optional; command-line flags win over the file,
//! and PSPIN_SEED only fills in a seed that neither supplies.
//!
//! ```toml
//! p = [3.0]            # or q = [1.5]; not both
//! alpha = [0.1]
//! n1 = [200, 400]
//! r = 0.1              # perturbation (sweep), distance threshold (probe)
//! trials = 50
//! seed = 7
//! radii = [0.05, 0.1]  # scan only, fractions of n1
//! samples = 1000       # scan only, 0 = exhaustive
//!
//! [policy]
//! rule = "first-improvement"          # or "steepest"
//! sweep_order = "random-permutation"  # or "fixed"
//! max_sweeps = 100000
//! tie_epsilon = 0.0
//! ```

use std::path::Path;

use pspin::dynamics::DescentPolicy;
use pspin::experiments::SweepConfig;
use pspin::model::ExponentSet;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub n1: Option<Vec<usize>>,
    pub r: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub radii: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub policy: Option<DescentPolicy>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Exponents from `p` or `q`.
    pub fn exponents(&self) -> Result<Option<Vec<f64>>, CliError> {
        match (&self.p, &self.q) {
            (Some(_), Some(_)) => Err(CliError::Config("give either p or q, not both".into())),
            (Some(p), None) => Ok(Some(p.clone())),
            (None, Some(q)) => q
                .iter()
                .map(|&q| ExponentSet::from_q(q).map(|e| e.p))
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|e| CliError::Config(e.to_string())),
            (None, None) => Ok(None),
        }
    }
}

/// Values given on the command line; each one replaces the file's.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub n1: Option<Vec<usize>>,
    pub r: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

pub fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("PSPIN_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| {
            CliError::Config(format!("PSPIN_SEED must be an unsigned integer, got {s:?}"))
        }),
        Err(_) => Ok(None),
    }
}

pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    Ok(flag.or(file).or(env_seed()?).unwrap_or(0))
}

pub fn merge(mut file: FileConfig, o: &Overrides) -> Result<(FileConfig, SweepConfig), CliError> {
    if o.p.is_some() || o.q.is_some() {
        file.p = o.p.clone();
        file.q = o.q.clone();
    }
    if o.alpha.is_some() {
        file.alpha = o.alpha.clone();
    }
    if o.n1.is_some() {
        file.n1 = o.n1.clone();
    }
    file.r = o.r.or(file.r);
    file.trials = o.trials.or(file.trials);
    file.seed = Some(resolve_seed(o.seed, file.seed)?);
    let d = SweepConfig::default();
    let sweep = SweepConfig {
        p: file.exponents()?.unwrap_or(d.p),
        alpha: file.alpha.clone().unwrap_or(d.alpha),
        n1: file.n1.clone().unwrap_or(d.n1),
        r: file.r.unwrap_or(d.r),
        trials: file.trials.unwrap_or(d.trials),
        seed: file.seed.unwrap_or(0),
        policy: file.policy.unwrap_or_default(),
    };
    sweep
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((file, sweep))
}
