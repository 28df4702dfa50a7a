mod config;
mod manifest;

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pspin::dynamics::{descend, perturb, DescentPolicy, Rule, SweepOrder};
use pspin::energy::energy_full;
use pspin::experiments::{
    barrier_profile_experiment, non_retrieval_probe, retrieval_sweep, write_barrier_rows,
    write_records,
};
use pspin::landscape::{barrier_profile, ScanMode};
use pspin::model::ExponentSet;
use pspin::patterns::{flips_for_radius, PatternMatrix, SpinState};
use pspin::priors::{growth_ratio, psi_norm, PriorSpec};
use pspin::rng::{stream, streams};
use pspin::stats::Status;
use pspin::verify::run_suite;

use config::{merge, resolve_seed, FileConfig, Overrides};
use manifest::Run;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Budget(String),
    Io(String),
    Run(String),
    VerifyFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Io(_) | CliError::Run(_) | CliError::VerifyFailed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid argument: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Budget(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
            CliError::VerifyFailed(n) => write!(f, "{n} verification check(s) failed"),
        }
    }
}

impl From<pspin::Error> for CliError {
    fn from(e: pspin::Error) -> Self {
        match e {
            pspin::Error::Budget { .. } => CliError::Budget(e.to_string()),
            pspin::Error::Domain(_)
            | pspin::Error::DimensionMismatch { .. }
            | pspin::Error::IndexOutOfRange { .. } => CliError::Usage(e.to_string()),
            pspin::Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "pspin",
    version,
    about = "Energy landscapes and retrieval experiments for p-spin associative memories"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; falls back to the config file, then PSPIN_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct Source {
    /// Pattern file written by gen-patterns.
    #[arg(long, conflicts_with_all = ["n1", "n2"])]
    patterns: Option<PathBuf>,
    /// Generate patterns of this length from the seed instead.
    #[arg(long, requires = "n2")]
    n1: Option<usize>,
    #[arg(long, requires = "n1")]
    n2: Option<usize>,
}

impl Source {
    fn load(&self, seed: u64) -> Result<PatternMatrix> {
        match (&self.patterns, self.n1, self.n2) {
            (Some(path), _, _) => Ok(PatternMatrix::load(path)?),
            (None, Some(n1), Some(n2)) => Ok(PatternMatrix::generate(n1, n2, seed)?),
            _ => Err(CliError::Usage(
                "give --patterns FILE or both --n1 and --n2".into(),
            )),
        }
    }
}

#[derive(Args, Clone, Default)]
struct SweepFlags {
    /// TOML run file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', conflicts_with = "q")]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n1: Option<Vec<usize>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
}

impl SweepFlags {
    fn overrides(&self, seed: Option<u64>) -> Overrides {
        Overrides {
            p: self.p.clone(),
            q: self.q.clone(),
            alpha: self.alpha.clone(),
            n1: self.n1.clone(),
            r: self.r,
            trials: self.trials,
            seed,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum RuleArg {
    FirstImprovement,
    Steepest,
}

#[derive(Copy, Clone, ValueEnum)]
enum OrderArg {
    Fixed,
    RandomPermutation,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a pattern matrix and save it in the binary pattern format.
    GenPatterns {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n1: usize,
        /// Number of patterns; or give --alpha and --p.
        #[arg(long, conflicts_with = "alpha")]
        n2: Option<usize>,
        #[arg(long, requires = "p")]
        alpha: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Energy of a configuration.
    Energy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        p: f64,
        /// Configuration as a string of '+' and '-'.
        #[arg(long, conflicts_with = "pattern")]
        state: Option<String>,
        /// Use pattern μ (0-based) as the configuration.
        #[arg(long)]
        pattern: Option<usize>,
    },
    /// Greedy single-flip descent.
    Descend {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        p: f64,
        /// Start from pattern μ (0-based); random start otherwise.
        #[arg(long)]
        start_pattern: Option<usize>,
        /// Flip ⌊r·n1⌋ random sites of the start first.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        #[arg(long, value_enum, default_value = "first-improvement")]
        rule: RuleArg,
        #[arg(long, value_enum, default_value = "random-permutation")]
        order: OrderArg,
        #[arg(long, default_value_t = 100_000)]
        max_sweeps: usize,
        #[arg(long)]
        tie_epsilon: Option<f64>,
    },
    /// Minimal energy gaps on Hamming spheres around a pattern.
    Scan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepFlags,
        /// Scan one pattern file instead of the config's cells (needs a single --p).
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        mu: usize,
        /// Radii as fractions of n1.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Samples per radius; 0 scans every point.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Retrieval sweep: descents from perturbed patterns over (p, α, n1) cells.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Descents started at the pattern, for p in (1, 2].
    Probe {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Cumulant growth and ψ-norm of a hidden-unit prior.
    Prior {
        #[command(flatten)]
        common: Common,
        /// gaussian, rademacher, stretched_exp:<q> or mix:<weight>.
        #[arg(long)]
        family: String,
        #[arg(long)]
        p: f64,
        /// ψ_r norm order; defaults to the tail exponent when finite, else 2.
        #[arg(long)]
        psi: Option<f64>,
    },
    /// Run the full invariant suite.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn exps(p: f64) -> Result<ExponentSet> {
    Ok(ExponentSet::from_p(p)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn radius_mode(samples: Option<usize>) -> ScanMode {
    match samples {
        Some(0) => ScanMode::Exhaustive,
        Some(k) => ScanMode::Sampled(k),
        None => ScanMode::Sampled(1000),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenPatterns {
            common,
            n1,
            n2,
            alpha,
            p,
        } => {
            let seed = resolve_seed(common.seed, None)?;
            let n2 = match (n2, alpha, p) {
                (Some(n2), _, _) => n2,
                (None, Some(a), Some(p)) => pspin::model::patterns_for_load(a, n1, &exps(p)?),
                _ => return Err(CliError::Usage("give --n2, or --alpha with --p".into())),
            };
            let mut run = Run::start(
                "gen-patterns",
                &common.out,
                seed,
                &json!({"n1": n1, "n2": n2, "seed": seed}),
            )?;
            let xi = PatternMatrix::generate(n1, n2, seed)?;
            xi.save(run.output("patterns.bin"))?;
            println!("wrote {} patterns of length {n1}", n2);
            run.finish()?;
        }
        Command::Energy {
            common,
            source,
            p,
            state,
            pattern,
        } => {
            let seed = resolve_seed(common.seed, None)?;
            let xi = source.load(seed)?;
            let e = exps(p)?;
            let sigma = match (state, pattern) {
                (Some(s), _) => s.parse::<SpinState>()?,
                (None, Some(mu)) if mu < xi.n2() => xi.pattern(mu),
                (None, Some(mu)) => {
                    return Err(CliError::Usage(format!(
                        "pattern {mu} out of range (n2 = {})",
                        xi.n2()
                    )))
                }
                (None, None) => SpinState::random(xi.n1(), &mut stream(seed, streams::START)),
            };
            let energy = energy_full(&sigma, &xi, &e)?;
            let result = json!({
                "n1": xi.n1(), "n2": xi.n2(), "p": p, "energy": energy, "state": sigma.to_string(),
                "nearest": xi.nearest(&sigma)?,
            });
            let mut run = Run::start("energy", &common.out, seed, &result)?;
            write_json(&run.output("energy.json"), &result)?;
            println!("energy {energy}");
            run.finish()?;
        }
        Command::Descend {
            common,
            source,
            p,
            start_pattern,
            perturb: r,
            rule,
            order,
            max_sweeps,
            tie_epsilon,
        } => {
            let seed = resolve_seed(common.seed, None)?;
            let xi = source.load(seed)?;
            let e = exps(p)?;
            let policy = DescentPolicy {
                rule: match rule {
                    RuleArg::FirstImprovement => Rule::FirstImprovement,
                    RuleArg::Steepest => Rule::Steepest,
                },
                sweep_order: match order {
                    OrderArg::Fixed => SweepOrder::Fixed,
                    OrderArg::RandomPermutation => SweepOrder::RandomPermutation,
                },
                max_sweeps,
                tie_epsilon,
            };
            let base = match start_pattern {
                Some(mu) if mu < xi.n2() => xi.pattern(mu),
                Some(mu) => {
                    return Err(CliError::Usage(format!(
                        "pattern {mu} out of range (n2 = {})",
                        xi.n2()
                    )))
                }
                None => SpinState::random(xi.n1(), &mut stream(seed, streams::START)),
            };
            let start = perturb(&base, r, &mut stream(seed, streams::PERTURB))?;
            let res = descend(start, &xi, &e, &policy, &mut stream(seed, streams::DESCENT))?;
            let (mu, dist) = xi.nearest(&res.endpoint)?;
            let cfg = json!({"n1": xi.n1(), "n2": xi.n2(), "p": p, "start_pattern": start_pattern,
                "perturb": r, "policy": policy, "pattern_seed": xi.seed()});
            let mut run = Run::start("descend", &common.out, seed, &cfg)?;
            write_json(
                &run.output("descent.json"),
                &json!({"config": cfg, "seed": seed, "result": res,
                "nearest_mu": mu, "final_dist": dist}),
            )?;
            println!(
                "flips {} sweeps {} converged {} energy {} nearest {mu} distance {dist}",
                res.flips,
                res.sweeps,
                res.converged,
                res.final_energy()
            );
            run.finish()?;
        }
        Command::Scan {
            common,
            sweep,
            patterns,
            mu,
            radii,
            samples,
        } => {
            let file = FileConfig::load(sweep.config.as_deref())?;
            let radii = radii
                .or(file.radii.clone())
                .unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.3]);
            let mode = radius_mode(samples.or(file.samples));
            let (file, cfg) = merge(file, &sweep.overrides(common.seed))?;
            let key = json!({"file": file, "radii": radii, "mode": mode, "mu": mu,
                "patterns": patterns.as_ref().map(|p| p.display().to_string())});
            let mut run = Run::start("scan", &common.out, cfg.seed, &key)?;
            let out = run.output("barrier.csv");
            if let Some(path) = patterns {
                let [p] = cfg.p[..] else {
                    return Err(CliError::Usage(
                        "scanning a pattern file needs exactly one --p".into(),
                    ));
                };
                let xi = PatternMatrix::load(&path)?;
                if mu >= xi.n2() {
                    return Err(CliError::Usage(format!(
                        "pattern {mu} out of range (n2 = {})",
                        xi.n2()
                    )));
                }
                let mut rs: Vec<usize> = radii
                    .iter()
                    .map(|&f| flips_for_radius(f, xi.n1()))
                    .collect();
                rs.dedup();
                let prof = barrier_profile(&xi, mu, &rs, &exps(p)?, mode, cfg.seed)?;
                prof.write_csv(create(&out)?)?;
                println!("scanned {} radii around pattern {mu}", rs.len());
            } else {
                let rows = barrier_profile_experiment(&cfg, &radii, mode)?;
                write_barrier_rows(&rows, create(&out)?)?;
                println!("wrote {} barrier rows", rows.len());
            }
            run.finish()?;
        }
        Command::Sweep { common, sweep } => {
            let (file, cfg) = merge(
                FileConfig::load(sweep.config.as_deref())?,
                &sweep.overrides(common.seed),
            )?;
            let mut run = Run::start(
                "sweep",
                &common.out,
                cfg.seed,
                &json!({"file": file, "config": cfg}),
            )?;
            let records = retrieval_sweep(&cfg)?;
            write_records(&records, create(&run.output("sweep.csv"))?)?;
            let warnings = records.iter().filter(|r| r.warning.is_some()).count();
            println!("wrote {} records ({warnings} warnings)", records.len());
            for r in records.iter().filter_map(|r| r.warning.as_ref()).take(1) {
                eprintln!("warning: {r}");
            }
            run.finish()?;
        }
        Command::Probe { common, sweep } => {
            let (file, cfg) = merge(
                FileConfig::load(sweep.config.as_deref())?,
                &sweep.overrides(common.seed),
            )?;
            let mut run = Run::start(
                "probe",
                &common.out,
                cfg.seed,
                &json!({"file": file, "config": cfg}),
            )?;
            let (records, summary) = non_retrieval_probe(&cfg)?;
            write_records(&records, create(&run.output("probe.csv"))?)?;
            write_json(&run.output("probe_summary.json"), &summary)?;
            for s in &summary {
                println!(
                    "p {} alpha {} n1 {} n2 {}: {:.3} of {} trials ended >= {} from every pattern",
                    s.cell.exps.p,
                    s.cell.alpha,
                    s.cell.n1,
                    s.cell.n2,
                    s.far_fraction,
                    s.trials,
                    s.threshold
                );
            }
            run.finish()?;
        }
        Command::Prior {
            common,
            family,
            p,
            psi,
        } => {
            let seed = resolve_seed(common.seed, None)?;
            let spec: PriorSpec = family.parse()?;
            let report = growth_ratio(&spec, p)?;
            let r = psi.unwrap_or_else(|| {
                let t = spec.tail_exponent();
                if t.is_finite() {
                    t
                } else {
                    2.0
                }
            });
            let norm = psi_norm(&spec, r)?;
            // extreme ratios over the last grid decade
            let tail = &report.ratio[report.ratio.len().saturating_sub(11)..];
            let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let summary = json!({
                "prior": spec, "p": p, "limit_estimate": report.limit_estimate, "converged": report.converged,
                "psi_order": r, "psi_norm": norm, "c": lo, "C": hi,
                "c_times_norm_p": lo * norm.powf(p), "C_times_norm_p": hi * norm.powf(p),
            });
            let mut run = Run::start(
                "prior",
                &common.out,
                seed,
                &json!({"prior": spec, "p": p, "psi": r}),
            )?;
            report.write_csv(create(&run.output("cumulant.csv"))?)?;
            write_json(&run.output("prior.json"), &summary)?;
            println!(
                "{spec}: u(x)/|x|^{p} -> {} (converged {}), psi_{r} norm {norm}",
                report.limit_estimate, report.converged
            );
            run.finish()?;
        }
        Command::Verify { common } => {
            let seed = resolve_seed(common.seed, None)?;
            let mut run = Run::start("verify", &common.out, seed, &json!({"seed": seed}))?;
            let report = run_suite(seed);
            for c in &report.checks {
                let status = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Refuted => "REFUTED",
                };
                println!(
                    "{status:<8} {:<44} margin {:.3e}  {}",
                    c.name, c.worst_margin, c.location
                );
            }
            println!(
                "{} passed, {} failed, {} refuted",
                report.passed, report.failed, report.refuted
            );
            write_json(&run.output("verify.json"), &report)?;
            run.finish()?;
            if !report.ok() {
                return Err(CliError::VerifyFailed(report.failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
