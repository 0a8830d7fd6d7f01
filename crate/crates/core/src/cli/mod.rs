//! Command-line front end: flags and TOML configuration, experiment dispatch,
//! report files and exit codes.

mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::Deserialize;

use crate::error::Error;
use crate::experiments::{
    beta_independence, corollary_comparison, minors_equivalence, second_moment, simulate, triangular_increments,
    BetaIndependenceConfig, CorollaryConfig, ExperimentReport, InitialMeasureSpec, MinorsConfig, MomentConfig,
    SimulateConfig, TriangularConfig,
};
use crate::sampling::InverseTemperature;

pub use output::{histogram_svg, write_report, Format, HISTOGRAM_BINS, REPORT_SCHEMA};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_THRESHOLD: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_UNKNOWN_EXPERIMENT: i32 = 4;
pub const EXIT_DOMAIN: i32 = 5;
pub const EXIT_NUMERIC: i32 = 6;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "betaflow-out";
const DEFAULT_GRID: [usize; 4] = [250, 500, 1000, 2000];
const DEFAULT_THRESHOLD_N: usize = 1000;

/// An error together with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        CliError::new(EXIT_INVALID, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::InvalidArgument(_) => EXIT_INVALID,
            Error::Domain(_) => EXIT_DOMAIN,
            Error::NonConvergence { .. } | Error::NumericDegeneracy(_) => EXIT_NUMERIC,
        };
        CliError::new(code, e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    BetaIndependence,
    Triangular,
    Corollary,
    Minors,
    Moment,
    All,
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s.trim().replace('_', "-").as_str() {
            "simulate" => Experiment::Simulate,
            "beta-independence" => Experiment::BetaIndependence,
            "triangular" | "triangular-increments" => Experiment::Triangular,
            "corollary" | "corollary-comparison" => Experiment::Corollary,
            "minors" | "minors-equivalence" => Experiment::Minors,
            "moment" | "second-moment" => Experiment::Moment,
            "all" => Experiment::All,
            other => {
                return Err(CliError::new(
                    EXIT_UNKNOWN_EXPERIMENT,
                    format!("unknown experiment '{other}'"),
                ))
            }
        })
    }
}

#[derive(Parser, Debug, Default, Clone)]
#[command(
    name = "betaflow",
    version,
    about = "Randomized derivative flows on polynomial roots: simulation and statistical checks"
)]
pub struct Args {
    /// simulate | beta-independence | triangular | corollary | minors | moment | all
    pub experiment: Option<String>,
    /// Same as the positional experiment name.
    #[arg(long = "experiment", value_name = "NAME")]
    pub experiment_flag: Option<String>,
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "n-grid", value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// One time in (0, 1), or a comma list for beta-independence.
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    /// Comma list of betas; "inf" selects the deterministic flow.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<String>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// uniform:a,b | semicircle:var | atoms:x1:w1,... | file:<path>
    #[arg(long, allow_hyphen_values = true)]
    pub initial: Option<String>,
    /// Evaluation point; defaults to A + 2.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    /// Exceedance level for triangular increments.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Pass threshold (mean W1 for beta-independence, mean delta for corollary).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Depths compared by the minors experiment.
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    /// Predicted second moment for the moment experiment.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma list from csv, json, svg.
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InitialField {
    Compact(String),
    Full(InitialMeasureSpec),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    n: Option<usize>,
    n_grid: Option<Vec<usize>>,
    tau: Option<OneOrMany>,
    betas: Option<Vec<InverseTemperature>>,
    trials: Option<usize>,
    seed: Option<u64>,
    initial: Option<InitialField>,
    z: Option<f64>,
    delta: Option<f64>,
    threshold: Option<f64>,
    threshold_n: Option<usize>,
    depths: Option<Vec<usize>>,
    target: Option<f64>,
    tolerance: Option<f64>,
    out: Option<PathBuf>,
    formats: Option<Vec<String>>,
}

/// One validated experiment invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Simulate(SimulateConfig),
    BetaIndependence(BetaIndependenceConfig),
    Triangular(TriangularConfig),
    Corollary(CorollaryConfig),
    Minors(MinorsConfig),
    Moment(MomentConfig),
}

impl Job {
    pub fn validate(&self) -> crate::Result<()> {
        match self {
            Job::Simulate(c) => c.validate(),
            Job::BetaIndependence(c) => c.validate(),
            Job::Triangular(c) => c.validate(),
            Job::Corollary(c) => c.validate(),
            Job::Minors(c) => c.validate(),
            Job::Moment(c) => c.validate(),
        }
    }

    pub fn run(&self) -> crate::Result<ExperimentReport> {
        match self {
            Job::Simulate(c) => simulate(c),
            Job::BetaIndependence(c) => beta_independence(c),
            Job::Triangular(c) => triangular_increments(c),
            Job::Corollary(c) => corollary_comparison(c),
            Job::Minors(c) => minors_equivalence(c),
            Job::Moment(c) => second_moment(c),
        }
    }
}

/// Validated configuration: the jobs to run and where to write their reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub jobs: Vec<Job>,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

/// Flag values merged over the configuration file.
#[derive(Debug, Default)]
struct Merged {
    n: Option<usize>,
    n_grid: Option<Vec<usize>>,
    tau: Option<Vec<f64>>,
    betas: Option<Vec<InverseTemperature>>,
    trials: Option<usize>,
    initial: Option<InitialMeasureSpec>,
    z: Option<f64>,
    delta: Option<f64>,
    threshold: Option<f64>,
    threshold_n: Option<usize>,
    depths: Option<Vec<usize>>,
    target: Option<f64>,
    tolerance: Option<f64>,
}

impl Merged {
    fn single_n(&self, default: usize) -> Result<usize, CliError> {
        match (&self.n, &self.n_grid) {
            (Some(n), _) => Ok(*n),
            (None, Some(g)) if g.len() == 1 => Ok(g[0]),
            (None, Some(_)) => Err(CliError::invalid("this experiment takes a single n")),
            (None, None) => Ok(default),
        }
    }

    fn grid(&self) -> Vec<usize> {
        match (&self.n_grid, self.n) {
            (Some(g), _) => g.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => DEFAULT_GRID.to_vec(),
        }
    }

    fn single_tau(&self) -> Result<f64, CliError> {
        match &self.tau {
            None => Ok(0.5),
            Some(t) if t.len() == 1 => Ok(t[0]),
            Some(_) => Err(CliError::invalid("this experiment takes a single tau")),
        }
    }

    fn betas(&self, default: &[InverseTemperature]) -> Vec<InverseTemperature> {
        self.betas.clone().unwrap_or_else(|| default.to_vec())
    }

    fn initial(&self, default: &InitialMeasureSpec) -> InitialMeasureSpec {
        self.initial.clone().unwrap_or_else(|| default.clone())
    }

    fn is_empty(&self) -> bool {
        self.n.is_none()
            && self.n_grid.is_none()
            && self.tau.is_none()
            && self.betas.is_none()
            && self.trials.is_none()
            && self.initial.is_none()
            && self.z.is_none()
            && self.delta.is_none()
            && self.threshold.is_none()
            && self.threshold_n.is_none()
            && self.depths.is_none()
            && self.target.is_none()
            && self.tolerance.is_none()
    }
}

fn finite(b: f64) -> InverseTemperature {
    InverseTemperature::Finite(b)
}

fn uniform() -> InitialMeasureSpec {
    InitialMeasureSpec::UniformInterval { a: -1.0, b: 1.0 }
}

fn default_threshold_n(grid: &[usize], explicit: Option<usize>) -> Option<usize> {
    explicit.or_else(|| grid.contains(&DEFAULT_THRESHOLD_N).then_some(DEFAULT_THRESHOLD_N))
}

fn build_job(experiment: Experiment, m: &Merged, seed: u64) -> Result<Job, CliError> {
    let job = match experiment {
        Experiment::Simulate => Job::Simulate(SimulateConfig {
            initial: m.initial(&uniform()),
            n: m.single_n(50)?,
            tau: m.single_tau()?,
            betas: m.betas(&[finite(2.0)]),
            trials: m.trials.unwrap_or(1),
            seed,
        }),
        Experiment::BetaIndependence => {
            let n_grid = m.grid();
            Job::BetaIndependence(BetaIndependenceConfig {
                initial: m.initial(&uniform()),
                threshold_n: default_threshold_n(&n_grid, m.threshold_n),
                n_grid,
                taus: m.tau.clone().unwrap_or_else(|| vec![0.5]),
                betas: m.betas(&[finite(1.0), finite(2.0)]),
                trials: m.trials.unwrap_or(20),
                seed,
                w1_threshold: Some(m.threshold.unwrap_or(0.05)),
            })
        }
        Experiment::Triangular => Job::Triangular(TriangularConfig {
            initial: m.initial(&uniform()),
            n: m.single_n(200)?,
            tau: m.single_tau()?,
            betas: m.betas(&[finite(1.0)]),
            z: m.z,
            delta: m.delta.unwrap_or(0.1),
            trials: m.trials.unwrap_or(100),
            seed,
        }),
        Experiment::Corollary => {
            let n_grid = m.grid();
            Job::Corollary(CorollaryConfig {
                initial: m.initial(&uniform()),
                threshold_n: default_threshold_n(&n_grid, m.threshold_n),
                n_grid,
                tau: m.single_tau()?,
                betas: m.betas(&[finite(1.0), finite(2.0), InverseTemperature::Infinite]),
                z: m.z,
                trials: m.trials.unwrap_or(20),
                seed,
                threshold: m.threshold.unwrap_or(0.01),
            })
        }
        Experiment::Minors => Job::Minors(MinorsConfig {
            initial: m.initial(&uniform()),
            n: m.single_n(16)?,
            betas: m.betas(&[finite(1.0), finite(2.0)]),
            depths: m.depths.clone(),
            trials: m.trials.unwrap_or(10_000),
            seed,
        }),
        Experiment::Moment => Job::Moment(MomentConfig {
            initial: m.initial(&InitialMeasureSpec::Semicircle { variance: 1.0 }),
            n: m.single_n(2000)?,
            tau: m.single_tau()?,
            betas: m.betas(&[finite(2.0)]),
            trials: m.trials.unwrap_or(10),
            seed,
            target: m.target,
            tolerance: m.tolerance.unwrap_or(0.03),
        }),
        Experiment::All => unreachable!("expanded by the caller"),
    };
    job.validate()?;
    Ok(job)
}

/// Reads an explicit-roots file: one decimal number per line, blank lines ignored.
pub fn read_roots_file(path: &Path) -> Result<InitialMeasureSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    let roots = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| CliError::invalid(format!("bad root '{l}' in {}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let spec = InitialMeasureSpec::ExplicitList { roots };
    spec.validate()?;
    Ok(spec)
}

fn parse_initial(s: &str) -> Result<InitialMeasureSpec, CliError> {
    match s.split_once(':') {
        Some(("file", path)) => read_roots_file(Path::new(path.trim())),
        _ => Ok(s.parse::<InitialMeasureSpec>()?),
    }
}

fn parse_formats(items: &[String]) -> Result<Vec<Format>, CliError> {
    let mut out = Vec::new();
    for item in items {
        let f: Format = item.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(CliError::invalid("no output formats selected"));
    }
    Ok(out)
}

/// Merges flags over the optional TOML file, fills defaults and validates.
pub fn parse_config(args: &Args) -> Result<RunConfig, CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::new(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let name = args
        .experiment
        .clone()
        .or_else(|| args.experiment_flag.clone())
        .or(file.experiment.clone())
        .ok_or_else(|| CliError::invalid("no experiment given"))?;
    let experiment: Experiment = name.parse()?;

    let betas = match &args.betas {
        Some(items) => Some(
            items
                .iter()
                .map(|s| s.parse())
                .collect::<crate::Result<Vec<InverseTemperature>>>()?,
        ),
        None => file.betas,
    };
    let initial = match (&args.initial, file.initial) {
        (Some(s), _) => Some(parse_initial(s)?),
        (None, Some(InitialField::Compact(s))) => Some(parse_initial(&s)?),
        (None, Some(InitialField::Full(spec))) => {
            spec.validate()?;
            Some(spec)
        }
        (None, None) => None,
    };
    let merged = Merged {
        n: args.n.or(file.n),
        n_grid: args.n_grid.clone().or(file.n_grid),
        tau: args.tau.clone().or(match file.tau {
            Some(OneOrMany::One(t)) => Some(vec![t]),
            Some(OneOrMany::Many(t)) => Some(t),
            None => None,
        }),
        betas,
        trials: args.trials.or(file.trials),
        initial,
        z: args.z.or(file.z),
        delta: args.delta.or(file.delta),
        threshold: args.threshold.or(file.threshold),
        threshold_n: file.threshold_n,
        depths: args.depths.clone().or(file.depths),
        target: args.target.or(file.target),
        tolerance: args.tolerance.or(file.tolerance),
    };
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out = args
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let formats = match args.formats.clone().or(file.formats) {
        Some(items) => parse_formats(&items)?,
        None => vec![Format::Csv, Format::Json],
    };

    let jobs = if experiment == Experiment::All {
        if !merged.is_empty() {
            return Err(CliError::invalid(
                "'all' runs the fixed acceptance settings; only --seed, --out and --formats apply",
            ));
        }
        [
            Experiment::BetaIndependence,
            Experiment::Corollary,
            Experiment::Triangular,
            Experiment::Minors,
            Experiment::Moment,
        ]
        .into_iter()
        .map(|e| build_job(e, &merged, seed))
        .collect::<Result<Vec<_>, _>>()?
    } else {
        vec![build_job(experiment, &merged, seed)?]
    };
    Ok(RunConfig {
        experiment,
        jobs,
        out,
        formats,
    })
}

/// Runs every job, writes its reports and returns the exit code.
pub fn run(config: &RunConfig) -> Result<i32, CliError> {
    std::fs::create_dir_all(&config.out)
        .map_err(|e| CliError::new(EXIT_IO, format!("cannot create {}: {e}", config.out.display())))?;
    let mut all_pass = true;
    for job in &config.jobs {
        let report = job.run()?;
        let written = write_report(&report, &config.out, &config.formats)
            .map_err(|e| CliError::new(EXIT_IO, format!("writing {} report: {e}", report.experiment)))?;
        for check in &report.checks {
            println!(
                "{} {} {}: value {} threshold {}",
                if check.pass { "PASS" } else { "FAIL" },
                report.experiment,
                check.name,
                check.value.csv(),
                check.threshold.csv()
            );
        }
        eprintln!(
            "{}: {} files in {} ({:.1} s)",
            report.experiment,
            written.len(),
            config.out.display(),
            report.wall_time.as_secs_f64()
        );
        all_pass &= report.pass;
    }
    Ok(if all_pass { EXIT_PASS } else { EXIT_THRESHOLD })
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match parse_config(&args).and_then(|cfg| run(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("betaflow").chain(v.iter().copied())).unwrap()
    }

    #[test]
    fn minimal_flags_fill_defaults() {
        let cfg = parse_config(&args(&[
            "beta-independence",
            "--n",
            "500",
            "--tau",
            "0.5",
            "--betas",
            "1,2,inf",
            "--seed",
            "42",
        ]))
        .unwrap();
        let Job::BetaIndependence(c) = &cfg.jobs[0] else {
            panic!()
        };
        assert_eq!(c.n_grid, vec![500]);
        assert_eq!(c.betas, vec![finite(1.0), finite(2.0), InverseTemperature::Infinite]);
        assert_eq!(c.trials, 20);
        assert_eq!(c.initial, uniform());
        assert_eq!(c.threshold_n, None);
        assert_eq!(cfg.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn rejections_carry_exit_codes() {
        let code = |v: &[&str]| parse_config(&args(v)).unwrap_err().code;
        assert_eq!(code(&["beta-independence", "--tau", "1.2"]), EXIT_INVALID);
        assert_eq!(code(&["beta-independence", "--betas", "0.0001"]), EXIT_INVALID);
        assert_eq!(code(&["corollary", "--trials", "0"]), EXIT_INVALID);
        assert_eq!(code(&["frobnicate"]), EXIT_UNKNOWN_EXPERIMENT);
        assert_eq!(code(&["triangular", "--z", "1.5"]), EXIT_DOMAIN);
        assert_eq!(code(&["triangular", "--tau", "0.2,0.4"]), EXIT_INVALID);
        assert_eq!(code(&["all", "--n", "10"]), EXIT_INVALID);
        assert_eq!(code(&["simulate", "--formats", "xml"]), EXIT_INVALID);
        assert_eq!(code(&["simulate", "--config", "/nonexistent/x.toml"]), EXIT_IO);
        assert_eq!(code(&[]), EXIT_INVALID);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "experiment = \"corollary\"\nn_grid = [20, 40]\ntau = 0.25\nbetas = [2, \"inf\"]\ntrials = 3\nseed = 7\n\n[initial]\nkind = \"semicircle\"\nvariance = 0.5\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse_config(&args(&["--config", p, "--trials", "5"])).unwrap();
        let Job::Corollary(c) = &cfg.jobs[0] else { panic!() };
        assert_eq!(c.trials, 5);
        assert_eq!(c.seed, 7);
        assert_eq!(c.tau, 0.25);
        assert_eq!(c.betas, vec![finite(2.0), InverseTemperature::Infinite]);
        assert_eq!(c.initial, InitialMeasureSpec::Semicircle { variance: 0.5 });

        std::fs::write(&path, "experiment = \"corollary\"\nbogus = 1\n").unwrap();
        assert_eq!(parse_config(&args(&["--config", p])).unwrap_err().code, EXIT_INVALID);
    }

    #[test]
    fn roots_file_initial() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roots.txt");
        std::fs::write(&path, "0.5\n-0.25\n\n0.125\n").unwrap();
        let flag = format!("file:{}", path.display());
        let cfg = parse_config(&args(&["minors", "--initial", &flag, "--n", "3", "--trials", "10"])).unwrap();
        let Job::Minors(c) = &cfg.jobs[0] else { panic!() };
        assert_eq!(
            c.initial,
            InitialMeasureSpec::ExplicitList {
                roots: vec![0.5, -0.25, 0.125]
            }
        );
        let missing = format!("file:{}", dir.path().join("nope").display());
        assert_eq!(
            parse_config(&args(&["minors", "--initial", &missing]))
                .unwrap_err()
                .code,
            EXIT_IO
        );
    }

    #[test]
    fn all_expands_to_acceptance_jobs() {
        let cfg = parse_config(&args(&["all", "--seed", "3"])).unwrap();
        assert_eq!(cfg.jobs.len(), 5);
        let Job::BetaIndependence(c) = &cfg.jobs[0] else {
            panic!()
        };
        assert_eq!((c.seed, c.threshold_n, c.trials), (3, Some(1000), 20));
    }
}
