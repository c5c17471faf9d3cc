//! Command-line front end of the `edgesym` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::edgeworth::{EdgeworthModel, ModelSpec};
use crate::efficiency;
use crate::error::Error;
use crate::estimators::Discretization;
use crate::reference::{Family, ReferenceDensity};
use crate::simulation::{self, Generator, SimulationSpec};
use crate::statistics::{LocationChoice, Sidedness, TestConfig, TestKind};

/// Seed used when neither `--seed` nor `EDGESYM_SEED` is given.
pub const DEFAULT_SEED: u64 = 12345;
/// Smallest sample accepted by `edgesym test`.
pub const MIN_TEST_SAMPLE: usize = 10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Compute(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::InvalidParameter(_) | Error::InvalidSpec(_) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Compute(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "edgesym", version, about = "Locally optimal tests of symmetry against Edgeworth-type skewed alternatives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run symmetry tests on a one-column CSV file.
    Test(TestArgs),
    /// Draw a sample from an Edgeworth model or a skew alternative.
    Sample(SampleArgs),
    /// Run a rejection-frequency grid.
    Simulate(SimulateArgs),
    /// Asymptotic shifts and relative efficiencies.
    Shift(ShiftArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SidednessArg {
    One,
    Two,
}

impl From<SidednessArg> for Sidedness {
    fn from(s: SidednessArg) -> Self {
        match s {
            SidednessArg::One => Sidedness::One,
            SidednessArg::Two => Sidedness::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LocationArg {
    Median,
    Mean,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Headerless CSV with one numeric value per line.
    pub input: PathBuf,
    /// Comma-separated tests: s1, b1, tf1[:family], that[:family],
    /// tcirc[:family], tdagger, laplace, logistic, vdw.
    #[arg(long, default_value = "b1,tdagger,laplace,logistic")]
    pub tests: String,
    /// Specified location; otherwise it is estimated.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Location estimator for every test when `--theta` is absent; by default
    /// the median for score tests and the mean for moment tests.
    #[arg(long, value_enum)]
    pub location: Option<LocationArg>,
    #[arg(long, value_enum, default_value = "two")]
    pub sidedness: SidednessArg,
    /// Turn off lattice rounding of estimated nuisance parameters.
    #[arg(long)]
    pub no_discretize: bool,
    #[arg(long, default_value_t = crate::estimators::DEFAULT_LATTICE_CONSTANT)]
    pub lattice_constant: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// `gaussian`, `laplace`, `logistic`, `powerexp:<eta>`, `student:<nu>`
    /// (Edgeworth models, with --xi/--theta/--sigma), `skewnormal:<lambda>`,
    /// `skewt:<nu>:<lambda>`, or a JSON object.
    #[arg(long, allow_hyphen_values = true)]
    pub model: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub xi: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(short, long)]
    pub n: usize,
    #[arg(long, env = "EDGESYM_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in grid.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), conflicts_with = "spec")]
    pub table: Option<u8>,
    /// JSON simulation specification.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Replications per cell.
    #[arg(long = "N")]
    pub replications: Option<usize>,
    /// Use the full replication count of the published tables.
    #[arg(long, conflicts_with = "replications")]
    pub full: bool,
    #[arg(short, long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, env = "EDGESYM_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "EDGESYM_WORKERS")]
    pub workers: Option<usize>,
    /// CSV path; the JSON report goes next to it with a `.json` extension.
    /// Without it, CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShiftArgs {
    #[arg(long)]
    pub f1: String,
    #[arg(long)]
    pub g1: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub tau: f64,
    /// Comma-separated competitors: s1, tdagger, laplace, logistic,
    /// that[:family], tcirc[:family].
    #[arg(long, default_value = "")]
    pub versus: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Shift(a) => cmd_shift(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Compute(Error::Numerical(format!("cannot write output: {e}"))))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// Parses a headerless one-column CSV, reporting the first bad line.
pub fn parse_sample(text: &str) -> CliResult<Vec<f64>> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.contains(',') {
            return Err(CliError::Input(format!(
                "line {}: expected a single column, got `{line}`",
                i + 1
            )));
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(CliError::Input(format!(
                    "line {}: `{line}` is not a finite number",
                    i + 1
                )))
            }
        }
    }
    Ok(values)
}

fn default_location(kind: TestKind) -> LocationChoice {
    match kind {
        TestKind::TDagger | TestKind::S2B1 | TestKind::TCirc(Family::Logistic) => {
            LocationChoice::Mean
        }
        _ => LocationChoice::Median,
    }
}

fn cmd_test(a: TestArgs) -> CliResult<()> {
    let text = fs::read_to_string(&a.input)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", a.input.display())))?;
    let x = parse_sample(&text)?;
    if x.len() < MIN_TEST_SAMPLE {
        return Err(CliError::Input(format!(
            "need at least {MIN_TEST_SAMPLE} observations, got {}",
            x.len()
        )));
    }
    let discretization = Discretization {
        enabled: !a.no_discretize,
        c: a.lattice_constant,
    };
    if !(discretization.c > 0.0) {
        return Err(CliError::Input("lattice constant must be positive".into()));
    }
    let mut outcomes = Vec::new();
    for token in a.tests.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let kind: TestKind = token.parse()?;
        let location = if a.theta.is_some() {
            LocationChoice::Specified
        } else if matches!(kind, TestKind::S1 | TestKind::VdW) {
            return Err(CliError::Input(format!(
                "test `{token}` needs a specified location (--theta)"
            )));
        } else {
            match a.location {
                Some(LocationArg::Median) => LocationChoice::Median,
                Some(LocationArg::Mean) => LocationChoice::Mean,
                None => default_location(kind),
            }
        };
        let config = TestConfig::new(kind, location, a.sidedness.into());
        outcomes.push(config.run(&x, a.theta, discretization)?);
    }
    if outcomes.is_empty() {
        return Err(CliError::Input("no tests selected".into()));
    }
    emit(a.out.as_deref(), &to_json(&outcomes))
}

/// Parses a model string into a generator; Edgeworth families take their
/// parameters from the flags.
pub fn parse_model(model: &str, xi: f64, theta: f64, sigma: f64) -> CliResult<Generator> {
    let token = model.trim();
    if token.starts_with('{') {
        if let Ok(g) = serde_json::from_str::<Generator>(token) {
            return Ok(g);
        }
        return serde_json::from_str::<ModelSpec>(token)
            .map(Generator::Edgeworth)
            .map_err(|e| CliError::Input(format!("cannot parse model JSON `{token}`: {e}")));
    }
    let lower = token.to_ascii_lowercase();
    if lower.starts_with("skewnormal") || lower.starts_with("skewt") {
        return Ok(Generator::Skew(token.parse()?));
    }
    let family_token = lower.strip_suffix("-edgeworth").unwrap_or(&lower);
    let family: Family = family_token.parse()?;
    Ok(Generator::Edgeworth(ModelSpec {
        family,
        theta,
        sigma,
        xi,
    }))
}

fn format_sample(x: &[f64]) -> String {
    let mut s = String::with_capacity(x.len() * 24);
    for v in x {
        s.push_str(&format!("{v}\n"));
    }
    s
}

fn cmd_sample(a: SampleArgs) -> CliResult<()> {
    let generator = parse_model(&a.model, a.xi, a.theta, a.sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let x = match generator {
        Generator::Edgeworth(spec) => EdgeworthModel::from_spec(&spec)?.sample(a.n, &mut rng),
        Generator::Skew(alt) => alt.sample(a.n, &mut rng),
    };
    emit(a.out.as_deref(), &format_sample(&x))
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let replications = if a.full {
        Some(simulation::FULL_REPLICATIONS)
    } else {
        a.replications
    };
    let mut spec: SimulationSpec = match (a.table, &a.spec) {
        (Some(t), None) => {
            let reps = replications.unwrap_or(simulation::DEFAULT_REPLICATIONS);
            let n = a.n.unwrap_or(simulation::DEFAULT_SAMPLE_SIZE);
            let mut spec = if t == 1 {
                simulation::table1_spec(reps, n)
            } else {
                simulation::table2_spec(reps, n)
            };
            spec.master_seed = DEFAULT_SEED;
            spec
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let mut spec: SimulationSpec = serde_json::from_str(&text).map_err(|e| {
                CliError::Input(format!("invalid simulation spec {}: {e}", path.display()))
            })?;
            if let Some(r) = replications {
                spec.replications = r;
            }
            if let Some(n) = a.n {
                spec.n = n;
            }
            spec
        }
        _ => return Err(CliError::Input("give exactly one of --table or --spec".into())),
    };
    if let Some(alpha) = a.alpha {
        spec.alpha = alpha;
    }
    if let Some(seed) = a.seed {
        spec.master_seed = seed;
    }
    if let Some(w) = a.workers {
        spec.workers = w;
    }
    let report = simulation::run(&spec)?;
    let csv = report.to_csv();
    match &a.out {
        Some(path) => {
            emit(Some(path), &csv)?;
            let json_path = path.with_extension("json");
            emit(Some(&json_path), &to_json(&report))
        }
        None => emit(None, &csv),
    }
}

/// A test whose local shift can be computed.
enum ShiftTest {
    S1,
    TDagger,
    Laplace,
    Hat(Family),
    Circ(Family),
    Optimal(Family),
}

impl ShiftTest {
    fn parse(token: &str) -> CliResult<Self> {
        let kind: TestKind = token.parse()?;
        Ok(match kind {
            TestKind::S1 => ShiftTest::S1,
            TestKind::TDagger | TestKind::S2B1 => ShiftTest::TDagger,
            TestKind::TLaplace => ShiftTest::Laplace,
            TestKind::THat(f) => ShiftTest::Hat(f),
            TestKind::TCirc(f) => ShiftTest::Circ(f),
            TestKind::TF1(f) => ShiftTest::Optimal(f),
            TestKind::VdW => {
                return Err(CliError::Input(
                    "no shift formula is available for the signed-rank test".into(),
                ))
            }
        })
    }

    fn shift(&self, g1: &ReferenceDensity, tau: f64) -> crate::error::Result<f64> {
        match *self {
            ShiftTest::S1 => efficiency::shift_s1(g1, tau),
            ShiftTest::TDagger => efficiency::shift_t_dagger(g1, tau),
            ShiftTest::Laplace => efficiency::shift_laplace(g1, tau),
            ShiftTest::Hat(f) => efficiency::shift_t_hat(&ReferenceDensity::new(f)?, g1, tau),
            ShiftTest::Circ(Family::Laplace) => efficiency::shift_laplace(g1, tau),
            ShiftTest::Circ(f) => efficiency::shift_t_circ(&ReferenceDensity::new(f)?, g1, tau),
            ShiftTest::Optimal(f) => {
                let f1 = ReferenceDensity::new(f)?;
                if f1 != *g1 {
                    return Err(Error::InvalidParameter(
                        "the fixed-constant statistic is only valid when f1 equals g1".into(),
                    ));
                }
                efficiency::shift_t_f1(&f1, tau)
            }
        }
    }
}

fn cmd_shift(a: ShiftArgs) -> CliResult<()> {
    let f1_family: Family = a.f1.parse()?;
    let g1 = ReferenceDensity::new(a.g1.parse()?)?;
    let own = ShiftTest::Circ(f1_family);
    let shift = own.shift(&g1, a.tau)?;
    let mut shifts = BTreeMap::new();
    let mut are_vs = BTreeMap::new();
    for token in a.versus.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let other = ShiftTest::parse(token)?.shift(&g1, a.tau)?;
        shifts.insert(token.to_string(), other);
        // Undefined when the competitor has zero shift, e.g. at tau = 0.
        let ratio = match efficiency::are(shift, other) {
            Ok(r) => Some(r),
            Err(Error::ZeroShift) => None,
            Err(e) => return Err(e.into()),
        };
        are_vs.insert(token.to_string(), ratio);
    }
    let report = json!({
        "f1": f1_family.to_string(),
        "g1": g1.family.to_string(),
        "tau": a.tau,
        "shift": shift,
        "shift_vs": shifts,
        "are_vs": are_vs,
    });
    emit(a.out.as_deref(), &to_json(&report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alternatives::SkewAlternative;

    #[test]
    fn sample_parser_reports_line_numbers() {
        assert_eq!(parse_sample("1\n\n2.5\n-3e-2\n").unwrap(), vec![1.0, 2.5, -0.03]);
        match parse_sample("1\n2\nabc\n") {
            Err(CliError::Input(msg)) => assert!(msg.starts_with("line 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(parse_sample("1,2\n").is_err());
        assert!(parse_sample("nan\n").is_err());
    }

    #[test]
    fn model_strings() {
        assert!(matches!(
            parse_model("gaussian-edgeworth", 0.1, 0.0, 1.0).unwrap(),
            Generator::Edgeworth(ModelSpec { family: Family::Gaussian, xi, .. }) if xi == 0.1
        ));
        assert!(matches!(
            parse_model("skewt:4:2", 0.0, 0.0, 1.0).unwrap(),
            Generator::Skew(SkewAlternative::SkewT { .. })
        ));
        let json = r#"{"family":"laplace","theta":1.0,"sigma":2.0,"xi":0.05}"#;
        assert!(matches!(
            parse_model(json, 0.0, 0.0, 1.0).unwrap(),
            Generator::Edgeworth(ModelSpec { family: Family::Laplace, .. })
        ));
        match parse_model("cauchy", 0.0, 0.0, 1.0) {
            Err(CliError::Input(msg)) => assert!(msg.contains("cauchy"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(Error::InvalidSpec("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::DivergentIntegral("μ6".into())).exit_code(), 3);
    }
}
