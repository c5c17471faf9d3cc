//! Replicated rejection-frequency experiments over scenario grids.
//!
//! Replication `r` of scenario `s` draws its sample from a ChaCha stream keyed
//! by `(master_seed, s, r)`, and every test of the grid sees that same sample.
//! Work units are spread over a rayon pool; only integer counts are merged,
//! so the report does not depend on the number of workers or on scheduling.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alternatives::SkewAlternative;
use crate::edgeworth::{EdgeworthModel, ModelSpec};
use crate::error::{Error, Result};
use crate::estimators::Discretization;
use crate::reference::Family;
use crate::statistics::{LocationChoice, Sidedness, TestConfig, TestKind};

/// Default replication count for quick runs.
pub const DEFAULT_REPLICATIONS: usize = 2000;
/// Replication count of the full-scale tables.
pub const FULL_REPLICATIONS: usize = 5000;
pub const DEFAULT_SAMPLE_SIZE: usize = 100;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Share of skipped replications above which a cell is flagged.
pub const SKIP_FLAG_SHARE: f64 = 0.01;
/// Bits reserved for the replication index in the stream identifier.
const REPLICATION_BITS: u32 = 40;

/// A data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Edgeworth(ModelSpec),
    Skew(SkewAlternative),
}

impl Generator {
    /// Location used by tests run with a specified location: the symmetry
    /// centre for Edgeworth models, the population mean for skew alternatives.
    pub fn specified_location(&self) -> Option<f64> {
        let loc = match self {
            Generator::Edgeworth(spec) => spec.theta,
            Generator::Skew(alt) => alt.mean(),
        };
        loc.is_finite().then_some(loc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub scenarios: Vec<Scenario>,
    pub tests: Vec<TestConfig>,
    pub n: usize,
    pub replications: usize,
    pub alpha: f64,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub discretization: Discretization,
    /// `(scenario, test)` index pairs that are deliberately not run.
    #[serde(default)]
    pub skip: Vec<(usize, usize)>,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.scenarios.is_empty() || self.tests.is_empty() {
            return bad("at least one scenario and one test are required".into());
        }
        if self.replications < 100 {
            return bad(format!(
                "at least 100 replications are required, got {}",
                self.replications
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.alpha));
        }
        if self.n < 10 {
            return bad(format!("sample size must be at least 10, got {}", self.n));
        }
        for &(s, t) in &self.skip {
            if s >= self.scenarios.len() || t >= self.tests.len() {
                return bad(format!("skip entry ({s}, {t}) is out of range"));
            }
        }
        for (s, scenario) in self.scenarios.iter().enumerate() {
            if let Generator::Skew(alt) = scenario.generator {
                alt.validate()?;
            }
            for (t, test) in self.tests.iter().enumerate() {
                let needs_location = test.location == LocationChoice::Specified;
                if needs_location
                    && scenario.generator.specified_location().is_none()
                    && !self.skip.contains(&(s, t))
                {
                    return bad(format!(
                        "test {} needs a location that scenario {} does not have; mark it skipped",
                        test.label(),
                        scenario.label
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Counts for one `(scenario, test)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: String,
    pub test: String,
    pub n: usize,
    /// Replications that produced a statistic.
    #[serde(rename = "N")]
    pub effective_replications: usize,
    pub rejections: usize,
    pub frequency: f64,
    pub stderr: f64,
    pub skipped: usize,
    /// More than one percent of the replications failed.
    pub flagged: bool,
    /// The pair was listed in the simulation skip list.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub spec: SimulationSpec,
    pub cells: Vec<Cell>,
    /// Per scenario, a combination of the hashes of every replication's
    /// sample, taken after all tests ran on it.
    pub sample_checksums: Vec<u64>,
    /// Excluded from equality-sensitive outputs such as the CSV.
    pub wall_time_seconds: f64,
}

impl SimulationReport {
    pub fn cell(&self, scenario: &str, test: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.test == test)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,test,n,N,rejections,frequency,stderr\n");
        for c in self.cells.iter().filter(|c| !c.excluded) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&c.scenario),
                csv_field(&c.test),
                c.n,
                c.effective_replications,
                c.rejections,
                c.frequency,
                c.stderr
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numerical(format!("cannot serialize report: {e}")))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

enum Source {
    Edgeworth(EdgeworthModel),
    Skew(SkewAlternative),
}

impl Source {
    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Source::Edgeworth(m) => m.sample(n, rng),
            Source::Skew(a) => a.sample(n, rng),
        }
    }
}

/// Stream for replication `rep` of scenario `scenario`.
pub fn replication_rng(master_seed: u64, scenario: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((scenario as u64) << REPLICATION_BITS) | rep as u64);
    rng
}

/// FNV-1a over the bit patterns of the sample.
pub fn sample_checksum(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Outcome of one test on one replication.
#[derive(Clone, Copy)]
enum Verdict {
    Reject,
    Accept,
    Failed,
    Excluded,
}

struct Unit {
    verdicts: Vec<Verdict>,
    checksum: u64,
}

fn run_unit(
    spec: &SimulationSpec,
    source: &Source,
    location: Option<f64>,
    scenario: usize,
    rep: usize,
) -> Unit {
    let mut rng = replication_rng(spec.master_seed, scenario, rep);
    let x = source.sample(spec.n, &mut rng);
    let before = sample_checksum(&x);
    let verdicts = spec
        .tests
        .iter()
        .enumerate()
        .map(|(t, test)| {
            if spec.skip.contains(&(scenario, t)) {
                return Verdict::Excluded;
            }
            match test.run(&x, location, spec.discretization) {
                Ok(out) if out.statistic.is_finite() => {
                    if out.rejects(spec.alpha, test.sidedness) {
                        Verdict::Reject
                    } else {
                        Verdict::Accept
                    }
                }
                _ => Verdict::Failed,
            }
        })
        .collect();
    let checksum = sample_checksum(&x);
    assert_eq!(before, checksum, "a test modified the shared sample");
    Unit { verdicts, checksum }
}

pub fn run(spec: &SimulationSpec) -> Result<SimulationReport> {
    spec.validate()?;
    let start = Instant::now();
    let sources = spec
        .scenarios
        .iter()
        .map(|s| {
            Ok(match s.generator {
                Generator::Edgeworth(m) => Source::Edgeworth(EdgeworthModel::from_spec(&m)?),
                Generator::Skew(a) => Source::Skew(a),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("cannot start worker pool: {e}")))?;
    let reps = spec.replications;
    let units: Vec<Unit> = pool.install(|| {
        (0..spec.scenarios.len() * reps)
            .into_par_iter()
            .map(|k| {
                let (s, r) = (k / reps, k % reps);
                let location = spec.scenarios[s].generator.specified_location();
                run_unit(spec, &sources[s], location, s, r)
            })
            .collect()
    });

    let mut cells = Vec::with_capacity(spec.scenarios.len() * spec.tests.len());
    let mut sample_checksums = Vec::with_capacity(spec.scenarios.len());
    for (s, scenario) in spec.scenarios.iter().enumerate() {
        let block = &units[s * reps..(s + 1) * reps];
        sample_checksums.push(
            block
                .iter()
                .fold(0u64, |acc, u| acc.rotate_left(5) ^ u.checksum),
        );
        for (t, test) in spec.tests.iter().enumerate() {
            let (mut rejections, mut accepted, mut failed, mut excluded) = (0, 0, 0, 0);
            for u in block {
                match u.verdicts[t] {
                    Verdict::Reject => rejections += 1,
                    Verdict::Accept => accepted += 1,
                    Verdict::Failed => failed += 1,
                    Verdict::Excluded => excluded += 1,
                }
            }
            let effective = rejections + accepted;
            let frequency = if effective > 0 {
                rejections as f64 / effective as f64
            } else {
                f64::NAN
            };
            let stderr = (frequency * (1.0 - frequency) / effective as f64).sqrt();
            cells.push(Cell {
                scenario: scenario.label.clone(),
                test: test.label(),
                n: spec.n,
                effective_replications: effective,
                rejections,
                frequency,
                stderr,
                skipped: failed,
                flagged: failed as f64 > SKIP_FLAG_SHARE * reps as f64,
                excluded: excluded > 0,
            });
        }
    }
    Ok(SimulationReport {
        spec: spec.clone(),
        cells,
        sample_checksums,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// The seven tests compared in both tables.
pub fn table_tests(sidedness: Sidedness) -> Vec<TestConfig> {
    use LocationChoice::*;
    [
        (TestKind::S1, Specified),
        (TestKind::TDagger, Specified),
        (TestKind::S2B1, Mean),
        (TestKind::TLaplace, Specified),
        (TestKind::TLaplace, Median),
        (TestKind::TCirc(Family::Logistic), Specified),
        (TestKind::TCirc(Family::Logistic), Mean),
    ]
    .into_iter()
    .map(|(kind, loc)| TestConfig::new(kind, loc, sidedness))
    .collect()
}

fn base_spec(scenarios: Vec<Scenario>, sidedness: Sidedness, replications: usize, n: usize) -> SimulationSpec {
    SimulationSpec {
        scenarios,
        tests: table_tests(sidedness),
        n,
        replications,
        alpha: DEFAULT_ALPHA,
        master_seed: 0,
        workers: 0,
        discretization: Discretization::default(),
        skip: Vec::new(),
    }
}

/// Gaussian and Laplace Edgeworth models with skewness 0, 0.1 and 0.2, with
/// one-sided tests.
pub fn table1_spec(replications: usize, n: usize) -> SimulationSpec {
    let mut scenarios = Vec::new();
    for (name, family) in [("SN", Family::Gaussian), ("SL", Family::Laplace)] {
        for xi in [0.0, 0.1, 0.2] {
            scenarios.push(Scenario {
                label: format!("{name}(xi={xi})"),
                generator: Generator::Edgeworth(ModelSpec {
                    family,
                    theta: 0.0,
                    sigma: 1.0,
                    xi,
                }),
            });
        }
    }
    base_spec(scenarios, Sidedness::One, replications, n)
}

/// Skew-normal and skew-t alternatives, with two-sided tests.
pub fn table2_spec(replications: usize, n: usize) -> SimulationSpec {
    let mut scenarios = Vec::new();
    for lambda in [0.0, 1.0, 2.0, 3.0] {
        scenarios.push(Scenario {
            label: format!("SN(lambda={lambda})"),
            generator: Generator::Skew(SkewAlternative::SkewNormal { lambda }),
        });
    }
    for nu in [2.0, 4.0, 8.0] {
        for lambda in [0.0, 2.0, 4.0, 6.0] {
            scenarios.push(Scenario {
                label: format!("St(nu={nu},lambda={lambda})"),
                generator: Generator::Skew(SkewAlternative::SkewT { nu, lambda }),
            });
        }
    }
    base_spec(scenarios, Sidedness::Two, replications, n)
}
