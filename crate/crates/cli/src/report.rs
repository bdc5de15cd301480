//! JSON report layout shared by every subcommand.

use crate::error::CliError;
use lll_core::oracle::{mc_run, StatSummary};
use lll_core::rng::{stream, TrialRng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

/// Half-width multiplier of the reported confidence intervals.
pub const Z: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
pub struct InstanceInfo {
    /// `file` or `generated`.
    pub source: String,
    /// File path, or the generator description.
    pub origin: String,
    pub format: String,
    /// SHA-256 of the file bytes or of the generator description.
    pub digest: String,
    pub summary: Map<String, Value>,
}

impl InstanceInfo {
    pub fn generated(format: &str, description: String, summary: Map<String, Value>) -> Self {
        InstanceInfo {
            source: "generated".into(),
            digest: crate::ingest::digest(description.as_bytes()),
            origin: description,
            format: format.into(),
            summary,
        }
    }

    pub fn file(format: &str, path: &str, digest: String, summary: Map<String, Value>) -> Self {
        InstanceInfo { source: "file".into(), origin: path.into(), format: format.into(), digest, summary }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Seeds {
    pub base: u64,
    /// `flag`, `env` (LLL_SEED) or `default`.
    pub origin: String,
    /// Trial `i` draws from ChaCha8 stream `i` of `base`.
    pub streams: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stat {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub min: f64,
    pub max: f64,
}

impl From<&StatSummary> for Stat {
    fn from(s: &StatSummary) -> Self {
        let (ci_low, ci_high) = s.ci(Z);
        Stat {
            name: s.name.clone(),
            mean: s.mean,
            variance: s.variance,
            stderr: s.stderr,
            ci_low,
            ci_high,
            min: s.min,
            max: s.max,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub jobs: usize,
    pub total_seconds: f64,
    pub per_trial_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub instance: InstanceInfo,
    pub seeds: Seeds,
    pub parameters: Map<String, Value>,
    pub statistics: Vec<Stat>,
    pub bounds: Map<String, Value>,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub timings: Timings,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn stat(&self, name: &str) -> Option<&Stat> {
        self.statistics.iter().find(|s| s.name == name)
    }
}

/// What a subcommand hands back before timings and seeds are attached.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub instance: InstanceInfo,
    pub parameters: Map<String, Value>,
    pub statistics: Vec<Stat>,
    pub bounds: Map<String, Value>,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub trials: u64,
}

impl Outcome {
    pub fn new(instance: InstanceInfo, trials: u64) -> Self {
        Outcome {
            instance,
            parameters: Map::new(),
            statistics: Vec::new(),
            bounds: Map::new(),
            results: Map::new(),
            checks: Vec::new(),
            trials,
        }
    }

    pub fn param(&mut self, k: &str, v: impl Serialize) -> &mut Self {
        self.parameters.insert(k.into(), to_value(v));
        self
    }

    pub fn bound(&mut self, k: &str, v: impl Serialize) -> &mut Self {
        self.bounds.insert(k.into(), to_value(v));
        self
    }

    pub fn result(&mut self, k: &str, v: impl Serialize) -> &mut Self {
        self.results.insert(k.into(), to_value(v));
        self
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) -> &mut Self {
        self.checks.push(Check { name: name.into(), passed, detail });
        self
    }

    pub fn stat(&self, name: &str) -> &Stat {
        self.statistics.iter().find(|s| s.name == name).expect("statistic recorded")
    }

    /// A failed `criterion` check maps to exit code 3, any other failed
    /// check to 5.
    pub fn verdict(&self) -> Option<CliError> {
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        if let Some(c) = failed.iter().find(|c| c.name == CRITERION) {
            return Some(CliError::Criterion(c.detail.clone()));
        }
        failed.first().map(|c| CliError::Failed(format!("{}: {}", c.name, c.detail)))
    }
}

/// Name of the check that records whether a local-lemma criterion holds.
pub const CRITERION: &str = "criterion";

pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// A float as JSON; non-finite values have no JSON number form and are
/// written as strings.
pub fn num(f: f64) -> Value {
    if f.is_finite() {
        Value::from(f)
    } else {
        Value::String(f.to_string())
    }
}

/// Runs `trials` independent trials, trial `i` on stream `i` of `seed`.
/// Errors are reported for the lowest failing trial index, so the outcome
/// does not depend on scheduling.
pub fn run_trials<T, F>(seed: u64, trials: u64, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(u64, &mut TrialRng) -> Result<T, CliError> + Sync,
{
    let out: Vec<Result<T, CliError>> = (0..trials).into_par_iter().map(|t| f(t, &mut stream(seed, t))).collect();
    out.into_iter().collect()
}

/// Summaries of per-trial rows, one statistic per column.
pub fn summarize(names: &[&str], rows: &[Vec<f64>]) -> Vec<Stat> {
    if rows.is_empty() {
        return Vec::new();
    }
    mc_run(0, rows.len() as u64, names, |t, _| rows[t as usize].clone()).stats.iter().map(Stat::from).collect()
}
