//! Scenario runner behind the `envkit` binary: seeded state generation,
//! per-kind certification suites and JSON reports.

mod report;
mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hilbert::BipartiteState;
use crate::random::{random_spectrum, rng_from_seed};
use crate::schmidt::random_schmidt_state;
use crate::tolerance::Tolerances;

pub use report::{write_convergence_csv, Check, Report};

/// Process exit status when every check passes.
pub const EXIT_OK: i32 = 0;
/// Some certification check failed.
pub const EXIT_CERTIFICATION: i32 = 2;
/// Unreadable or invalid input.
pub const EXIT_INPUT: i32 = 3;

/// Environment variable holding default tolerance assignments
/// (`name=value[,name=value...]`), applied before scenario and flag overrides.
pub const TOLERANCE_ENV: &str = "ENVKIT_DEFAULT_TOL";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Envkit(#[from] Error),
}

impl CliError {
    /// Input problems map to [`EXIT_INPUT`], failed constructions to
    /// [`EXIT_CERTIFICATION`].
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Json(_) => EXIT_INPUT,
            CliError::Envkit(e) => match e {
                Error::CertificationFailed { .. }
                | Error::SupportMismatch { .. }
                | Error::NoTwinExists { .. }
                | Error::CommutationViolation { .. }
                | Error::NotCoResident
                | Error::InexactSpectrum { .. }
                | Error::Numerical(_) => EXIT_CERTIFICATION,
                _ => EXIT_INPUT,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Schmidt,
    Twins,
    Group,
    BornPipeline,
    ClosestState,
    Continuity,
}

/// Random state request. Without `spectrum`, weights are drawn at random:
/// uniformly on the simplex, or as `m_j / denominator` with random positive
/// integers `m_j` when `denominator` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub d1: usize,
    pub d2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<u64>,
}

impl RandomSpec {
    pub fn new(d1: usize, d2: usize) -> Self {
        Self { d1, d2, rank: None, spectrum: None, denominator: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSource {
    /// JSON file holding a `{"d1","d2","amplitudes"}` record.
    File(PathBuf),
    Random(RandomSpec),
    Inline(BipartiteState),
}

impl Default for StateSource {
    fn default() -> Self {
        StateSource::Random(RandomSpec::new(2, 2))
    }
}

/// Suite sizes. Unset values take per-kind defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_denominator: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub state: StateSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, state: StateSource, seed: u64) -> Self {
        Self { kind, state, seed, tolerances: BTreeMap::new(), output: None, params: Params::default() }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Ok(serde_json::from_str(&read(path)?)?)
    }

    /// Defaults, then `base` (typically from the environment), then the
    /// scenario's own overrides.
    pub fn tolerances(&self, base: &Tolerances) -> CliResult<Tolerances> {
        let mut tol = *base;
        tol.apply_overrides(&self.tolerances)?;
        Ok(tol)
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn load_state(path: &Path) -> CliResult<BipartiteState> {
    Ok(serde_json::from_str(&read(path)?)?)
}

/// `m_j >= 1` with `sum_j m_j = denominator`, uniformly over compositions.
fn random_composition<R: rand::Rng + ?Sized>(parts: usize, denominator: u64, rng: &mut R) -> Vec<u64> {
    let mut cuts: Vec<u64> = sample(rng, denominator as usize - 1, parts - 1)
        .into_iter()
        .map(|c| c as u64 + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(denominator);
    let mut last = 0;
    cuts.into_iter()
        .map(|c| {
            let m = c - last;
            last = c;
            m
        })
        .collect()
}

/// Deterministic in `seed`.
pub fn random_state(spec: &RandomSpec, seed: u64) -> crate::Result<BipartiteState> {
    let full = spec.d1.min(spec.d2);
    let rank = spec.rank.or(spec.spectrum.as_ref().map(Vec::len)).unwrap_or(full);
    if spec.d1 == 0 || spec.d2 == 0 {
        return Err(Error::InfeasibleSpec("factor dimensions must be positive".into()));
    }
    if rank == 0 || rank > full {
        return Err(Error::InfeasibleSpec(format!("rank {rank} exceeds min(d1, d2) = {full}")));
    }
    let mut rng = rng_from_seed(seed);
    let weights = match (&spec.spectrum, spec.denominator) {
        (Some(w), _) if w.len() != rank => {
            return Err(Error::InfeasibleSpec(format!("spectrum has {} entries, rank is {rank}", w.len())));
        }
        (Some(w), _) => w.clone(),
        (None, Some(m)) if m < rank as u64 => {
            return Err(Error::InfeasibleSpec(format!("denominator {m} is smaller than rank {rank}")));
        }
        (None, Some(m)) => {
            random_composition(rank, m, &mut rng).into_iter().map(|x| x as f64 / m as f64).collect()
        }
        (None, None) => random_spectrum(rank, &mut rng),
    };
    random_schmidt_state(spec.d1, spec.d2, &weights, &mut rng)
}

/// The state named by `source`; random states are drawn from `seed`.
pub fn resolve_state(source: &StateSource, seed: u64) -> CliResult<BipartiteState> {
    Ok(match source {
        StateSource::File(path) => load_state(path)?,
        StateSource::Random(spec) => random_state(spec, seed)?,
        StateSource::Inline(psi) => psi.clone(),
    })
}

/// Runs one scenario. `base` supplies tolerances below the scenario's own
/// overrides. Input errors surface as `Err`; failed checks are recorded in
/// the report.
pub fn run(scenario: &Scenario, base: &Tolerances) -> CliResult<Report> {
    let tol = scenario.tolerances(base)?;
    let psi = resolve_state(&scenario.state, scenario.seed)?;
    let mut report = Report::new(scenario, &psi, tol);
    // Suites draw from a stream separate from state generation.
    let mut rng = rng_from_seed(scenario.seed ^ 0x5eed_5eed_5eed_5eed);
    let p = &scenario.params;
    match scenario.kind {
        ScenarioKind::Schmidt => suites::schmidt(&psi, p, &mut rng, &tol, &mut report)?,
        ScenarioKind::Twins => suites::twins(&psi, p, &mut rng, &tol, &mut report)?,
        ScenarioKind::Group => suites::group(&psi, p, &mut rng, &tol, &mut report)?,
        ScenarioKind::BornPipeline => suites::born_pipeline(&psi, p, &tol, &mut report)?,
        ScenarioKind::ClosestState => suites::closest_state(&psi, p, &mut rng, &tol, &mut report)?,
        ScenarioKind::Continuity => suites::continuity(&psi, p, &mut rng, &tol, &mut report)?,
    }
    report.finish();
    if let Some(path) = &scenario.output {
        write_json(path, &report)?;
    }
    Ok(report)
}
