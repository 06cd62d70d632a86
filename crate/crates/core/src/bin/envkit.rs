use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use envkit::born::{
    closest_eigenstate_density, continuity_sequence, decade_grid, isolated_state_limit,
};
use envkit::cli::{
    random_state, resolve_state, run, write_convergence_csv, write_json, CliError, CliResult,
    Params, RandomSpec, Scenario, ScenarioKind, StateSource, EXIT_CERTIFICATION, EXIT_OK,
    TOLERANCE_ENV,
};
use envkit::hilbert::{reduced_density, CMatrix, CVector, DensityOperator, Side};
use envkit::random::{random_unit_vector, rng_from_seed};
use envkit::schmidt::subsystem_picture;
use envkit::twins::{is_twin_pair, sample_twin, twin_of, TwinPair};
use envkit::{json, Tolerances};

#[derive(Parser)]
#[command(name = "envkit", version, about = "Twin unitaries, Schmidt pictures and probability-rule certification")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scenario file; runs it when no subcommand is given.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone, Default)]
struct StateArgs {
    /// State file (`{"d1","d2","amplitudes"}`).
    #[arg(long, conflicts_with_all = ["d1", "d2", "rank", "spectrum", "denominator"])]
    state: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    d1: usize,
    #[arg(long, default_value_t = 2)]
    d2: usize,
    #[arg(long)]
    rank: Option<usize>,
    /// Squared Schmidt coefficients, comma separated.
    #[arg(long, value_delimiter = ',')]
    spectrum: Option<Vec<f64>>,
    /// Draw a random rational spectrum `m_j / denominator`.
    #[arg(long)]
    denominator: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
}

impl StateArgs {
    fn source(&self) -> StateSource {
        match &self.state {
            Some(path) => StateSource::File(path.clone()),
            None => StateSource::Random(RandomSpec {
                d1: self.d1,
                d2: self.d2,
                rank: self.rank,
                spectrum: self.spectrum.clone(),
                denominator: self.denominator,
            }),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Canonical Schmidt decomposition, correlation operator and uniqueness.
    Schmidt(StateArgs),
    /// Verify, sample or complete twin pairs of a state.
    #[command(subcommand)]
    Twin(TwinCommand),
    /// Monte-Carlo group axioms for sampled twin pairs.
    Group(StateArgs),
    /// Probability-rule pipelines on the first subsystem.
    #[command(subcommand)]
    Born(BornCommand),
    /// Run the scenario given by `--scenario`.
    Report,
    /// Write a random state to JSON.
    State(StateArgs),
}

#[derive(Subcommand)]
enum TwinCommand {
    /// Check a `{"U1","U2"}` pair against a state.
    Verify {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        allow_phase: bool,
    },
    /// Draw twin pairs from the eigen-subspace structure.
    Sample {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// The twin of a unitary given as a JSON matrix.
    Of {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        u1: PathBuf,
    },
}

#[derive(Subcommand)]
enum BornCommand {
    /// Rational spectrum, fine-graining, counting and coherence checks.
    Pipeline {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        max_denominator: Option<u64>,
    },
    /// Closest density with a given eigenvector; oracle check without `--phi`.
    Closest {
        #[command(flatten)]
        state: StateArgs,
        /// Density matrix file, used instead of a state.
        #[arg(long)]
        rho: Option<PathBuf>,
        /// Vector file; enables the direct computation.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Rational and truncation sequences converging to the spectrum.
    Continuity {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        n_max: Option<usize>,
        /// Also write the rational sequence as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mixed approximants of a pure state and the limiting probability.
    Isolated {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        psi: Option<PathBuf>,
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        n_max: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn tolerances(cli: &Cli) -> CliResult<Tolerances> {
    let mut tol = Tolerances::default();
    if let Ok(text) = std::env::var(TOLERANCE_ENV) {
        tol.apply_assignments(&text)?;
    }
    for assignment in &cli.tol {
        tol.apply_assignments(assignment)?;
    }
    Ok(tol)
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", serde_json::to_string_pretty(value)?) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Io { path: "<stdout>".into(), source: e })
                }
                _ => Ok(()),
            }
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    Ok(serde_json::from_str(&text)?)
}

fn read_matrix(path: &Path) -> CliResult<CMatrix> {
    let rows: Vec<Vec<[f64; 2]>> = read_json(path)?;
    json::decode_matrix(&rows).map_err(|e| CliError::Envkit(envkit::Error::ShapeMismatch(e)))
}

fn read_vector(path: &Path) -> CliResult<CVector> {
    let pairs: Vec<[f64; 2]> = read_json(path)?;
    Ok(json::decode_vector(&pairs))
}

fn csv_file(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn scenario(cli: &Cli, kind: ScenarioKind, state: &StateArgs, params: Params) -> Scenario {
    let mut s = Scenario::new(kind, state.source(), cli.seed);
    s.params = Params { samples: state.samples, ..params };
    s
}

/// Runs a scenario and prints its report; the exit code follows the checks.
fn report(cli: &Cli, s: &Scenario, tol: &Tolerances) -> CliResult<i32> {
    let r = run(s, tol)?;
    if s.output.is_none() {
        emit(cli.out.as_deref(), &r)?;
    }
    for c in r.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {} [{}]: {:e} >= {:e}", c.name, c.tag, c.value, c.threshold);
    }
    Ok(r.exit_code())
}

#[derive(Serialize)]
struct ClosestOutput<'a> {
    r_prime: f64,
    distance: f64,
    #[serde(with = "json::matrix")]
    rho_prime: &'a CMatrix,
    report: &'a envkit::born::ProbabilityReport,
}

fn execute(cli: &Cli) -> CliResult<i32> {
    let tol = tolerances(cli)?;
    let Some(command) = &cli.command else {
        let Some(path) = &cli.scenario else {
            return Err(envkit::Error::Precondition("give a subcommand or --scenario".into()).into());
        };
        return report(cli, &Scenario::load(path)?, &tol);
    };
    match command {
        Command::Schmidt(st) => report(cli, &scenario(cli, ScenarioKind::Schmidt, st, Params::default()), &tol),
        Command::Group(st) => report(cli, &scenario(cli, ScenarioKind::Group, st, Params::default()), &tol),
        Command::Report => {
            let path = cli.scenario.as_ref().ok_or_else(|| envkit::Error::Precondition("report needs --scenario".into()))?;
            report(cli, &Scenario::load(path)?, &tol)
        }
        Command::State(st) => {
            let spec = match st.source() {
                StateSource::Random(spec) => spec,
                _ => return Err(envkit::Error::Precondition("state writes random states only".into()).into()),
            };
            emit(cli.out.as_deref(), &random_state(&spec, cli.seed)?)?;
            Ok(EXIT_OK)
        }
        Command::Twin(TwinCommand::Verify { state, pair, allow_phase }) => {
            let psi = resolve_state(&state.source(), cli.seed)?;
            let pair: TwinPair = read_json(pair)?;
            let check = is_twin_pair(&pair.u1, &pair.u2, &psi, *allow_phase, &tol)?;
            emit(cli.out.as_deref(), &check)?;
            Ok(if check.is_twin { EXIT_OK } else { EXIT_CERTIFICATION })
        }
        Command::Twin(TwinCommand::Sample { state, count }) => {
            let psi = resolve_state(&state.source(), cli.seed)?;
            let picture = subsystem_picture(&psi, &tol)?;
            let mut rng = rng_from_seed(cli.seed ^ 0x5eed_5eed_5eed_5eed);
            let pairs = (0..*count).map(|_| sample_twin(&picture, &mut rng, &tol)).collect::<envkit::Result<Vec<_>>>()?;
            emit(cli.out.as_deref(), &pairs)?;
            Ok(EXIT_OK)
        }
        Command::Twin(TwinCommand::Of { state, u1 }) => {
            let psi = resolve_state(&state.source(), cli.seed)?;
            let picture = subsystem_picture(&psi, &tol)?;
            emit(cli.out.as_deref(), &twin_of(&read_matrix(u1)?, &picture, &tol)?)?;
            Ok(EXIT_OK)
        }
        Command::Born(BornCommand::Pipeline { state, max_denominator }) => {
            let params = Params { max_denominator: *max_denominator, ..Params::default() };
            report(cli, &scenario(cli, ScenarioKind::BornPipeline, state, params), &tol)
        }
        Command::Born(BornCommand::Closest { state, rho, phi }) => {
            if phi.is_none() && rho.is_none() {
                return report(cli, &scenario(cli, ScenarioKind::ClosestState, state, Params::default()), &tol);
            }
            let rho = match rho {
                Some(path) => DensityOperator::new(read_matrix(path)?, &tol)?,
                None => reduced_density(&resolve_state(&state.source(), cli.seed)?, Side::One),
            };
            let phi = match phi {
                Some(path) => read_vector(path)?,
                None => random_unit_vector(rho.dim(), &mut rng_from_seed(cli.seed)),
            };
            let c = closest_eigenstate_density(&rho, &phi, &tol)?;
            let out = ClosestOutput { r_prime: c.r_prime, distance: c.distance, rho_prime: c.rho_prime.matrix(), report: &c.report };
            emit(cli.out.as_deref(), &out)?;
            Ok(EXIT_OK)
        }
        Command::Born(BornCommand::Continuity { state, n_max, csv }) => {
            if let Some(path) = csv {
                let rho1 = reduced_density(&resolve_state(&state.source(), cli.seed)?, Side::One);
                let seq = continuity_sequence(&rho1, n_max.unwrap_or(6), &tol)?;
                write_convergence_csv(csv_file(path)?, &seq.rational)?;
            }
            let params = Params { n_max: *n_max, ..Params::default() };
            report(cli, &scenario(cli, ScenarioKind::Continuity, state, params), &tol)
        }
        Command::Born(BornCommand::Isolated { dim, psi, phi, n_max, csv }) => {
            let mut rng = rng_from_seed(cli.seed);
            let psi = match psi {
                Some(path) => read_vector(path)?,
                None => random_unit_vector(*dim, &mut rng),
            };
            let phi = match phi {
                Some(path) => read_vector(path)?,
                None => random_unit_vector(psi.len(), &mut rng),
            };
            let lim = isolated_state_limit(&psi, &phi, &decade_grid(*n_max), &tol)?;
            if let Some(path) = csv {
                write_convergence_csv(csv_file(path)?, &lim.terms)?;
            }
            emit(cli.out.as_deref(), &lim)?;
            Ok(if lim.monotone { EXIT_OK } else { EXIT_CERTIFICATION })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("envkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
