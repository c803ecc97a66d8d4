//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a statistical check fails,
//! 2 on invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::channels::{apply_to_covariance, apply_to_state, Hamiltonian, UnitaryChannel};
use crate::covariance::{build_covariance, classify_symmetry, SymmetryTag};
use crate::error::Error;
use crate::experiments::{
    beamsplitter_channel, run_beamsplitter, BeamSplitterConfig, EpsilonChoice, IndexLayout, Spin, Statistics, SE_BAND,
};
use crate::hilbert::{quantum_average_tensor, quantum_average_trace, BipartiteState, Operator, Side};
use crate::json::to_sorted_string;
use crate::quadratic::{mc_cov_against, QuadraticForm};
use crate::rng::PRNG_ID;
use crate::sampler::{draw, hex, thread_pool_from_env, write_batch};

const IDENTITY_TOL: f64 = 1e-10;
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "pcsft", version, about = "Classical Gaussian bi-signals reproducing quantum correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    Beamsplitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelPreset {
    Beamsplitter5050,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare the trace, tensor, classical-covariance and Monte Carlo routes
    /// to <A1 (x) A2>.
    VerifyIdentity {
        state: PathBuf,
        a1: PathBuf,
        a2: PathBuf,
        #[arg(long, default_value = "auto")]
        epsilon: EpsilonChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(2..))]
        samples: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a beam-splitter experiment.
    Experiment {
        #[arg(long, value_enum, default_value = "beamsplitter")]
        experiment: ExperimentKind,
        #[arg(long, value_enum)]
        statistics: Statistics,
        #[arg(long, value_enum, default_value = "0")]
        spin: Spin,
        #[arg(long, default_value = "auto")]
        epsilon: EpsilonChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(2..))]
        samples: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Classify the exchange symmetry of a state.
    Classify {
        state: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Propagate a state and its covariance under a factorized Hamiltonian.
    Propagate {
        state: PathBuf,
        hamiltonian: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value = "auto")]
        epsilon: EpsilonChoice,
        #[command(flatten)]
        out: TransformOutput,
    },
    /// Apply a factorized unitary channel to a state and its covariance.
    Channel {
        state: PathBuf,
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        channel: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<ChannelPreset>,
        #[arg(long, default_value = "auto")]
        epsilon: EpsilonChoice,
        #[command(flatten)]
        out: TransformOutput,
    },
    /// Draw bi-signal samples and write them as a binary batch.
    Draw {
        state: PathBuf,
        #[arg(long, default_value = "auto")]
        epsilon: EpsilonChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
pub struct TransformOutput {
    /// Combined report (state and covariance); stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    state_out: Option<PathBuf>,
    #[arg(long)]
    covariance_out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Statistical,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

struct Input {
    path: PathBuf,
    text: String,
}

impl Input {
    fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        Ok(Input { path: path.to_path_buf(), text })
    }

    fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T, Failure> {
        serde_json::from_str(&self.text).map_err(|e| self.error(e))
    }

    fn error(&self, e: impl std::fmt::Display) -> Failure {
        Failure::Input(format!("{}: {e}", self.path.display()))
    }

    fn hash(&self) -> String {
        hex(&Sha256::digest(self.text.as_bytes()))
    }
}

fn input_hashes(inputs: &[&Input]) -> Value {
    Value::Object(inputs.iter().map(|i| (i.path.display().to_string(), Value::String(i.hash()))).collect())
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> CmdResult {
    let text = to_sorted_string(value).map_err(|e| Failure::Input(e.to_string()))?;
    write_text(&text, output)
}

fn write_text(text: &str, output: Option<&Path>) -> CmdResult {
    match output {
        Some(path) => {
            fs::write(path, format!("{text}\n")).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Input(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn verify_identity(
    state: &Path,
    a1: &Path,
    a2: &Path,
    epsilon: EpsilonChoice,
    seed: u64,
    samples: usize,
    output: Option<&Path>,
) -> CmdResult {
    let (si, ai1, ai2) = (Input::read(state)?, Input::read(a1)?, Input::read(a2)?);
    let psi: BipartiteState = si.parse()?;
    let op1: Operator = ai1.parse()?;
    let op2: Operator = ai2.parse()?;
    let f1 = QuadraticForm::new(op1, Side::One).map_err(|e| ai1.error(e))?;
    let f2 = QuadraticForm::new(op2, Side::Two).map_err(|e| ai2.error(e))?;
    let tensor = quantum_average_tensor(&psi, f1.operator(), f2.operator())?;
    let trace = quantum_average_trace(&psi, f1.operator(), f2.operator())?;
    let eps = epsilon.resolve(&psi);
    let d = build_covariance(&psi, eps)?;
    let batch = draw(&d, seed, samples)?;
    let mc = mc_cov_against(&batch, &d, &f1, &f2)?;
    let analytic = mc.analytic.expect("attached");
    let checks = json!({
        "trace_vs_tensor": (trace - tensor).abs() <= IDENTITY_TOL,
        "analytic_cov_vs_tensor": (analytic - tensor).abs() <= IDENTITY_TOL,
        "monte_carlo_vs_analytic": mc.agrees_within(SE_BAND),
    });
    let identities_ok = checks["trace_vs_tensor"] == true && checks["analytic_cov_vs_tensor"] == true;
    let pass = identities_ok && checks["monte_carlo_vs_analytic"] == true;
    let report = json!({
        "command": "verify-identity",
        "tensor": tensor,
        "trace": trace,
        "analytic_cov": analytic,
        "monte_carlo": mc,
        "epsilon": eps,
        "seed": seed,
        "n_samples": samples,
        "checks": checks,
        "pass": pass,
        "prng_id": PRNG_ID,
        "version": VERSION,
        "inputs": input_hashes(&[&si, &ai1, &ai2]),
    });
    emit(&report, output)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Statistical)
    }
}

fn classify(state: &Path, tol: f64) -> CmdResult {
    let si = Input::read(state)?;
    let psi: BipartiteState = si.parse()?;
    let class = classify_symmetry(&psi, tol)?;
    let theta = match class.tag {
        SymmetryTag::Anyonic { theta } => Some(theta),
        _ => None,
    };
    let tag = match class.tag {
        SymmetryTag::Anyonic { .. } => "Anyonic".to_string(),
        t => t.to_string(),
    };
    let report = json!({
        "command": "classify",
        "tag": tag,
        "theta": theta,
        "residual": class.residual,
        "tol": tol,
        "version": VERSION,
        "inputs": input_hashes(&[&si]),
    });
    emit(&report, None)
}

fn transform(
    command: &str,
    psi: &BipartiteState,
    ch: &UnitaryChannel,
    epsilon: EpsilonChoice,
    inputs: &[&Input],
    extra: Value,
    out: &TransformOutput,
) -> CmdResult {
    let eps = epsilon.resolve(psi);
    let d_out = apply_to_covariance(ch, &build_covariance(psi, eps)?)?;
    let psi_out = apply_to_state(ch, psi)?;
    if let Some(p) = &out.state_out {
        emit(&psi_out, Some(p))?;
    }
    if let Some(p) = &out.covariance_out {
        emit(&d_out, Some(p))?;
    }
    let mut report = json!({
        "command": command,
        "epsilon": eps,
        "state": psi_out,
        "covariance": d_out,
        "version": VERSION,
        "inputs": input_hashes(inputs),
    });
    if let (Value::Object(r), Value::Object(e)) = (&mut report, extra) {
        r.extend(e);
    }
    emit(&report, out.output.as_deref())
}

fn run_command(cmd: Command) -> CmdResult {
    match cmd {
        Command::VerifyIdentity { state, a1, a2, epsilon, seed, samples, output } => {
            verify_identity(&state, &a1, &a2, epsilon, seed, samples as usize, output.as_deref())
        }
        Command::Experiment {
            experiment: ExperimentKind::Beamsplitter,
            statistics,
            spin,
            epsilon,
            seed,
            samples,
            output,
            format,
        } => {
            let cfg = BeamSplitterConfig { statistics, spin, epsilon, seed, n_samples: samples as usize };
            let report = run_beamsplitter(&cfg)?;
            match format {
                Format::Json => emit(&report, output.as_deref())?,
                Format::Csv => write_text(report.to_csv().trim_end(), output.as_deref())?,
            }
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Statistical)
            }
        }
        Command::Classify { state, tol } => classify(&state, tol),
        Command::Propagate { state, hamiltonian, t, epsilon, out } => {
            let (si, hi) = (Input::read(&state)?, Input::read(&hamiltonian)?);
            let psi: BipartiteState = si.parse()?;
            let h: Hamiltonian = hi.parse()?;
            let ch = h.channel(t);
            transform("propagate", &psi, &ch, epsilon, &[&si, &hi], json!({ "t": t, "hbar": h.hbar() }), &out)
        }
        Command::Channel { state, channel, preset, epsilon, out } => {
            let si = Input::read(&state)?;
            let psi: BipartiteState = si.parse()?;
            match (channel, preset) {
                (Some(path), _) => {
                    let ci = Input::read(&path)?;
                    let ch: UnitaryChannel = ci.parse()?;
                    transform("channel", &psi, &ch, epsilon, &[&si, &ci], json!({}), &out)
                }
                (None, Some(ChannelPreset::Beamsplitter5050)) => {
                    if psi.d1() != 2 || psi.d2() != 2 {
                        return Err(Failure::Input(format!(
                            "preset beamsplitter5050 acts on 2x2 states, got {}x{}",
                            psi.d1(),
                            psi.d2()
                        )));
                    }
                    let ch = beamsplitter_channel(IndexLayout::SPINLESS);
                    transform("channel", &psi, &ch, epsilon, &[&si], json!({ "preset": "beamsplitter5050" }), &out)
                }
                (None, None) => Err(Failure::Input("either a channel file or --preset is required".into())),
            }
        }
        Command::Draw { state, epsilon, seed, samples, out } => {
            let si = Input::read(&state)?;
            let psi: BipartiteState = si.parse()?;
            let d = build_covariance(&psi, epsilon.resolve(&psi))?;
            let batch = draw(&d, seed, samples as usize)?;
            let file = fs::File::create(&out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
            write_batch(std::io::BufWriter::new(file), &batch, &d)
                .map_err(|e| Failure::Input(format!("{}: {e}", out.display())))
        }
    }
}

/// Runs a parsed command line and maps the outcome to an exit code.
pub fn run(cli: Cli) -> ExitCode {
    let outcome = match thread_pool_from_env() {
        Ok(pool) => pool.install(|| run_command(cli.command)),
        Err(e) => Err(e.into()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Statistical) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}
