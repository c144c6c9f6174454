//! Command-line front end: reads problem documents, runs one operation and
//! prints a JSON result, or times algorithm pairs as CSV.

pub mod bench;
pub mod problem;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use structdist_core as sd;
use structdist_core::{Error, Operation, RandomSeed, StructuredDistribution};

use problem::{number_to_value, tensors_to_value, FormatError, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "structdist", version, about = "Exact inference over structured distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Log-partition function.
    #[command(name = "logZ")]
    LogZ { input: PathBuf },
    /// Per-part marginal probabilities.
    Marginals { input: PathBuf },
    /// Highest-scoring structure and its score.
    Argmax { input: PathBuf },
    /// Exact samples from a seeded generator.
    Sample {
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        num: usize,
    },
    /// Entropy of the distribution.
    Entropy { input: PathBuf },
    /// Cross-entropy H(p, q) of two problems with the same configuration.
    #[command(name = "crossentropy")]
    CrossEntropy { p: PathBuf, q: PathBuf },
    /// KL(p || q) of two problems with the same configuration.
    Kl { p: PathBuf, q: PathBuf },
    /// Log-probability of the problem's `structure` field.
    #[command(name = "logprob")]
    LogProb { input: PathBuf },
    /// Time paired algorithms; prints CSV.
    Bench {
        /// One of nonprojective-argmax, projective-argmax, chain, treecrf.
        suite: String,
        #[arg(long, value_delimiter = ',', default_values_t = [16, 32])]
        n: Vec<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Format(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Format(_) => EXIT_MALFORMED,
            CliError::Core(e) => match e {
                Error::Unsupported { .. } => EXIT_UNSUPPORTED,
                Error::Shape(_)
                | Error::InvalidStructure(_)
                | Error::InvalidParameters(_)
                | Error::ConfigMismatch(_) => EXIT_MALFORMED,
                _ => EXIT_FAILURE,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Format(m) => write!(f, "malformed input: {m}"),
            CliError::Core(Error::Unsupported { reason, .. }) => f.write_str(reason),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Format(e.0)
    }
}

pub fn load(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Format(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProblemFile::parse(&text)?)
}

fn document(
    command: &str,
    d: &StructuredDistribution,
    algorithm: &str,
    result: Value,
) -> Value {
    json!({
        "command": command,
        "family": d.family().name(),
        "config": problem::config_to_value(&d.config()),
        "algorithm": algorithm,
        "result": result,
    })
}

/// Runs one command and returns the text to print.
pub fn execute(command: &Command) -> Result<String, CliError> {
    let single = |input: &Path| -> Result<(ProblemFile, StructuredDistribution), CliError> {
        let p = load(input)?;
        let d = p.distribution()?;
        Ok((p, d))
    };
    let doc = match command {
        Command::LogZ { input } => {
            let (_, d) = single(input)?;
            let z = sd::log_partition(&d)?;
            document("logZ", &d, sd::algorithm(&d, Operation::LogPartition), number_to_value(z))
        }
        Command::Marginals { input } => {
            let (_, d) = single(input)?;
            let m = sd::marginals(&d)?;
            document("marginals", &d, sd::algorithm(&d, Operation::Marginals), tensors_to_value(&m))
        }
        Command::Argmax { input } => {
            let (_, d) = single(input)?;
            let (t, score) = sd::argmax_with_score(&d)?;
            document(
                "argmax",
                &d,
                sd::algorithm(&d, Operation::Argmax),
                json!({ "structure": tensors_to_value(t.tensors()), "score": number_to_value(score) }),
            )
        }
        Command::Sample { input, seed, num } => {
            let (_, d) = single(input)?;
            let (draws, algorithm) = sd::sample_n_with_algorithm(&d, RandomSeed(*seed), *num)?;
            let samples: Vec<Value> = draws.iter().map(|t| tensors_to_value(t.tensors())).collect();
            document(
                "sample",
                &d,
                algorithm,
                json!({ "seed": seed, "num": num, "samples": samples }),
            )
        }
        Command::Entropy { input } => {
            let (_, d) = single(input)?;
            let h = sd::entropy(&d)?;
            document("entropy", &d, sd::algorithm(&d, Operation::Entropy), number_to_value(h))
        }
        Command::CrossEntropy { p, q } => {
            let (_, dp) = single(p)?;
            let (_, dq) = single(q)?;
            let h = sd::cross_entropy(&dp, &dq)?;
            document("crossentropy", &dp, sd::algorithm(&dp, Operation::CrossEntropy), number_to_value(h))
        }
        Command::Kl { p, q } => {
            let (_, dp) = single(p)?;
            let (_, dq) = single(q)?;
            let kl = sd::kl_divergence(&dp, &dq)?;
            document("kl", &dp, sd::algorithm(&dp, Operation::KlDivergence), number_to_value(kl))
        }
        Command::LogProb { input } => {
            let (p, d) = single(input)?;
            let t = p
                .structure_indicator()
                .ok_or_else(|| CliError::Format("logprob needs a \"structure\" field".into()))?;
            let lp = sd::log_prob(&d, &t)?;
            document("logprob", &d, sd::algorithm(&d, Operation::LogProb), number_to_value(lp))
        }
        Command::Bench { suite, n } => {
            let rows = bench::run_suite(suite, n).map_err(CliError::Format)?;
            return Ok(bench::to_csv(&rows));
        }
    };
    let mut text = serde_json::to_string(&doc).expect("values are serializable");
    text.push('\n');
    Ok(text)
}

/// Runs the parsed command line, printing results and diagnostics, and
/// returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(&cli.command) {
        Ok(text) => match &cli.out {
            Some(path) => match std::fs::write(path, text) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("structdist: cannot write {}: {e}", path.display());
                    EXIT_FAILURE
                }
            },
            None => {
                print!("{text}");
                EXIT_OK
            }
        },
        Err(e) => {
            eprintln!("structdist: {e}");
            e.exit_code()
        }
    }
}
