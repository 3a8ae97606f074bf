use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qtrans::commands::{self, Outcome, Report, TransitionMethod};
use qtrans::config::{ConfigOverrides, RunConfig};
use qtrans::Error;
use qtrans_core::mitigation::FlipProbabilities;

/// Excited states and transition properties with variational eigensolvers.
///
/// Exit status: 0 success, 1 error, 2 a deflated state collapsed onto an
/// earlier one.
#[derive(Parser)]
#[command(name = "qtrans", version)]
struct Cli {
    /// TOML run configuration; its keys override command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the lowest k states.
    Solve {
        /// Problem file, or bundled:NAME.
        problem: String,
        /// Run SSVQE, MCVQE and VQD side by side.
        #[arg(long)]
        compare: bool,
        #[command(flatten)]
        flags: ConfigOverrides,
    },
    /// Transition amplitudes and oscillator strengths between solved states.
    Transition {
        problem: String,
        /// Read states from a solve JSON instead of solving inline.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Which run of the solve JSON to use.
        #[arg(long, default_value_t = 0)]
        run: usize,
        /// State pair `i,j`; repeatable. Defaults to (0, j) for every j.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(usize, usize)>,
        /// Extra estimators to report next to the overlap estimator.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "overlap")]
        methods: Vec<TransitionMethod>,
        #[command(flatten)]
        flags: ConfigOverrides,
    },
    /// Solve a sequence of problems, warm-starting each from the previous.
    Sweep {
        #[arg(required = true)]
        problems: Vec<String>,
        #[command(flatten)]
        flags: ConfigOverrides,
    },
    /// Estimate a readout confusion matrix.
    Calibrate {
        #[arg(long)]
        qubits: usize,
        /// Symmetric flip probability on every qubit.
        #[arg(long, conflicts_with_all = ["p01", "p10"])]
        noise: Option<f64>,
        /// P(read 1 | 0) per qubit (or one value for all).
        #[arg(long, value_delimiter = ',', requires = "p10")]
        p01: Vec<f64>,
        /// P(read 0 | 1) per qubit (or one value for all).
        #[arg(long, value_delimiter = ',', requires = "p01")]
        p10: Vec<f64>,
        /// Shots per prepared basis state.
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short, default_value = "calibration")]
        output: PathBuf,
    },
    /// Exact lowest levels by dense diagonalization.
    Exact {
        problem: String,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, short, default_value = "exact")]
        output: PathBuf,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected i,j")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    Ok((p(a)?, p(b)?))
}

fn run(cli: Cli) -> Result<(Report, PathBuf), Error> {
    let resolve = |flags: &ConfigOverrides| RunConfig::resolve(flags, cli.config.as_deref());
    match &cli.command {
        Command::Solve {
            problem,
            compare,
            flags,
        } => {
            let cfg = resolve(flags)?;
            Ok((commands::solve(problem, &cfg, *compare)?, cfg.output))
        }
        Command::Transition {
            problem,
            from,
            run,
            pairs,
            methods,
            flags,
        } => {
            let cfg = resolve(flags)?;
            let from = from.as_deref().map(|p| (p, *run));
            Ok((
                commands::transition(problem, &cfg, from, pairs, methods)?,
                cfg.output,
            ))
        }
        Command::Sweep { problems, flags } => {
            let cfg = resolve(flags)?;
            Ok((commands::sweep(problems, &cfg)?, cfg.output))
        }
        Command::Calibrate {
            qubits,
            noise,
            p01,
            p10,
            shots,
            seed,
            output,
        } => {
            let flips: Vec<FlipProbabilities> = match noise {
                Some(p) => vec![FlipProbabilities::symmetric(*p)],
                None if p01.len() == p10.len() && !p01.is_empty() => p01
                    .iter()
                    .zip(p10)
                    .map(|(&p01, &p10)| FlipProbabilities { p01, p10 })
                    .collect(),
                None => {
                    return Err(Error::Config(
                        "give --noise, or --p01 and --p10 of equal length".into(),
                    ))
                }
            };
            Ok((
                commands::calibrate(*qubits, &flips, *shots, *seed)?,
                output.clone(),
            ))
        }
        Command::Exact { problem, k, output } => {
            Ok((commands::exact(problem, *k)?, output.clone()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli)
        .and_then(|(report, prefix)| report.write(&prefix).map(|paths| (report.outcome, paths)))
    {
        Ok((outcome, paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
            match outcome {
                Outcome::Collapse => {
                    eprintln!("warning: a deflated state collapsed onto an earlier level")
                }
                Outcome::PartialFailure => {
                    eprintln!("error: some sweep points failed; see the JSON output")
                }
                Outcome::Ok => {}
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
