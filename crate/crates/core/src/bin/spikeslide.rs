use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spikeslide::algorithms::Method;
use spikeslide::experiment::ExperimentKind;
use spikeslide::harness::{run_experiment, ExperimentSpec, DEFAULT_ITERATIONS};
use spikeslide::verify::{acceptance_suite, property_suite};

#[derive(Parser)]
#[command(version, about = "Sliding and conditional-gradient solvers for sparse spike recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Properties,
    Acceptance,
}

#[derive(Subcommand)]
enum Command {
    /// Runs methods on a synthetic experiment and writes CSVs, plots and metadata.
    Run {
        #[arg(long, value_parser = parse_kind)]
        experiment: Option<ExperimentKind>,
        /// A method name or `all`.
        #[arg(long, default_value = "all")]
        method: String,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// TOML experiment file; command-line flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Runs a verification suite; exits nonzero if any check fails.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Iterations of the shared acceptance run.
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iters: usize,
    },
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown experiment '{s}' (expected one of {})", names.join(", "))
    })
}

fn build_spec(
    experiment: Option<ExperimentKind>,
    method: &str,
    iters: Option<usize>,
    seed: u64,
    threads: Option<usize>,
    config: Option<PathBuf>,
) -> Result<ExperimentSpec, String> {
    let mut spec = match (config, experiment) {
        (Some(path), kind) => {
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let spec = ExperimentSpec::from_toml(&text).map_err(|e| e.to_string())?;
            if kind.is_some_and(|k| k != spec.kind) {
                return Err("--experiment disagrees with the config file".into());
            }
            spec
        }
        (None, Some(kind)) => ExperimentSpec::new(kind, seed),
        (None, None) => return Err("either --experiment or --config is required".into()),
    };
    spec.seed = seed;
    if method != "all" {
        let m: Method = method.parse()?;
        spec = spec.with_method(m);
    }
    if let Some(n) = iters {
        spec.iterations = n;
    }
    if let Some(t) = threads {
        spec.threads = t;
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { experiment, method, iters, seed, threads, out, config } => {
            let spec = match build_spec(experiment, &method, iters, seed, threads, config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match run_experiment(&spec, &out) {
                Ok(art) => {
                    println!("{} seed {} SNR {:.2} dB, v_min {:.8}", spec.kind, spec.seed, art.snr_db, art.v_min);
                    for r in &art.runs {
                        match &r.error {
                            None => println!(
                                "  {:<12} v {:.8}  spikes {:>3}  cpu {:.2} s{}",
                                r.method.name(),
                                r.final_value,
                                r.final_spikes(),
                                r.cpu_seconds,
                                if r.experimental { "  (experimental)" } else { "" }
                            ),
                            Some(e) => println!("  {:<12} failed: {e}", r.method.name()),
                        }
                    }
                    println!("artifacts in {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Check { suite, iters } => {
            let outcomes = match suite {
                Suite::Properties => property_suite(),
                Suite::Acceptance => acceptance_suite(iters),
            };
            for o in &outcomes {
                println!("{o}");
            }
            if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
