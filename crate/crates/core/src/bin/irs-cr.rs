use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use irs_cr::ao::Algorithm;
use irs_cr::experiment::{self, ExperimentSpec, Sweep};
use irs_cr::scenario::ScenarioConfig;
use irs_cr::Error;

#[derive(Parser)]
#[command(name = "irs-cr", version, about = "Weighted sum-rate experiments for IRS-assisted MIMO cognitive radio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Power,
    Elements,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and write summary.csv (and trace.csv).
    Run {
        /// JSON scenario; the built-in default system when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// ao-general, ao-fast, no-irs or fixed-irs; repeatable.
        #[arg(long = "algorithm", required = true)]
        algorithms: Vec<Algorithm>,
        #[arg(long, value_enum, requires = "values")]
        sweep: Option<Axis>,
        /// Comma-separated sweep values (Watts or element counts).
        #[arg(long, value_delimiter = ',', requires = "sweep")]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Seed of the first trial; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Also write the per-iteration WSR trace.
        #[arg(long)]
        trace: bool,
        /// Write wall_ms as 0 for byte-identical reruns.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Stop once the WSR moves by at most this many bits/s/Hz.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check a JSON scenario and list every violated field.
    Validate { path: PathBuf },
}

fn report(e: &Error) {
    match e {
        Error::Config(v) => {
            eprintln!("invalid configuration:");
            for item in v {
                eprintln!("  {item}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn element_counts(values: &[f64]) -> Result<Vec<usize>, String> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("element count {v} is not a non-negative integer"))
            }
        })
        .collect()
}

fn main() -> ExitCode {
    env_logger::init();
    match Cli::parse().command {
        Command::Validate { path } => match experiment::validate_config(&path) {
            Ok(_) => {
                println!("{}: ok", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                report(&e);
                ExitCode::FAILURE
            }
        },
        Command::Run { config, algorithms, sweep, values, trials, seed, out, trace, no_timing, max_iters, tol } => {
            let base = match config.map(ScenarioConfig::from_json_file).transpose() {
                Ok(c) => c.unwrap_or_default(),
                Err(e) => {
                    report(&e);
                    return ExitCode::FAILURE;
                }
            };
            let mut spec = ExperimentSpec::new(base, algorithms);
            spec.sweep = match sweep {
                None => Sweep::None,
                Some(Axis::Power) => Sweep::Power(values),
                Some(Axis::Elements) => match element_counts(&values) {
                    Ok(ms) => Sweep::Elements(ms),
                    Err(msg) => {
                        eprintln!("error: {msg}");
                        return ExitCode::FAILURE;
                    }
                },
            };
            spec.trials = trials;
            spec.seed = seed.unwrap_or(spec.seed);
            spec.timing = !no_timing;
            if let Some(n) = max_iters {
                spec.settings.max_iters = n;
            }
            if let Some(t) = tol {
                spec.settings.tol = t;
            }
            match experiment::run_experiment(&spec).and_then(|r| experiment::write_results(&r, &out, trace)) {
                Ok(paths) => {
                    for p in paths {
                        println!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    report(&e);
                    ExitCode::FAILURE
                }
            }
        }
    }
}
