//! Command-line driver for the reconstruction experiments.
//!
//! Examples:
//!
//! ```text
//! cascade-inverse --example 1 --out runs/
//! cascade-inverse --example 2 --noise 0.05 --method pr --seed 7 --max-iters 20000
//! cascade-inverse --example 1 --stability-tables --out runs/
//! cascade-inverse --example custom --d-file d.csv --u0-file u0.csv --v0-file v0.csv
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cascade_inverse::cgm::StopReason;
use cascade_inverse::experiments::{
    emit_stability_tables, run_experiment, ExampleProblem, ExperimentConfig, InitialGuess,
    MethodChoice, ProblemSpec,
};

/// Environment variable holding the default output directory.
const OUT_DIR_ENV: &str = "CASCADE_INVERSE_OUT";

#[derive(Parser, Debug)]
#[command(
    name = "cascade-inverse",
    about = "Recover the dissipative coefficient of a fourth-order/heat cascade system from noisy final-time data",
    after_help = "The default output directory is taken from CASCADE_INVERSE_OUT when --out is absent (falling back to ./out). \
                  Reruns with identical options and seed produce byte-identical files."
)]
struct Cli {
    /// Problem to run: 1, 2, or custom
    #[arg(long, default_value = "1")]
    example: String,

    /// Number of spatial cells (time steps match)
    #[arg(long = "n", default_value_t = 100)]
    n_cells: usize,

    /// Final time T
    #[arg(long = "t-final", default_value_t = 1.0)]
    t_final: f64,

    /// Regularization weight
    #[arg(long, default_value_t = 1e-6)]
    gamma: f64,

    /// Noise fraction; repeat for a sweep (default 0.01 0.03 0.05)
    #[arg(long = "noise")]
    noise: Vec<f64>,

    /// Conjugation formula: fr, pr, or both
    #[arg(long, default_value = "both")]
    method: String,

    /// Seed for the synthetic noise
    #[arg(long, default_value_t = 108)]
    seed: u64,

    /// Discrepancy factor in the stopping rule
    #[arg(long, default_value_t = 1.01)]
    rho: f64,

    /// Iteration cap per run
    #[arg(long = "max-iters", default_value_t = 500)]
    max_iters: usize,

    /// Initial guess: const:<value> or file:<path>
    #[arg(long, default_value = "const:0.3")]
    init: String,

    /// Output directory
    #[arg(long = "out")]
    out: Option<PathBuf>,

    /// Write the stability tables instead of running reconstructions
    #[arg(long = "stability-tables", default_value_t = false)]
    stability_tables: bool,

    /// Suppress progress output
    #[arg(long, default_value_t = false)]
    quiet: bool,

    /// True coefficient file (custom problems)
    #[arg(long = "d-file")]
    d_file: Option<PathBuf>,

    /// Initial u data file (custom problems)
    #[arg(long = "u0-file")]
    u0_file: Option<PathBuf>,

    /// Initial v data file (custom problems)
    #[arg(long = "v0-file")]
    v0_file: Option<PathBuf>,
}

fn parse_config(cli: Cli) -> Result<ExperimentConfig, String> {
    let problem = match cli.example.as_str() {
        "1" => ProblemSpec::Example(ExampleProblem::One),
        "2" => ProblemSpec::Example(ExampleProblem::Two),
        "custom" => {
            let (Some(coefficient), Some(u0), Some(v0)) = (cli.d_file, cli.u0_file, cli.v0_file)
            else {
                return Err(
                    "custom problems need --d-file, --u0-file, and --v0-file".to_string()
                );
            };
            ProblemSpec::Custom { coefficient, u0, v0 }
        }
        other => return Err(format!("unknown example '{other}' (expected 1, 2, or custom)")),
    };

    let method = match cli.method.as_str() {
        "fr" => MethodChoice::FletcherReeves,
        "pr" => MethodChoice::PolakRibiere,
        "both" => MethodChoice::Both,
        other => return Err(format!("unknown method '{other}' (expected fr, pr, or both)")),
    };

    let initial_guess = if let Some(value) = cli.init.strip_prefix("const:") {
        let v: f64 = value
            .parse()
            .map_err(|_| format!("cannot parse initial-guess value '{value}'"))?;
        InitialGuess::Constant(v)
    } else if let Some(path) = cli.init.strip_prefix("file:") {
        InitialGuess::File(PathBuf::from(path))
    } else {
        return Err(format!(
            "--init must be const:<value> or file:<path>, got '{}'",
            cli.init
        ));
    };

    let output_dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let noise_levels = if cli.noise.is_empty() {
        vec![0.01, 0.03, 0.05]
    } else {
        cli.noise
    };

    Ok(ExperimentConfig {
        problem,
        n_cells: cli.n_cells,
        t_final: cli.t_final,
        gamma: cli.gamma,
        noise_levels,
        method,
        seed: cli.seed,
        rho: cli.rho,
        max_iterations: cli.max_iters,
        initial_guess,
        output_dir,
        quiet: cli.quiet,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stability = cli.stability_tables;
    let config = match parse_config(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };

    if stability {
        return match emit_stability_tables(&config) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }

    match run_experiment(&config) {
        Ok(summaries) => {
            let mut stalled = false;
            for s in &summaries {
                if !config.quiet {
                    println!(
                        "wrote {} {} {}",
                        s.reconstruction_path.display(),
                        s.history_path.display(),
                        s.summary_path.display()
                    );
                }
                stalled |= s.stop_reason == StopReason::StagnantStep;
            }
            if stalled && !config.quiet {
                eprintln!("note: at least one run ended on a stagnant step");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
