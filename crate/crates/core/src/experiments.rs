//! End-to-end experiment driver: synthesize data for a known coefficient,
//! add noise, reconstruct, and write plot-ready files.
//!
//! Two benchmark problems are built in. The first recovers the smooth
//! coefficient `d(x) = x(1-x)` from initial data `u0 = 0`,
//! `v0 = exp(-x) sin(pi x)`; the second recovers a discontinuous piecewise
//! coefficient from `v0 = sin(pi x)`. Custom problems load the coefficient
//! and initial data from node-value files.
//!
//! Every run writes three files into the output directory: a reconstruction
//! table (`x, d_true, d_recon`), an iteration history (`n, j, beta, mu,
//! error`), and a key-value summary. Numbers are printed with 17 significant
//! digits so replaying a configuration reproduces the files byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cgm::{run, ConjugationMethod, OptimizerConfig, ReconstructionResult, StopReason};
use crate::direct::{solve_direct, CoefficientField, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{l2_norm_sq, nodal_sum_sq, simpson_integrate, Grid1D, NodalFunction};
use crate::noise::add_noise;
use crate::objective::Measurement;
use crate::stability::{
    example_one_reference_inputs, example_two_reference_inputs, stability_table, StabilityInputs,
    StabilityRow, TABLE_GAMMAS,
};

/// Built-in benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleProblem {
    /// Smooth coefficient `x (1 - x)`.
    One,
    /// Piecewise coefficient with a jump at x = 0.05 and x = 0.45.
    Two,
}

impl ExampleProblem {
    pub fn label(&self) -> &'static str {
        match self {
            ExampleProblem::One => "example1",
            ExampleProblem::Two => "example2",
        }
    }
}

/// What to reconstruct: a built-in example or user-supplied files.
#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Example(ExampleProblem),
    Custom {
        coefficient: PathBuf,
        u0: PathBuf,
        v0: PathBuf,
    },
}

impl ProblemSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemSpec::Example(e) => e.label(),
            ProblemSpec::Custom { .. } => "custom",
        }
    }
}

/// Which conjugation formulas to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    FletcherReeves,
    PolakRibiere,
    Both,
}

impl MethodChoice {
    fn methods(&self) -> Vec<ConjugationMethod> {
        match self {
            MethodChoice::FletcherReeves => vec![ConjugationMethod::FletcherReeves],
            MethodChoice::PolakRibiere => vec![ConjugationMethod::PolakRibiere],
            MethodChoice::Both => vec![
                ConjugationMethod::FletcherReeves,
                ConjugationMethod::PolakRibiere,
            ],
        }
    }
}

/// Starting coefficient for the iteration.
#[derive(Debug, Clone)]
pub enum InitialGuess {
    Constant(f64),
    File(PathBuf),
}

/// Full experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub n_cells: usize,
    pub t_final: f64,
    pub gamma: f64,
    /// Noise fractions to sweep; 0 runs the clean-data case.
    pub noise_levels: Vec<f64>,
    pub method: MethodChoice,
    /// Base seed; the same seed drives the measurement at every noise level,
    /// so both methods at a level see identical data.
    pub seed: u64,
    pub rho: f64,
    pub max_iterations: usize,
    pub initial_guess: InitialGuess,
    pub output_dir: PathBuf,
    pub quiet: bool,
}

impl ExperimentConfig {
    /// Benchmark defaults: n = 100, T = 1, gamma = 1e-6, noise sweep
    /// {1%, 3%, 5%}, both methods, rho = 1.01, 500 iterations, constant
    /// initial guess 0.3, seed 108.
    pub fn example_defaults(example: ExampleProblem, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            problem: ProblemSpec::Example(example),
            n_cells: 100,
            t_final: 1.0,
            gamma: 1e-6,
            noise_levels: vec![0.01, 0.03, 0.05],
            method: MethodChoice::Both,
            seed: 108,
            rho: 1.01,
            max_iterations: 500,
            initial_guess: InitialGuess::Constant(0.3),
            output_dir: output_dir.into(),
            quiet: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.noise_levels.is_empty() {
            return Err(Error::InvalidConfig("no noise levels given".into()));
        }
        for &p in &self.noise_levels {
            if p < 0.0 {
                return Err(Error::NegativeNoise(p));
            }
        }
        Ok(())
    }
}

/// The true coefficient of a built-in example, sampled at the grid nodes.
pub fn builtin_coefficient(example: ExampleProblem, grid: &Grid1D) -> CoefficientField {
    let f: fn(f64) -> f64 = match example {
        ExampleProblem::One => |x| x * (1.0 - x),
        ExampleProblem::Two => |x| {
            if x > 0.05 && x <= 0.45 {
                0.5
            } else if x >= 0.5 {
                0.1 + (2.0 * std::f64::consts::PI * x).sin().powi(2) / 2.0
            } else {
                0.1
            }
        },
    };
    CoefficientField::new(grid.sample(f))
}

/// Initial data (u0, v0) of a built-in example; boundary nodes exactly zero.
pub fn builtin_initial_data(example: ExampleProblem, grid: &Grid1D) -> (NodalFunction, NodalFunction) {
    let v0 = match example {
        ExampleProblem::One => {
            grid.sample_zero_boundary(|x| (-x).exp() * (std::f64::consts::PI * x).sin())
        }
        ExampleProblem::Two => grid.sample_zero_boundary(|x| (std::f64::consts::PI * x).sin()),
    };
    (NodalFunction::zeros(grid.n_nodes()), v0)
}

/// Read a two-column `x,value` node file (optional header line) and check it
/// against the grid.
pub fn load_node_values(path: &Path, grid: &Grid1D) -> Result<NodalFunction> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut index = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            return Err(Error::InvalidFile(format!(
                "{}:{}: expected two comma-separated columns",
                path.display(),
                lineno + 1
            )));
        };
        let (Ok(x), Ok(v)) = (a.parse::<f64>(), b.parse::<f64>()) else {
            if lineno == 0 {
                continue; // header
            }
            return Err(Error::InvalidFile(format!(
                "{}:{}: cannot parse '{line}'",
                path.display(),
                lineno + 1
            )));
        };
        if index >= grid.n_nodes() {
            return Err(Error::InvalidFile(format!(
                "{}: more rows than the {} grid nodes",
                path.display(),
                grid.n_nodes()
            )));
        }
        if (x - grid.node(index)).abs() > 1e-9 {
            return Err(Error::InvalidFile(format!(
                "{}:{}: x = {x} does not match node {} = {}",
                path.display(),
                lineno + 1,
                index,
                grid.node(index)
            )));
        }
        values.push(v);
        index += 1;
    }
    if values.len() != grid.n_nodes() {
        return Err(Error::InvalidFile(format!(
            "{}: found {} values, grid has {} nodes",
            path.display(),
            values.len(),
            grid.n_nodes()
        )));
    }
    NodalFunction::from_values(values)
}

/// Outcome of one (noise level, method) reconstruction.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub method: ConjugationMethod,
    pub noise_level: f64,
    pub seed: u64,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub final_j: f64,
    pub final_error: Option<f64>,
    pub epsilon: f64,
    pub reconstruction_path: PathBuf,
    pub history_path: PathBuf,
    pub summary_path: PathBuf,
}

struct ProblemData {
    d_true: CoefficientField,
    u0: NodalFunction,
    v0: NodalFunction,
}

fn load_problem(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<ProblemData> {
    match &cfg.problem {
        ProblemSpec::Example(example) => {
            let (u0, v0) = builtin_initial_data(*example, grid);
            Ok(ProblemData {
                d_true: builtin_coefficient(*example, grid),
                u0,
                v0,
            })
        }
        ProblemSpec::Custom { coefficient, u0, v0 } => Ok(ProblemData {
            d_true: CoefficientField::new(load_node_values(coefficient, grid)?),
            u0: load_node_values(u0, grid)?,
            v0: load_node_values(v0, grid)?,
        }),
    }
}

fn initial_guess_field(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<CoefficientField> {
    match &cfg.initial_guess {
        InitialGuess::Constant(v) => {
            Ok(CoefficientField::new(NodalFunction::constant(*v, grid.n_nodes())))
        }
        InitialGuess::File(path) => Ok(CoefficientField::new(load_node_values(path, grid)?)),
    }
}

/// Run the configured sweep and write all output files. Returns one summary
/// per (noise level, method) pair, in sweep order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    cfg.validate()?;
    let grid = Grid1D::new(cfg.n_cells, cfg.t_final)?;
    let problem = load_problem(cfg, &grid)?;
    let guess = initial_guess_field(cfg, &grid)?;

    let exact_traj = solve_direct(&grid, &problem.d_true, &problem.u0, &problem.v0, None, None)?;
    let (u_exact, v_exact) = exact_traj.final_state();

    fs::create_dir_all(&cfg.output_dir)?;
    let label = cfg.problem.label();
    let mut summaries = Vec::new();

    for &noise in &cfg.noise_levels {
        let measurement = add_noise(&u_exact, &v_exact, noise, cfg.seed, &grid)?;
        for method in cfg.method.methods() {
            let mut opt = OptimizerConfig::new(method, guess.clone());
            opt.gamma = cfg.gamma;
            opt.rho = cfg.rho;
            opt.max_iterations = cfg.max_iterations;
            let result = run(
                &opt,
                &measurement,
                &grid,
                &problem.u0,
                &problem.v0,
                Some(problem.d_true.values()),
            )?;
            let summary = write_run_outputs(
                cfg,
                &grid,
                label,
                method,
                noise,
                &measurement,
                &problem.d_true,
                &result,
            )?;
            if !cfg.quiet {
                println!(
                    "{} {} p={}: {:?} after {} iterations, J = {:.4e}",
                    label,
                    method.label(),
                    noise,
                    summary.stop_reason,
                    summary.iterations,
                    summary.final_j
                );
            }
            summaries.push(summary);
        }
    }
    Ok(summaries)
}

#[allow(clippy::too_many_arguments)]
fn write_run_outputs(
    cfg: &ExperimentConfig,
    grid: &Grid1D,
    label: &str,
    method: ConjugationMethod,
    noise: f64,
    measurement: &Measurement,
    d_true: &CoefficientField,
    result: &ReconstructionResult,
) -> Result<RunSummary> {
    let tag = format!("{label}_{}_p{}", method.label(), noise);

    let reconstruction_path = cfg.output_dir.join(format!("reconstruction_{tag}.csv"));
    let mut text = String::from("x,d_true,d_recon\n");
    for i in 0..grid.n_nodes() {
        writeln!(
            text,
            "{},{},{}",
            fmt17(grid.node(i)),
            fmt17(d_true.values()[i]),
            fmt17(result.d_final.values()[i])
        )
        .expect("string write");
    }
    fs::write(&reconstruction_path, text)?;

    let history_path = cfg.output_dir.join(format!("history_{tag}.csv"));
    let mut text = String::from("n,j,beta,mu,error\n");
    for rec in &result.history {
        writeln!(
            text,
            "{},{},{},{},{}",
            rec.n,
            fmt17(rec.j_value),
            fmt17(rec.beta),
            fmt17(rec.mu),
            rec.error.map(fmt17).unwrap_or_default()
        )
        .expect("string write");
    }
    fs::write(&history_path, text)?;

    let summary_path = cfg.output_dir.join(format!("summary_{tag}.txt"));
    let final_rec = result.final_record();
    let mut text = String::new();
    for (key, value) in [
        ("problem", label.to_string()),
        ("method", method.label().to_string()),
        ("noise", format!("{noise}")),
        ("seed", format!("{}", cfg.seed)),
        ("n_cells", format!("{}", cfg.n_cells)),
        ("t_final", fmt17(cfg.t_final)),
        ("gamma", fmt17(cfg.gamma)),
        ("rho", fmt17(cfg.rho)),
        ("max_iterations", format!("{}", cfg.max_iterations)),
        ("stop_reason", format!("{:?}", result.stop_reason)),
        ("iterations", format!("{}", result.iterations())),
        ("final_j", fmt17(final_rec.j_value)),
        (
            "final_error",
            final_rec.error.map(fmt17).unwrap_or_else(|| "unknown".into()),
        ),
        ("epsilon", fmt17(measurement.epsilon())),
        ("floor_activations", format!("{}", result.floor_activations)),
    ] {
        writeln!(text, "{key} = {value}").expect("string write");
    }
    fs::write(&summary_path, text)?;

    Ok(RunSummary {
        label: tag,
        method,
        noise_level: noise,
        seed: cfg.seed,
        stop_reason: result.stop_reason,
        iterations: result.iterations(),
        final_j: final_rec.j_value,
        final_error: final_rec.error,
        epsilon: measurement.epsilon(),
        reconstruction_path,
        history_path,
        summary_path,
    })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Stability inputs recomputed from the forward solver for a built-in
/// example: initial-state norms by Simpson quadrature, final-state norms as
/// raw nodal sums (the convention of the built-in reference constants).
pub fn recomputed_stability_inputs(
    example: ExampleProblem,
    grid: &Grid1D,
    gamma: f64,
) -> Result<StabilityInputs> {
    let d_true = builtin_coefficient(example, grid);
    let (u0, v0) = builtin_initial_data(example, grid);
    let traj: Trajectory = solve_direct(grid, &d_true, &u0, &v0, None, None)?;
    let (u_final, v_final) = traj.final_state();
    let u0_sq = {
        let prod = NodalFunction::from_values(u0.values().iter().map(|v| v * v).collect())?;
        simpson_integrate(&prod, grid)?
    };
    Ok(StabilityInputs {
        gamma,
        alpha0: 1e4,
        norm_u0_sq: u0_sq,
        norm_v0_sq: l2_norm_sq(&v0, grid)?,
        norm_m1_sq: nodal_sum_sq(&u_final),
        norm_m2_sq: nodal_sum_sq(&v_final),
        ehrling_c: None,
    })
}

/// Write both stability-table variants for the configured example: one from
/// the built-in reference constants, one recomputed by the forward solver.
pub fn emit_stability_tables(cfg: &ExperimentConfig) -> Result<(PathBuf, PathBuf)> {
    let ProblemSpec::Example(example) = cfg.problem else {
        return Err(Error::InvalidConfig(
            "stability tables exist only for the built-in examples".into(),
        ));
    };
    fs::create_dir_all(&cfg.output_dir)?;
    let grid = Grid1D::new(cfg.n_cells, cfg.t_final)?;

    let reference_inputs = match example {
        ExampleProblem::One => example_one_reference_inputs(1.0),
        ExampleProblem::Two => example_two_reference_inputs(1.0),
    };
    let reference_rows = stability_table(&TABLE_GAMMAS, &reference_inputs)?;
    let reference_path = cfg
        .output_dir
        .join(format!("stability_{}_reference.csv", example.label()));
    fs::write(&reference_path, table_csv(&reference_rows))?;

    let recomputed = recomputed_stability_inputs(example, &grid, 1.0)?;
    let recomputed_rows = stability_table(&TABLE_GAMMAS, &recomputed)?;
    let recomputed_path = cfg
        .output_dir
        .join(format!("stability_{}_recomputed.csv", example.label()));
    fs::write(&recomputed_path, table_csv(&recomputed_rows))?;

    if !cfg.quiet {
        println!(
            "stability tables written: {} and {}",
            reference_path.display(),
            recomputed_path.display()
        );
    }
    Ok((reference_path, recomputed_path))
}

fn table_csv(rows: &[StabilityRow]) -> String {
    let mut text = String::from("gamma,t_star,stability_constant\n");
    for row in rows {
        writeln!(
            text,
            "{},{},{}",
            fmt17(row.gamma),
            fmt17(row.t_star),
            fmt17(row.stability_constant)
        )
        .expect("string write");
    }
    text
}
