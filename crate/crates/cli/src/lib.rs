//! Argument handling for the `fml` binary.
//!
//! Exit codes: 0 on success or a passing verdict, 1 when a verdict fails
//! (or the solver does not converge), 2 on usage and input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fml_core::bounds::refined_bound_radius;
use fml_core::harness::verify::{consistency_base, verify_suite, SuiteScale};
use fml_core::harness::{
    consistency_experiment, genericity_experiment, hmin_verification_run, load_dataset_in,
    position_bound_experiment, write_hmin_csv, AdversaryGrid, DatasetFormat, ExperimentReport,
    HminGrid,
};
use fml_core::hmin::{hmin_closed_form, hmin_scaled};
use fml_core::solver::median_solve;
use fml_core::{ConcentrationSpec, Geometry, HminInstance, ModelSpace, SolverConfig};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fml", version, about = "Fréchet medians on constant-curvature model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Median of a dataset, printed as JSON.
    Solve(SolveArgs),
    /// Basic and refined containment radii for a concentration spec.
    Bounds(BoundsArgs),
    /// Minimum of a difference of distances over a ball, or a verification grid.
    Hmin(HminArgs),
    /// Runs the full invariant suite.
    Verify(VerifyArgs),
    /// Runs one named experiment and emits its report.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    #[arg(long, env = "FML_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 16)]
    multistarts: usize,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            multistarts: self.multistarts,
            seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Dataset file (JSON or CSV).
    dataset: PathBuf,
    /// Dataset format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Curvature of the space; required for CSV files without a space line.
    #[arg(long, allow_hyphen_values = true)]
    curvature: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, allow_hyphen_values = true)]
    curvature: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeometryArg {
    Sphere,
    Flat,
    Hyperbolic,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Sphere => Geometry::Sphere,
            GeometryArg::Flat => Geometry::Flat,
            GeometryArg::Hyperbolic => Geometry::Hyperbolic,
        }
    }
}

#[derive(Debug, Args)]
struct HminArgs {
    /// Unit-curvature geometry of the instance.
    #[arg(long, value_enum, conflicts_with = "curvature")]
    geometry: Option<GeometryArg>,
    /// Arbitrary curvature instead of a unit geometry.
    #[arg(long, allow_hyphen_values = true)]
    curvature: Option<f64>,
    #[arg(long, required_unless_present = "grid")]
    rho: Option<f64>,
    #[arg(long, required_unless_present = "grid")]
    t: Option<f64>,
    #[arg(long, required_unless_present = "grid")]
    u: Option<f64>,
    /// Compare closed form and oracle on seeded instances; writes CSV.
    #[arg(long, conflicts_with_all = ["rho", "t", "u", "geometry", "curvature"])]
    grid: bool,
    /// Instances per geometry for `--grid`.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Oracle θ-grid size for `--grid`.
    #[arg(long, default_value_t = 100_000)]
    resolution: usize,
    /// Where to write the grid report JSON.
    #[arg(long, requires = "grid")]
    report: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Quick,
    Full,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = ScaleArg::Full)]
    scale: ScaleArg,
    #[command(flatten)]
    seed: SeedArg,
    /// Where to write the check outcomes as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ExperimentName {
    PositionBound,
    Consistency,
    Genericity,
    HminVerification,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: ExperimentName,
    #[arg(long, allow_hyphen_values = true)]
    curvature: Option<f64>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Number of points per genericity sample.
    #[arg(long, default_value_t = 5)]
    points: usize,
    /// Sample sizes for the consistency experiment.
    #[arg(long, value_delimiter = ',', default_values_t = [16, 64, 256, 1024])]
    schedule: Vec<usize>,
    /// Required final median distance for the consistency experiment.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Base measure for the consistency experiment (defaults to a seeded sphere measure).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Oracle θ-grid size for the hmin experiment.
    #[arg(long, default_value_t = 100_000)]
    resolution: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Io(std::io::Error),
}

impl From<fml_core::Error> for Failure {
    fn from(e: fml_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bounds(a) => bounds(a),
        Command::Hmin(a) => hmin(a),
        Command::Verify(a) => verify(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn dataset_format(path: &Path, format: Option<FormatArg>) -> Result<DatasetFormat, Failure> {
    match format {
        Some(FormatArg::Json) => Ok(DatasetFormat::Json),
        Some(FormatArg::Csv) => Ok(DatasetFormat::Csv),
        None => DatasetFormat::from_path(path).ok_or_else(|| {
            Failure::Input(format!(
                "cannot infer the format of {}; pass --format json|csv",
                path.display()
            ))
        }),
    }
}

fn space_override(curvature: Option<f64>, dim: Option<usize>) -> Result<Option<ModelSpace>, Failure> {
    match (curvature, dim) {
        (None, None) => Ok(None),
        (Some(k), d) => Ok(Some(ModelSpace::new(k, d.unwrap_or(2))?)),
        (None, Some(_)) => Err(Failure::Input("--dim needs --curvature".into())),
    }
}

fn solve(a: SolveArgs) -> Outcome {
    let format = dataset_format(&a.dataset, a.format)?;
    let space = space_override(a.curvature, a.dim)?;
    let data = load_dataset_in(&a.dataset, format, space)?;
    let res = median_solve(&data.measure, &a.solver.config(a.seed.seed))?;
    emit(a.out.as_deref(), &pretty(&res))?;
    Ok(if res.converged { EXIT_OK } else { EXIT_VERDICT })
}

fn bounds(a: BoundsArgs) -> Outcome {
    let space = ModelSpace::new(a.curvature, a.dim)?;
    let spec = ConcentrationSpec::new(space.origin(), a.rho, a.alpha)?;
    let report = refined_bound_radius(&space, &spec)?;
    emit(a.out.as_deref(), &pretty(&report))?;
    Ok(EXIT_OK)
}

fn hmin(a: HminArgs) -> Outcome {
    if a.grid {
        let run = hmin_verification_run(&HminGrid {
            instances_per_geometry: a.trials,
            resolution: a.resolution,
            seed: a.seed.seed,
        })?;
        let mut csv = Vec::new();
        write_hmin_csv(&run.rows, &mut csv)?;
        emit(a.out.as_deref(), &String::from_utf8_lossy(&csv))?;
        if let Some(path) = &a.report {
            run.report.write(path)?;
        }
        return Ok(verdict_code(&run.report));
    }
    let (rho, t, u) = (a.rho.unwrap_or(0.0), a.t.unwrap_or(0.0), a.u.unwrap_or(0.0));
    let out = match (a.geometry, a.curvature) {
        (_, Some(k)) => json!({
            "curvature": k,
            "rho": rho,
            "t": t,
            "u": u,
            "value": hmin_scaled(k, rho, t, u)?,
        }),
        (g, None) => {
            let inst = HminInstance::new(g.unwrap_or(GeometryArg::Flat).into(), rho, t, u)?;
            json!({
                "geometry": inst.geometry(),
                "rho": rho,
                "t": t,
                "u": u,
                "branch": inst.branch().name(),
                "value": hmin_closed_form(&inst)?,
            })
        }
    };
    emit(a.out.as_deref(), &pretty(&out))?;
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs) -> Outcome {
    let scale = match a.scale {
        ScaleArg::Quick => SuiteScale::Quick,
        ScaleArg::Full => SuiteScale::Full,
    };
    let outcomes = verify_suite(scale, a.seed.seed)?;
    let mut all = true;
    for o in &outcomes {
        all &= o.pass;
        println!("{} {}", if o.pass { "PASS" } else { "FAIL" }, o.name);
    }
    println!(
        "{}/{} checks passed",
        outcomes.iter().filter(|o| o.pass).count(),
        outcomes.len()
    );
    if let Some(path) = &a.out {
        std::fs::write(path, pretty(&outcomes))?;
    }
    Ok(if all { EXIT_OK } else { EXIT_VERDICT })
}

fn verdict_code(report: &ExperimentReport) -> i32 {
    if report.verdict.pass {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

fn required<T>(v: Option<T>, flag: &str, experiment: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Input(format!("experiment {experiment} needs --{flag}")))
}

fn experiment(a: ExperimentArgs) -> Outcome {
    let seed = a.seed.seed;
    let cfg = a.solver.config(seed);
    let report = match a.name {
        ExperimentName::PositionBound => {
            let name = "position_bound";
            let space = ModelSpace::new(required(a.curvature, "curvature", name)?, a.dim)?;
            let spec = ConcentrationSpec::new(
                space.origin(),
                required(a.rho, "rho", name)?,
                required(a.alpha, "alpha", name)?,
            )?;
            let adversary = AdversaryGrid {
                trials: a.trials.unwrap_or(AdversaryGrid::default().trials),
                ..AdversaryGrid::default()
            };
            position_bound_experiment(&space, &spec, &adversary, &cfg, seed)?
        }
        ExperimentName::Consistency => {
            let mu = match &a.dataset {
                Some(path) => {
                    let format = dataset_format(path, a.format)?;
                    let space = space_override(a.curvature, None)?;
                    load_dataset_in(path, format, space)?.measure
                }
                None => consistency_base(seed)?,
            };
            consistency_experiment(&mu, &a.schedule, a.trials.unwrap_or(50), seed, &cfg, a.eps)?
        }
        ExperimentName::Genericity => {
            let space = ModelSpace::new(a.curvature.unwrap_or(1.0), a.dim)?;
            let cfg = cfg.with_multistarts(cfg.multistarts.max(32));
            genericity_experiment(&space, a.points, a.trials.unwrap_or(200), seed, &cfg)?
        }
        ExperimentName::HminVerification => {
            hmin_verification_run(&HminGrid {
                instances_per_geometry: a.trials.unwrap_or(500),
                resolution: a.resolution,
                seed,
            })?
            .report
        }
    };
    emit(a.out.as_deref(), &report.to_json_string())?;
    Ok(verdict_code(&report))
}
