use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use assosm::data::{export, import};
use assosm::design::{read_solution, verify_certificate, write_solution, DesignProblem};
use assosm::harness::{
    collect_stage, default_spec, design_stage, run_pipeline, ExperimentSpec, PipelineError,
    RunResult, Stage,
};
use assosm::plant::{benchmark_plant, BenchmarkId};
use assosm::Error;

#[derive(Parser)]
#[command(
    name = "assosm",
    version,
    about = "Data-driven adaptive sliding-mode controller design"
)]
struct Cli {
    /// Overrides the seed of the spec (noise realization and oracle sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the data-collection experiment and exports the data matrices.
    Collect {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solves the design program on exported data.
    Design {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Normalize the data before the conic solve.
        #[arg(long)]
        prescale: bool,
    },
    /// Re-checks a solution against data, with the plant oracle when the data
    /// name a built-in benchmark.
    Verify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Runs the full pipeline for a spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Artifact directory; overrides the spec.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the default configuration of a benchmark (`b1`, `b2`, `b3` or
    /// `all`).
    Reproduce {
        benchmark: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code(),
            error: e.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: error_stage(&e).exit_code(),
            error: e.into(),
        }
    }
}

fn error_stage(e: &Error) -> Stage {
    match e {
        Error::Rank { .. } => Stage::Rank,
        Error::Infeasible { .. } | Error::Solver(_) | Error::Consistency(_) => Stage::Design,
        Error::Divergence { .. } | Error::NonFinite { .. } => Stage::Simulation,
        Error::Config(_) | Error::Usage(_) | Error::Parse { .. } | Error::Io { .. } => Stage::Setup,
    }
}

/// Tags a failure to write an artifact.
fn output(e: Error) -> Failure {
    Failure {
        code: Stage::Output.exit_code(),
        error: e.into(),
    }
}

fn load_spec(path: &Path, seed: Option<u64>) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn collect_cmd(spec: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let spec = load_spec(spec, seed)?;
    let (plant, disturbance) = benchmark_plant(spec.plant.benchmark);
    let data = collect_stage(&plant, &disturbance, &spec)?;
    export(&data, out, true).map_err(output)?;
    for w in data.warnings() {
        eprintln!("warning: {w}");
    }
    println!(
        "collected {} samples of {} into {}",
        data.samples(),
        spec.plant.benchmark,
        out.display()
    );
    Ok(())
}

fn design_cmd(data: &Path, out: &Path, prescale: bool, seed: Option<u64>) -> Result<(), Failure> {
    let data = import(data)?;
    let outcome = design_stage(&data, prescale, None, seed.unwrap_or(0))?;
    write_solution(out, &outcome.solution).map_err(output)?;
    let sol = &outcome.solution;
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    println!("status: {}", sol.status);
    println!("kappa1 = {:.6e}, kappa2 = {:.6e}", sol.kappa1, sol.kappa2);
    println!(
        "sliding coefficients: {:?}",
        outcome.sliding.full_row().as_slice()
    );
    println!(
        "certificate max eigenvalue: {:.3e}",
        outcome.certificate.certificate_max_eig
    );
    println!("solution written to {}", out.display());
    Ok(())
}

fn verify_cmd(data: &Path, solution: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let data = import(data)?;
    let solution = read_solution(solution)?;
    let problem = DesignProblem::from_view(data.view())?;
    let oracle = data
        .meta()
        .plant
        .as_deref()
        .and_then(|label| BenchmarkId::from_str(label).ok())
        .map(|id| benchmark_plant(id).0);
    let report = verify_certificate(&problem, &solution, oracle.as_ref(), seed.unwrap_or(0))?;
    println!(
        "certificate max eigenvalue: {:.3e}",
        report.certificate_max_eig
    );
    println!("design matrix max eigenvalue: {:.3e}", report.lmi_max_eig);
    match report.lyapunov_worst {
        Some(w) => println!("worst Lyapunov slack: {w:.3e}"),
        None => println!("no plant oracle for these data; Lyapunov check skipped"),
    }
    if report.passed() {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure {
            code: Stage::Design.exit_code(),
            error: anyhow::anyhow!("certificate rejected: {}", report.violations.join("; ")),
        })
    }
}

fn summarize(r: &RunResult) {
    let id = r.spec.plant.benchmark;
    let m = &r.metrics;
    println!(
        "[{id}] sliding coefficients: {:?}",
        r.design.sliding.full_row().as_slice()
    );
    match m.reaching_time {
        Some(t) => println!("[{id}] |sigma| < {} from t = {t:.4}", m.sigma_tol),
        None => println!("[{id}] |sigma| did not settle below {}", m.sigma_tol),
    }
    println!(
        "[{id}] final |x| = {:.4e}, final gain = {:.4e}",
        m.final_state_norm, m.final_gain
    );
    for w in &r.warnings {
        eprintln!("[{id}] warning: {w}");
    }
    if let Some(dir) = &r.spec.output.dir {
        println!(
            "[{id}] {} files written to {}",
            r.files.len(),
            dir.display()
        );
    }
}

fn simulate_cmd(spec: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let mut spec = load_spec(spec, seed)?;
    if out.is_some() {
        spec.output.dir = out;
    }
    summarize(&run_pipeline(&spec)?);
    Ok(())
}

fn reproduce_cmd(which: &str, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let ids: Vec<BenchmarkId> = if which.eq_ignore_ascii_case("all") {
        BenchmarkId::ALL.to_vec()
    } else {
        vec![BenchmarkId::from_str(which)?]
    };
    let specs: Vec<ExperimentSpec> = ids
        .iter()
        .map(|&id| {
            let mut spec = default_spec(id);
            if let Some(s) = seed {
                spec.seed = s;
            }
            let dir = if ids.len() == 1 {
                out.to_path_buf()
            } else {
                out.join(id.as_str())
            };
            spec.output.dir = Some(dir);
            spec
        })
        .collect();
    // independent runs; each owns its state
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| s.spawn(|| run_pipeline(spec)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pipeline thread panicked"))
            .collect()
    });
    let mut first_err = None;
    for (id, r) in ids.iter().zip(results) {
        match r {
            Ok(r) => summarize(&r),
            Err(e) => {
                eprintln!("[{id}] error: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::Collect { spec, out } => collect_cmd(&spec, &out, seed),
        Command::Design {
            data,
            out,
            prescale,
        } => design_cmd(&data, &out, prescale, seed),
        Command::Verify { data, solution } => verify_cmd(&data, &solution, seed),
        Command::Simulate { spec, out } => simulate_cmd(&spec, out, seed),
        Command::Reproduce { benchmark, out } => reproduce_cmd(&benchmark, &out, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                Stage::Setup.exit_code()
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code as u8)
        }
    }
}
