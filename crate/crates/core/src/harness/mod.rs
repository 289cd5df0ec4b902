//! End-to-end pipeline: collect, design, verify, simulate, report.
//!
//! Stage failures carry the pipeline step they occurred in:
//!
//! | step | action |
//! |------|--------|
//! | 1 | collect `O1`, `O2`, `O1+` and check their rank |
//! | 2 | noise-energy bound |
//! | 3 | semidefinite program |
//! | 4 | `P = Q^-1` |
//! | 5 | virtual control `phi = K P x_r` |
//! | 6 | sliding variable |
//! | 7 | differentiator |
//! | 8 | adaptive amplitude |
//! | 9 | extremum bookkeeping |
//! | 10 | discontinuous control `nu` |
//! | 11 | integrated control `u` |

mod metrics;
mod output;
mod sim;
mod spec;

use std::fmt;
use std::path::{Path, PathBuf};

use crate::data::{collect, rank_check, DataSet, RankReport};
use crate::design::{
    classical_design, sliding_variable, solve_design, verify_certificate, CertificateReport,
    ClassicalOutcome, DesignProblem, DesignSolution, SlidingVariable,
};
use crate::plant::{benchmark_plant, BenchmarkId, Disturbance, PlantModel, Span, StateBox};
use crate::Error;

pub use metrics::{
    bound_report, gain_threshold, metrics, nested_bound_reports, reaching_time, BoundDomain,
    BoundReport, Metrics,
};
pub use output::{write_report, write_run_artifacts, write_trajectory_csv, TRAJECTORY_FILE};
pub use sim::{simulate_closed_loop, simulate_static_feedback, ClosedLoopRun, DIVERGENCE_NORM};
pub use spec::{
    default_spec, DesignSection, ExperimentSection, ExperimentSpec, OutputSection, PlantSection,
    SimulationSection,
};

/// Monte-Carlo samples used for the bound report of a run.
pub const BOUND_SAMPLES: usize = 2000;

/// Pipeline stage, with its process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Invalid spec or arguments.
    Setup,
    Collection,
    Rank,
    Design,
    Simulation,
    /// Writing artifacts.
    Output,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Setup => 2,
            Stage::Collection => 10,
            Stage::Rank => 20,
            Stage::Design => 30,
            Stage::Simulation => 40,
            Stage::Output => 3,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Setup => "setup",
            Stage::Collection => "collection",
            Stage::Rank => "rank",
            Stage::Design => "design",
            Stage::Simulation => "simulation",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} failed at step {step}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    /// Pipeline step (see the module table); 0 outside the numbered steps.
    pub step: u8,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn new(stage: Stage, step: u8, source: Error) -> Self {
        Self {
            stage,
            step,
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

type StageResult<T> = std::result::Result<T, PipelineError>;

fn at(stage: Stage, step: u8) -> impl FnOnce(Error) -> PipelineError {
    move |e| PipelineError::new(stage, step, e)
}

/// Output of the design half of the pipeline.
#[derive(Clone, Debug)]
pub struct DesignOutcome {
    pub rank: RankReport,
    pub solution: DesignSolution,
    pub sliding: SlidingVariable,
    pub certificate: CertificateReport,
}

/// Everything a pipeline run produced.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub spec: ExperimentSpec,
    pub data: DataSet,
    pub design: DesignOutcome,
    /// Classical comparison design on the same data, when it could be run.
    pub classical: Option<ClassicalOutcome>,
    pub run: ClosedLoopRun,
    pub metrics: Metrics,
    pub bounds: Option<BoundReport>,
    pub warnings: Vec<String>,
    /// Artifacts written to the output directory.
    pub files: Vec<PathBuf>,
}

/// Step 1: runs the collection experiment on the hidden plant.
pub fn collect_stage(
    plant: &PlantModel,
    disturbance: &Disturbance,
    spec: &ExperimentSpec,
) -> StageResult<DataSet> {
    spec.validate(plant.dim()).map_err(at(Stage::Setup, 0))?;
    let mut data = collect(
        plant,
        disturbance,
        &spec.collection_x0(),
        &spec.collection_config(),
    )
    .map_err(at(Stage::Collection, 1))?;
    data.set_plant_label(spec.plant.benchmark.as_str());
    Ok(data)
}

/// Steps 1 to 6 on collected data: rank check, bound, SDP, `P`, sliding
/// variable; the certificate is re-verified, against `oracle` when given.
pub fn design_stage(
    data: &DataSet,
    prescale: bool,
    oracle: Option<&PlantModel>,
    seed: u64,
) -> StageResult<DesignOutcome> {
    let view = data.view();
    let rank = rank_check(view);
    if !rank.ours {
        return Err(PipelineError::new(
            Stage::Rank,
            1,
            Error::Rank {
                rank: rank.state_rank,
                required: rank.order,
            },
        ));
    }
    let problem = DesignProblem::from_view(view)
        .map_err(at(Stage::Design, 2))?
        .with_prescale(prescale);
    let solution = solve_design(&problem).map_err(at(Stage::Design, 3))?;
    solution.check_invariants().map_err(at(Stage::Design, 4))?;
    let sliding = sliding_variable(&solution);
    if !sliding.coeff_r.iter().all(|c| c.is_finite()) {
        return Err(PipelineError::new(
            Stage::Design,
            6,
            Error::NonFinite {
                context: "forming the sliding variable".into(),
            },
        ));
    }
    let certificate =
        verify_certificate(&problem, &solution, oracle, seed).map_err(at(Stage::Design, 3))?;
    if !certificate.passed() {
        return Err(PipelineError::new(
            Stage::Design,
            3,
            Error::Infeasible {
                status: format!(
                    "certificate rejected: {}",
                    certificate.violations.join("; ")
                ),
            },
        ));
    }
    Ok(DesignOutcome {
        rank,
        solution,
        sliding,
        certificate,
    })
}

/// Runs the pipeline on a built-in benchmark and writes artifacts when the
/// spec names an output directory.
pub fn run_pipeline(spec: &ExperimentSpec) -> StageResult<RunResult> {
    let (plant, disturbance) = benchmark_plant(spec.plant.benchmark);
    run_pipeline_on(&plant, &disturbance, spec)
}

/// Runs the pipeline on a user-supplied plant.
pub fn run_pipeline_on(
    plant: &PlantModel,
    disturbance: &Disturbance,
    spec: &ExperimentSpec,
) -> StageResult<RunResult> {
    let data = collect_stage(plant, disturbance, spec)?;
    let mut warnings: Vec<String> = data.warnings().to_vec();
    let design = design_stage(&data, spec.design.prescale, Some(plant), spec.seed)?;
    warnings.extend(design.solution.warnings.iter().cloned());

    let classical = match classical_design(data.view()) {
        Ok(c) => Some(c),
        Err(e) => {
            warnings.push(format!("classical comparison not available: {e}"));
            None
        }
    };

    let sim = &spec.simulation;
    let x0 = spec.simulation_x0();
    let run = simulate_closed_loop(
        plant,
        disturbance,
        &design.sliding,
        &spec.controller,
        &x0,
        Span::new(0.0, sim.horizon, sim.dt),
        sim.log_stride,
    )
    .map_err(at(Stage::Simulation, 11))?;
    let metrics = metrics(&run, sim.sigma_tol);
    if metrics.reaching_time.is_none() {
        warnings.push(format!(
            "|sigma| did not settle below {} within the horizon",
            sim.sigma_tol
        ));
    }

    let bounds = run_bound_report(plant, disturbance, &design.sliding, &x0, &run, spec.seed);
    let mut result = RunResult {
        spec: spec.clone(),
        data,
        design,
        classical,
        run,
        metrics,
        bounds,
        warnings,
        files: Vec::new(),
    };
    if let Some(dir) = spec.output.dir.clone() {
        result.files = write_run_artifacts(&dir, &result).map_err(at(Stage::Output, 0))?;
    }
    Ok(result)
}

/// Bound estimates on the box spanned by the initial state, with `|u|` up to
/// the final adaptive gain.
fn run_bound_report(
    plant: &PlantModel,
    disturbance: &Disturbance,
    sliding: &SlidingVariable,
    x0: &crate::Vector,
    run: &ClosedLoopRun,
    seed: u64,
) -> Option<BoundReport> {
    let bounds = disturbance.bounds()?;
    let radius = x0.amax().max(1.0);
    let final_gain = run.gain.last().copied()?;
    let domain = BoundDomain {
        state_box: StateBox::symmetric(plant.dim(), radius).ok()?,
        input_max: final_gain,
        disturbance_max: bounds.value,
        rate_max: bounds.rate,
    };
    let mut report = bound_report(plant, sliding, &domain, BOUND_SAMPLES, seed).ok()?;
    report.final_gain = Some(final_gain);
    Some(report)
}

/// Runs a benchmark's default configuration, writing artifacts to `out`.
pub fn reproduce(id: BenchmarkId, out: Option<&Path>) -> StageResult<RunResult> {
    let mut spec = default_spec(id);
    spec.output.dir = out.map(Path::to_path_buf);
    run_pipeline(&spec)
}
