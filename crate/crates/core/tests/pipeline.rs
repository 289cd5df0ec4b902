use std::fs;
use std::path::Path;

use assosm::data::import;
use assosm::design::{read_solution, verify_certificate, DesignProblem};
use assosm::harness::{
    default_spec, reaching_time, reproduce, run_pipeline, simulate_closed_loop,
    simulate_static_feedback, ExperimentSpec, TRAJECTORY_FILE,
};
use assosm::linalg::sym_eigenvalues;
use assosm::plant::{benchmark_plant, BenchmarkId, Span};
use assosm::Vector;

fn specs_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

#[test]
fn shipped_spec_files_match_the_defaults() {
    for id in BenchmarkId::ALL {
        let spec = ExperimentSpec::load(&specs_dir().join(format!("{id}.toml"))).unwrap();
        assert_eq!(spec, default_spec(id), "{id}");
    }
}

#[test]
fn pendulum_defaults_converge_with_a_hurwitz_upper_loop() {
    let result = reproduce(BenchmarkId::B1, None).unwrap();
    let (plant, _) = benchmark_plant(BenchmarkId::B1);
    let closed = plant.closed_loop_upper(&result.design.solution.kp());
    assert!(closed[(0, 0)] < 0.0, "A + a K P = {}", closed[(0, 0)]);
    assert!(result.metrics.reaching_time.is_some());
    assert!(result.metrics.final_state_norm < 0.1);
    let bounds = result.bounds.unwrap();
    assert_eq!((bounds.lambda_min, bounds.lambda_max), (10.0, 10.0));
    assert!((bounds.threshold - bounds.delta_bar / 5.0).abs() <= 1e-12 * bounds.threshold);
}

#[test]
fn feedback_collected_data_are_usable_and_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let result = reproduce(BenchmarkId::B2, Some(dir.path())).unwrap();
    assert_eq!(result.design.rank.state_rank, 2);
    assert_eq!(result.design.rank.stacked_rank, 2);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(
        report.contains("rank [O1; O2; I] = 2 vs n + 1 = 3: violated"),
        "{report}"
    );
    for f in [
        "states.svg",
        "phase.svg",
        "input.svg",
        "gain.svg",
        TRAJECTORY_FILE,
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn certificate_reverifies_after_reload() {
    for id in BenchmarkId::ALL {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = default_spec(id);
        spec.simulation.horizon = 0.01;
        spec.output.dir = Some(dir.path().to_path_buf());
        let result = run_pipeline(&spec).unwrap();
        let data = import(&dir.path().join("data")).unwrap();
        let solution = read_solution(&dir.path().join("solution.toml")).unwrap();
        assert_eq!(solution.k, result.design.solution.k);
        let problem = DesignProblem::from_view(data.view()).unwrap();
        let (plant, _) = benchmark_plant(id);
        let report = verify_certificate(&problem, &solution, Some(&plant), 11).unwrap();
        assert!(report.passed(), "{id}: {:?}", report.violations);
    }
}

#[test]
fn metrics_are_recomputable_from_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = default_spec(BenchmarkId::B1);
    spec.output.dir = Some(dir.path().to_path_buf());
    let result = run_pipeline(&spec).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join(TRAJECTORY_FILE)).unwrap();
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (ti, si, gi) = (col("t"), col("sigma"), col("gain"));
    let (mut t, mut sigma, mut gain) = (Vec::new(), Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.unwrap();
        t.push(rec[ti].parse::<f64>().unwrap());
        sigma.push(rec[si].parse::<f64>().unwrap());
        gain.push(rec[gi].parse::<f64>().unwrap());
    }
    assert_eq!(t.len(), result.run.len());
    assert_eq!(
        reaching_time(&t, &sigma, spec.simulation.sigma_tol),
        result.metrics.reaching_time
    );
    assert_eq!(*gain.last().unwrap(), result.metrics.final_gain);
}

#[test]
fn large_initial_state_is_brought_to_the_surface() {
    let result = reproduce(BenchmarkId::B3, None).unwrap();
    assert!(
        result.metrics.initial_sigma.abs() >= 1e4,
        "{}",
        result.metrics.initial_sigma
    );
    assert!(result.metrics.reaching_time.is_some());
    let x0 = result.run.states[0].norm();
    assert!(result.metrics.final_state_norm < 1e-3 * x0);
}

/// Steady-state oscillation of `|x|` over the last quarter of a history.
fn tail_peak(times: &[f64], states: &[Vector]) -> f64 {
    let start = times[times.len() - 1] * 0.75;
    times
        .iter()
        .zip(states)
        .filter(|(t, _)| **t >= start)
        .fold(0.0, |m, (_, x)| m.max(x.norm()))
}

#[test]
fn sliding_loop_rejects_the_disturbance_a_static_law_does_not() {
    let id = BenchmarkId::B2;
    let spec = default_spec(id);
    let result = run_pipeline(&spec).unwrap();
    let sliding = &result.design.sliding;
    let (plant, dist) = benchmark_plant(id);
    let x0 = Vector::from_row_slice(&spec.simulation.x0);
    let span = Span::new(0.0, 40.0, 1e-4);
    let run =
        simulate_closed_loop(&plant, &dist, sliding, &spec.controller, &x0, span, 100).unwrap();
    let adaptive = tail_peak(&run.times, &run.states);
    // u = -2 sigma: the smallest integer gain making this loop Hurwitz
    let row = sliding.full_row();
    let gains: Vec<f64> = row.iter().map(|c| -2.0 * c).collect();
    let traj = simulate_static_feedback(&plant, &dist, &gains, &x0, span).unwrap();
    let closed = plant.closed_loop_upper(&sliding.coeff_r.map(|c| -c));
    assert!(closed[(0, 0)] < 0.0);
    let static_peak = tail_peak(&traj.times, &traj.states);
    assert!(adaptive < 0.05, "adaptive tail {adaptive}");
    assert!(static_peak >= 0.05, "static tail {static_peak}");
}

#[test]
fn identical_specs_give_identical_trajectories() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let mut spec = default_spec(BenchmarkId::B1);
        spec.output.dir = Some(dir.path().to_path_buf());
        run_pipeline(&spec).unwrap();
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join(TRAJECTORY_FILE)).unwrap();
    assert_eq!(read(&a), read(&b));

    // b1 derivatives are forward differences; b2 draws seeded noise
    let noise_of = |seed: u64| {
        let mut spec = default_spec(BenchmarkId::B2);
        spec.seed = seed;
        spec.simulation.horizon = 0.01;
        let d = tempfile::tempdir().unwrap();
        spec.output.dir = Some(d.path().to_path_buf());
        run_pipeline(&spec).unwrap();
        fs::read(d.path().join("data/O1plus.csv")).unwrap()
    };
    assert_eq!(noise_of(0), noise_of(0));
    assert_ne!(noise_of(0), noise_of(2));
}

#[test]
fn upper_loop_eigenvalues_are_negative_for_every_benchmark() {
    for id in BenchmarkId::ALL {
        let mut spec = default_spec(id);
        spec.simulation.horizon = 0.01;
        let result = run_pipeline(&spec).unwrap();
        let (plant, _) = benchmark_plant(id);
        let closed = plant.closed_loop_upper(&result.design.solution.kp());
        let p = &result.design.solution.p;
        // P (A + a K P) + (.)^T < 0 certifies a Hurwitz upper loop
        let lyap = p * &closed + closed.transpose() * p;
        let worst = sym_eigenvalues(&lyap).last().copied().unwrap();
        assert!(worst < 0.0, "{id}: {worst}");
    }
}
