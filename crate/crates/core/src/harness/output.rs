use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::sim::ClosedLoopRun;
use super::RunResult;
use crate::design::{write_solution, ClassicalResult};
use crate::{data, Error, Result};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
const SOLUTION_FILE: &str = "solution.toml";
const SPEC_FILE: &str = "spec.toml";
const REPORT_FILE: &str = "report.txt";
const DATA_DIR: &str = "data";

/// Writes the per-step histories: `t, x1..xn, sigma, s2, s2_hat, gain, nu,
/// u, d`.
pub fn write_trajectory_csv(path: &Path, run: &ClosedLoopRun) -> Result<()> {
    let n = run.states.first().map_or(0, |x| x.len());
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend(["sigma", "s2", "s2_hat", "gain", "nu", "u", "d"].map(String::from));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for k in 0..run.len() {
        let mut rec = Vec::with_capacity(n + 8);
        rec.push(fmt(run.times[k]));
        rec.extend(run.states[k].iter().map(|v| fmt(*v)));
        for v in [
            run.sigma[k],
            run.s2[k],
            run.s2_hat[k],
            run.gain[k],
            run.nu[k],
            run.u[k],
            run.disturbance[k],
        ] {
            rec.push(fmt(v));
        }
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::parse(path, e)
}

/// Human-readable summary of a run.
pub fn write_report(path: &Path, result: &RunResult) -> Result<()> {
    fs::write(path, report_text(result)).map_err(|e| Error::io(path, e))
}

fn report_text(r: &RunResult) -> String {
    let mut s = String::new();
    let spec = &r.spec;
    let d = &r.design;
    let m = &r.metrics;
    let _ = writeln!(s, "plant: {}", spec.plant.benchmark);
    let _ = writeln!(s, "seed: {}", spec.seed);
    let _ = writeln!(s, "\n[data]");
    let _ = writeln!(s, "samples: {}", r.data.samples());
    let _ = writeln!(
        s,
        "rank [O1; O2] = {} (required {}), rank [O1; O2; I] = {}",
        d.rank.state_rank, d.rank.order, d.rank.stacked_rank
    );
    let _ = writeln!(s, "\n[design]");
    let _ = writeln!(s, "status: {}", d.solution.status);
    let _ = writeln!(s, "K: {:?}", d.solution.k.as_slice());
    let _ = writeln!(s, "P: {:?}", d.solution.p.transpose().as_slice());
    let _ = writeln!(s, "kappa1: {:.6e}", d.solution.kappa1);
    let _ = writeln!(s, "kappa2: {:.6e}", d.solution.kappa2);
    let _ = writeln!(
        s,
        "sigma coefficients on x_r: {:?}",
        d.sliding.coeff_r.as_slice()
    );
    let c = &d.certificate;
    let _ = writeln!(
        s,
        "certificate max eigenvalue: {:.3e}",
        c.certificate_max_eig
    );
    if let Some(v) = c.lyapunov_worst {
        let _ = writeln!(s, "oracle Lyapunov worst decrease: {v:.3e}");
    }
    if let Some(v) = c.noise_max_eig {
        let _ = writeln!(s, "oracle noise-bound margin: {v:.3e}");
    }
    let _ = writeln!(
        s,
        "certificate: {}",
        if c.passed() { "PASS" } else { "FAIL" }
    );

    let _ = writeln!(s, "\n[closed loop]");
    let _ = writeln!(s, "initial sigma: {:.6e}", m.initial_sigma);
    match m.reaching_time {
        Some(t) => {
            let _ = writeln!(s, "reaching time (|sigma| < {}): {t:.4}", m.sigma_tol);
        }
        None => {
            let _ = writeln!(s, "reaching time (|sigma| < {}): not reached", m.sigma_tol);
        }
    }
    if let Some(v) = m.max_sigma_after_reaching {
        let _ = writeln!(s, "max |sigma| after reaching: {v:.3e}");
    }
    let _ = writeln!(s, "final |x|: {:.6e}", m.final_state_norm);
    let _ = writeln!(s, "final gain: {:.6e}", m.final_gain);
    let _ = writeln!(s, "gain monotone: {}", m.gain_monotone);
    let _ = writeln!(s, "max |du/dt|: {:.6e}", m.max_input_rate);
    let _ = writeln!(s, "extremum events: {}", r.run.extrema);

    if let Some(b) = &r.bounds {
        let _ = writeln!(s, "\n[bounds]");
        let _ = writeln!(
            s,
            "Monte-Carlo sup |Delta| ({} samples): {:.6e}",
            b.samples, b.delta_bar
        );
        let _ = writeln!(s, "Lambda range: [{}, {}]", b.lambda_min, b.lambda_max);
        let _ = writeln!(s, "non-adaptive amplitude threshold: {:.6e}", b.threshold);
        if let Some(g) = b.final_gain {
            let _ = writeln!(s, "final adaptive gain: {g:.6e}");
        }
    }

    if let Some(cl) = &r.classical {
        let _ = writeln!(s, "\n[classical comparison]");
        let _ = writeln!(
            s,
            "rank [O1; O2; I] = {} vs n + 1 = {}: {}",
            cl.rank.stacked_rank,
            cl.rank.order + 1,
            if cl.rank_condition {
                "satisfied"
            } else {
                "violated"
            }
        );
        if let Some(f) = &cl.collection_feedback {
            let _ = writeln!(s, "input data generated by feedback F = {:?}", f.as_slice());
        }
        match &cl.result {
            ClassicalResult::Gain { k, margin } => {
                let _ = writeln!(
                    s,
                    "classical gain: {:?} (margin {margin:.3e})",
                    k.as_slice()
                );
                if cl.is_degenerate() {
                    let _ = writeln!(s, "classical gain equals the collection feedback");
                }
            }
            ClassicalResult::Infeasible { status, .. } => {
                let _ = writeln!(s, "classical design infeasible: {status}");
            }
        }
    }

    if !r.warnings.is_empty() {
        let _ = writeln!(s, "\n[warnings]");
        for w in &r.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    s
}

/// Writes spec, data, solution, histories, report and plots under `dir`.
pub fn write_run_artifacts(dir: &Path, r: &RunResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    let spec_path = dir.join(SPEC_FILE);
    let mut spec = r.spec.clone();
    spec.output.dir = None;
    fs::write(&spec_path, spec.to_toml()?).map_err(|e| Error::io(&spec_path, e))?;
    files.push(spec_path);

    let data_dir = dir.join(DATA_DIR);
    data::export(&r.data, &data_dir, true)?;
    files.push(data_dir);

    let sol = dir.join(SOLUTION_FILE);
    write_solution(&sol, &r.design.solution)?;
    files.push(sol);

    let traj = dir.join(TRAJECTORY_FILE);
    write_trajectory_csv(&traj, &r.run)?;
    files.push(traj);

    let report = dir.join(REPORT_FILE);
    write_report(&report, r)?;
    files.push(report);

    files.extend(write_plots(dir, &r.run)?);
    Ok(files)
}

const PLOT_SIZE: (u32, u32) = (800, 500);
const PLOT_POINTS: usize = 4000;

fn plot_error(path: &Path, e: impl ToString) -> Error {
    Error::parse(path, format!("cannot render plot: {}", e.to_string()))
}

/// Indices thinning the histories to at most `PLOT_POINTS` points.
fn thinned(len: usize) -> Vec<usize> {
    let step = len.div_ceil(PLOT_POINTS).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(step).collect();
    if len > 0 && idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9 * hi.abs().max(1.0));
    (lo - pad, hi + pad)
}

struct Series<'a> {
    label: String,
    points: Vec<(f64, f64)>,
    colour: &'a RGBColor,
}

fn line_plot(path: &Path, title: &str, x_label: &str, series: &[Series]) -> Result<()> {
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let root = SVGBackend::new(path, PLOT_SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_error(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| plot_error(path, e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .draw()
        .map_err(|e| plot_error(path, e))?;
    for s in series {
        let colour = *s.colour;
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), colour))
            .map_err(|e| plot_error(path, e))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], colour));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_error(path, e))?;
    root.present().map_err(|e| plot_error(path, e))
}

const COLOURS: [RGBColor; 6] = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];

fn write_plots(dir: &Path, run: &ClosedLoopRun) -> Result<Vec<PathBuf>> {
    let idx = thinned(run.len());
    let pts = |ys: &[f64]| {
        idx.iter()
            .map(|&k| (run.times[k], ys[k]))
            .collect::<Vec<_>>()
    };
    let n = run.states.first().map_or(0, |x| x.len());
    let mut files = Vec::new();

    let states: Vec<Series> = (0..n)
        .map(|i| Series {
            label: format!("x{}", i + 1),
            points: idx
                .iter()
                .map(|&k| (run.times[k], run.states[k][i]))
                .collect(),
            colour: &COLOURS[i % COLOURS.len()],
        })
        .collect();
    let path = dir.join("states.svg");
    line_plot(&path, "states", "t", &states)?;
    files.push(path);

    let path = dir.join("phase.svg");
    line_plot(
        &path,
        "sliding variable phase portrait",
        "sigma",
        &[Series {
            label: "(sigma, sigma')".into(),
            points: idx.iter().map(|&k| (run.sigma[k], run.s2[k])).collect(),
            colour: &BLUE,
        }],
    )?;
    files.push(path);

    let path = dir.join("input.svg");
    line_plot(
        &path,
        "control input and disturbance",
        "t",
        &[
            Series {
                label: "u".into(),
                points: pts(&run.u),
                colour: &BLUE,
            },
            Series {
                label: "d".into(),
                points: pts(&run.disturbance),
                colour: &RED,
            },
        ],
    )?;
    files.push(path);

    let path = dir.join("gain.svg");
    line_plot(
        &path,
        "adaptive amplitude",
        "t",
        &[Series {
            label: "gain".into(),
            points: pts(&run.gain),
            colour: &BLUE,
        }],
    )?;
    files.push(path);
    Ok(files)
}
