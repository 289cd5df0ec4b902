//! Finite-time data collection and the data matrices used by the designer.
//!
//! A [`DataSet`] holds the design-visible matrices in a [`DesignView`]
//! (input, state, virtual-input and noisy derivative samples plus the declared
//! noise bound) and, separately, a [`SimulatorRecord`] with the disturbance
//! samples and the realized derivative noise. Only the view is handed to the
//! design stage.

mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{min_eigenvalue, numerical_rank};
use crate::plant::{integrate, Disturbance, InputSignal, InputSource, PlantModel, Span};
use crate::{Error, Matrix, Result, Vector};

pub use io::{export, import, MANIFEST_FILE};

/// Distribution of the injected derivative noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    /// Independent `U[-halfwidth, halfwidth]` per component.
    Uniform {
        halfwidth: f64,
    },
}

impl NoiseSpec {
    pub fn halfwidth(&self) -> f64 {
        match self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Uniform { halfwidth } => *halfwidth,
        }
    }
}

/// How the upper-state derivative samples are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    /// `(x(t + tau) - x(t)) / tau`; the truncation error is the noise.
    #[default]
    ForwardDifference,
    /// True derivative plus a draw from the declared noise distribution.
    ExactPlusNoise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub t0: f64,
    /// Sampling time.
    pub tau: f64,
    /// Number of samples.
    pub samples: usize,
    pub input: InputSignal,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub derivative_mode: DerivativeMode,
    #[serde(default)]
    pub seed: u64,
    /// Integration step; rounded down so that it divides `tau`.
    #[serde(default = "default_collection_dt")]
    pub dt: f64,
}

fn default_collection_dt() -> f64 {
    1e-4
}

impl ExperimentConfig {
    /// Checks the configuration and returns non-fatal warnings.
    pub fn validate(&self, n: usize) -> Result<Vec<String>> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "sampling time must be positive, got {}",
                self.tau
            )));
        }
        if self.samples == 0 {
            return Err(Error::Config("at least one sample is required".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "integration step must be positive, got {}",
                self.dt
            )));
        }
        if self.noise.halfwidth() < 0.0 || !self.noise.halfwidth().is_finite() {
            return Err(Error::Config(
                "noise halfwidth must be a nonnegative number".into(),
            ));
        }
        self.input.validate(n)?;
        let mut warnings = Vec::new();
        if self.samples < 2 * n - 1 {
            warnings.push(format!(
                "{} samples is below the minimum 2n - 1 = {} for the state rank condition",
                self.samples,
                2 * n - 1
            ));
        }
        Ok(warnings)
    }

    /// Noise bound implied by the declared distribution.
    pub fn declared_bound(&self, upper_dim: usize) -> Result<NoiseBound> {
        noise_bound_uniform(self.noise.halfwidth(), upper_dim, self.samples)
    }
}

/// Noise-energy bound `Psi Psi^T <= gamma_gram` built from a per-sample bound
/// `|psi_k|^2 <= psi_bar`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseBound {
    pub gamma_gram: Matrix,
    pub psi_bar: f64,
}

/// Design-visible data. Contains no disturbance samples and no noise
/// realization.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignView {
    /// `1 x T` input samples.
    pub input: Matrix,
    /// `(n-1) x T` upper-state samples.
    pub o1: Matrix,
    /// `1 x T` virtual-input (`x_n`) samples.
    pub o2: Matrix,
    /// `(n-1) x T` measured (noisy) upper-state derivatives.
    pub o1_plus: Matrix,
    /// `1 x T` `x_n` derivative samples (unused by the main design).
    pub o2_plus: Option<Matrix>,
    pub bound: NoiseBound,
}

impl DesignView {
    pub fn samples(&self) -> usize {
        self.o1.ncols()
    }

    /// Plant order `n`.
    pub fn order(&self) -> usize {
        self.o1.nrows() + 1
    }

    /// `[O1; O2]`, the sampled full state.
    pub fn states(&self) -> Matrix {
        let m = self.o1.nrows();
        let mut x0 = Matrix::zeros(m + 1, self.samples());
        x0.rows_mut(0, m).copy_from(&self.o1);
        x0.row_mut(m).copy_from(&self.o2.row(0));
        x0
    }
}

/// Simulator-only samples, never shown to the designer.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatorRecord {
    /// `1 x T` disturbance samples.
    pub disturbance: Matrix,
    /// `(n-1) x T` realized derivative noise.
    pub noise: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataMeta {
    pub t0: f64,
    pub tau: f64,
    pub seed: u64,
    pub derivative_mode: DerivativeMode,
    pub noise: NoiseSpec,
    /// Benchmark the data came from, if any (simulator metadata).
    pub plant: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    view: DesignView,
    meta: DataMeta,
    record: Option<SimulatorRecord>,
    warnings: Vec<String>,
}

impl DataSet {
    pub fn new(view: DesignView, meta: DataMeta, record: Option<SimulatorRecord>) -> Result<Self> {
        let t = view.samples();
        let m = view.o1.nrows();
        let shapes_ok = view.input.shape() == (1, t)
            && view.o2.shape() == (1, t)
            && view.o1_plus.shape() == (m, t)
            && view.o2_plus.as_ref().is_none_or(|p| p.shape() == (1, t))
            && view.bound.gamma_gram.shape() == (m, m)
            && record
                .as_ref()
                .is_none_or(|r| r.disturbance.shape() == (1, t) && r.noise.shape() == (m, t));
        if !shapes_ok || m == 0 {
            return Err(Error::Config(
                "data matrices have inconsistent shapes".into(),
            ));
        }
        Ok(Self {
            view,
            meta,
            record,
            warnings: Vec::new(),
        })
    }

    pub fn view(&self) -> &DesignView {
        &self.view
    }

    pub fn meta(&self) -> &DataMeta {
        &self.meta
    }

    pub fn set_plant_label(&mut self, label: impl Into<String>) {
        self.meta.plant = Some(label.into());
    }

    /// Disturbance samples and realized noise (oracle/diagnostic use only).
    pub fn simulator_record(&self) -> Option<&SimulatorRecord> {
        self.record.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn samples(&self) -> usize {
        self.view.samples()
    }
}

/// Runs the data-collection experiment with the configured input signal.
pub fn collect(
    model: &PlantModel,
    disturbance: &Disturbance,
    x0: &Vector,
    config: &ExperimentConfig,
) -> Result<DataSet> {
    let mut input = config.input.clone();
    collect_with_input(model, disturbance, x0, config, &mut input)
}

/// Runs the data-collection experiment with an arbitrary input source.
///
/// Samples are taken at `t0 + k tau`, `k = 0..T-1`; one extra state sample at
/// `t0 + T tau` feeds the last forward difference.
pub fn collect_with_input<I>(
    model: &PlantModel,
    disturbance: &Disturbance,
    x0: &Vector,
    config: &ExperimentConfig,
    input: &mut I,
) -> Result<DataSet>
where
    I: InputSource + ?Sized,
{
    let n = model.dim();
    let m = n - 1;
    let warnings = config.validate(n)?;
    let t = config.samples;
    let per_sample = ((config.tau / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = config.tau / per_sample as f64;
    let traj = integrate(
        model,
        x0,
        input,
        disturbance,
        Span::new(config.t0, t as f64 * config.tau, dt),
    )?;
    if traj.len() != t * per_sample + 1 {
        return Err(Error::Consistency(format!(
            "collection grid has {} points, expected {}",
            traj.len(),
            t * per_sample + 1
        )));
    }

    let states = Matrix::from_fn(n, t + 1, |i, k| traj.states[k * per_sample][i]);
    let o1 = states.view((0, 0), (m, t)).into_owned();
    let o2 = states.view((m, 0), (1, t)).into_owned();
    let input_row = Matrix::from_fn(1, t, |_, k| traj.inputs[k * per_sample]);
    let dist_row = Matrix::from_fn(1, t, |_, k| traj.disturbances[k * per_sample]);

    let mut true_upper = Matrix::zeros(m, t);
    let mut true_last = Matrix::zeros(1, t);
    for k in 0..t {
        let x = states.column(k).into_owned();
        let dx = model.derivative(&x, input_row[(0, k)], dist_row[(0, k)])?;
        true_upper.column_mut(k).copy_from(&dx.rows(0, m));
        true_last[(0, k)] = dx[m];
    }

    let bound = config.declared_bound(m)?;
    let (o1_plus, o2_plus) = match config.derivative_mode {
        DerivativeMode::ForwardDifference => {
            let fd = forward_difference(&states, config.tau)?;
            (
                fd.view((0, 0), (m, t)).into_owned(),
                fd.view((m, 0), (1, t)).into_owned(),
            )
        }
        DerivativeMode::ExactPlusNoise => {
            let noise = draw_noise(&config.noise, m, t, config.seed);
            (&true_upper + noise, true_last)
        }
    };
    let noise = &o1_plus - &true_upper;

    for (k, col) in noise.column_iter().enumerate() {
        let energy = col.norm_squared();
        if energy > bound.psi_bar * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Consistency(format!(
                "derivative noise at sample {k} has |psi|^2 = {energy:.6e}, above the declared bound {:.6e}",
                bound.psi_bar
            )));
        }
    }

    let view = DesignView {
        input: input_row,
        o1,
        o2,
        o1_plus,
        o2_plus: Some(o2_plus),
        bound,
    };
    let meta = DataMeta {
        t0: config.t0,
        tau: config.tau,
        seed: config.seed,
        derivative_mode: config.derivative_mode,
        noise: config.noise,
        plant: None,
    };
    let mut ds = DataSet::new(
        view,
        meta,
        Some(SimulatorRecord {
            disturbance: dist_row,
            noise,
        }),
    )?;
    ds.warnings = warnings;
    Ok(ds)
}

fn draw_noise(spec: &NoiseSpec, rows: usize, cols: usize, seed: u64) -> Matrix {
    match *spec {
        NoiseSpec::None => Matrix::zeros(rows, cols),
        NoiseSpec::Uniform { halfwidth: 0.0 } => Matrix::zeros(rows, cols),
        NoiseSpec::Uniform { halfwidth } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // column-major fill: sample k gets consecutive draws
            Matrix::from_iterator(
                rows,
                cols,
                (0..rows * cols).map(|_| rng.random_range(-halfwidth..=halfwidth)),
            )
        }
    }
}

/// Column-wise forward differences of `states` (`r x (T+1)`) -> `r x T`.
pub fn forward_difference(states: &Matrix, tau: f64) -> Result<Matrix> {
    if !(tau > 0.0) {
        return Err(Error::Usage(format!(
            "sampling time must be positive, got {tau}"
        )));
    }
    if states.ncols() < 2 {
        return Err(Error::Usage(
            "forward differences need at least two samples".into(),
        ));
    }
    let t = states.ncols() - 1;
    Ok(Matrix::from_fn(states.nrows(), t, |i, k| {
        (states[(i, k + 1)] - states[(i, k)]) / tau
    }))
}

/// Ranks of the sampled state and of the state stacked with the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub order: usize,
    /// `rank([O1; O2])`.
    pub state_rank: usize,
    /// `rank([O1; O2; I])`.
    pub stacked_rank: usize,
    /// `rank([O1; O2]) = n`, the condition the designer needs.
    pub ours: bool,
    /// `rank([O1; O2; I]) = n + 1`, the classical persistency-of-excitation condition.
    pub classical: bool,
}

pub fn rank_check(view: &DesignView) -> RankReport {
    let n = view.order();
    let states = view.states();
    let mut stacked = states.clone().insert_row(n, 0.0);
    stacked.row_mut(n).copy_from(&view.input.row(0));
    let state_rank = numerical_rank(&states);
    let stacked_rank = numerical_rank(&stacked);
    RankReport {
        order: n,
        state_rank,
        stacked_rank,
        ours: state_rank == n,
        classical: stacked_rank == n + 1,
    }
}

/// Bound for uniform per-component noise of the given halfwidth:
/// `psi_bar = n_r h^2`, `gamma_gram = psi_bar T I`.
pub fn noise_bound_uniform(halfwidth: f64, upper_dim: usize, samples: usize) -> Result<NoiseBound> {
    if !(halfwidth >= 0.0) || !halfwidth.is_finite() {
        return Err(Error::Usage(format!(
            "noise halfwidth must be nonnegative, got {halfwidth}"
        )));
    }
    if upper_dim == 0 || samples == 0 {
        return Err(Error::Usage(
            "dimension and sample count must be positive".into(),
        ));
    }
    let psi_bar = upper_dim as f64 * halfwidth * halfwidth;
    Ok(NoiseBound {
        gamma_gram: Matrix::identity(upper_dim, upper_dim) * (psi_bar * samples as f64),
        psi_bar,
    })
}

/// Eigenvalue tolerance for `gamma_gram - Psi Psi^T >= 0`.
pub const NOISE_ENERGY_TOL: f64 = 1e-10;

/// `true` iff `gamma_gram - Psi Psi^T` is positive semidefinite (up to
/// [`NOISE_ENERGY_TOL`]).
pub fn verify_noise_energy(noise: &Matrix, bound: &NoiseBound) -> bool {
    if noise.nrows() != bound.gamma_gram.nrows() {
        return false;
    }
    let gap = &bound.gamma_gram - noise * noise.transpose();
    min_eigenvalue(&gap) >= -NOISE_ENERGY_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{benchmark_plant, BenchmarkId};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn row(v: &[f64]) -> Matrix {
        Matrix::from_row_slice(1, v.len(), v)
    }

    fn config(tau: f64, samples: usize, input: InputSignal, noise: NoiseSpec) -> ExperimentConfig {
        ExperimentConfig {
            t0: 0.0,
            tau,
            samples,
            input,
            noise,
            derivative_mode: DerivativeMode::ForwardDifference,
            seed: 0,
            dt: 1e-4,
        }
    }

    #[test]
    fn pendulum_collection_shapes() {
        let (p, d) = benchmark_plant(BenchmarkId::B1);
        let cfg = config(
            0.1,
            3,
            InputSignal::Cosine {
                amplitude: 0.1,
                frequency: 1.0,
            },
            NoiseSpec::Uniform { halfwidth: 0.5 },
        );
        let ds = collect(&p, &d, &Vector::from_vec(vec![1.0, 1.0]), &cfg).unwrap();
        let v = ds.view();
        assert_eq!(v.o1.shape(), (1, 3));
        assert_eq!(v.o2.shape(), (1, 3));
        assert_eq!(v.o1_plus.shape(), (1, 3));
        assert_eq!(v.o1[(0, 0)], 1.0);
        assert_abs_diff_eq!(v.input[(0, 1)], 0.1 * 0.1f64.cos(), epsilon = 1e-15);
        assert!(ds.warnings().is_empty());
        assert!(verify_noise_energy(
            &ds.simulator_record().unwrap().noise,
            &v.bound
        ));
    }

    #[test]
    fn exact_mode_without_noise_matches_upper_dynamics() {
        let (p, d) = benchmark_plant(BenchmarkId::B3);
        let mut cfg = config(
            0.5,
            6,
            InputSignal::Sine {
                amplitude: -1.0,
                frequency: 1.0,
            },
            NoiseSpec::None,
        );
        cfg.derivative_mode = DerivativeMode::ExactPlusNoise;
        let x0 = Vector::from_vec(vec![7.0, -7.0, 3.5, -3.5]);
        let ds = collect(&p, &d, &x0, &cfg).unwrap();
        let v = ds.view();
        let model = p.upper() * &v.o1 + p.coupling() * &v.o2;
        assert!((&v.o1_plus - model).abs().max() < 1e-12);
        assert_eq!(ds.simulator_record().unwrap().noise.abs().max(), 0.0);
    }

    #[test]
    fn feedback_collection_makes_input_dependent() {
        let (p, d) = benchmark_plant(BenchmarkId::B2);
        let mut cfg = config(
            0.5,
            3,
            InputSignal::Feedback {
                gains: vec![-2.0, -1.0],
            },
            NoiseSpec::Uniform { halfwidth: 1.0 },
        );
        cfg.derivative_mode = DerivativeMode::ExactPlusNoise;
        let ds = collect(&p, &d, &Vector::from_vec(vec![2.0, 3.0]), &cfg).unwrap();
        let v = ds.view();
        let predicted = row(&[-2.0, -1.0]) * v.states();
        assert!((&v.input - predicted).abs().max() < 1e-14);
        let rank = rank_check(v);
        assert!(rank.ours);
        assert!(!rank.classical);
    }

    #[test]
    fn forward_difference_noise_above_declared_bound_is_rejected() {
        let (p, d) = benchmark_plant(BenchmarkId::B3);
        let cfg = config(
            0.5,
            15,
            InputSignal::Zero,
            NoiseSpec::Uniform { halfwidth: 0.1 },
        );
        let x0 = Vector::from_vec(vec![7.0, -7.0, 3.5, -3.5]);
        assert!(matches!(
            collect(&p, &d, &x0, &cfg),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn short_experiment_warns() {
        let (p, d) = benchmark_plant(BenchmarkId::B1);
        let cfg = config(
            0.1,
            2,
            InputSignal::Zero,
            NoiseSpec::Uniform { halfwidth: 1.0 },
        );
        let ds = collect(&p, &d, &Vector::from_vec(vec![1.0, 1.0]), &cfg).unwrap();
        assert_eq!(ds.warnings().len(), 1);
    }

    #[test]
    fn forward_difference_examples() {
        let tau = 0.1;
        let ramp = Matrix::from_fn(1, 5, |_, k| k as f64 * tau);
        let fd = forward_difference(&ramp, tau).unwrap();
        assert!(fd.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let square = Matrix::from_fn(1, 3, |_, k| (k as f64 * tau).powi(2));
        let fd = forward_difference(&square, tau).unwrap();
        assert_abs_diff_eq!(fd[(0, 0)], 0.1, epsilon = 1e-15);

        let constant = Matrix::from_element(2, 4, 3.0);
        assert!(forward_difference(&constant, 0.2)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));

        assert!(matches!(
            forward_difference(&Matrix::zeros(1, 1), tau),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn forward_difference_error_obeys_taylor_bound() {
        let (p, d) = benchmark_plant(BenchmarkId::B1);
        let tau = 0.1;
        let mut cfg = config(
            tau,
            10,
            InputSignal::Cosine {
                amplitude: 0.1,
                frequency: 1.0,
            },
            NoiseSpec::Uniform { halfwidth: 10.0 },
        );
        cfg.dt = 1e-4;
        let x0 = Vector::from_vec(vec![1.0, 1.0]);
        let ds = collect(&p, &d, &x0, &cfg).unwrap();
        // M = sup |x1''| = sup |x2'| over the window, from a dense run
        let mut input = cfg.input.clone();
        let dense = integrate(&p, &x0, &mut input, &d, Span::new(0.0, 10.0 * tau, 1e-4)).unwrap();
        let m = dense
            .states
            .iter()
            .zip(dense.times.iter().zip(&dense.inputs))
            .map(|(x, (&t, &u))| p.derivative(x, u, d.value(t)).unwrap()[1].abs())
            .fold(0.0, f64::max);
        let psi = &ds.simulator_record().unwrap().noise;
        let bound = m * tau / 2.0 * (1.0 + 1e-6);
        assert!(psi.iter().all(|v| v.abs() <= bound), "{psi} vs {bound}");
    }

    #[test]
    fn rank_check_on_reference_matrices() {
        let o1 = row(&[1.0, 1.0588, 1.0397]);
        let o2 = row(&[1.0, 0.1857, -0.5515]);
        let view = DesignView {
            input: row(&[0.1, 0.0995, 0.0980]),
            o1_plus: row(&[0.9366, -0.5117, -1.3232]),
            o1,
            o2,
            o2_plus: None,
            bound: noise_bound_uniform(0.5, 1, 3).unwrap(),
        };
        let r = rank_check(&view);
        assert!(r.ours);
        assert_eq!(r.state_rank, 2);

        let o1 = row(&[2.0, 3.3133, 4.0258]);
        let o2 = row(&[3.0, 2.1330, 0.6289]);
        let input = row(&[-2.0, -1.0]) * Matrix::from_rows(&[o1.row(0), o2.row(0)]);
        let view = DesignView {
            input,
            o1_plus: row(&[3.3242, 0.7827, -1.1786]),
            o1,
            o2,
            o2_plus: None,
            bound: noise_bound_uniform(1.0, 1, 3).unwrap(),
        };
        let r = rank_check(&view);
        assert!(r.ours && !r.classical);
        assert_eq!((r.state_rank, r.stacked_rank), (2, 2));

        let same = DesignView {
            input: row(&[1.0, 1.0, 1.0]),
            o1: row(&[1.0, 1.0, 1.0]),
            o2: row(&[2.0, 2.0, 2.0]),
            o1_plus: row(&[0.0, 0.0, 0.0]),
            o2_plus: None,
            bound: noise_bound_uniform(1.0, 1, 3).unwrap(),
        };
        assert!(!rank_check(&same).ours);
    }

    #[test]
    fn reference_noise_bounds() {
        assert_eq!(
            noise_bound_uniform(0.5, 1, 3).unwrap().gamma_gram[(0, 0)],
            0.75
        );
        assert_eq!(
            noise_bound_uniform(1.0, 1, 3).unwrap().gamma_gram[(0, 0)],
            3.0
        );
        let b3 = noise_bound_uniform(0.1, 3, 15).unwrap();
        assert_abs_diff_eq!(
            b3.gamma_gram,
            Matrix::identity(3, 3) * 0.45,
            epsilon = 1e-15
        );
        assert!(matches!(
            noise_bound_uniform(-1.0, 1, 3),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn noise_energy_examples() {
        let bound = noise_bound_uniform(0.5, 1, 3).unwrap();
        assert!(verify_noise_energy(&Matrix::zeros(1, 3), &bound));
        // equality case: one sample equal to gamma
        let tight = NoiseBound {
            gamma_gram: Matrix::from_element(1, 1, 4.0),
            psi_bar: 4.0,
        };
        assert!(verify_noise_energy(
            &Matrix::from_element(1, 1, 2.0),
            &tight
        ));
        assert!(!verify_noise_energy(
            &Matrix::from_element(1, 1, 2.001),
            &tight
        ));
    }

    #[test]
    fn uniform_noise_always_meets_its_bound() {
        let bound = noise_bound_uniform(0.5, 1, 3).unwrap();
        for seed in 0..1000 {
            let psi = draw_noise(&NoiseSpec::Uniform { halfwidth: 0.5 }, 1, 3, seed);
            assert!(verify_noise_energy(&psi, &bound), "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn rank_ours_ignores_input_samples(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
            let view = DesignView {
                input: row(&[a, b, c]),
                o1: row(&[1.0, 1.0588, 1.0397]),
                o2: row(&[1.0, 0.1857, -0.5515]),
                o1_plus: row(&[0.9366, -0.5117, -1.3232]),
                o2_plus: None,
                bound: noise_bound_uniform(0.5, 1, 3).unwrap(),
            };
            prop_assert!(rank_check(&view).ours);
        }

        #[test]
        fn noise_bound_formula(h in 0.0..3.0f64, m in 1usize..6, t in 1usize..40) {
            let b = noise_bound_uniform(h, m, t).unwrap();
            prop_assert_eq!(b.psi_bar, m as f64 * h * h);
            prop_assert_eq!(b.gamma_gram, Matrix::identity(m, m) * (b.psi_bar * t as f64));
        }
    }
}
