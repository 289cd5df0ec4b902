//! The true (hidden) perturbed strict-feedback plant
//!
//! ```text
//! dx_r/dt = A x_r + a x_n
//! dx_n/dt = f(x) + b u + d(t)
//! ```
//!
//! together with matched disturbance signals, input sources and a fixed-step
//! RK4 integrator. The designer never reads a [`PlantModel`]; it is used by
//! the simulator and by diagnostic oracles only.

mod benchmarks;
mod growth;
mod integrate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result, RowVector, Vector};

pub use benchmarks::{benchmark_plant, BenchmarkId};
pub use growth::{growth_diagnostic, EnvelopeFit, GrowthReport, StateBox};
pub(crate) use integrate::Rk4;
pub use integrate::{integrate, Span, Trajectory};

/// Scalar state function `f: R^n -> R`.
pub type ScalarField = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
/// Gradient of a [`ScalarField`].
pub type GradientField = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
/// Scalar signal of time.
pub type TimeSignal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Central-difference step used wherever an analytic derivative is missing.
pub const FD_STEP: f64 = 1e-6;

const ORIGIN_TOL: f64 = 1e-12;

/// Optional growth constants `|f(x)| <= b1 + b2 |x|`, `|df/dx| <= b3 + b4 |x|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub value_constant: f64,
    pub value_slope: f64,
    pub gradient_constant: f64,
    pub gradient_slope: f64,
}

/// Strict-feedback plant `(A, a, b, f)` of order `n >= 2`.
#[derive(Clone)]
pub struct PlantModel {
    upper: Matrix,
    coupling: Vector,
    input_gain: f64,
    nonlinearity: ScalarField,
    gradient: Option<GradientField>,
    growth: Option<GrowthBounds>,
}

impl fmt::Debug for PlantModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantModel")
            .field("n", &self.dim())
            .field("upper", &self.upper)
            .field("coupling", &self.coupling)
            .field("input_gain", &self.input_gain)
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

impl PlantModel {
    /// Builds a plant from `A` ((n-1)x(n-1)), `a` (n-1), `b > 0` and `f`.
    ///
    /// Rejects `a = 0`, `b <= 0` and `|f(0)| > 1e-12`.
    pub fn new<F>(upper: Matrix, coupling: Vector, input_gain: f64, f: F) -> Result<Self>
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        let m = coupling.len();
        if m == 0 {
            return Err(Error::Config("state dimension must be at least 2".into()));
        }
        if upper.shape() != (m, m) {
            return Err(Error::Config(format!(
                "upper matrix is {}x{}, expected {m}x{m}",
                upper.nrows(),
                upper.ncols()
            )));
        }
        if coupling.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("coupling vector a must be nonzero".into()));
        }
        if !(input_gain > 0.0 && input_gain.is_finite()) {
            return Err(Error::Config(format!(
                "input gain must be positive, got {input_gain}"
            )));
        }
        let f0 = f(&Vector::zeros(m + 1));
        if !(f0.abs() <= ORIGIN_TOL) {
            return Err(Error::Config(format!("f(0) must vanish, got {f0}")));
        }
        Ok(Self {
            upper,
            coupling,
            input_gain,
            nonlinearity: Arc::new(f),
            gradient: None,
            growth: None,
        })
    }

    /// Attaches an analytic gradient of `f`.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_growth(mut self, growth: GrowthBounds) -> Self {
        self.growth = Some(growth);
        self
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.coupling.len() + 1
    }

    pub fn upper(&self) -> &Matrix {
        &self.upper
    }

    pub fn coupling(&self) -> &Vector {
        &self.coupling
    }

    pub fn input_gain(&self) -> f64 {
        self.input_gain
    }

    pub fn growth(&self) -> Option<GrowthBounds> {
        self.growth
    }

    pub fn f(&self, x: &Vector) -> f64 {
        (self.nonlinearity)(x)
    }

    /// Gradient of `f`: analytic when supplied, central differences otherwise.
    pub fn gradient(&self, x: &Vector) -> Vector {
        if let Some(g) = &self.gradient {
            return g(x);
        }
        let mut probe = x.clone();
        Vector::from_fn(x.len(), |i, _| {
            let xi = x[i];
            probe[i] = xi + FD_STEP;
            let hi = self.f(&probe);
            probe[i] = xi - FD_STEP;
            let lo = self.f(&probe);
            probe[i] = xi;
            (hi - lo) / (2.0 * FD_STEP)
        })
    }

    /// `S = [a A]`, the unknown upper-dynamics matrix acting on `[x_n; x_r]`.
    pub fn upper_system(&self) -> Matrix {
        let m = self.coupling.len();
        let mut s = Matrix::zeros(m, m + 1);
        s.column_mut(0).copy_from(&self.coupling);
        s.view_mut((0, 1), (m, m)).copy_from(&self.upper);
        s
    }

    /// Closed-loop upper matrix `A + a (K P)` under `x_n = (K P) x_r`.
    pub fn closed_loop_upper(&self, kp: &RowVector) -> Matrix {
        &self.upper + &self.coupling * kp
    }

    /// Right-hand side `[A x_r + a x_n ; f(x) + b u + d]`.
    pub fn derivative(&self, x: &Vector, u: f64, d: f64) -> Result<Vector> {
        if x.len() != self.dim() {
            return Err(Error::Config(format!(
                "state has length {}, plant order is {}",
                x.len(),
                self.dim()
            )));
        }
        let mut out = Vector::zeros(self.dim());
        self.derivative_into(x, u, d, &mut out);
        Ok(out)
    }

    /// Unchecked right-hand side written into `out`.
    pub(crate) fn derivative_into(&self, x: &Vector, u: f64, d: f64, out: &mut Vector) {
        let m = self.coupling.len();
        let xn = x[m];
        for i in 0..m {
            let mut acc = self.coupling[i] * xn;
            for j in 0..m {
                acc += self.upper[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out[m] = self.f(x) + self.input_gain * u + d;
    }

    /// Upper-dynamics derivative `A x_r + a x_n` only.
    pub fn upper_derivative(&self, x: &Vector) -> Vector {
        let m = self.coupling.len();
        let xr = x.rows(0, m);
        &self.upper * xr + &self.coupling * x[m]
    }
}

/// Known (simulator-side) bounds `|d| < value`, `|d'| < rate`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceBounds {
    pub value: f64,
    pub rate: f64,
}

/// Matched disturbance `d(t)`.
#[derive(Clone)]
pub struct Disturbance {
    signal: TimeSignal,
    rate: Option<TimeSignal>,
    bounds: Option<DisturbanceBounds>,
}

impl fmt::Debug for Disturbance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Disturbance")
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

/// Outcome of sampling a disturbance against its declared bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub max_value: f64,
    pub max_rate: f64,
    pub within_bounds: bool,
}

impl Disturbance {
    pub fn new<F>(signal: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            signal: Arc::new(signal),
            rate: None,
            bounds: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0)
            .with_rate(|_| 0.0)
            .with_bounds(DisturbanceBounds {
                value: f64::MIN_POSITIVE,
                rate: f64::MIN_POSITIVE,
            })
    }

    /// Attaches the analytic time derivative.
    pub fn with_rate<F>(mut self, rate: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.rate = Some(Arc::new(rate));
        self
    }

    pub fn with_bounds(mut self, bounds: DisturbanceBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn bounds(&self) -> Option<DisturbanceBounds> {
        self.bounds
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.signal)(t)
    }

    /// `d'(t)`, analytic or by central differences.
    pub fn rate(&self, t: f64) -> f64 {
        match &self.rate {
            Some(r) => r(t),
            None => (self.value(t + FD_STEP) - self.value(t - FD_STEP)) / (2.0 * FD_STEP),
        }
    }

    /// Samples `|d|` and `|d'|` on `[start, end]` and compares against the
    /// declared bounds (strict inequality). Without bounds the check fails.
    pub fn check_bounds(&self, start: f64, end: f64, samples: usize) -> BoundCheck {
        let samples = samples.max(2);
        let mut max_value = 0.0_f64;
        let mut max_rate = 0.0_f64;
        for k in 0..samples {
            let t = start + (end - start) * k as f64 / (samples - 1) as f64;
            max_value = max_value.max(self.value(t).abs());
            max_rate = max_rate.max(self.rate(t).abs());
        }
        let within_bounds = self
            .bounds
            .is_some_and(|b| max_value < b.value && max_rate < b.rate);
        BoundCheck {
            max_value,
            max_rate,
            within_bounds,
        }
    }
}

/// Source of the plant input, evaluated at the start of each integration step.
pub trait InputSource {
    fn input(&mut self, t: f64, x: &Vector) -> f64;
}

impl<F> InputSource for F
where
    F: FnMut(f64, &Vector) -> f64,
{
    fn input(&mut self, t: f64, x: &Vector) -> f64 {
        self(t, x)
    }
}

/// Serializable input signals for experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSignal {
    Zero,
    /// `amplitude * cos(frequency * t)`
    Cosine {
        amplitude: f64,
        frequency: f64,
    },
    /// `amplitude * sin(frequency * t)`
    Sine {
        amplitude: f64,
        frequency: f64,
    },
    /// `gains . x`
    Feedback {
        gains: Vec<f64>,
    },
}

impl InputSignal {
    pub fn eval(&self, t: f64, x: &Vector) -> f64 {
        match self {
            InputSignal::Zero => 0.0,
            InputSignal::Cosine {
                amplitude,
                frequency,
            } => amplitude * (frequency * t).cos(),
            InputSignal::Sine {
                amplitude,
                frequency,
            } => amplitude * (frequency * t).sin(),
            InputSignal::Feedback { gains } => gains.iter().zip(x.iter()).map(|(g, v)| g * v).sum(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            InputSignal::Feedback { gains } if gains.len() != n => Err(Error::Config(format!(
                "feedback input has {} gains for a plant of order {n}",
                gains.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl InputSource for InputSignal {
    fn input(&mut self, t: f64, x: &Vector) -> f64 {
        self.eval(t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pendulum_derivative_values() {
        let (p, _) = benchmark_plant(BenchmarkId::B1);
        let zero = p.derivative(&Vector::zeros(2), 0.0, 0.0).unwrap();
        assert_eq!(zero, Vector::zeros(2));
        let v = p
            .derivative(&Vector::from_vec(vec![1.0, 1.0]), 0.0, 0.0)
            .unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], -10.0 * 1f64.sin() - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], -9.4147, epsilon = 1e-4);
    }

    #[test]
    fn linear_derivative_values() {
        let (p, _) = benchmark_plant(BenchmarkId::B2);
        let v = p
            .derivative(&Vector::from_vec(vec![2.0, 3.0]), 0.0, 0.0)
            .unwrap();
        assert_eq!(v, Vector::from_vec(vec![3.0, 5.0]));
    }

    #[test]
    fn derivative_rejects_wrong_dimension() {
        let (p, _) = benchmark_plant(BenchmarkId::B2);
        assert!(matches!(
            p.derivative(&Vector::zeros(3), 0.0, 0.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn construction_invariants() {
        let a = Matrix::zeros(1, 1);
        let ok = |x: &Vector| x[0];
        assert!(PlantModel::new(a.clone(), Vector::zeros(1), 1.0, ok).is_err());
        assert!(PlantModel::new(a.clone(), Vector::from_element(1, 1.0), 0.0, ok).is_err());
        assert!(PlantModel::new(
            a.clone(),
            Vector::from_element(1, 1.0),
            1.0,
            |_: &Vector| 1.0
        )
        .is_err());
        assert!(
            PlantModel::new(Matrix::zeros(2, 2), Vector::from_element(1, 1.0), 1.0, ok).is_err()
        );
        assert!(PlantModel::new(a, Vector::from_element(1, 1.0), 1.0, ok).is_ok());
    }

    #[test]
    fn numeric_gradient_matches_analytic() {
        for id in BenchmarkId::ALL {
            let (p, _) = benchmark_plant(id);
            let numeric = PlantModel {
                gradient: None,
                ..p.clone()
            };
            let x = Vector::from_fn(p.dim(), |i, _| 0.3 * (i as f64 + 1.0) - 0.5);
            assert!(
                (p.gradient(&x) - numeric.gradient(&x)).norm() < 1e-7,
                "{id:?}"
            );
        }
    }

    #[test]
    fn b2_linearization_has_golden_ratio_eigenvalue() {
        let (p, _) = benchmark_plant(BenchmarkId::B2);
        // full Jacobian [[A, a], [df/dx]]
        let jac = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        let g = p.gradient(&Vector::zeros(2));
        assert_eq!(jac[(1, 0)], g[0]);
        assert_eq!(jac[(1, 1)], g[1]);
        let ev = jac.complex_eigenvalues();
        let max_re = ev.iter().map(|c| c.re).fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(max_re, (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn disturbance_bounds_hold_for_benchmarks() {
        for id in BenchmarkId::ALL {
            let (_, d) = benchmark_plant(id);
            let check = d.check_bounds(0.0, 50.0, 50_001);
            assert!(check.within_bounds, "{id:?}: {check:?}");
        }
    }

    #[test]
    fn disturbance_without_bounds_fails_check() {
        let d = Disturbance::new(|t| t.sin());
        assert!(!d.check_bounds(0.0, 1.0, 10).within_bounds);
        assert_abs_diff_eq!(d.rate(0.0), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn feedback_signal_validation() {
        let sig = InputSignal::Feedback {
            gains: vec![-2.0, -1.0],
        };
        assert!(sig.validate(2).is_ok());
        assert!(sig.validate(3).is_err());
        assert_eq!(sig.eval(0.0, &Vector::from_vec(vec![2.0, 3.0])), -7.0);
    }

    proptest! {
        #[test]
        fn derivative_is_affine_in_input_and_disturbance(
            x1 in -10.0..10.0f64, x2 in -10.0..10.0f64,
            u1 in -5.0..5.0f64, u2 in -5.0..5.0f64, d in -5.0..5.0f64,
        ) {
            let (p, _) = benchmark_plant(BenchmarkId::B1);
            let x = Vector::from_vec(vec![x1, x2]);
            let lhs = p.derivative(&x, u1 + u2, d).unwrap() - p.derivative(&x, u1, d).unwrap();
            let rhs = p.derivative(&x, u2, 0.0).unwrap() - p.derivative(&x, 0.0, 0.0).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10);
        }
    }
}
