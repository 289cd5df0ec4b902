use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sim::ClosedLoopRun;
use crate::design::SlidingVariable;
use crate::plant::{PlantModel, StateBox};
use crate::sosm::aux_oracle_eval;
use crate::{Error, Result, Vector};

/// Summary of a closed-loop run; recomputable from the histories.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// First logged time after which `|sigma|` stays below the tolerance.
    pub reaching_time: Option<f64>,
    pub sigma_tol: f64,
    pub initial_sigma: f64,
    pub final_state_norm: f64,
    pub final_gain: f64,
    /// `max |sigma|` from the reaching time on.
    pub max_sigma_after_reaching: Option<f64>,
    pub gain_monotone: bool,
    /// Largest observed `|u(t2) - u(t1)| / (t2 - t1)`.
    pub max_input_rate: f64,
}

impl Metrics {
    /// `u` is Lipschitz with constant at most the final gain.
    pub fn input_lipschitz_ok(&self) -> bool {
        self.max_input_rate <= self.final_gain * (1.0 + 1e-9) + 1e-12
    }
}

/// `inf { t : |sigma(s)| < tol for all logged s >= t }`, scanning backwards.
pub fn reaching_time(times: &[f64], sigma: &[f64], tol: f64) -> Option<f64> {
    let last_bad = sigma.iter().rposition(|s| !(s.abs() < tol));
    match last_bad {
        None => times.first().copied(),
        Some(i) => times.get(i + 1).copied(),
    }
}

pub fn metrics(run: &ClosedLoopRun, sigma_tol: f64) -> Metrics {
    let reaching = reaching_time(&run.times, &run.sigma, sigma_tol);
    let max_after = reaching.map(|tr| {
        run.times
            .iter()
            .zip(&run.sigma)
            .filter(|(t, _)| **t >= tr)
            .fold(0.0f64, |m, (_, s)| m.max(s.abs()))
    });
    let max_input_rate = run
        .times
        .windows(2)
        .zip(run.u.windows(2))
        .map(|(t, u)| (u[1] - u[0]).abs() / (t[1] - t[0]))
        .fold(0.0, f64::max);
    Metrics {
        reaching_time: reaching,
        sigma_tol,
        initial_sigma: run.sigma.first().copied().unwrap_or(0.0),
        final_state_norm: run.final_state().map_or(f64::NAN, |x| x.norm()),
        final_gain: run.gain.last().copied().unwrap_or(f64::NAN),
        max_sigma_after_reaching: max_after,
        gain_monotone: run.gain.windows(2).all(|w| w[1] >= w[0]),
        max_input_rate,
    }
}

/// Sampling domain for the auxiliary-system bound estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundDomain {
    pub state_box: StateBox,
    /// `|u| <= input_max`.
    pub input_max: f64,
    /// `|d| <= disturbance_max`.
    pub disturbance_max: f64,
    /// `|d'| <= rate_max`.
    pub rate_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// Monte-Carlo estimate of `sup |Delta|`.
    pub delta_bar: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Constant amplitude that would suffice without adaptation.
    pub threshold: f64,
    pub samples: usize,
    /// Final adaptive gain of a run, for comparison.
    pub final_gain: Option<f64>,
}

/// `max { Delta / Lmin, 4 Delta / (3 Lmin - Lmax) }`; infinite when
/// `3 Lmin <= Lmax`.
pub fn gain_threshold(delta_bar: f64, lambda_min: f64, lambda_max: f64) -> f64 {
    if delta_bar == 0.0 {
        return 0.0;
    }
    let den = 3.0 * lambda_min - lambda_max;
    if lambda_min <= 0.0 || den <= 0.0 {
        return f64::INFINITY;
    }
    (delta_bar / lambda_min).max(4.0 * delta_bar / den)
}

/// Bound estimates on a single domain.
pub fn bound_report(
    plant: &PlantModel,
    sliding: &SlidingVariable,
    domain: &BoundDomain,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    nested_bound_reports(plant, sliding, domain, &[1.0], samples, seed).map(|mut v| v.remove(0))
}

/// Bound estimates on boxes scaled by increasing `factors`.
///
/// The same unit samples are mapped into every box and the running maximum
/// is reported, so the estimates are non-decreasing in the box size.
pub fn nested_bound_reports(
    plant: &PlantModel,
    sliding: &SlidingVariable,
    domain: &BoundDomain,
    factors: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    if factors.windows(2).any(|w| w[1] < w[0]) || factors.iter().any(|f| !(*f >= 0.0)) {
        return Err(Error::Config(
            "box factors must be nonnegative and increasing".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    let n = plant.dim();
    if domain.state_box.dim() != n {
        return Err(Error::Config(format!(
            "box has dimension {} for a plant of order {n}",
            domain.state_box.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // unit draws in [0, 1]
    let draws: Vec<(Vector, [f64; 3])> = (0..samples)
        .map(|_| {
            let z = Vector::from_fn(n, |_, _| rng.random::<f64>());
            let w = [
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ];
            (z, w)
        })
        .collect();
    let b = plant.input_gain();
    let (lo, hi) = (domain.state_box.lower(), domain.state_box.upper());
    let centre = (lo + hi) * 0.5;
    let mut running = 0.0f64;
    let mut out = Vec::with_capacity(factors.len());
    for &factor in factors {
        for (z, w) in &draws {
            let x = Vector::from_fn(n, |i, _| {
                centre[i] + factor * (lo[i] - centre[i] + z[i] * (hi[i] - lo[i]))
            });
            let u = domain.input_max * (2.0 * w[0] - 1.0);
            let d = domain.disturbance_max * (2.0 * w[1] - 1.0);
            let dd = domain.rate_max * (2.0 * w[2] - 1.0);
            let (delta, _) = aux_oracle_eval(plant, sliding, &x, u, d, dd)?;
            running = running.max(delta.abs());
        }
        out.push(BoundReport {
            delta_bar: running,
            lambda_min: b,
            lambda_max: b,
            threshold: gain_threshold(running, b, b),
            samples,
            final_gain: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{benchmark_plant, BenchmarkId};
    use crate::RowVector;
    use approx::assert_abs_diff_eq;

    fn run_with_sigma(times: Vec<f64>, sigma: Vec<f64>) -> ClosedLoopRun {
        let k = times.len();
        ClosedLoopRun {
            states: vec![Vector::zeros(2); k],
            s2: vec![0.0; k],
            s2_hat: vec![0.0; k],
            gain: vec![1.0; k],
            nu: vec![0.0; k],
            u: vec![0.0; k],
            disturbance: vec![0.0; k],
            times,
            sigma,
            dt: 1e-3,
            stride: 1,
            extrema: 0,
        }
    }

    #[test]
    fn zero_sigma_reaches_at_start() {
        let times: Vec<f64> = (0..100).map(|k| 0.5 + k as f64 * 0.01).collect();
        let m = metrics(&run_with_sigma(times, vec![0.0; 100]), 1e-2);
        assert_eq!(m.reaching_time, Some(0.5));
        assert_eq!(m.max_sigma_after_reaching, Some(0.0));
    }

    #[test]
    fn exponential_reaches_at_crossing() {
        let dt = 1e-3;
        let times: Vec<f64> = (0..=10_000).map(|k| k as f64 * dt).collect();
        let sigma = times.iter().map(|t| (-t).exp()).collect();
        let m = metrics(&run_with_sigma(times, sigma), (-5f64).exp());
        assert_abs_diff_eq!(m.reaching_time.unwrap(), 5.0, epsilon = dt + 1e-12);
    }

    #[test]
    fn oscillation_never_reaches() {
        let times: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
        let sigma = times.iter().map(|t| 0.5 + 0.1 * t.sin()).collect();
        let m = metrics(&run_with_sigma(times, sigma), 1e-2);
        assert_eq!(m.reaching_time, None);
        assert_eq!(m.max_sigma_after_reaching, None);
    }

    #[test]
    fn input_rate_against_gain() {
        let mut run = run_with_sigma(vec![0.0, 0.1, 0.2], vec![0.0; 3]);
        run.u = vec![0.0, 0.1, 0.25];
        run.gain = vec![1.0, 1.0, 1.5];
        let m = metrics(&run, 1e-2);
        assert_abs_diff_eq!(m.max_input_rate, 1.5, epsilon = 1e-12);
        assert!(m.input_lipschitz_ok() && m.gain_monotone);
        run.gain = vec![1.0, 1.0, 1.4];
        assert!(!metrics(&run, 1e-2).input_lipschitz_ok());
    }

    #[test]
    fn pendulum_threshold_is_a_fifth_of_delta() {
        assert_abs_diff_eq!(gain_threshold(7.0, 10.0, 10.0), 7.0 / 5.0, epsilon = 1e-15);
        assert_eq!(gain_threshold(0.0, 10.0, 10.0), 0.0);
        assert_eq!(gain_threshold(1.0, 1.0, 3.0), f64::INFINITY);
    }

    fn b1_setup() -> (PlantModel, SlidingVariable) {
        let (plant, _) = benchmark_plant(BenchmarkId::B1);
        (
            plant,
            SlidingVariable {
                coeff_r: RowVector::from_element(1, 1.0946),
            },
        )
    }

    #[test]
    fn zero_box_has_zero_bound() {
        let (plant, _) = benchmark_plant(BenchmarkId::B2);
        let sv = SlidingVariable {
            coeff_r: RowVector::from_element(1, 1.3),
        };
        let domain = BoundDomain {
            state_box: StateBox::symmetric(2, 0.0).unwrap(),
            input_max: 0.0,
            disturbance_max: 0.0,
            rate_max: 0.0,
        };
        let r = bound_report(&plant, &sv, &domain, 100, 0).unwrap();
        assert_eq!(r.delta_bar, 0.0);
        assert_eq!(r.threshold, 0.0);
        assert_eq!((r.lambda_min, r.lambda_max), (1.0, 1.0));
    }

    #[test]
    fn pendulum_bounds_grow_with_the_box() {
        let (plant, sv) = b1_setup();
        let domain = BoundDomain {
            state_box: StateBox::symmetric(2, 5.0).unwrap(),
            input_max: 5.0,
            disturbance_max: 1.2,
            rate_max: 1.6,
        };
        let r = bound_report(&plant, &sv, &domain, 2000, 3).unwrap();
        assert!(r.delta_bar.is_finite() && r.delta_bar > 0.0);
        assert_eq!((r.lambda_min, r.lambda_max), (10.0, 10.0));
        assert_abs_diff_eq!(r.threshold, r.delta_bar / 5.0, epsilon = 1e-12);
        let sweep =
            nested_bound_reports(&plant, &sv, &domain, &[0.1, 0.5, 1.0, 2.0, 4.0], 500, 3).unwrap();
        for w in sweep.windows(2) {
            assert!(w[1].delta_bar >= w[0].delta_bar);
        }
        assert!(nested_bound_reports(&plant, &sv, &domain, &[2.0, 1.0], 10, 0).is_err());
    }
}
