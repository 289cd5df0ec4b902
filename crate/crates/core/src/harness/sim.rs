use crate::design::SlidingVariable;
use crate::plant::{Disturbance, PlantModel, Rk4, Span};
use crate::sosm::{SosmParams, SosmState};
use crate::{Error, Result, Vector};

/// States beyond this norm are reported as divergence.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Logged closed-loop histories, one entry per kept step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClosedLoopRun {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// `sigma(x)`, the measured `s1`.
    pub sigma: Vec<f64>,
    /// True `sigma'` from the plant (diagnostic only).
    pub s2: Vec<f64>,
    /// Differentiator estimate of `sigma'`.
    pub s2_hat: Vec<f64>,
    pub gain: Vec<f64>,
    pub nu: Vec<f64>,
    /// Control applied over the step starting at the logged time.
    pub u: Vec<f64>,
    pub disturbance: Vec<f64>,
    /// Integration step.
    pub dt: f64,
    /// Steps between logged entries.
    pub stride: usize,
    /// Extremum events seen by the controller.
    pub extrema: usize,
}

impl ClosedLoopRun {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&Vector> {
        self.states.last()
    }
}

/// Simulates the plant under the adaptive sliding-mode loop.
///
/// The controller samples `sigma(x)` at every integration step; its output is
/// held over the step (RK4 with zero-order hold). Starts from `u = 0`.
pub fn simulate_closed_loop(
    plant: &PlantModel,
    disturbance: &Disturbance,
    sliding: &SlidingVariable,
    params: &SosmParams,
    x0: &Vector,
    span: Span,
    stride: usize,
) -> Result<ClosedLoopRun> {
    span.validate()?;
    let n = plant.dim();
    if x0.len() != n || sliding.coeff_r.len() + 1 != n {
        return Err(Error::Config(format!(
            "closed loop needs x0 and a sliding variable of order {n}"
        )));
    }
    let stride = stride.max(1);
    let steps = span.steps();
    let row = sliding.full_row();
    let mut ctrl = SosmState::new(params, sliding.eval(x0))?;
    let mut x = x0.clone();
    let mut rk4 = Rk4::new(n);
    let mut deriv = Vector::zeros(n);
    let mut run = ClosedLoopRun {
        dt: span.dt,
        stride,
        ..Default::default()
    };
    let capacity = steps / stride + 2;
    for v in [
        &mut run.times,
        &mut run.sigma,
        &mut run.s2,
        &mut run.s2_hat,
        &mut run.gain,
        &mut run.nu,
        &mut run.u,
        &mut run.disturbance,
    ] {
        v.reserve(capacity);
    }
    run.states.reserve(capacity);

    for k in 0..=steps {
        let t = span.time(k);
        let s1 = sliding.eval(&x);
        let u = ctrl.u;
        let d = disturbance.value(t);
        let (nu, _, next) = ctrl.control_step(s1, span.dt);
        if k % stride == 0 || k == steps {
            plant.derivative_into(&x, u, d, &mut deriv);
            run.times.push(t);
            run.states.push(x.clone());
            run.sigma.push(s1);
            run.s2.push(row.dot(&deriv.transpose()));
            run.s2_hat.push(next.differentiator.s2_hat);
            run.gain.push(next.gain.upsilon);
            run.nu.push(nu);
            run.u.push(u);
            run.disturbance.push(d);
        }
        if k == steps {
            break;
        }
        ctrl = next;
        rk4.step(plant, &mut x, u, disturbance, t, span.dt);
        if !x.iter().all(|v| v.is_finite()) || x.norm() > DIVERGENCE_NORM {
            return Err(Error::Divergence {
                time: span.time(k + 1),
            });
        }
    }
    run.extrema = ctrl.extrema;
    Ok(run)
}

/// Simulates the plant under a static state feedback `u = gains . x`.
pub fn simulate_static_feedback(
    plant: &PlantModel,
    disturbance: &Disturbance,
    gains: &[f64],
    x0: &Vector,
    span: Span,
) -> Result<crate::plant::Trajectory> {
    let gains = gains.to_vec();
    let mut law = move |_: f64, x: &Vector| gains.iter().zip(x.iter()).map(|(g, v)| g * v).sum();
    crate::plant::integrate(plant, x0, &mut law, disturbance, span)
}
