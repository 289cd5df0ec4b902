use super::{Disturbance, InputSource, PlantModel};
use crate::{Error, Result, Vector};

/// Uniform simulation grid `start, start + dt, ..., start + steps * dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Span {
    pub start: f64,
    pub horizon: f64,
    pub dt: f64,
}

impl Span {
    pub fn new(start: f64, horizon: f64, dt: f64) -> Self {
        Self { start, horizon, dt }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt * (1.0 - 1e-9)) {
            return Err(Error::Config(format!(
                "horizon {} shorter than one step {}",
                self.horizon, self.dt
            )));
        }
        if !self.start.is_finite() {
            return Err(Error::Config("start time must be finite".into()));
        }
        Ok(())
    }

    /// Number of integration steps, `round(horizon / dt)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }
}

/// Sampled simulation output; one entry per grid point in every field.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// Input held over `[t_k, t_k + dt)`; at the final point it is the value
    /// the input source would apply next.
    pub inputs: Vec<f64>,
    pub disturbances: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&Vector> {
        self.states.last()
    }

    /// `sup_k |x(t_k)|`.
    pub fn max_norm(&self) -> f64 {
        self.states.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Reusable RK4 stage buffers.
pub(crate) struct Rk4 {
    k1: Vector,
    k2: Vector,
    k3: Vector,
    k4: Vector,
    stage: Vector,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            k1: Vector::zeros(n),
            k2: Vector::zeros(n),
            k3: Vector::zeros(n),
            k4: Vector::zeros(n),
            stage: Vector::zeros(n),
        }
    }

    /// Advances `x` from `t` to `t + dt` with `u` held and `d` sampled at the
    /// stage times.
    pub(crate) fn step(
        &mut self,
        model: &PlantModel,
        x: &mut Vector,
        u: f64,
        disturbance: &Disturbance,
        t: f64,
        dt: f64,
    ) {
        let Self {
            k1,
            k2,
            k3,
            k4,
            stage,
        } = self;
        let dh = disturbance.value(t + 0.5 * dt);
        model.derivative_into(x, u, disturbance.value(t), k1);
        stage.copy_from(x);
        stage.axpy(0.5 * dt, k1, 1.0);
        model.derivative_into(stage, u, dh, k2);
        stage.copy_from(x);
        stage.axpy(0.5 * dt, k2, 1.0);
        model.derivative_into(stage, u, dh, k3);
        stage.copy_from(x);
        stage.axpy(dt, k3, 1.0);
        model.derivative_into(stage, u, disturbance.value(t + dt), k4);
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// Fixed-step classical RK4 with the input held constant over each step.
///
/// The disturbance is evaluated at the RK stage times. Fails with
/// [`Error::Divergence`] at the first grid time whose state is not finite.
pub fn integrate<I>(
    model: &PlantModel,
    x0: &Vector,
    input: &mut I,
    disturbance: &Disturbance,
    span: Span,
) -> Result<Trajectory>
where
    I: InputSource + ?Sized,
{
    span.validate()?;
    let n = model.dim();
    if x0.len() != n {
        return Err(Error::Config(format!(
            "initial state has length {}, plant order is {n}",
            x0.len()
        )));
    }
    let steps = span.steps();
    let dt = span.dt;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        disturbances: Vec::with_capacity(steps + 1),
    };

    let mut x = x0.clone();
    let mut rk4 = Rk4::new(n);
    for k in 0..=steps {
        let t = span.time(k);
        let u = input.input(t, &x);
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.inputs.push(u);
        traj.disturbances.push(disturbance.value(t));
        if k == steps {
            break;
        }
        rk4.step(model, &mut x, u, disturbance, t, dt);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence {
                time: span.time(k + 1),
            });
        }
    }
    Ok(traj)
}
