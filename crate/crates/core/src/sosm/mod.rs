//! Adaptive suboptimal second-order sliding-mode loop.
//!
//! Every state type is `Copy` and every step is a pure transition
//! `(state, measurement, dt) -> state`, so runs are replayable. All
//! continuous laws are advanced with explicit Euler at the loop step.

use serde::{Deserialize, Serialize};

use crate::design::SlidingVariable;
use crate::plant::PlantModel;
use crate::{Error, Result, Vector};

/// `sign` with `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// First-order Levant differentiator
///
/// ```text
/// s1_hat' = -mu0 |e|^(1/2) sign(e) + s2_hat
/// s2_hat' = -mu1 sign(e),          e = s1_hat - s1
/// ```
///
/// with `mu0 = 1.5 L^(1/2)`, `mu1 = 1.1 L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Differentiator {
    lipschitz: f64,
    mu0: f64,
    mu1: f64,
    pub s1_hat: f64,
    pub s2_hat: f64,
}

impl Differentiator {
    pub fn new(lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::Config(format!(
                "differentiator constant L must be positive, got {lipschitz}"
            )));
        }
        Ok(Self {
            lipschitz,
            mu0: 1.5 * lipschitz.sqrt(),
            mu1: 1.1 * lipschitz,
            s1_hat: 0.0,
            s2_hat: 0.0,
        })
    }

    pub fn with_state(mut self, s1_hat: f64, s2_hat: f64) -> Self {
        self.s1_hat = s1_hat;
        self.s2_hat = s2_hat;
        self
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    /// One Euler step against the measurement `s1`.
    #[must_use]
    pub fn step(&self, s1: f64, dt: f64) -> Self {
        let e = self.s1_hat - s1;
        let se = sign(e);
        Self {
            s1_hat: self.s1_hat + dt * (-self.mu0 * e.abs().sqrt() * se + self.s2_hat),
            s2_hat: self.s2_hat - dt * self.mu1 * se,
            ..*self
        }
    }
}

/// Returns `Some(s1)` when the sign of `s2_hat` strictly flips relative to
/// `prev_sign` (a previous sign of `0` never counts as a flip).
pub fn extremum_detect(prev_sign: f64, s2_hat: f64, s1: f64) -> Option<f64> {
    let now = sign(s2_hat);
    (prev_sign != 0.0 && now != 0.0 && now != prev_sign).then_some(s1)
}

/// Adaptive amplitude with its extremum bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveGain {
    pub upsilon: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Reference the adaptation compares `|s1|` against.
    pub theta: f64,
    /// Most recent extremal value of `s1`.
    pub s1_max: f64,
}

impl AdaptiveGain {
    /// `upsilon += (eta1 |s1| + eta2 |s2_hat|) dt` when `|s1| > |theta|`.
    #[must_use]
    pub fn step(&self, s1: f64, s2_hat: f64, dt: f64) -> Self {
        let mut next = *self;
        if s1.abs() > self.theta.abs() {
            next.upsilon += (self.eta1 * s1.abs() + self.eta2 * s2_hat.abs()) * dt;
        }
        next
    }

    /// Stores a newly detected extremum as both `s1_max` and `theta`.
    #[must_use]
    pub fn record_extremum(&self, s1: f64) -> Self {
        Self {
            theta: s1,
            s1_max: s1,
            ..*self
        }
    }
}

/// Controller parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SosmParams {
    /// Differentiator constant `L`.
    pub lipschitz: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Initial amplitude.
    pub gain0: f64,
    /// Time during which `nu` is held at zero while the differentiator settles.
    #[serde(default)]
    pub warmup: f64,
}

impl SosmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("L", self.lipschitz)?;
        positive("eta1", self.eta1)?;
        positive("eta2", self.eta2)?;
        if !(self.gain0 >= 0.0 && self.gain0.is_finite()) {
            return Err(Error::Config(format!(
                "initial gain must be nonnegative, got {}",
                self.gain0
            )));
        }
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return Err(Error::Config(format!(
                "warm-up must be nonnegative, got {}",
                self.warmup
            )));
        }
        Ok(())
    }
}

/// Full runtime state of the loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SosmState {
    pub differentiator: Differentiator,
    pub gain: AdaptiveGain,
    /// Integrated control `u`.
    pub u: f64,
    /// Last discontinuous control `nu`.
    pub nu: f64,
    /// Last nonzero sign of `s2_hat`.
    pub prev_sign: f64,
    pub elapsed: f64,
    warmup: f64,
    pub extrema: usize,
}

impl SosmState {
    /// Initial state for a loop whose first measurement is `s1_0`:
    /// `s1_hat = s1_0`, `s2_hat = 0`, `s1_max = s1_0`, `theta = |s1_0|`.
    pub fn new(params: &SosmParams, s1_0: f64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            differentiator: Differentiator::new(params.lipschitz)?.with_state(s1_0, 0.0),
            gain: AdaptiveGain {
                upsilon: params.gain0,
                eta1: params.eta1,
                eta2: params.eta2,
                theta: s1_0.abs(),
                s1_max: s1_0,
            },
            u: 0.0,
            nu: 0.0,
            prev_sign: 0.0,
            elapsed: 0.0,
            warmup: params.warmup,
            extrema: 0,
        })
    }

    /// Starts the integrated control at `u0` instead of zero.
    pub fn with_control(mut self, u0: f64) -> Self {
        self.u = u0;
        self
    }

    /// One loop update: differentiator, extremum test, adaptation, then
    /// `nu = -upsilon sign(s1 - s1_max / 2)` and `u += nu dt`.
    #[must_use]
    pub fn control_step(&self, s1: f64, dt: f64) -> (f64, f64, Self) {
        let mut next = *self;
        next.differentiator = self.differentiator.step(s1, dt);
        let s2_hat = next.differentiator.s2_hat;
        if let Some(v) = extremum_detect(self.prev_sign, s2_hat, s1) {
            next.gain = next.gain.record_extremum(v);
            next.extrema += 1;
        }
        if s2_hat != 0.0 {
            next.prev_sign = sign(s2_hat);
        }
        next.gain = next.gain.step(s1, s2_hat, dt);
        next.nu = if self.elapsed + 0.5 * dt < self.warmup {
            0.0
        } else {
            -next.gain.upsilon * sign(s1 - 0.5 * next.gain.s1_max)
        };
        next.u += next.nu * dt;
        next.elapsed += dt;
        (next.nu, next.u, next)
    }
}

/// Oracle values `(Delta, Lambda)` of the auxiliary system
/// `s1' = s2`, `s2' = Delta + Lambda nu` for `s1 = sigma(x)`.
///
/// Uses the hidden plant; never called by the controller.
pub fn aux_oracle_eval(
    plant: &PlantModel,
    sliding: &SlidingVariable,
    x: &Vector,
    u: f64,
    d: f64,
    d_dot: f64,
) -> Result<(f64, f64)> {
    let m = plant.dim() - 1;
    if sliding.coeff_r.len() != m {
        return Err(Error::Config(format!(
            "sliding variable has {} coefficients, plant needs {m}",
            sliding.coeff_r.len()
        )));
    }
    let dx = plant.derivative(x, u, d)?;
    let dxr = dx.rows(0, m);
    let c = &sliding.coeff_r;
    let delta = plant.gradient(x).dot(&dx)
        + d_dot
        + (c * plant.upper() * dxr)[0]
        + (c * plant.coupling())[0] * dx[m];
    Ok((delta, plant.input_gain()))
}
