//! Numeric check of the linear growth conditions on `f` and its gradient.
//!
//! The constants are unknown to the designer; this is an informational
//! diagnostic with no pass/fail threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PlantModel;
use crate::{Error, Result, Vector};

/// Axis-aligned box `lower <= x <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBox {
    lower: Vector,
    upper: Vector,
}

impl StateBox {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Config(
                "box bounds must have equal nonzero length".into(),
            ));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::Config("box is empty".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[-radius, radius]^n`.
    pub fn symmetric(n: usize, radius: f64) -> Result<Self> {
        Self::new(
            Vector::from_element(n, -radius),
            Vector::from_element(n, radius),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    /// Box scaled by `factor` about its center.
    pub fn scaled(&self, factor: f64) -> Self {
        let center = (&self.lower + &self.upper) * 0.5;
        let half = (&self.upper - &self.lower) * (0.5 * factor);
        Self {
            lower: &center - &half,
            upper: &center + &half,
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Uniform sample.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vector {
        Vector::from_fn(self.dim(), |i, _| {
            let (l, u) = (self.lower[i], self.upper[i]);
            if l == u {
                l
            } else {
                rng.random_range(l..=u)
            }
        })
    }
}

/// Envelope `constant + slope * |x|`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnvelopeFit {
    pub constant: f64,
    pub slope: f64,
}

impl EnvelopeFit {
    pub fn at(&self, radius: f64) -> f64 {
        self.constant + self.slope * radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    /// `(beta1, beta2)` for `|f(x)| <= beta1 + beta2 |x|`.
    pub value: EnvelopeFit,
    /// `(beta3, beta4)` for `|df/dx| <= beta3 + beta4 |x|`.
    pub gradient: EnvelopeFit,
    /// Same fits on the box shrunk by half about its center.
    pub half_box_value: EnvelopeFit,
    pub half_box_gradient: EnvelopeFit,
    /// Mean sampled `|x|`, the radius at which each fit is tightest.
    pub mean_radius: f64,
    pub degrades_with_radius: bool,
    pub notes: Vec<String>,
}

impl GrowthReport {
    pub fn betas(&self) -> [f64; 4] {
        [
            self.value.constant,
            self.value.slope,
            self.gradient.constant,
            self.gradient.slope,
        ]
    }
}

/// Slope growth (full box vs. half box) above which the linear fit is flagged.
const DEGRADATION_RATIO: f64 = 1.5;

/// Fits linear upper envelopes to `|f|` and `|df/dx|` (central differences,
/// step 1e-6) over `samples` uniform points of `bx`.
///
/// Each fit is the nonnegative pair `(c, s)` minimizing the mean gap
/// `c + s * mean|x|` subject to `c + s |x_i| >= y_i` at every sample.
pub fn growth_diagnostic(
    model: &PlantModel,
    bx: &StateBox,
    samples: usize,
    seed: u64,
) -> Result<GrowthReport> {
    if samples < 100 {
        return Err(Error::Usage(format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    if bx.dim() != model.dim() {
        return Err(Error::Config(format!(
            "box dimension {} does not match plant order {}",
            bx.dim(),
            model.dim()
        )));
    }
    let (value, gradient, mean_radius) = fit_box(model, bx, samples, seed)?;
    let (half_box_value, half_box_gradient, _) = fit_box(model, &bx.scaled(0.5), samples, seed)?;

    let grows = |full: &EnvelopeFit, half: &EnvelopeFit| {
        full.slope > DEGRADATION_RATIO * half.slope + 1e-6 * (1.0 + full.constant)
    };
    let mut notes = Vec::new();
    let degrades_with_radius =
        grows(&value, &half_box_value) || grows(&gradient, &half_box_gradient);
    if degrades_with_radius {
        notes.push("linear-growth fit degrades with box radius".to_string());
    }
    Ok(GrowthReport {
        value,
        gradient,
        half_box_value,
        half_box_gradient,
        mean_radius,
        degrades_with_radius,
        notes,
    })
}

fn fit_box(
    model: &PlantModel,
    bx: &StateBox,
    samples: usize,
    seed: u64,
) -> Result<(EnvelopeFit, EnvelopeFit, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    let mut grads = Vec::with_capacity(samples);
    let numeric = |x: &Vector| -> Vector {
        let mut probe = x.clone();
        Vector::from_fn(x.len(), |i, _| {
            let xi = x[i];
            probe[i] = xi + super::FD_STEP;
            let hi = model.f(&probe);
            probe[i] = xi - super::FD_STEP;
            let lo = model.f(&probe);
            probe[i] = xi;
            (hi - lo) / (2.0 * super::FD_STEP)
        })
    };
    for _ in 0..samples {
        let x = bx.sample(&mut rng);
        let r = x.norm();
        let fx = model.f(&x);
        let g = numeric(&x).norm();
        if !fx.is_finite() || !g.is_finite() {
            return Err(Error::NonFinite {
                context: format!("evaluating f on the box at {x}"),
            });
        }
        values.push((r, fx.abs()));
        grads.push((r, g));
    }
    let mean_radius = values.iter().map(|p| p.0).sum::<f64>() / samples as f64;
    Ok((
        fit_envelope(&values, mean_radius),
        fit_envelope(&grads, mean_radius),
        mean_radius,
    ))
}

/// Minimizes `c + s * anchor` over `c, s >= 0` with `c + s r_i >= y_i`.
///
/// For fixed `s` the best `c` is `max(0, max_i(y_i - s r_i))`, so the
/// objective is convex piecewise linear in `s`; golden-section search on
/// `[0, max y_i / r_i]` finds its minimum.
pub(crate) fn fit_envelope(points: &[(f64, f64)], anchor: f64) -> EnvelopeFit {
    let intercept = |s: f64| {
        points
            .iter()
            .map(|&(r, y)| y - s * r)
            .fold(0.0_f64, f64::max)
    };
    let objective = |s: f64| intercept(s) + s * anchor;
    let s_hi = points
        .iter()
        .filter(|p| p.0 > 0.0)
        .map(|&(r, y)| y / r)
        .fold(0.0_f64, f64::max);
    if s_hi == 0.0 {
        return EnvelopeFit {
            constant: intercept(0.0),
            slope: 0.0,
        };
    }

    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, s_hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
        if (b - a) <= 1e-14 * s_hi {
            break;
        }
    }
    let candidates = [0.0, 0.5 * (a + b), s_hi];
    let best = candidates
        .into_iter()
        .min_by(|x, y| objective(*x).total_cmp(&objective(*y)))
        .unwrap_or(0.0);
    EnvelopeFit {
        constant: intercept(best),
        slope: best,
    }
}
