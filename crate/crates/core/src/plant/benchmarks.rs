use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Disturbance, DisturbanceBounds, GrowthBounds, PlantModel};
use crate::{Error, Matrix, Vector};

/// Built-in benchmark plants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkId {
    /// Inverted pendulum, `n = 2`.
    B1,
    /// Unstable linear plant, `n = 2`.
    B2,
    /// Highly nonlinear fourth-order chain.
    B3,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 3] = [BenchmarkId::B1, BenchmarkId::B2, BenchmarkId::B3];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkId::B1 => "b1",
            BenchmarkId::B2 => "b2",
            BenchmarkId::B3 => "b3",
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "b1" => Ok(BenchmarkId::B1),
            "b2" => Ok(BenchmarkId::B2),
            "b3" => Ok(BenchmarkId::B3),
            other => Err(Error::Usage(format!(
                "unknown benchmark '{other}' (expected b1, b2 or b3)"
            ))),
        }
    }
}

/// The benchmark dynamics and their disturbances.
///
/// * `b1`: `x1' = x2`, `x2' = -10 sin(x1) - x2 + 10 u + d`, with the stand-in
///   disturbance `d(t) = 0.8 sin(2t) + 0.4`.
/// * `b2`: `x1' = x2`, `x2' = x1 + x2 + u + d`, `d(t) = cos(t)`.
/// * `b3`: `x_i' = -x_i + x_{i+1}` (i = 1..3),
///   `x4' = ln(1 + sin^2(x1 x2)) + x3 / (1 + x3^2) + u + d`, `d(t) = tanh(t)`.
pub fn benchmark_plant(id: BenchmarkId) -> (PlantModel, Disturbance) {
    match id {
        BenchmarkId::B1 => {
            let plant = PlantModel::new(
                Matrix::zeros(1, 1),
                Vector::from_element(1, 1.0),
                10.0,
                |x: &Vector| -10.0 * x[0].sin() - x[1],
            )
            .expect("b1 plant is well formed")
            .with_gradient(|x: &Vector| Vector::from_vec(vec![-10.0 * x[0].cos(), -1.0]))
            .with_growth(GrowthBounds {
                value_constant: 10.0,
                value_slope: 1.0,
                gradient_constant: 101f64.sqrt(),
                gradient_slope: 0.0,
            });
            let dist = Disturbance::new(|t| 0.8 * (2.0 * t).sin() + 0.4)
                .with_rate(|t| 1.6 * (2.0 * t).cos())
                .with_bounds(DisturbanceBounds {
                    value: 1.25,
                    rate: 1.65,
                });
            (plant, dist)
        }
        BenchmarkId::B2 => {
            let plant = PlantModel::new(
                Matrix::zeros(1, 1),
                Vector::from_element(1, 1.0),
                1.0,
                |x: &Vector| x[0] + x[1],
            )
            .expect("b2 plant is well formed")
            .with_gradient(|_: &Vector| Vector::from_vec(vec![1.0, 1.0]))
            .with_growth(GrowthBounds {
                value_constant: 0.0,
                value_slope: 2f64.sqrt(),
                gradient_constant: 2f64.sqrt(),
                gradient_slope: 0.0,
            });
            let dist = Disturbance::new(f64::cos)
                .with_rate(|t| -t.sin())
                .with_bounds(DisturbanceBounds {
                    value: 1.05,
                    rate: 1.05,
                });
            (plant, dist)
        }
        BenchmarkId::B3 => {
            let upper =
                Matrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0]);
            let plant = PlantModel::new(
                upper,
                Vector::from_vec(vec![0.0, 0.0, 1.0]),
                1.0,
                |x: &Vector| {
                    let s = (x[0] * x[1]).sin();
                    (1.0 + s * s).ln() + x[2] / (1.0 + x[2] * x[2])
                },
            )
            .expect("b3 plant is well formed")
            .with_gradient(|x: &Vector| {
                let p = x[0] * x[1];
                let s = p.sin();
                let common = (2.0 * p).sin() / (1.0 + s * s);
                let q = 1.0 + x[2] * x[2];
                Vector::from_vec(vec![
                    common * x[1],
                    common * x[0],
                    (1.0 - x[2] * x[2]) / (q * q),
                    0.0,
                ])
            })
            .with_growth(GrowthBounds {
                value_constant: 2f64.ln() + 0.5,
                value_slope: 0.0,
                gradient_constant: 1.0,
                gradient_slope: 2f64.sqrt(),
            });
            let dist = Disturbance::new(f64::tanh)
                .with_rate(|t| {
                    let c = t.cosh();
                    1.0 / (c * c)
                })
                .with_bounds(DisturbanceBounds {
                    value: 1.05,
                    rate: 1.05,
                });
            (plant, dist)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_structure() {
        let (b1, _) = benchmark_plant(BenchmarkId::B1);
        assert_eq!(b1.dim(), 2);
        assert_eq!(b1.upper()[(0, 0)], 0.0);
        assert_eq!(b1.coupling()[0], 1.0);
        assert_eq!(b1.input_gain(), 10.0);

        let (b2, d2) = benchmark_plant(BenchmarkId::B2);
        assert_eq!(b2.dim(), 2);
        assert_eq!(b2.input_gain(), 1.0);
        assert_eq!(b2.f(&Vector::from_vec(vec![2.0, 3.0])), 5.0);
        assert_eq!(d2.value(0.0), 1.0);

        let (b3, d3) = benchmark_plant(BenchmarkId::B3);
        assert_eq!(b3.dim(), 4);
        for i in 0..3 {
            assert_eq!(b3.upper()[(i, i)], -1.0);
            if i < 2 {
                assert_eq!(b3.upper()[(i, i + 1)], 1.0);
            }
        }
        assert_eq!(b3.coupling().as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(d3.value(1.0), 1f64.tanh());
    }

    #[test]
    fn parse_ids() {
        assert_eq!("B3".parse::<BenchmarkId>().unwrap(), BenchmarkId::B3);
        assert!(matches!("b4".parse::<BenchmarkId>(), Err(Error::Usage(_))));
    }
}
