//! Reference data sets and designs, given to four decimals.
//!
//! Used as fixtures for the design stage; regenerated data will differ.

use super::{DesignProblem, DesignSolution};
use crate::data::{noise_bound_uniform, DesignView};
use crate::{Matrix, RowVector};

fn row(v: &[f64]) -> Matrix {
    Matrix::from_row_slice(1, v.len(), v)
}

/// Pendulum data: `tau = 0.1`, three samples, noise in `[-0.5, 0.5]`,
/// collected under `u = 0.1 cos t`.
pub fn pendulum_view() -> DesignView {
    DesignView {
        input: Matrix::from_fn(1, 3, |_, k| 0.1 * (0.1 * k as f64).cos()),
        o1: row(&[1.0, 1.0588, 1.0397]),
        o2: row(&[1.0, 0.1857, -0.5515]),
        o1_plus: row(&[0.9366, -0.5117, -1.3232]),
        o2_plus: None,
        bound: noise_bound_uniform(0.5, 1, 3).expect("valid bound"),
    }
}

/// Linear-plant data: `tau = 0.5`, three samples, noise in `[-1, 1]`,
/// collected under `u = -2 x1 - x2`.
pub fn linear_view() -> DesignView {
    let o1 = row(&[2.0, 3.3133, 4.0258]);
    let o2 = row(&[3.0, 2.1330, 0.6289]);
    let input = &o1 * -2.0 - &o2;
    DesignView {
        input,
        o1,
        o2,
        o1_plus: row(&[3.3242, 0.7827, -1.1786]),
        o2_plus: None,
        bound: noise_bound_uniform(1.0, 1, 3).expect("valid bound"),
    }
}

pub fn pendulum_problem() -> DesignProblem {
    DesignProblem::from_view(&pendulum_view()).expect("consistent shapes")
}

pub fn linear_problem() -> DesignProblem {
    DesignProblem::from_view(&linear_view()).expect("consistent shapes")
}

/// `(K, Q, kappa1, kappa2)` of the pendulum reference design data.
pub fn pendulum_decision() -> (RowVector, Matrix, f64, f64) {
    (
        RowVector::from_element(1, -0.7343),
        Matrix::from_element(1, 1, 0.6708),
        0.5134,
        0.4990,
    )
}

/// `(K, Q, kappa1, kappa2)` of the linear-plant reference design data.
pub fn linear_decision() -> (RowVector, Matrix, f64, f64) {
    (
        RowVector::from_element(1, -0.3924),
        Matrix::from_element(1, 1, 0.2915),
        0.2278,
        0.0655,
    )
}

/// Reference pendulum `P`.
pub const PENDULUM_P: f64 = 1.4907;
/// Reference pendulum sliding coefficient on `x1`.
pub const PENDULUM_SIGMA: f64 = 1.0946;
/// Reference linear-plant `P`.
pub const LINEAR_P: f64 = 3.4305;
/// Reference linear-plant sliding coefficient on `x1`.
pub const LINEAR_SIGMA: f64 = 1.3461;

/// `K` and `P` of the fourth-order chain reference design.
pub fn chain_gain() -> (RowVector, Matrix) {
    (
        RowVector::from_row_slice(&[-0.2832, 0.2328, -0.1733]),
        Matrix::from_row_slice(
            3,
            3,
            &[
                20.2193, 8.1914, -21.1564, 8.1914, 8.9159, -2.7685, -21.1564, -2.7685, 31.4177,
            ],
        ),
    )
}

/// Reference chain multipliers `(kappa1, kappa2)`.
pub const CHAIN_KAPPA: (f64, f64) = (0.0018, 0.0142);

/// Reference chain sliding coefficients on `x1, x2, x3`.
pub const CHAIN_SIGMA: [f64; 3] = [0.1539, -0.2355, 0.0961];

/// A solution object carrying the reference chain `K` and `P` verbatim
/// (`Q = P^-1`).
pub fn chain_solution() -> DesignSolution {
    let (k, p) = chain_gain();
    let q = crate::linalg::spd_inverse(&p).expect("reference P is positive definite");
    DesignSolution {
        k,
        q,
        p,
        kappa1: CHAIN_KAPPA.0,
        kappa2: CHAIN_KAPPA.1,
        eps_pd: super::EPS_PD,
        status: "reference".into(),
        warnings: Vec::new(),
    }
}

/// A solution object carrying the reference pendulum `K` and `P` verbatim.
pub fn pendulum_solution() -> DesignSolution {
    let (k, q, k1, k2) = pendulum_decision();
    DesignSolution {
        k,
        q,
        p: Matrix::from_element(1, 1, PENDULUM_P),
        kappa1: k1,
        kappa2: k2,
        eps_pd: super::EPS_PD,
        status: "reference".into(),
        warnings: Vec::new(),
    }
}
