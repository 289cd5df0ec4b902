//! Classical full-state data-driven stabilization, used as a comparison.
//!
//! With `X0 = [O1; O2]`, `X1 = [O1+; O2+]` and `U = I`, find `Q` (`T x n`)
//! with `X0 Q` symmetric positive definite and `X1 Q + Q^T X1^T < 0`; the
//! gain is `K = U Q (X0 Q)^-1`. Strictness is handled by maximizing a common
//! margin `t` under the normalization `trace(X0 Q) = 1`.

use crate::data::{rank_check, DesignView, RankReport};
use crate::linalg::numerical_rank;
use crate::{Error, Matrix, Result, RowVector};

use super::sdp::{AffineRow, LmiProgram, MatrixInequality};

/// Margins at or below this are treated as infeasible.
pub const CLASSICAL_MARGIN_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalResult {
    Gain { k: RowVector, margin: f64 },
    Infeasible { status: String, margin: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalOutcome {
    pub result: ClassicalResult,
    pub rank: RankReport,
    /// `rank [X0; U] = n + 1`.
    pub rank_condition: bool,
    /// When `U = F X0` exactly, the `F` that generated the input; any
    /// returned gain then necessarily equals it.
    pub collection_feedback: Option<RowVector>,
    pub warnings: Vec<String>,
}

impl ClassicalOutcome {
    pub fn gain(&self) -> Option<&RowVector> {
        match &self.result {
            ClassicalResult::Gain { k, .. } => Some(k),
            ClassicalResult::Infeasible { .. } => None,
        }
    }

    /// Returned gain coincides with the feedback used during collection.
    pub fn is_degenerate(&self) -> bool {
        match (self.gain(), &self.collection_feedback) {
            (Some(k), Some(f)) => (k - f).abs().max() <= 1e-6 * f.abs().max().max(1.0),
            _ => false,
        }
    }
}

pub fn classical_design(view: &DesignView) -> Result<ClassicalOutcome> {
    let x1_last = view.o2_plus.as_ref().ok_or_else(|| {
        Error::Usage("classical design needs the x_n derivative samples (O2+)".into())
    })?;
    let n = view.order();
    let m = n - 1;
    let t = view.samples();
    let x0 = view.states();
    let mut x1 = Matrix::zeros(n, t);
    x1.rows_mut(0, m).copy_from(&view.o1_plus);
    x1.row_mut(m).copy_from(&x1_last.row(0));
    let u = &view.input;

    let rank = rank_check(view);
    let mut warnings = Vec::new();
    if !rank.classical {
        warnings.push(format!(
            "rank [X0; U] = {} < n + 1 = {}; the classical excitation condition fails",
            rank.stacked_rank,
            n + 1
        ));
    }
    let collection_feedback = if !rank.classical && numerical_rank(&x0) == n {
        // U lies in the row space of X0
        let pinv = x0
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Consistency(e.to_string()))?;
        let f = u * pinv;
        let resid = (&f * &x0 - u).abs().max();
        (resid <= 1e-8 * u.abs().max().max(1.0)).then(|| RowVector::from_fn(n, |_, j| f[(0, j)]))
    } else {
        None
    };

    // variables: Q (t x n, column-major index i + t j), margin
    let qv = |i: usize, j: usize| i + t * j;
    let margin = t * n;
    let nvars = t * n + 1;
    // (M Q)_{rc} = sum_i M_{r i} Q_{i c}
    let product_terms = |mat: &Matrix, transpose_sum: bool, sign: f64| {
        let mut terms = Vec::new();
        for i in 0..t {
            for c in 0..n {
                let mut f = Matrix::zeros(n, n);
                for r in 0..n {
                    f[(r, c)] += sign * mat[(r, i)];
                    if transpose_sum {
                        f[(c, r)] += sign * mat[(r, i)];
                    }
                }
                if !transpose_sum {
                    f = (&f + f.transpose()) * 0.5;
                }
                terms.push((qv(i, c), f));
            }
        }
        terms
    };

    let mut prog = LmiProgram::new(nvars);
    prog.objective[margin] = -1.0;
    let mut pos = product_terms(&x0, false, 1.0);
    pos.push((margin, -Matrix::identity(n, n)));
    prog.lmis.push(MatrixInequality {
        constant: Matrix::zeros(n, n),
        terms: pos,
    });
    let mut neg = product_terms(&x1, true, -1.0);
    neg.push((margin, -Matrix::identity(n, n)));
    prog.lmis.push(MatrixInequality {
        constant: Matrix::zeros(n, n),
        terms: neg,
    });
    for r in 0..n {
        for c in (r + 1)..n {
            let mut coeffs = Vec::new();
            for i in 0..t {
                coeffs.push((qv(i, c), x0[(r, i)]));
                coeffs.push((qv(i, r), -x0[(c, i)]));
            }
            prog.equalities.push(AffineRow {
                coeffs,
                constant: 0.0,
            });
        }
    }
    let mut trace = Vec::new();
    for r in 0..n {
        for i in 0..t {
            trace.push((qv(i, r), x0[(r, i)]));
        }
    }
    prog.equalities.push(AffineRow {
        coeffs: trace,
        constant: -1.0,
    });
    prog.inequalities.push(AffineRow {
        coeffs: vec![(margin, -1.0)],
        constant: 1.0,
    });

    let outcome = prog.solve()?;
    let result = if !outcome.is_solved() {
        ClassicalResult::Infeasible {
            status: outcome.status_text(),
            margin: None,
        }
    } else if outcome.x[margin] <= CLASSICAL_MARGIN_TOL {
        ClassicalResult::Infeasible {
            status: format!(
                "{} (margin {:.3e})",
                outcome.status_text(),
                outcome.x[margin]
            ),
            margin: Some(outcome.x[margin]),
        }
    } else {
        let q = Matrix::from_fn(t, n, |i, j| outcome.x[qv(i, j)]);
        let x0q = &x0 * &q;
        let inv = x0q
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Consistency("X0 Q is singular".into()))?;
        let k = u * q * inv;
        ClassicalResult::Gain {
            k: RowVector::from_fn(n, |_, j| k[(0, j)]),
            margin: outcome.x[margin],
        }
    };
    let out = ClassicalOutcome {
        result,
        rank,
        rank_condition: rank.classical,
        collection_feedback,
        warnings,
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{collect, DerivativeMode, ExperimentConfig, NoiseSpec};
    use crate::plant::{benchmark_plant, BenchmarkId, Disturbance, InputSignal, InputSource};
    use crate::Vector;

    fn b2_config(input: InputSignal, samples: usize) -> ExperimentConfig {
        ExperimentConfig {
            t0: 0.0,
            tau: 0.5,
            samples,
            input,
            noise: NoiseSpec::None,
            derivative_mode: DerivativeMode::ExactPlusNoise,
            seed: 0,
            dt: 1e-3,
        }
    }

    #[test]
    fn rich_input_gives_a_stabilizing_gain() {
        let (p, _) = benchmark_plant(BenchmarkId::B2);
        // deterministic pseudo-random piecewise input
        struct Steps;
        impl InputSource for Steps {
            fn input(&mut self, t: f64, _: &Vector) -> f64 {
                let k = (t / 0.5).floor();
                ((k * 12.9898).sin() * 43758.5453).fract() * 2.0
            }
        }
        let cfg = b2_config(InputSignal::Zero, 8);
        let ds = crate::data::collect_with_input(
            &p,
            &Disturbance::zero(),
            &Vector::from_vec(vec![0.5, -0.3]),
            &cfg,
            &mut Steps,
        )
        .unwrap();
        let out = classical_design(ds.view()).unwrap();
        assert!(out.rank_condition);
        let k = out.gain().expect("feasible");
        let closed = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + k[0], 1.0 + k[1]]);
        let max_re = closed
            .complex_eigenvalues()
            .iter()
            .map(|c| c.re)
            .fold(f64::MIN, f64::max);
        assert!(
            max_re < 0.0,
            "K = {k}, eigs {:?}",
            closed.complex_eigenvalues()
        );
    }

    #[test]
    fn feedback_collected_data_is_degenerate() {
        let (p, d) = benchmark_plant(BenchmarkId::B2);
        let mut cfg = b2_config(
            InputSignal::Feedback {
                gains: vec![-2.0, -1.0],
            },
            3,
        );
        cfg.noise = NoiseSpec::Uniform { halfwidth: 1.0 };
        cfg.seed = 3;
        let ds = collect(&p, &d, &Vector::from_vec(vec![2.0, 3.0]), &cfg).unwrap();
        let out = classical_design(ds.view()).unwrap();
        assert!(!out.rank_condition);
        assert!(!out.warnings.is_empty());
        let f = out.collection_feedback.as_ref().unwrap();
        assert!((f[0] + 2.0).abs() < 1e-9 && (f[1] + 1.0).abs() < 1e-9);
        if let Some(k) = out.gain() {
            assert!((k - f).abs().max() < 1e-6, "{k}");
            assert!(out.is_degenerate());
        }
    }

    #[test]
    fn too_few_columns_warns() {
        let (p, d) = benchmark_plant(BenchmarkId::B1);
        let cfg = ExperimentConfig {
            input: InputSignal::Cosine {
                amplitude: 0.1,
                frequency: 1.0,
            },
            ..b2_config(InputSignal::Zero, 2)
        };
        let ds = collect(&p, &d, &Vector::from_vec(vec![1.0, 1.0]), &cfg).unwrap();
        let out = classical_design(ds.view()).unwrap();
        assert!(!out.rank_condition);
        assert!(!out.warnings.is_empty());
    }
}
