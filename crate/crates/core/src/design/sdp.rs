//! Thin LMI front end over the Clarabel conic solver.
//!
//! A program has scalar decision variables `v`, a linear objective to
//! minimize, affine equalities `a.v + c = 0`, affine inequalities
//! `a.v + c >= 0` and matrix inequalities `F0 + sum_i v_i F_i >= 0`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use crate::{Error, Matrix, Result};

/// `F0 + sum v_i F_i >= 0`; `terms` lists only the variables that appear.
#[derive(Clone, Debug)]
pub(crate) struct MatrixInequality {
    pub constant: Matrix,
    pub terms: Vec<(usize, Matrix)>,
}

#[derive(Clone, Debug)]
pub(crate) struct AffineRow {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct LmiProgram {
    pub nvars: usize,
    pub objective: Vec<f64>,
    pub equalities: Vec<AffineRow>,
    pub inequalities: Vec<AffineRow>,
    pub lmis: Vec<MatrixInequality>,
}

#[derive(Clone, Debug)]
pub(crate) struct LmiOutcome {
    pub status: SolverStatus,
    pub x: Vec<f64>,
}

impl LmiOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(
            self.status,
            SolverStatus::Solved | SolverStatus::AlmostSolved
        )
    }

    pub fn status_text(&self) -> String {
        format!("{:?}", self.status)
    }
}

/// Scaled upper-triangle vectorization in column order:
/// `(0,0), (0,1), (1,1), (0,2), ...` with off-diagonals times `sqrt 2`.
pub(crate) fn svec(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in 0..=j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out.push(if i == j {
                v
            } else {
                v * std::f64::consts::SQRT_2
            });
        }
    }
    out
}

impl LmiProgram {
    pub fn new(nvars: usize) -> Self {
        Self {
            nvars,
            objective: vec![0.0; nvars],
            ..Default::default()
        }
    }

    pub fn solve(&self) -> Result<LmiOutcome> {
        // rows of the constraint system s = b - A x, in cone order
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let negate = |coeffs: &[(usize, f64)]| coeffs.iter().map(|&(i, v)| (i, -v)).collect();

        if !self.equalities.is_empty() {
            for r in &self.equalities {
                rows.push((negate(&r.coeffs), r.constant));
            }
            cones.push(SupportedConeT::ZeroConeT(self.equalities.len()));
        }
        if !self.inequalities.is_empty() {
            for r in &self.inequalities {
                rows.push((negate(&r.coeffs), r.constant));
            }
            cones.push(SupportedConeT::NonnegativeConeT(self.inequalities.len()));
        }
        for lmi in &self.lmis {
            let dim = lmi.constant.nrows();
            let base = svec(&lmi.constant);
            let mut block: Vec<Vec<(usize, f64)>> = vec![Vec::new(); base.len()];
            for (var, f) in &lmi.terms {
                if f.shape() != (dim, dim) {
                    return Err(Error::Solver(
                        "matrix inequality terms differ in size".into(),
                    ));
                }
                for (row, v) in svec(f).into_iter().enumerate() {
                    if v != 0.0 {
                        block[row].push((*var, -v));
                    }
                }
            }
            rows.extend(block.into_iter().zip(base));
            cones.push(SupportedConeT::PSDTriangleConeT(dim));
        }

        let a = csc_from_rows(&rows, self.nvars);
        let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let p = CscMatrix::<f64>::zeros((self.nvars, self.nvars));
        let settings = DefaultSettings {
            verbose: false,
            max_iter: 400,
            ..Default::default()
        };
        let mut solver = DefaultSolver::new(&p, &self.objective, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        solver.solve();
        Ok(LmiOutcome {
            status: solver.solution.status,
            x: solver.solution.x.clone(),
        })
    }
}

fn csc_from_rows(rows: &[(Vec<(usize, f64)>, f64)], ncols: usize) -> CscMatrix<f64> {
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
    for (r, (coeffs, _)) in rows.iter().enumerate() {
        for &(c, v) in coeffs {
            cols[c].push((r, v));
        }
    }
    let mut colptr = Vec::with_capacity(ncols + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for col in &mut cols {
        col.sort_by_key(|e| e.0);
        // merge duplicates
        let mut last: Option<usize> = None;
        for &(r, v) in col.iter() {
            if last == Some(r) {
                *nzval.last_mut().unwrap() += v;
            } else {
                rowval.push(r);
                nzval.push(v);
                last = Some(r);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(rows.len(), ncols, colptr, rowval, nzval)
}
