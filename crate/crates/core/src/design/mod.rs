//! Data-driven design of the virtual controller `phi(x_r) = K P x_r`.
//!
//! With `G = [O2; O1]` and the noise bound `gamma gamma^T`, the designer looks
//! for `kappa1 > 0`, `kappa2 >= 0`, `Q > 0` and `K` such that
//!
//! ```text
//! [ kappa1 I - kappa2 (O1+ O1+^T - gg^T)   [K; Q]^T + kappa2 O1+ G^T ]
//! [ *                                      -kappa2 G G^T             ]  <= 0
//! ```
//!
//! which certifies `V = x_r^T P x_r`, `P = Q^-1`, as a Lyapunov function of
//! `x_r' = (A + a K P) x_r` for every upper system consistent with the data.

mod classical;
mod io;
pub mod reference;
mod sdp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::DesignView;
use crate::linalg::{
    block_sym, max_eigenvalue, min_eigenvalue, numerical_rank, spd_inverse, symmetrize,
};
use crate::plant::PlantModel;
use crate::{Error, Matrix, Result, RowVector, Vector};

pub use classical::{classical_design, ClassicalOutcome, ClassicalResult};
pub use io::{read_solution, write_solution};
use sdp::{AffineRow, LmiProgram, MatrixInequality};

/// Default strictness margin for the LMI, `Q` and `kappa1`.
pub const EPS_PD: f64 = 1e-6;
/// Upper bound on `kappa2` imposed for solver conditioning.
pub const KAPPA2_MAX: f64 = 1e6;
/// Upper bound on the maximized `kappa1`.
pub const KAPPA1_MAX: f64 = 1.0;
/// Eigenvalue tolerance for certificate checks.
pub const CERT_TOL: f64 = 1e-8;

/// Design-visible inputs of the SDP.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignProblem {
    pub o1: Matrix,
    pub o2: Matrix,
    pub o1_plus: Matrix,
    pub gamma_gram: Matrix,
    pub eps_pd: f64,
    /// Rescale the data before solving (for badly scaled user data). The LMI
    /// is invariant under data scaling up to a rescaling of `kappa2`, which is
    /// undone on return.
    pub prescale: bool,
}

impl DesignProblem {
    pub fn new(o1: Matrix, o2: Matrix, o1_plus: Matrix, gamma_gram: Matrix) -> Result<Self> {
        let p = Self {
            o1,
            o2,
            o1_plus,
            gamma_gram,
            eps_pd: EPS_PD,
            prescale: false,
        };
        p.check_shapes()?;
        Ok(p)
    }

    pub fn from_view(view: &DesignView) -> Result<Self> {
        Self::new(
            view.o1.clone(),
            view.o2.clone(),
            view.o1_plus.clone(),
            view.bound.gamma_gram.clone(),
        )
    }

    pub fn with_prescale(mut self, on: bool) -> Self {
        self.prescale = on;
        self
    }

    /// Plant order `n`.
    pub fn order(&self) -> usize {
        self.o1.nrows() + 1
    }

    fn check_shapes(&self) -> Result<()> {
        let (m, t) = self.o1.shape();
        if m == 0 || t == 0 {
            return Err(Error::Config("empty data matrices".into()));
        }
        if self.o2.shape() != (1, t) || self.o1_plus.shape() != (m, t) {
            return Err(Error::Config(format!(
                "data shapes O1 {:?}, O2 {:?}, O1+ {:?} are inconsistent",
                self.o1.shape(),
                self.o2.shape(),
                self.o1_plus.shape()
            )));
        }
        if self.gamma_gram.shape() != (m, m) {
            return Err(Error::Config(format!(
                "noise bound is {:?}, expected {m}x{m}",
                self.gamma_gram.shape()
            )));
        }
        if !(self.eps_pd > 0.0) {
            return Err(Error::Config("strictness margin must be positive".into()));
        }
        Ok(())
    }

    /// Shape checks plus `rank G = n` (so that `G G^T > 0`).
    pub fn validate(&self) -> Result<()> {
        self.check_shapes()?;
        let rank = numerical_rank(&build_g(&self.o1, &self.o2)?);
        if rank < self.order() {
            return Err(Error::Rank {
                rank,
                required: self.order(),
            });
        }
        Ok(())
    }

    fn scaled(&self, c: f64) -> Self {
        Self {
            o1: &self.o1 * c,
            o2: &self.o2 * c,
            o1_plus: &self.o1_plus * c,
            gamma_gram: &self.gamma_gram * (c * c),
            ..self.clone()
        }
    }
}

/// `G = [O2; O1]`.
pub fn build_g(o1: &Matrix, o2: &Matrix) -> Result<Matrix> {
    if o2.nrows() != 1 || o1.ncols() != o2.ncols() {
        return Err(Error::Config(format!(
            "cannot stack O2 {:?} over O1 {:?}",
            o2.shape(),
            o1.shape()
        )));
    }
    let m = o1.nrows();
    let mut g = Matrix::zeros(m + 1, o1.ncols());
    g.row_mut(0).copy_from(&o2.row(0));
    g.rows_mut(1, m).copy_from(o1);
    Ok(g)
}

/// `[K; Q]`, an `n x (n-1)` matrix.
fn stack_kq(k: &RowVector, q: &Matrix) -> Matrix {
    let m = q.nrows();
    let mut kq = Matrix::zeros(m + 1, m);
    kq.row_mut(0).copy_from(k);
    kq.rows_mut(1, m).copy_from(q);
    kq
}

/// The symmetric `(2n-1) x (2n-1)` design matrix for given decision values.
pub fn assemble_lmi(
    problem: &DesignProblem,
    k: &RowVector,
    q: &Matrix,
    kappa1: f64,
    kappa2: f64,
) -> Result<Matrix> {
    problem.check_shapes()?;
    let m = problem.o1.nrows();
    if k.len() != m || q.shape() != (m, m) {
        return Err(Error::Config(format!(
            "K has {} entries and Q is {:?}; expected {m} and {m}x{m}",
            k.len(),
            q.shape()
        )));
    }
    let g = build_g(&problem.o1, &problem.o2)?;
    let op = &problem.o1_plus;
    let top =
        Matrix::identity(m, m) * kappa1 - (op * op.transpose() - &problem.gamma_gram) * kappa2;
    let off = stack_kq(k, q).transpose() + op * g.transpose() * kappa2;
    let bottom = -(&g * g.transpose()) * kappa2;
    Ok(block_sym(&top, &off, &bottom))
}

/// SDP solution and the quantities derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSolution {
    pub k: RowVector,
    pub q: Matrix,
    pub p: Matrix,
    pub kappa1: f64,
    pub kappa2: f64,
    pub eps_pd: f64,
    pub status: String,
    pub warnings: Vec<String>,
}

impl DesignSolution {
    /// Builds a solution from `(K, Q, kappa1, kappa2)`, computing `P = Q^-1`.
    pub fn from_parts(k: RowVector, q: Matrix, kappa1: f64, kappa2: f64) -> Result<Self> {
        let q = symmetrize(&q);
        if k.len() != q.nrows() || !q.is_square() {
            return Err(Error::Config("K and Q dimensions disagree".into()));
        }
        let p = spd_inverse(&q)
            .ok_or_else(|| Error::Consistency("Q is not positive definite".into()))?;
        Ok(Self {
            k,
            q,
            p,
            kappa1,
            kappa2,
            eps_pd: EPS_PD,
            status: "user".into(),
            warnings: Vec::new(),
        })
    }

    /// `K P`, the virtual-controller gain.
    pub fn kp(&self) -> RowVector {
        &self.k * &self.p
    }

    /// Checks the structural invariants (`Q, P > 0`, `PQ = I`, signs of the
    /// multipliers).
    pub fn check_invariants(&self) -> Result<()> {
        let m = self.q.nrows();
        let eye_err = (&self.p * &self.q - Matrix::identity(m, m)).abs().max();
        if min_eigenvalue(&self.q) <= 0.0 || min_eigenvalue(&self.p) <= 0.0 {
            return Err(Error::Consistency(
                "Q and P must be positive definite".into(),
            ));
        }
        if eye_err > 1e-8 {
            return Err(Error::Consistency(format!("|PQ - I| = {eye_err:.3e}")));
        }
        if !(self.kappa1 > 0.0 && self.kappa2 >= 0.0) {
            return Err(Error::Consistency(format!(
                "multipliers kappa1 = {}, kappa2 = {} out of range",
                self.kappa1, self.kappa2
            )));
        }
        Ok(())
    }
}

/// Solves the design SDP.
///
/// The first solve maximizes `kappa1` within `[eps, KAPPA1_MAX]` with the LMI
/// tightened to `<= -eps I` and `Q >= eps I`; it decides feasibility. The
/// returned point comes from a second solve that maximizes a common margin
/// `t` with `LMI <= -t I`, `Q >= t I`, `kappa1 >= t` and `kappa2 <= 1`.
pub fn solve_design(problem: &DesignProblem) -> Result<DesignSolution> {
    problem.validate()?;
    let scale = if problem.prescale {
        let g = build_g(&problem.o1, &problem.o2)?;
        let big = g.abs().max().max(problem.o1_plus.abs().max());
        if big > 0.0 {
            1.0 / big
        } else {
            1.0
        }
    } else {
        1.0
    };
    let work = problem.scaled(scale);
    let layout = Layout::new(work.o1.nrows());
    let eps = work.eps_pd;
    let outcome = design_program(&work, &layout, Phase::MaxDecay)?.solve()?;
    if !outcome.is_solved() {
        return Err(Error::Infeasible {
            status: outcome.status_text(),
        });
    }
    let mut status = outcome.status_text();
    let (mut k, mut q, mut kappa1, mut kappa2_scaled) = layout.unpack(&outcome.x);
    // Every point with kappa1 at its cap is optimal and the LMI is
    // homogeneous, so the first solve does not pin down K P. Re-centre on the
    // point with the largest common margin; keep the first point if that
    // margin is not above eps.
    let centre = design_program(&work, &layout, Phase::Centre)?.solve()?;
    let margin = centre.x.get(layout.t_var()).copied().unwrap_or(0.0);
    if centre.is_solved() && margin >= eps {
        (k, q, kappa1, kappa2_scaled) = layout.unpack(&centre.x);
        status = format!("{status}; centred with margin {margin:.3e}");
    }
    let mut sol =
        DesignSolution::from_parts(k, q, kappa1, kappa2_scaled * scale * scale).map_err(|_| {
            Error::Infeasible {
                status: format!("{status} (returned Q not positive definite)"),
            }
        })?;
    sol.eps_pd = eps;
    sol.status = status;

    let residual = max_eigenvalue(&assemble_lmi(&work, &sol.k, &sol.q, kappa1, kappa2_scaled)?);
    if residual > CERT_TOL || kappa1 < eps * (1.0 - 1e-6) {
        return Err(Error::Infeasible {
            status: format!(
                "{} (LMI residual {residual:.3e}, kappa1 {kappa1:.3e})",
                sol.status
            ),
        });
    }
    if kappa2_scaled >= 0.999 * KAPPA2_MAX {
        sol.warnings.push(format!(
            "kappa2 = {:.3e} sits at its conditioning bound; consider prescaling the data",
            sol.kappa2
        ));
    }
    Ok(sol)
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    /// Maximize `kappa1` at fixed margin `eps`.
    MaxDecay,
    /// Maximize a common margin `t` on every strict inequality with
    /// `kappa2 <= 1`.
    Centre,
}

/// Variable layout: kappa1, kappa2, K (m), upper triangle of Q, margin t.
struct Layout {
    m: usize,
    q_index: Vec<(usize, usize)>,
}

impl Layout {
    fn new(m: usize) -> Self {
        let mut q_index = Vec::new();
        for j in 0..m {
            for i in 0..=j {
                q_index.push((i, j));
            }
        }
        Self { m, q_index }
    }

    fn k_var(&self, j: usize) -> usize {
        2 + j
    }

    fn q_var(&self, idx: usize) -> usize {
        2 + self.m + idx
    }

    fn t_var(&self) -> usize {
        2 + self.m + self.q_index.len()
    }

    fn nvars(&self) -> usize {
        self.t_var() + 1
    }

    fn unpack(&self, x: &[f64]) -> (RowVector, Matrix, f64, f64) {
        let k = RowVector::from_fn(self.m, |_, j| x[self.k_var(j)]);
        let mut q = Matrix::zeros(self.m, self.m);
        for (idx, &(i, j)) in self.q_index.iter().enumerate() {
            q[(i, j)] = x[self.q_var(idx)];
            q[(j, i)] = x[self.q_var(idx)];
        }
        (k, q, x[0], x[1].max(0.0))
    }
}

fn design_program(work: &DesignProblem, layout: &Layout, phase: Phase) -> Result<LmiProgram> {
    let m = layout.m;
    let n = m + 1;
    let eps = work.eps_pd;
    let dim = 2 * n - 1;
    let t_var = layout.t_var();
    let g = build_g(&work.o1, &work.o2)?;
    let op = &work.o1_plus;
    let embed = |block: &Matrix, row: usize, col: usize| {
        let mut f = Matrix::zeros(dim, dim);
        f.view_mut((row, col), block.shape()).copy_from(block);
        if row != col {
            f.view_mut((col, row), (block.ncols(), block.nrows()))
                .copy_from(&block.transpose());
        }
        f
    };

    // -M(v) - t I >= 0
    let mut terms = Vec::new();
    terms.push((0, -embed(&Matrix::identity(m, m), 0, 0)));
    let mut f_k2 = Matrix::zeros(dim, dim);
    f_k2.view_mut((0, 0), (m, m))
        .copy_from(&(op * op.transpose() - &work.gamma_gram));
    let cross = op * g.transpose();
    f_k2.view_mut((0, m), (m, n)).copy_from(&(-&cross));
    f_k2.view_mut((m, 0), (n, m))
        .copy_from(&(-cross.transpose()));
    f_k2.view_mut((m, m), (n, n))
        .copy_from(&(&g * g.transpose()));
    terms.push((1, f_k2));
    for j in 0..m {
        // [K; Q]^T has K_j at (j, m + 0)
        let mut e = Matrix::zeros(m, n);
        e[(j, 0)] = 1.0;
        terms.push((layout.k_var(j), -embed(&e, 0, m)));
    }
    for (idx, &(i, j)) in layout.q_index.iter().enumerate() {
        // Q_ij appears at ([K;Q]^T)(j, 1 + i) and (i, 1 + j)
        let mut e = Matrix::zeros(m, n);
        e[(j, 1 + i)] = 1.0;
        e[(i, 1 + j)] = 1.0;
        terms.push((layout.q_var(idx), -embed(&e, 0, m)));
    }
    terms.push((t_var, -Matrix::identity(dim, dim)));
    let mut prog = LmiProgram::new(layout.nvars());
    prog.lmis.push(MatrixInequality {
        constant: Matrix::zeros(dim, dim),
        terms,
    });
    // Q - t I >= 0
    let mut q_terms: Vec<(usize, Matrix)> = layout
        .q_index
        .iter()
        .enumerate()
        .map(|(idx, &(i, j))| {
            let mut e = Matrix::zeros(m, m);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            (layout.q_var(idx), e)
        })
        .collect();
    q_terms.push((t_var, -Matrix::identity(m, m)));
    prog.lmis.push(MatrixInequality {
        constant: Matrix::zeros(m, m),
        terms: q_terms,
    });
    let bound = |var: usize, sign: f64, constant: f64| AffineRow {
        coeffs: vec![(var, sign)],
        constant,
    };
    prog.inequalities.push(bound(0, -1.0, KAPPA1_MAX));
    prog.inequalities.push(bound(1, 1.0, 0.0));
    match phase {
        Phase::MaxDecay => {
            prog.objective[0] = -1.0;
            prog.inequalities.push(bound(0, 1.0, -eps));
            prog.inequalities.push(bound(1, -1.0, KAPPA2_MAX));
            prog.equalities.push(bound(t_var, 1.0, -eps));
        }
        Phase::Centre => {
            prog.objective[t_var] = -1.0;
            // kappa1 >= t
            prog.inequalities.push(AffineRow {
                coeffs: vec![(0, 1.0), (t_var, -1.0)],
                constant: 0.0,
            });
            prog.inequalities.push(bound(1, -1.0, 1.0));
        }
    }
    Ok(prog)
}

/// Sliding variable `sigma(x) = x_n + coeff_r x_r` with `coeff_r = -K P`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlidingVariable {
    pub coeff_r: RowVector,
}

impl SlidingVariable {
    pub fn eval(&self, x: &Vector) -> f64 {
        let m = self.coeff_r.len();
        x[m] + (&self.coeff_r * x.rows(0, m))[0]
    }

    /// Row `[coeff_r, 1]` acting on the full state.
    pub fn full_row(&self) -> RowVector {
        let m = self.coeff_r.len();
        RowVector::from_fn(m + 1, |_, j| if j < m { self.coeff_r[j] } else { 1.0 })
    }
}

pub fn sliding_variable(solution: &DesignSolution) -> SlidingVariable {
    SlidingVariable {
        coeff_r: -solution.kp(),
    }
}

/// Outcome of [`verify_certificate`]. Violations are reported, not raised.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    /// `lambda_max(Xi1 - kappa2 Xi2)`.
    pub certificate_max_eig: f64,
    /// `lambda_max` of the directly assembled LMI (second route).
    pub lmi_max_eig: f64,
    /// Worst `V' + kappa1 |P x_r|^2` over the sampled unit states.
    pub lyapunov_worst: Option<f64>,
    pub lyapunov_worst_state: Option<Vector>,
    /// `lambda_max(Psi Psi^T - gamma gamma^T)` with `Psi = O1+ - S G`.
    pub noise_max_eig: Option<f64>,
    pub violations: Vec<String>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Number of random states used by the Lyapunov oracle.
pub const ORACLE_SAMPLES: usize = 1000;

/// `Xi1 = [[kappa1 I, [K; P^-1]^T], [*, 0]]`.
pub fn xi1(solution: &DesignSolution) -> Result<Matrix> {
    let m = solution.k.len();
    let p_inv = spd_inverse(&solution.p)
        .ok_or_else(|| Error::Consistency("P is not positive definite".into()))?;
    Ok(block_sym(
        &(Matrix::identity(m, m) * solution.kappa1),
        &stack_kq(&solution.k, &p_inv).transpose(),
        &Matrix::zeros(m + 1, m + 1),
    ))
}

/// `Xi2 = [[O1+ O1+^T - gg^T, -O1+ G^T], [*, G G^T]]`.
pub fn xi2(problem: &DesignProblem) -> Result<Matrix> {
    let g = build_g(&problem.o1, &problem.o2)?;
    let op = &problem.o1_plus;
    Ok(block_sym(
        &(op * op.transpose() - &problem.gamma_gram),
        &-(op * g.transpose()),
        &(&g * g.transpose()),
    ))
}

/// Re-checks a solution: the S-procedure certificate `Xi1 - kappa2 Xi2 <= 0`
/// and, given the hidden plant, Lyapunov decrease of the true closed loop at
/// random states and consistency of the realized noise with the bound.
pub fn verify_certificate(
    problem: &DesignProblem,
    solution: &DesignSolution,
    oracle_plant: Option<&PlantModel>,
    seed: u64,
) -> Result<CertificateReport> {
    problem.check_shapes()?;
    let m = problem.o1.nrows();
    if solution.k.len() != m || solution.p.shape() != (m, m) {
        return Err(Error::Config(
            "solution does not match the problem dimension".into(),
        ));
    }
    let mut violations = Vec::new();
    let cert = xi1(solution)? - xi2(problem)? * solution.kappa2;
    let certificate_max_eig = max_eigenvalue(&cert);
    if certificate_max_eig > CERT_TOL {
        violations.push(format!(
            "certificate Xi1 - kappa2 Xi2 has eigenvalue {certificate_max_eig:.3e} > {CERT_TOL:e}"
        ));
    }
    let lmi_max_eig = max_eigenvalue(&assemble_lmi(
        problem,
        &solution.k,
        &solution.q,
        solution.kappa1,
        solution.kappa2,
    )?);

    let mut report = CertificateReport {
        certificate_max_eig,
        lmi_max_eig,
        lyapunov_worst: None,
        lyapunov_worst_state: None,
        noise_max_eig: None,
        violations,
    };
    let Some(plant) = oracle_plant else {
        return Ok(report);
    };
    if plant.dim() != m + 1 {
        return Err(Error::Config(
            "oracle plant order does not match the data".into(),
        ));
    }

    let p = &solution.p;
    let closed = plant.closed_loop_upper(&solution.kp());
    let lyap = p * &closed + closed.transpose() * p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_state = Vector::zeros(m);
    for _ in 0..ORACLE_SAMPLES {
        let x = unit_sphere(&mut rng, m);
        let v_dot = x.dot(&(&lyap * &x));
        let px = p * &x;
        let slack = v_dot + solution.kappa1 * px.norm_squared();
        if slack > worst {
            worst = slack;
            worst_state = x;
        }
    }
    if worst > CERT_TOL {
        report.violations.push(format!(
            "Lyapunov decrease fails by {worst:.3e} at x_r = {:?}",
            worst_state.as_slice()
        ));
    }
    report.lyapunov_worst = Some(worst);
    report.lyapunov_worst_state = Some(worst_state);

    // [I; S^T]^T Xi2 [I; S^T] = Psi Psi^T - gamma gamma^T
    let s = plant.upper_system();
    let mut lift = Matrix::zeros(2 * m + 1, m);
    lift.view_mut((0, 0), (m, m)).fill_with_identity();
    lift.view_mut((m, 0), (m + 1, m)).copy_from(&s.transpose());
    let quad = lift.transpose() * xi2(problem)? * &lift;
    let noise_max_eig = max_eigenvalue(&quad);
    let tol = 1e-9 * problem.gamma_gram.abs().max().max(1.0);
    if noise_max_eig > tol {
        report.violations.push(format!(
            "realized noise exceeds the declared bound: eigenvalue {noise_max_eig:.3e}"
        ));
    }
    report.noise_max_eig = Some(noise_max_eig);
    Ok(report)
}

/// Consistency check that the design data admit the given noise level:
/// the data-implied noise `O1+ - S G` for a known `S`.
pub fn implied_noise(problem: &DesignProblem, upper_system: &Matrix) -> Result<Matrix> {
    let g = build_g(&problem.o1, &problem.o2)?;
    Ok(&problem.o1_plus - upper_system * g)
}

/// Uniform point on the unit sphere.
fn unit_sphere(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}
