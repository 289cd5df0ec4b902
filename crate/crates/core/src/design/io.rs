use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DesignSolution;
use crate::{Error, Matrix, Result, RowVector};

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    order: usize,
    k: Vec<f64>,
    /// Row-major.
    q: Vec<f64>,
    /// Row-major.
    p: Vec<f64>,
    kappa1: f64,
    kappa2: f64,
    eps_pd: f64,
    status: String,
    #[serde(default)]
    warnings: Vec<String>,
}

fn row_major(m: &Matrix) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub fn write_solution(path: &Path, sol: &DesignSolution) -> Result<()> {
    let file = SolutionFile {
        order: sol.k.len() + 1,
        k: sol.k.iter().copied().collect(),
        q: row_major(&sol.q),
        p: row_major(&sol.p),
        kappa1: sol.kappa1,
        kappa2: sol.kappa2,
        eps_pd: sol.eps_pd,
        status: sol.status.clone(),
        warnings: sol.warnings.clone(),
    };
    let text = toml::to_string(&file)
        .map_err(|e| Error::Config(format!("cannot serialize solution: {e}")))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a solution written by [`write_solution`] and re-checks its
/// invariants.
pub fn read_solution(path: &Path) -> Result<DesignSolution> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: SolutionFile = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
    let m = f.order.saturating_sub(1);
    if m == 0 || f.k.len() != m || f.q.len() != m * m || f.p.len() != m * m {
        return Err(Error::parse(
            path,
            "solution matrices do not match the stated order",
        ));
    }
    let sol = DesignSolution {
        k: RowVector::from_row_slice(&f.k),
        q: Matrix::from_row_slice(m, m, &f.q),
        p: Matrix::from_row_slice(m, m, &f.p),
        kappa1: f.kappa1,
        kappa2: f.kappa2,
        eps_pd: f.eps_pd,
        status: f.status,
        warnings: f.warnings,
    };
    sol.check_invariants()
        .map_err(|e| Error::parse(path, e.to_string()))?;
    Ok(sol)
}
