//! Dense least-squares solvers.
//!
//! Unconstrained problems go through a singular value decomposition and
//! return the minimum-norm solution when the design is rank deficient.
//! The non-negative variant is the Lawson-Hanson active-set method built on
//! the same solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    /// Numerical rank of the design matrix.
    pub rank: usize,
    pub singular_values: DVector<f64>,
}

impl LstsqSolution {
    pub fn is_rank_deficient(&self, n_columns: usize) -> bool {
        self.rank < n_columns
    }
}

/// Relative threshold below which singular values count as zero.
fn rank_tolerance(a: &DMatrix<f64>, sigma_max: f64) -> f64 {
    f64::EPSILON * a.nrows().max(a.ncols()) as f64 * sigma_max
}

/// Minimum-norm solution of `min ||a x - b||`.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LstsqSolution> {
    if a.nrows() != b.len() {
        return Err(Error::Usage(format!(
            "design has {} rows but target has {} values",
            a.nrows(),
            b.len()
        )));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Usage("empty least-squares problem".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "non-finite value in least-squares input".into(),
        ));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = rank_tolerance(a, sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = if rank == 0 {
        DVector::zeros(a.ncols())
    } else {
        svd.solve(b, tol)
            .map_err(|e| Error::Numerical(e.to_string()))?
    };
    Ok(LstsqSolution {
        x,
        rank,
        singular_values: svd.singular_values,
    })
}

/// Lawson-Hanson non-negative least squares: `min ||a x - b||` with `x >= 0`.
pub fn solve_nonnegative(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LstsqSolution> {
    let unconstrained = solve(a, b)?;
    let n = a.ncols();
    let scale = a.norm() * b.norm();
    let tol = 1e-12 * scale.max(1.0);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];

    let gradient = |x: &DVector<f64>| a.transpose() * (b - a * x);
    let mut w = gradient(&x);
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match candidate {
            Some(j) if w[j] > tol => passive[j] = true,
            _ => break,
        }
        loop {
            let s = solve_on_subset(a, b, &passive)?;
            let blocking = (0..n)
                .filter(|&i| passive[i] && s[i] <= 0.0)
                .map(|i| (i, x[i] / (x[i] - s[i])))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let Some((limiting, step)) = blocking else {
                x = s;
                break;
            };
            x += (s - &x) * step;
            x[limiting] = 0.0;
            for i in 0..n {
                if passive[i] && x[i] <= 0.0 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
        w = gradient(&x);
    }
    Ok(LstsqSolution {
        x,
        rank: unconstrained.rank,
        singular_values: unconstrained.singular_values,
    })
}

fn solve_on_subset(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let columns: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    if columns.is_empty() {
        return Ok(DVector::zeros(passive.len()));
    }
    let sub = a.select_columns(&columns);
    let sol = solve(&sub, b)?;
    let mut full = DVector::zeros(passive.len());
    for (k, &c) in columns.iter().enumerate() {
        full[c] = sol.x[k];
    }
    Ok(full)
}
