//! Steady heat conduction: Gauss-Seidel sweeps of the five-point average
//! `T[i][j] = (T[i+1][j] + T[i-1][j] + T[i][j+1] + T[i][j-1]) / 4`.

use crate::field::{apply_dirichlet, make_uniform_field, BoundarySpec, Field};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceSolution {
    pub field: Field,
    pub converged: bool,
    pub iterations: usize,
    /// Largest single-node change during the final sweep.
    pub last_update: f64,
}

/// Mask with every edge node fixed and the interior free.
pub fn edge_mask(shape: (usize, usize)) -> Result<Field> {
    let ones = make_uniform_field(shape, 1.0)?;
    let interior = vec![0.0; ones.interior_len()];
    ones.with_interior(&interior)
}

/// Sweeps row-major over the free nodes (mask entry `0.0`) until the largest
/// update is below `tol` or `max_iters` sweeps ran. Non-convergence is
/// reported through `converged`, not as an error.
pub fn laplace_solve_2d(boundary_field: &Field, mask: &Field, tol: f64, max_iters: usize) -> Result<LaplaceSolution> {
    if mask.shape() != boundary_field.shape() {
        return Err(Error::ShapeMismatch {
            expected: boundary_field.shape(),
            actual: mask.shape(),
        });
    }
    let (n, m) = boundary_field.shape();
    let fixed: Vec<bool> = mask.as_slice().iter().map(|&v| v != 0.0).collect();
    if !fixed.iter().any(|&f| f) {
        return Err(Error::InvalidParameter("Laplace solve needs at least one fixed node".into()));
    }
    for i in 0..n {
        for j in 0..m {
            let edge = i == 0 || j == 0 || i == n - 1 || j == m - 1;
            if edge && !fixed[i * m + j] {
                return Err(Error::InvalidParameter(format!(
                    "free node ({i}, {j}) lies on the grid border"
                )));
            }
        }
    }
    let mut field = boundary_field.clone();
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut worst = 0.0f64;
        let t = field.as_mut_slice();
        for i in 1..n.saturating_sub(1) {
            for j in 1..m - 1 {
                let k = i * m + j;
                if fixed[k] {
                    continue;
                }
                let v = 0.25 * (t[k + m] + t[k - m] + t[k + 1] + t[k - 1]);
                worst = worst.max((v - t[k]).abs());
                t[k] = v;
            }
        }
        last_update = worst;
        if worst < tol {
            return Ok(LaplaceSolution {
                field,
                converged: true,
                iterations,
                last_update,
            });
        }
    }
    Ok(LaplaceSolution {
        field,
        converged: false,
        iterations,
        last_update,
    })
}

/// Steady state of the rectangular Dirichlet problem, started from the mean
/// of the four edge values.
pub fn laplace_steady_state(shape: (usize, usize), boundary: &BoundarySpec, tol: f64, max_iters: usize) -> Result<LaplaceSolution> {
    let start = boundary.values().iter().sum::<f64>() / 4.0;
    let field = apply_dirichlet(&make_uniform_field(shape, start)?, boundary)?;
    laplace_solve_2d(&field, &edge_mask(shape)?, tol, max_iters)
}
