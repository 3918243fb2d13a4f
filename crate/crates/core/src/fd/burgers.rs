//! Inviscid Burgers `u_t + u u_x = 0` by first-order Godunov upwinding of the
//! conservative flux `u^2/2`, with zero-gradient ghost cells at both ends.

use crate::field::{Field, Trajectory};
use crate::{Error, Result};

#[inline]
fn flux(u: f64) -> f64 {
    0.5 * u * u
}

/// Exact Riemann flux for the convex flux `u^2/2`.
#[inline]
fn godunov_flux(ul: f64, ur: f64) -> f64 {
    flux(ul.max(0.0)).max(flux(ur.min(0.0)))
}

pub fn burgers_step_1d(u: &[f64], dt: f64, dx: f64) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(Error::InvalidParameter("Burgers state is empty".into()));
    }
    if !(dt >= 0.0 && dt.is_finite() && dx > 0.0 && dx.is_finite()) {
        return Err(Error::InvalidParameter(format!("need dt >= 0 and dx > 0, got dt={dt}, dx={dx}")));
    }
    let umax = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cfl = umax * dt / dx;
    if cfl > 1.0 {
        return Err(Error::CflViolation { cfl });
    }
    let n = u.len();
    let r = dt / dx;
    // Interface k sits between cells k-1 and k; ghosts copy the end cells.
    let faces: Vec<f64> = (0..=n)
        .map(|k| {
            let ul = u[k.saturating_sub(1)];
            let ur = u[k.min(n - 1)];
            godunov_flux(ul, ur)
        })
        .collect();
    Ok((0..n).map(|i| u[i] - r * (faces[i + 1] - faces[i])).collect())
}

/// Sum of absolute jumps between adjacent cells.
pub fn total_variation(u: &[f64]) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// A 1D Burgers initial-value problem stored as an `N x 1` column.
#[derive(Debug, Clone, PartialEq)]
pub struct BurgersProblem {
    initial: Field,
    dt: f64,
    dx: f64,
}

impl BurgersProblem {
    pub fn new(initial: Field, dt: f64, dx: f64) -> Result<Self> {
        if initial.cols() != 1 {
            return Err(Error::InvalidShape {
                rows: initial.rows(),
                cols: initial.cols(),
                reason: "Burgers states are N x 1 columns",
            });
        }
        if !(dt > 0.0 && dx > 0.0 && dt.is_finite() && dx.is_finite()) {
            return Err(Error::InvalidParameter(format!("need dt > 0 and dx > 0, got dt={dt}, dx={dx}")));
        }
        Ok(Self { initial, dt, dx })
    }

    /// Cell-centred samples of `u0` on `cells` cells of `[0, length]`.
    pub fn from_fn(cells: usize, length: f64, dt: f64, u0: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = length / cells as f64;
        let values = (0..cells).map(|i| u0((i as f64 + 0.5) * dx)).collect();
        Self::new(Field::column(values)?, dt, dx)
    }

    pub fn initial(&self) -> &Field {
        &self.initial
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn advance(&self, state: &Field, steps: usize) -> Result<Field> {
        if state.shape() != self.initial.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.initial.shape(),
                actual: state.shape(),
            });
        }
        let mut u = state.as_slice().to_vec();
        for _ in 0..steps {
            u = burgers_step_1d(&u, self.dt, self.dx)?;
        }
        Ok(Field::from_raw(u.len(), 1, u))
    }
}

pub fn burgers_solve(problem: &BurgersProblem, steps: usize) -> Result<Trajectory> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut u = problem.initial().as_slice().to_vec();
    out.push((0, problem.initial().clone()));
    for t in 1..=steps {
        u = burgers_step_1d(&u, problem.dt(), problem.dx())?;
        out.push((t, Field::from_raw(u.len(), 1, u.clone())));
    }
    Trajectory::new(out)
}
