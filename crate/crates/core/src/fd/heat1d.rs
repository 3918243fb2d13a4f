//! One-dimensional heat schemes on the interior nodes `T_1..T_m`.
//! Boundary values `f0` (left) and `fm1` (right) are passed per time level.

use super::tridiagonal::TridiagonalLu;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitStep {
    pub values: Vec<f64>,
    /// Set when `lambda > 1/2`, where the scheme is not stable.
    pub unstable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme1d {
    Explicit,
    Implicit,
    CrankNicolson,
}

fn check_interior(interior: &[f64]) -> Result<()> {
    if interior.is_empty() {
        return Err(Error::InvalidParameter("need at least one interior node".into()));
    }
    Ok(())
}

/// FTCS update `T_i + lambda (T_{i+1} - 2 T_i + T_{i-1})`.
pub fn explicit_step_1d(interior: &[f64], f0: f64, fm1: f64, lambda: f64) -> ExplicitStep {
    let m = interior.len();
    let at = |i: isize| -> f64 {
        if i < 0 {
            f0
        } else if i as usize >= m {
            fm1
        } else {
            interior[i as usize]
        }
    };
    let values = (0..m as isize)
        .map(|i| {
            let t = at(i);
            t + lambda * (at(i + 1) - 2.0 * t + at(i - 1))
        })
        .collect();
    let unstable = lambda > 0.5;
    if unstable {
        log::warn!("explicit scheme with lambda = {lambda} > 0.5 is unstable");
    }
    ExplicitStep { values, unstable }
}

/// Backward-Euler step: rows `-l T_{i-1} + (1+2l) T_i - l T_{i+1} = T_i^old`,
/// with `l*f0` and `l*fm1` moved to the first and last right-hand sides.
pub fn implicit_step_1d(interior: &[f64], f0_next: f64, fm1_next: f64, lambda: f64) -> Result<Vec<f64>> {
    check_interior(interior)?;
    let m = interior.len();
    let mut rhs = interior.to_vec();
    rhs[0] += lambda * f0_next;
    rhs[m - 1] += lambda * fm1_next;
    let lu = TridiagonalLu::constant(m, -lambda, 1.0 + 2.0 * lambda, -lambda)?;
    lu.solve_in_place(&mut rhs);
    Ok(rhs)
}

/// Crank-Nicolson step: `-l T_{i-1} + 2(1+l) T_i - l T_{i+1}` on the new
/// level equals `l T_{i-1} + 2(1-l) T_i + l T_{i+1}` on the old one; the
/// boundary rows pick up both `l f(t^l)` and `l f(t^{l+1})`.
pub fn crank_nicolson_step_1d(
    interior: &[f64],
    f0_now: f64,
    f0_next: f64,
    fm1_now: f64,
    fm1_next: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_interior(interior)?;
    let m = interior.len();
    let old = |i: isize| -> f64 {
        if i < 0 {
            f0_now
        } else if i as usize >= m {
            fm1_now
        } else {
            interior[i as usize]
        }
    };
    let mut rhs: Vec<f64> = (0..m as isize)
        .map(|i| lambda * old(i - 1) + 2.0 * (1.0 - lambda) * old(i) + lambda * old(i + 1))
        .collect();
    rhs[0] += lambda * f0_next;
    rhs[m - 1] += lambda * fm1_next;
    let lu = TridiagonalLu::constant(m, -lambda, 2.0 * (1.0 + lambda), -lambda)?;
    lu.solve_in_place(&mut rhs);
    Ok(rhs)
}

/// Runs `steps` steps of a 1D scheme. `left(l)` and `right(l)` give the
/// boundary temperatures at time level `l`. Returns levels `0..=steps`.
pub fn solve_1d(
    scheme: Scheme1d,
    initial: &[f64],
    left: impl Fn(usize) -> f64,
    right: impl Fn(usize) -> f64,
    lambda: f64,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    check_interior(initial)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.to_vec());
    for l in 0..steps {
        let cur = &out[l];
        let next = match scheme {
            Scheme1d::Explicit => explicit_step_1d(cur, left(l), right(l), lambda).values,
            Scheme1d::Implicit => implicit_step_1d(cur, left(l + 1), right(l + 1), lambda)?,
            Scheme1d::CrankNicolson => {
                crank_nicolson_step_1d(cur, left(l), left(l + 1), right(l), right(l + 1), lambda)?
            }
        };
        out.push(next);
    }
    Ok(out)
}
