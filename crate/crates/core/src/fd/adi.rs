//! Peaceman-Rachford alternating direction implicit step for the 2D heat
//! equation on a square-spaced grid.
//!
//! Half step one is implicit along each interior row (index `j`) and
//! explicit across rows:
//!
//! `-l T[i][j-1] + 2(1+l) T[i][j] - l T[i][j+1] = l T[i-1][j] + 2(1-l) T[i][j] + l T[i+1][j]`
//!
//! Half step two swaps the roles, implicit along each interior column.
//! Both half steps use the same constant Dirichlet edges.

use super::tridiagonal::TridiagonalLu;
use crate::field::{apply_dirichlet_in_place, BoundarySpec, Field, HeatProblem, Trajectory};
use crate::parallel::map_indexed_min;
use crate::{Error, Result};

/// Fan the independent line solves out only on grids at least this tall.
const PARALLEL_MIN_LINES: usize = 64;

pub fn adi_step_2d(field: &Field, boundary: &BoundarySpec, lambda: f64) -> Result<Field> {
    let (n, m) = field.shape();
    if n < 3 || m < 3 {
        return Err(Error::InvalidShape {
            rows: n,
            cols: m,
            reason: "ADI needs a 2D field of at least 3x3",
        });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut cur = field.clone();
    apply_dirichlet_in_place(&mut cur, boundary)?;
    let stepper = AdiStepper::new((n, m), *boundary, lambda)?;
    Ok(stepper.step(&cur))
}

/// Factored line systems for one (shape, lambda) pair.
pub(crate) struct AdiStepper {
    rows: usize,
    cols: usize,
    boundary: BoundarySpec,
    lambda: f64,
    row_lu: TridiagonalLu,
    col_lu: TridiagonalLu,
}

impl AdiStepper {
    pub(crate) fn new(shape: (usize, usize), boundary: BoundarySpec, lambda: f64) -> Result<Self> {
        let (rows, cols) = shape;
        let (sub, diag) = (-lambda, 2.0 * (1.0 + lambda));
        Ok(Self {
            rows,
            cols,
            boundary,
            lambda,
            row_lu: TridiagonalLu::constant(cols - 2, sub, diag, sub)?,
            col_lu: TridiagonalLu::constant(rows - 2, sub, diag, sub)?,
        })
    }

    /// One full step. `cur` must already carry the Dirichlet edges.
    pub(crate) fn step(&self, cur: &Field) -> Field {
        let (n, m) = (self.rows, self.cols);
        let l = self.lambda;
        let c = 2.0 * (1.0 - l);
        let bc = &self.boundary;

        let row_solutions = map_indexed_min(n - 2, PARALLEL_MIN_LINES, |r| {
            let i = r + 1;
            let (up, mid, down) = (cur.row(i - 1), cur.row(i), cur.row(i + 1));
            let mut rhs: Vec<f64> = (1..m - 1)
                .map(|j| l * up[j] + c * mid[j] + l * down[j])
                .collect();
            rhs[0] += l * bc.left;
            rhs[m - 3] += l * bc.right;
            self.row_lu.solve_in_place(&mut rhs);
            rhs
        });
        let mut half = cur.clone();
        for (r, sol) in row_solutions.iter().enumerate() {
            let i = r + 1;
            half.as_mut_slice()[i * m + 1..i * m + m - 1].copy_from_slice(sol);
        }

        let col_solutions = map_indexed_min(m - 2, PARALLEL_MIN_LINES, |s| {
            let j = s + 1;
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| l * half.get(i, j - 1) + c * half.get(i, j) + l * half.get(i, j + 1))
                .collect();
            rhs[0] += l * bc.top;
            rhs[n - 3] += l * bc.bottom;
            self.col_lu.solve_in_place(&mut rhs);
            rhs
        });
        let mut next = half;
        for (s, sol) in col_solutions.iter().enumerate() {
            let j = s + 1;
            for (r, &v) in sol.iter().enumerate() {
                next.set(r + 1, j, v);
            }
        }
        apply_dirichlet_in_place(&mut next, bc).expect("shape checked");
        next
    }
}

/// Advances `field` by `steps` ADI steps under fixed edges and lambda.
pub fn heat_advance(field: &Field, boundary: &BoundarySpec, lambda: f64, steps: usize) -> Result<Field> {
    let mut cur = field.clone();
    apply_dirichlet_in_place(&mut cur, boundary)?;
    if steps == 0 {
        return Ok(cur);
    }
    let stepper = AdiStepper::new(field.shape(), *boundary, lambda)?;
    for _ in 0..steps {
        cur = stepper.step(&cur);
    }
    Ok(cur)
}

/// States `X(0..=steps)`, starting from the initial condition with edges
/// applied.
pub fn heat_solve_2d(problem: &HeatProblem, steps: usize) -> Result<Trajectory> {
    let stepper = AdiStepper::new(problem.shape(), *problem.boundary(), problem.lambda())?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut cur = problem.initial_field();
    states.push((0, cur.clone()));
    for t in 1..=steps {
        cur = stepper.step(&cur);
        states.push((t, cur.clone()));
    }
    Trajectory::new(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{apply_dirichlet, make_uniform_field};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Assembles each half step as one dense linear system over all
    /// interior nodes and solves it with LU.
    fn dense_adi_oracle(field: &Field, bc: &BoundarySpec, l: f64) -> Field {
        let (n, m) = field.shape();
        let (ni, mi) = (n - 2, m - 2);
        let d = ni * mi;
        let idx = |i: usize, j: usize| (i - 1) * mi + (j - 1);
        let value = |f: &DVector<f64>, i: usize, j: usize| -> f64 {
            if i == 0 {
                bc.top
            } else if i == n - 1 {
                bc.bottom
            } else if j == 0 {
                bc.left
            } else if j == m - 1 {
                bc.right
            } else {
                f[idx(i, j)]
            }
        };
        let old = DVector::from_vec(field.interior());

        let mut a = DMatrix::zeros(d, d);
        let mut b = DVector::zeros(d);
        for i in 1..n - 1 {
            for j in 1..m - 1 {
                let r = idx(i, j);
                a[(r, r)] = 2.0 * (1.0 + l);
                b[r] = l * value(&old, i - 1, j) + 2.0 * (1.0 - l) * value(&old, i, j) + l * value(&old, i + 1, j);
                for jj in [j - 1, j + 1] {
                    if jj == 0 || jj == m - 1 {
                        b[r] += l * value(&old, i, jj);
                    } else {
                        a[(r, idx(i, jj))] = -l;
                    }
                }
            }
        }
        let half = a.lu().solve(&b).unwrap();

        let mut a = DMatrix::zeros(d, d);
        let mut b = DVector::zeros(d);
        for i in 1..n - 1 {
            for j in 1..m - 1 {
                let r = idx(i, j);
                a[(r, r)] = 2.0 * (1.0 + l);
                b[r] = l * value(&half, i, j - 1) + 2.0 * (1.0 - l) * value(&half, i, j) + l * value(&half, i, j + 1);
                for ii in [i - 1, i + 1] {
                    if ii == 0 || ii == n - 1 {
                        b[r] += l * value(&half, ii, j);
                    } else {
                        a[(r, idx(ii, j))] = -l;
                    }
                }
            }
        }
        let next = a.lu().solve(&b).unwrap();
        apply_dirichlet(field, bc).unwrap().with_interior(next.as_slice()).unwrap()
    }

    fn max_abs_diff(a: &Field, b: &Field) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn equilibrium_is_fixed() {
        let bc = BoundarySpec::uniform(42.0).unwrap();
        let f = make_uniform_field((7, 9), 42.0).unwrap();
        for l in [0.1, 1.0, 5.0] {
            let out = adi_step_2d(&f, &bc, l).unwrap();
            assert!(max_abs_diff(&out, &f) < 1e-12);
        }
    }

    #[test]
    fn zero_lambda_keeps_interior() {
        let bc = BoundarySpec::new(1.0, 2.0, 3.0, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::new(6, 6, (0..36).map(|_| rng.gen_range(0.0..10.0)).collect()).unwrap();
        let out = adi_step_2d(&f, &bc, 0.0).unwrap();
        assert_eq!(out.interior(), f.interior());
    }

    #[test]
    fn matches_dense_oracle_fig_params() {
        let bc = BoundarySpec::new(600.0, 500.0, 194.0, 248.0).unwrap();
        let p = HeatProblem::uniform((12, 12), bc, 254.0, 0.27047).unwrap();
        let x0 = p.initial_field();
        let out = adi_step_2d(&x0, &bc, 0.27047).unwrap();
        let oracle = dense_adi_oracle(&x0, &bc, 0.27047);
        assert!(max_abs_diff(&out, &oracle) < 1e-10);

        // Also from a non-trivial state (step 10) on a rectangular grid.
        let x10 = heat_advance(&x0, &bc, 0.27047, 10).unwrap();
        let out = adi_step_2d(&x10, &bc, 0.27047).unwrap();
        assert!(max_abs_diff(&out, &dense_adi_oracle(&x10, &bc, 0.27047)) < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = Field::new(7, 10, (0..70).map(|_| rng.gen_range(0.0..100.0)).collect()).unwrap();
        let out = adi_step_2d(&f, &bc, 0.9).unwrap();
        assert!(max_abs_diff(&out, &dense_adi_oracle(&f, &bc, 0.9)) < 1e-10);
    }

    #[test]
    fn solve_zero_steps() {
        let bc = BoundarySpec::uniform(1.0).unwrap();
        let p = HeatProblem::uniform((5, 5), bc, 0.0, 0.5).unwrap();
        let t = heat_solve_2d(&p, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.states()[0], p.initial_field());
    }

    #[test]
    fn trajectory_respects_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..100.0)).collect();
            let lambda = rng.gen_range(0.0..=1.0);
            let rows = rng.gen_range(3..14);
            let cols = rng.gen_range(3..14);
            let bc = BoundarySpec::new(v[0], v[1], v[2], v[3]).unwrap();
            let p = HeatProblem::uniform((rows, cols), bc, v[4], lambda).unwrap();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min) - 1e-9;
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
            for s in heat_solve_2d(&p, 60).unwrap().states() {
                assert!(s.min() >= lo && s.max() <= hi);
            }
        }
    }

    #[test]
    fn linear_in_state_with_zero_edges() {
        let bc = BoundarySpec::uniform(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rand_field = || {
            let f = Field::new(8, 8, (0..64).map(|_| rng.gen_range(-50.0..50.0)).collect()).unwrap();
            apply_dirichlet(&f, &bc).unwrap()
        };
        let (u, v) = (rand_field(), rand_field());
        let (a, b) = (0.3, -2.0);
        let w = Field::new(8, 8, u.as_slice().iter().zip(v.as_slice()).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let su = adi_step_2d(&u, &bc, 0.6).unwrap();
        let sv = adi_step_2d(&v, &bc, 0.6).unwrap();
        let sw = adi_step_2d(&w, &bc, 0.6).unwrap();
        let combo: Vec<f64> = su.as_slice().iter().zip(sv.as_slice()).map(|(x, y)| a * x + b * y).collect();
        let diff = sw.as_slice().iter().zip(&combo).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn rejects_small_grids() {
        let bc = BoundarySpec::uniform(0.0).unwrap();
        assert!(adi_step_2d(&Field::zeros(2, 5).unwrap(), &bc, 0.5).is_err());
    }
}
