//! Quick self-checks against independent oracles. Each check is small enough
//! that the whole suite runs in well under a second.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chunker::chunked_solve;
use crate::datagen::{encode_dataset, generate_dataset, GenConfig};
use crate::fd::{
    burgers_step_1d, crank_nicolson_step_1d, explicit_step_1d, heat_solve_2d, implicit_step_1d, laplace_steady_state,
    thomas_solve, total_variation, TridiagonalSystem,
};
use crate::field::{apply_dirichlet, BoundarySpec, Field, HeatProblem};
use crate::propagator::{numerical_propagator, probe_affine, ProblemClass, Propagator};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dense_solve(m: usize, diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => diag,
        1 => off,
        _ => 0.0,
    });
    let x = a.lu().solve(&DVector::from_column_slice(rhs)).expect("diagonally dominant");
    x.iter().copied().collect()
}

fn demo_problem(n: usize) -> Result<HeatProblem> {
    HeatProblem::uniform((n, n), BoundarySpec::new(600.0, 500.0, 194.0, 248.0)?, 254.0, 0.27047)
}

pub fn run_all() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut out = Vec::new();

    out.push(check("thomas vs dense LU", || {
        let m = 40;
        let lower: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..m).map(|_| rng.gen_range(3.0..5.0)).collect();
        let rhs: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let a = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                diag[i]
            } else if i == j + 1 {
                lower[i]
            } else if j == i + 1 {
                upper[i]
            } else {
                0.0
            }
        });
        let x = thomas_solve(&TridiagonalSystem::new(lower, diag, upper, rhs.clone())?)?;
        let oracle = a.lu().solve(&DVector::from_vec(rhs)).expect("dominant");
        let err = max_abs(&x, oracle.as_slice());
        Ok((err < 1e-10, format!("max diff {err:.2e}")))
    }));

    out.push(check("implicit and Crank-Nicolson vs dense assembly", || {
        let m = 30;
        let lambda = 0.8;
        let t: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..100.0)).collect();
        let (l0, l1, r0, r1) = (10.0, 20.0, 30.0, 40.0);
        let mut rhs = t.clone();
        rhs[0] += lambda * l1;
        rhs[m - 1] += lambda * r1;
        let e1 = max_abs(&implicit_step_1d(&t, l1, r1, lambda)?, &dense_solve(m, 1.0 + 2.0 * lambda, -lambda, &rhs));
        let mut rhs: Vec<f64> = (0..m)
            .map(|i| {
                let left = if i == 0 { l0 } else { t[i - 1] };
                let right = if i + 1 == m { r0 } else { t[i + 1] };
                lambda * left + 2.0 * (1.0 - lambda) * t[i] + lambda * right
            })
            .collect();
        rhs[0] += lambda * l1;
        rhs[m - 1] += lambda * r1;
        let cn = crank_nicolson_step_1d(&t, l0, l1, r0, r1, lambda)?;
        let e2 = max_abs(&cn, &dense_solve(m, 2.0 * (1.0 + lambda), -lambda, &rhs));
        Ok((e1.max(e2) < 1e-10, format!("implicit {e1:.2e}, cn {e2:.2e}")))
    }));

    out.push(check("explicit stability threshold", || {
        let ic: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let run = |lambda: f64| {
            let mut u = ic.clone();
            for _ in 0..200 {
                u = explicit_step_1d(&u, 0.0, 0.0, lambda).values;
            }
            u.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        };
        let (grow, stay) = (run(0.6), run(0.5));
        Ok((grow > 10.0 && stay <= 1.0 + 1e-9, format!("amplitude {grow:.2e} at 0.6, {stay:.3} at 0.5")))
    }));

    out.push(check("chunked numerical run is bitwise sequential", || {
        let problem = demo_problem(12)?;
        let reference = heat_solve_2d(&problem, 100)?;
        let class = ProblemClass::Heat(problem);
        let prop = numerical_propagator(&class, 10)?;
        let (_, traj) = chunked_solve(&class, 100, &prop, 0)?;
        Ok((traj == reference, format!("{} states compared", traj.len())))
    }));

    out.push(check("probed affine map vs solver", || {
        let class = ProblemClass::Heat(demo_problem(8)?);
        let affine = probe_affine(&class, 10)?;
        let exact = numerical_propagator(&class, 10)?;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let x = Field::new(8, 8, (0..64).map(|_| rng.gen_range(0.0..500.0)).collect())?;
            let x = apply_dirichlet(&x, affine.boundary())?;
            worst = worst.max(max_abs(affine.advance(&x)?.as_slice(), exact.advance(&x)?.as_slice()));
        }
        Ok((worst < 1e-9, format!("max diff {worst:.2e}")))
    }));

    out.push(check("ADI steady state vs Laplace", || {
        let bc = BoundarySpec::new(600.0, 500.0, 194.0, 248.0)?;
        let lap = laplace_steady_state((10, 10), &bc, 1e-12, 100_000)?;
        let problem = HeatProblem::uniform((10, 10), bc, 254.0, 2.0)?;
        let adi = heat_solve_2d(&problem, 2000)?;
        let err = max_abs(adi.last().unwrap().1.as_slice(), lap.field.as_slice());
        Ok((lap.converged && err < 1e-6, format!("max diff {err:.2e}")))
    }));

    out.push(check("Burgers fixed points and total variation", || {
        let constant = vec![0.7; 32];
        let fixed = burgers_step_1d(&constant, 0.01, 0.05)? == constant;
        let mut u: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut tv = total_variation(&u);
        let mut monotone = true;
        for _ in 0..200 {
            u = burgers_step_1d(&u, 0.4 / 64.0, 1.0 / 64.0)?;
            let next = total_variation(&u);
            monotone &= next <= tv + 1e-12;
            tv = next;
        }
        Ok((fixed && monotone, format!("final TV {tv:.4}")))
    }));

    out.push(check("dataset generation is deterministic", || {
        let config = GenConfig {
            batches: 2,
            batch_size: 3,
            shape: (6, 6),
            t_range: (0, 20),
            pred_step: 4,
            seed: 7,
            ..GenConfig::default()
        };
        let a = encode_dataset(&generate_dataset(&config)?)?;
        let b = encode_dataset(&generate_dataset(&config)?)?;
        Ok((a == b, format!("{} bytes", a.len())))
    }));

    out
}
