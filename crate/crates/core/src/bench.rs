//! Error metrics and the solver-vs-propagator timing harness.
//!
//! Timings are medians over `reps` runs after one discarded warm-up, all on a
//! single worker. Ratios are data to be reported; nothing here asserts a
//! particular speedup.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::field::{Field, PermutationSample};
use crate::parallel::with_workers;
use crate::propagator::{AnyPropagator, ProblemClass, Propagator};
use crate::{Error, Result};

fn check_shapes(a: &Field, b: &Field) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            actual: b.shape(),
        });
    }
    Ok(())
}

pub fn mae(a: &Field, b: &Field) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / a.len() as f64)
}

pub fn mse(a: &Field, b: &Field) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

pub const MIN_REPS: usize = 3;

/// Column names of [`records_to_csv`], in order.
pub const CSV_COLUMNS: [&str; 9] = [
    "rows",
    "cols",
    "steps",
    "pred_step",
    "reps",
    "numerical_s",
    "propagator_s",
    "ratio",
    "mae",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub rows: usize,
    pub cols: usize,
    /// Solver iterations covered by both sides.
    pub steps: usize,
    pub pred_step: usize,
    pub reps: usize,
    /// Median seconds for `steps` solver iterations.
    pub numerical_s: f64,
    /// Median seconds for `steps / pred_step` propagator advances.
    pub propagator_s: f64,
    /// `numerical_s / propagator_s`.
    pub ratio: f64,
    /// Between the two end states.
    pub mae: f64,
}

fn median_time<T>(reps: usize, mut run: impl FnMut() -> Result<T>) -> Result<(Duration, T)> {
    let mut last = run()?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        last = run()?;
        times.push(start.elapsed());
    }
    times.sort_unstable();
    let median = times[reps / 2];
    if median < Duration::from_micros(1) {
        return Err(Error::TimerResolution {
            elapsed_ns: median.as_nanos(),
        });
    }
    Ok((median, last))
}

/// Times `steps` solver iterations against `steps / P` propagator advances
/// from the problem's initial state.
pub fn bench_chunk(problem: &ProblemClass, steps: usize, propagator: &dyn Propagator, reps: usize) -> Result<BenchRecord> {
    if reps < MIN_REPS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_REPS} repetitions, got {reps}")));
    }
    let p = propagator.pred_step();
    if steps == 0 || steps % p != 0 {
        return Err(Error::InvalidParameter(format!(
            "steps ({steps}) must be a positive multiple of the prediction step ({p})"
        )));
    }
    if propagator.shape() != problem.shape() {
        return Err(Error::ShapeMismatch {
            expected: problem.shape(),
            actual: propagator.shape(),
        });
    }
    let x0 = problem.initial_field();
    with_workers(1, || {
        let (t_num, exact) = median_time(reps, || problem.step_n(&x0, steps))?;
        let (t_prop, approx) = median_time(reps, || {
            let mut cur = x0.clone();
            for _ in 0..steps / p {
                cur = propagator.advance(&cur)?;
            }
            Ok(cur)
        })?;
        let (numerical_s, propagator_s) = (t_num.as_secs_f64(), t_prop.as_secs_f64());
        let (rows, cols) = problem.shape();
        Ok(BenchRecord {
            rows,
            cols,
            steps,
            pred_step: p,
            reps,
            numerical_s,
            propagator_s,
            ratio: numerical_s / propagator_s,
            mae: mae(&approx, &exact)?,
        })
    })
}

/// One propagator application against `P` solver iterations.
pub fn bench_single_chunk(problem: &ProblemClass, propagator: &dyn Propagator, reps: usize) -> Result<BenchRecord> {
    bench_chunk(problem, propagator.pred_step(), propagator, reps)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Square grid sizes.
    pub grids: Vec<usize>,
    pub steps: Vec<usize>,
    pub pred_step: usize,
    pub reps: usize,
    pub permutation: PermutationSample,
}

/// One record per `(grid, steps)` pair, grids outermost. The factory builds
/// one propagator per grid; its cost is not timed.
pub fn bench_sweep<F>(config: &SweepConfig, factory: F) -> Result<Vec<BenchRecord>>
where
    F: Fn(&ProblemClass, usize) -> Result<AnyPropagator>,
{
    if config.grids.is_empty() || config.steps.is_empty() {
        return Err(Error::InvalidParameter("grid and step lists must be non-empty".into()));
    }
    let mut records = Vec::with_capacity(config.grids.len() * config.steps.len());
    for &n in &config.grids {
        let problem = ProblemClass::Heat(config.permutation.to_problem((n, n))?);
        let propagator = factory(&problem, config.pred_step)?;
        for &steps in &config.steps {
            records.push(bench_chunk(&problem, steps, &propagator, config.reps)?);
        }
    }
    Ok(records)
}

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{},{:e}\n",
            r.rows, r.cols, r.steps, r.pred_step, r.reps, r.numerical_s, r.propagator_s, r.ratio, r.mae
        ));
    }
    out
}
