//! Chunked parallel-in-time execution.
//!
//! Time indices `0..=L` are split into `P` chunks `k, k+P, k+2P, ...`. Chunk
//! `k` starts from the seed state `X(k)` and repeatedly applies a P-step
//! propagator, so it needs at most `floor(L/P)` applications and shares
//! nothing with the other chunks. Recombining the chunks by time index gives
//! the full trajectory. With the numerical propagator the result is the
//! sequential solution, bit for bit.

use serde::Serialize;

use crate::bench::{mae, mse};
use crate::fd::{burgers_solve, heat_solve_2d};
use crate::field::{ChunkPlan, Field, Trajectory};
use crate::parallel::{try_map_indexed, with_workers};
use crate::propagator::{ProblemClass, Propagator};
use crate::{Error, Result};

pub fn plan_chunks(last: usize, pred_step: usize) -> Result<ChunkPlan> {
    ChunkPlan::new(last, pred_step)
}

/// `X(0), ..., X(P-1)` by sequential numerical stepping.
pub fn seed_states(problem: &ProblemClass, pred_step: usize) -> Result<Vec<Field>> {
    if pred_step == 0 {
        return Err(Error::InvalidParameter("prediction step must be >= 1".into()));
    }
    let traj = match problem {
        ProblemClass::Heat(p) => heat_solve_2d(p, pred_step - 1)?,
        ProblemClass::Burgers(p) => burgers_solve(p, pred_step - 1)?,
    };
    Ok(traj.states().to_vec())
}

/// Seeds from repeated application of a single-step propagator instead of
/// the solver. Only as accurate as that propagator.
pub fn seed_states_with(initial: &Field, single_step: &dyn Propagator, pred_step: usize) -> Result<Vec<Field>> {
    if single_step.pred_step() != 1 {
        return Err(Error::InvalidParameter(format!(
            "seeding needs a 1-step propagator, got P = {}",
            single_step.pred_step()
        )));
    }
    if pred_step == 0 {
        return Err(Error::InvalidParameter("prediction step must be >= 1".into()));
    }
    let mut seeds = vec![initial.clone()];
    while seeds.len() < pred_step {
        let next = single_step.advance(seeds.last().unwrap())?;
        seeds.push(next);
    }
    Ok(seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkRun {
    pub chunk: usize,
    /// `L` of the plan this run belongs to.
    pub last: usize,
    pub pred_step: usize,
    /// `(time index, state)` in increasing time; the first entry is the seed.
    pub states: Vec<(usize, Field)>,
    /// Propagator applications performed.
    pub recursions: usize,
}

/// Runs every chunk of `plan` on up to `workers` threads (`0` keeps the
/// current pool). Output does not depend on the worker count.
pub fn run_chunks(
    plan: &ChunkPlan,
    seeds: &[Field],
    propagator: &dyn Propagator,
    workers: usize,
) -> Result<Vec<ChunkRun>> {
    let p = plan.step();
    if seeds.len() != p {
        return Err(Error::InvalidParameter(format!("expected {p} seed states, got {}", seeds.len())));
    }
    if propagator.pred_step() != p {
        return Err(Error::InvalidParameter(format!(
            "propagator advances {} steps but the plan needs {p}",
            propagator.pred_step()
        )));
    }
    let run_one = |k: usize| -> Result<ChunkRun> {
        let indices = plan.chunk(k);
        let mut states: Vec<(usize, Field)> = Vec::with_capacity(indices.len());
        for &t in indices {
            let state = match states.last() {
                None => seeds[k].clone(),
                Some((_, prev)) => propagator.advance(prev)?,
            };
            states.push((t, state));
        }
        Ok(ChunkRun {
            chunk: k,
            last: plan.last(),
            pred_step: p,
            recursions: states.len().saturating_sub(1),
            states,
        })
    };
    with_workers(workers, || try_map_indexed(p, run_one)).map_err(|(chunk, source)| Error::ChunkFailed {
        chunk,
        source: Box::new(source),
    })
}

/// Merges chunk runs into one trajectory over `0..=L`. Runs may come in any
/// order; missing or repeated time indices are reported.
pub fn recombine(runs: &[ChunkRun]) -> Result<Trajectory> {
    let last = runs
        .iter()
        .map(|r| r.last)
        .max()
        .ok_or_else(|| Error::MalformedRuns {
            missing: vec![0],
            duplicated: vec![],
        })?;
    let mut slots: Vec<Option<&Field>> = vec![None; last + 1];
    let mut duplicated = Vec::new();
    for run in runs {
        for (t, state) in &run.states {
            match slots.get_mut(*t) {
                Some(slot @ None) => *slot = Some(state),
                _ => duplicated.push(*t),
            }
        }
    }
    let missing: Vec<usize> = slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(t, _)| t)
        .collect();
    if !missing.is_empty() || !duplicated.is_empty() {
        duplicated.sort_unstable();
        return Err(Error::MalformedRuns { missing, duplicated });
    }
    Trajectory::new(
        slots
            .into_iter()
            .enumerate()
            .map(|(t, s)| (t, s.unwrap().clone()))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkError {
    pub chunk: usize,
    pub samples: usize,
    pub mse: f64,
    pub mae: f64,
}

/// Errors per chunk and over the union of all chunks. Each state counts
/// once; a state's error is the mean over its nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkErrorReport {
    pub chunks: Vec<ChunkError>,
    pub samples: usize,
    pub full_mse: f64,
    pub full_mae: f64,
}

pub fn chunk_error_report(runs: &[ChunkRun], reference: &Trajectory) -> Result<ChunkErrorReport> {
    let mut chunks = Vec::with_capacity(runs.len());
    let (mut se, mut ae, mut total) = (0.0, 0.0, 0usize);
    for run in runs {
        let (mut cse, mut cae) = (0.0, 0.0);
        for (t, state) in &run.states {
            let exact = reference.get(*t).ok_or(Error::IndexMismatch(*t))?;
            cse += mse(state, exact)?;
            cae += mae(state, exact)?;
        }
        let n = run.states.len();
        se += cse;
        ae += cae;
        total += n;
        let (m_se, m_ae) = if n == 0 { (0.0, 0.0) } else { (cse / n as f64, cae / n as f64) };
        chunks.push(ChunkError {
            chunk: run.chunk,
            samples: n,
            mse: m_se,
            mae: m_ae,
        });
    }
    let (full_mse, full_mae) = if total == 0 {
        (0.0, 0.0)
    } else {
        (se / total as f64, ae / total as f64)
    };
    Ok(ChunkErrorReport {
        chunks,
        samples: total,
        full_mse,
        full_mae,
    })
}

/// Plan, seed, run and recombine in one call.
pub fn chunked_solve(
    problem: &ProblemClass,
    last: usize,
    propagator: &dyn Propagator,
    workers: usize,
) -> Result<(Vec<ChunkRun>, Trajectory)> {
    let plan = plan_chunks(last, propagator.pred_step())?;
    let seeds = seed_states(problem, propagator.pred_step())?;
    let runs = run_chunks(&plan, &seeds, propagator, workers)?;
    let traj = recombine(&runs)?;
    Ok((runs, traj))
}
