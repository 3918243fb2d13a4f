//! Finite-difference PDE solvers and a chunked parallel-in-time propagation
//! framework.
//!
//! A time-dependent solution `X(0), X(1), ..., X(L)` is split into `P`
//! interleaved chunks `k, k+P, k+2P, ...`. Each chunk only needs its seed
//! state `X(k)` and a propagator that advances a state by `P` steps, so the
//! chunks run independently and are recombined afterwards.
//!
//! Modules:
//! - [`field`]: grid functions, boundary values, problems and trajectories.
//! - [`fd`]: explicit/implicit/Crank-Nicolson 1D heat, ADI 2D heat, upwind
//!   Burgers, Gauss-Seidel Laplace, and the Thomas tridiagonal solver.
//! - [`datagen`]: randomized training-pair generation and the dataset file.
//! - [`propagator`]: numerical, probed-affine and ridge P-step maps.
//! - [`chunker`]: chunk planning, seeding, execution, recombination, errors.
//! - [`bench`]: error metrics and the timing harness.

pub mod bench;
pub mod chunker;
pub mod datagen;
mod error;
pub mod fd;
pub mod field;
pub mod io;
pub mod parallel;
pub mod propagator;
pub mod verify;

pub use error::{Error, Result};
pub use field::{
    apply_dirichlet, make_uniform_field, BoundarySpec, ChunkPlan, Field, HeatProblem,
    InitialCondition, PermutationSample, Trajectory,
};
