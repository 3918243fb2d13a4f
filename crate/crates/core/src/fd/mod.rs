//! Finite-difference schemes: 1D heat (explicit, implicit, Crank-Nicolson),
//! 2D heat by alternating direction implicit, inviscid Burgers by Godunov
//! upwinding, and the five-point Laplace iteration.

mod adi;
mod burgers;
mod heat1d;
mod laplace;
mod tridiagonal;

pub use adi::{adi_step_2d, heat_advance, heat_solve_2d};
pub use burgers::{burgers_solve, burgers_step_1d, total_variation, BurgersProblem};
pub use heat1d::{
    crank_nicolson_step_1d, explicit_step_1d, implicit_step_1d, solve_1d, ExplicitStep, Scheme1d,
};
pub use laplace::{edge_mask, laplace_solve_2d, laplace_steady_state, LaplaceSolution};
pub use tridiagonal::{thomas_solve, TridiagonalLu, TridiagonalSystem};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    Explicit,
    Implicit,
    CrankNicolson,
    Adi,
    BurgersUpwind,
    LaplaceIterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    ConditionallyUnstable,
}

/// Linear stability of a scheme at a given step parameter.
///
/// For the heat schemes the parameter is `lambda = k*dt/dx^2`; the explicit
/// scheme is stable iff `lambda <= 1/2`, the implicit ones for all
/// `lambda >= 0`. For `BurgersUpwind` it is read as the CFL number (stable
/// iff `<= 1`). The Laplace iteration has no time step and is always stable.
pub fn stability_classify(scheme: SchemeKind, lambda: f64) -> Stability {
    let stable = match scheme {
        SchemeKind::Explicit => lambda <= 0.5,
        SchemeKind::Implicit | SchemeKind::CrankNicolson | SchemeKind::Adi => true,
        SchemeKind::BurgersUpwind => lambda <= 1.0,
        SchemeKind::LaplaceIterative => true,
    };
    if stable {
        Stability::Stable
    } else {
        Stability::ConditionallyUnstable
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify() {
        assert_eq!(stability_classify(SchemeKind::Explicit, 0.5), Stability::Stable);
        assert_eq!(
            stability_classify(SchemeKind::Explicit, 0.6),
            Stability::ConditionallyUnstable
        );
        assert_eq!(stability_classify(SchemeKind::Adi, 1.0), Stability::Stable);
        assert_eq!(stability_classify(SchemeKind::Implicit, 50.0), Stability::Stable);
        assert_eq!(stability_classify(SchemeKind::CrankNicolson, 3.0), Stability::Stable);
        assert_eq!(
            stability_classify(SchemeKind::BurgersUpwind, 1.2),
            Stability::ConditionallyUnstable
        );
    }
}
