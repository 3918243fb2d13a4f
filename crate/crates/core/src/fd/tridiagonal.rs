//! Thomas algorithm (forward elimination, back substitution).

use crate::{Error, Result};

/// `lower[0]` and `upper[m-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let m = diag.len();
        if m == 0 || lower.len() != m || upper.len() != m || rhs.len() != m {
            return Err(Error::InvalidParameter(format!(
                "tridiagonal bands must share a nonzero length (lower {}, diag {}, upper {}, rhs {})",
                lower.len(),
                m,
                upper.len(),
                rhs.len()
            )));
        }
        Ok(Self {
            lower,
            diag,
            upper,
            rhs,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x` with the stored bands.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < m {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

pub fn thomas_solve(system: &TridiagonalSystem) -> Result<Vec<f64>> {
    let lu = TridiagonalLu::factor(&system.lower, &system.diag, &system.upper)?;
    let mut x = system.rhs.clone();
    lu.solve_in_place(&mut x);
    Ok(x)
}

/// Elimination coefficients of a tridiagonal matrix, reusable across many
/// right-hand sides (every row sweep of an ADI half step shares one matrix).
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    /// Pivots `b_i - a_i c'_{i-1}`.
    pivot: Vec<f64>,
    /// Modified super-diagonal `c'_i`.
    upper: Vec<f64>,
}

impl TridiagonalLu {
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let m = diag.len();
        if m == 0 || lower.len() != m || upper.len() != m {
            return Err(Error::InvalidParameter("tridiagonal bands must share a nonzero length".into()));
        }
        let mut pivot = vec![0.0; m];
        let mut c = vec![0.0; m];
        for i in 0..m {
            let den = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * c[i - 1]
            };
            if den == 0.0 || !den.is_finite() {
                return Err(Error::SingularSystem { row: i });
            }
            pivot[i] = den;
            if i + 1 < m {
                c[i] = upper[i] / den;
            }
        }
        Ok(Self {
            lower: lower.to_vec(),
            pivot,
            upper: c,
        })
    }

    /// Constant bands: `sub` below, `diag` on, `sup` above the diagonal.
    pub fn constant(m: usize, sub: f64, diag: f64, sup: f64) -> Result<Self> {
        Self::factor(&vec![sub; m], &vec![diag; m], &vec![sup; m])
    }

    pub fn len(&self) -> usize {
        self.pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let m = self.pivot.len();
        assert_eq!(rhs.len(), m, "rhs length must match the factored system");
        rhs[0] /= self.pivot[0];
        for i in 1..m {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / self.pivot[i];
        }
        for i in (0..m - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}
