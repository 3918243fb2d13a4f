//! Shared domain types: grid fields, boundary values, heat problems,
//! trajectories and chunk plans.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major grid function. Entry `(i, j)` sits at `x = j*dx`,
/// `y = i*dy`. One-dimensional data is stored as an `N x 1` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::InvalidShape {
                rows,
                cols,
                reason: "data length does not match rows*cols",
            });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { rows, cols, data })
    }

    /// Column field (`N x 1`) from a 1D vector.
    pub fn column(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(n, 1, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        make_uniform_field((rows, cols), 0.0)
    }

    /// Skips the finiteness scan. Callers guarantee the shape.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of interior nodes of a 2D field (`(N-2)*(M-2)`).
    pub fn interior_len(&self) -> usize {
        self.rows.saturating_sub(2) * self.cols.saturating_sub(2)
    }

    /// Interior nodes in row-major order.
    pub fn interior(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.interior_len());
        for i in 1..self.rows.saturating_sub(1) {
            out.extend_from_slice(&self.row(i)[1..self.cols - 1]);
        }
        out
    }

    /// Copy of `self` with the interior replaced by `values` (row-major).
    pub fn with_interior(&self, values: &[f64]) -> Result<Field> {
        if values.len() != self.interior_len() || self.rows < 3 || self.cols < 3 {
            return Err(Error::InvalidParameter(format!(
                "interior of a {}x{} field has {} nodes, got {}",
                self.rows,
                self.cols,
                self.interior_len(),
                values.len()
            )));
        }
        let mut out = self.clone();
        let w = self.cols - 2;
        for (r, chunk) in values.chunks(w).enumerate() {
            let start = (r + 1) * self.cols + 1;
            out.data[start..start + w].copy_from_slice(chunk);
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Row-major little-endian IEEE-754 doubles, no padding.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 8);
        self.write_le_bytes(&mut out);
        out
    }

    pub fn write_le_bytes(&self, out: &mut Vec<u8>) {
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn from_le_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Field> {
        check_dims(rows, cols)?;
        if bytes.len() != rows * cols * 8 {
            return Err(Error::InvalidShape {
                rows,
                cols,
                reason: "byte length does not match rows*cols*8",
            });
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Field::new(rows, cols, data)
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidShape {
            rows,
            cols,
            reason: "dimensions must be at least 1",
        });
    }
    Ok(())
}

pub fn make_uniform_field(shape: (usize, usize), value: f64) -> Result<Field> {
    let (rows, cols) = shape;
    check_dims(rows, cols)?;
    if !value.is_finite() {
        return Err(Error::NonFinite { index: 0, value });
    }
    Ok(Field::from_raw(rows, cols, vec![value; rows * cols]))
}

/// Constant Dirichlet temperatures on the four edges of a 2D grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub top: f64,
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
}

impl BoundarySpec {
    pub fn new(top: f64, bottom: f64, left: f64, right: f64) -> Result<Self> {
        let spec = Self {
            top,
            bottom,
            left,
            right,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(value: f64) -> Result<Self> {
        Self::new(value, value, value, value)
    }

    pub fn validate(&self) -> Result<()> {
        for (index, value) in self.values().into_iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
        }
        Ok(())
    }

    /// `[top, bottom, left, right]`.
    pub fn values(&self) -> [f64; 4] {
        [self.top, self.bottom, self.left, self.right]
    }
}

/// Writes the boundary edges in the order top, bottom, left, right, so the
/// corners end up holding the left/right values. Corners never enter an
/// interior stencil.
pub fn apply_dirichlet(field: &Field, boundary: &BoundarySpec) -> Result<Field> {
    let mut out = field.clone();
    apply_dirichlet_in_place(&mut out, boundary)?;
    Ok(out)
}

pub(crate) fn apply_dirichlet_in_place(field: &mut Field, boundary: &BoundarySpec) -> Result<()> {
    let (rows, cols) = field.shape();
    if rows < 3 || cols < 3 {
        return Err(Error::InvalidShape {
            rows,
            cols,
            reason: "Dirichlet edges need a 2D field of at least 3x3",
        });
    }
    boundary.validate()?;
    for j in 0..cols {
        field.set(0, j, boundary.top);
        field.set(rows - 1, j, boundary.bottom);
    }
    for i in 0..rows {
        field.set(i, 0, boundary.left);
        field.set(i, cols - 1, boundary.right);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Same temperature on every interior node.
    Uniform(f64),
    /// Full initial field; its edges are overwritten by the boundary spec.
    Field(Field),
}

/// Transient 2D heat conduction on a square-spaced grid with constant
/// Dirichlet edges. `lambda = k*dt/dx^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatProblem {
    rows: usize,
    cols: usize,
    boundary: BoundarySpec,
    initial: InitialCondition,
    lambda: f64,
}

impl HeatProblem {
    pub fn new(
        shape: (usize, usize),
        boundary: BoundarySpec,
        initial: InitialCondition,
        lambda: f64,
    ) -> Result<Self> {
        let (rows, cols) = shape;
        if rows < 3 || cols < 3 {
            return Err(Error::InvalidShape {
                rows,
                cols,
                reason: "a 2D heat problem needs at least one interior node",
            });
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        boundary.validate()?;
        match &initial {
            InitialCondition::Uniform(v) if !v.is_finite() => {
                return Err(Error::NonFinite { index: 0, value: *v })
            }
            InitialCondition::Field(f) if f.shape() != shape => {
                return Err(Error::ShapeMismatch {
                    expected: shape,
                    actual: f.shape(),
                })
            }
            _ => {}
        }
        Ok(Self {
            rows,
            cols,
            boundary,
            initial,
            lambda,
        })
    }

    pub fn uniform(
        shape: (usize, usize),
        boundary: BoundarySpec,
        ic: f64,
        lambda: f64,
    ) -> Result<Self> {
        Self::new(shape, boundary, InitialCondition::Uniform(ic), lambda)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    pub fn initial(&self) -> &InitialCondition {
        &self.initial
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Interior node count `(N-2)*(M-2)`.
    pub fn interior_len(&self) -> usize {
        (self.rows - 2) * (self.cols - 2)
    }

    /// `X(0)`: the initial condition with the boundary edges applied.
    pub fn initial_field(&self) -> Field {
        let mut field = match &self.initial {
            InitialCondition::Uniform(v) => {
                Field::from_raw(self.rows, self.cols, vec![*v; self.rows * self.cols])
            }
            InitialCondition::Field(f) => f.clone(),
        };
        apply_dirichlet_in_place(&mut field, &self.boundary).expect("validated at construction");
        field
    }

    /// Same geometry, boundary and lambda with a different initial state.
    pub fn with_initial(&self, initial: InitialCondition) -> Result<Self> {
        Self::new(self.shape(), self.boundary, initial, self.lambda)
    }
}

/// Strictly increasing time indices paired with equally shaped states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<usize>,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn new(entries: Vec<(usize, Field)>) -> Result<Self> {
        let mut traj = Self {
            times: Vec::with_capacity(entries.len()),
            states: Vec::with_capacity(entries.len()),
        };
        for (t, state) in entries {
            traj.push(t, state)?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, t: usize, state: Field) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidParameter(format!(
                    "time index {t} does not follow {last}"
                )));
            }
        }
        if let Some(first) = self.states.first() {
            if first.shape() != state.shape() {
                return Err(Error::ShapeMismatch {
                    expected: first.shape(),
                    actual: state.shape(),
                });
            }
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.states.first().map(Field::shape)
    }

    pub fn get(&self, t: usize) -> Option<&Field> {
        self.times.binary_search(&t).ok().map(|k| &self.states[k])
    }

    pub fn last(&self) -> Option<(usize, &Field)> {
        self.times.last().map(|&t| (t, self.states.last().unwrap()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Field)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Split of time indices `0..=last` into `step` interleaved chunks; chunk
/// `k` is `k, k+P, ..., floor((L-k)/P)*P + k`. Chunks with `k > L` are
/// empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    last: usize,
    step: usize,
    chunks: Vec<Vec<usize>>,
}

impl ChunkPlan {
    pub fn new(last: usize, step: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidParameter("prediction step must be >= 1".into()));
        }
        let chunks = (0..step)
            .map(|k| (k..=last).step_by(step).collect())
            .collect();
        Ok(Self { last, step, chunks })
    }

    pub fn last(&self) -> usize {
        self.last
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn chunks(&self) -> &[Vec<usize>] {
        &self.chunks
    }

    pub fn chunk(&self, k: usize) -> &[usize] {
        &self.chunks[k]
    }

    /// Largest number of propagator applications any chunk needs.
    pub fn max_recursions(&self) -> usize {
        self.last / self.step
    }
}

/// One random draw of the six problem variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationSample {
    pub bc1: f64,
    pub bc2: f64,
    pub bc3: f64,
    pub bc4: f64,
    pub ic: f64,
    pub lambda: f64,
}

impl PermutationSample {
    /// `bc1..bc4` map to top, bottom, left, right.
    pub fn boundary(&self) -> Result<BoundarySpec> {
        BoundarySpec::new(self.bc1, self.bc2, self.bc3, self.bc4)
    }

    pub fn to_problem(&self, shape: (usize, usize)) -> Result<HeatProblem> {
        HeatProblem::uniform(shape, self.boundary()?, self.ic, self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_fields() {
        let f = make_uniform_field((3, 3), 0.0).unwrap();
        assert!(f.as_slice().iter().all(|&v| v == 0.0));
        let f = make_uniform_field((2, 2), 100.0).unwrap();
        assert_eq!(f.as_slice(), &[100.0; 4]);
        let f = make_uniform_field((1, 5), 50.0).unwrap();
        assert_eq!(f.shape(), (1, 5));
        assert_eq!(f.as_slice(), &[50.0; 5]);
        assert!(make_uniform_field((2, 2), f64::NAN).is_err());
        assert!(make_uniform_field((0, 2), 1.0).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let err = Field::new(1, 2, vec![1.0, f64::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn dirichlet_edges() {
        let f = Field::zeros(5, 5).unwrap();
        let out = apply_dirichlet(&f, &BoundarySpec::uniform(100.0).unwrap()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let edge = i == 0 || j == 0 || i == 4 || j == 4;
                assert_eq!(out.get(i, j), if edge { 100.0 } else { 0.0 });
            }
        }

        let f = make_uniform_field((3, 3), 5.0).unwrap();
        let out = apply_dirichlet(&f, &BoundarySpec::uniform(5.0).unwrap()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn dirichlet_write_order() {
        let f = Field::zeros(4, 4).unwrap();
        let out = apply_dirichlet(&f, &BoundarySpec::new(1.0, 2.0, 3.0, 4.0).unwrap()).unwrap();
        #[rustfmt::skip]
        let expected = [
            3.0, 1.0, 1.0, 4.0,
            3.0, 0.0, 0.0, 4.0,
            3.0, 0.0, 0.0, 4.0,
            3.0, 2.0, 2.0, 4.0,
        ];
        assert_eq!(out.as_slice(), &expected);
        assert_eq!(apply_dirichlet(&out, &BoundarySpec::new(1.0, 2.0, 3.0, 4.0).unwrap()).unwrap(), out);
    }

    #[test]
    fn dirichlet_rejects_1d() {
        let f = Field::column(vec![0.0; 8]).unwrap();
        let err = apply_dirichlet(&f, &BoundarySpec::uniform(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidShape { .. }));
    }

    #[test]
    fn interior_round_trip() {
        let f = Field::new(3, 4, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(f.interior(), vec![5.0, 6.0]);
        let g = f.with_interior(&[-1.0, -2.0]).unwrap();
        assert_eq!(g.get(1, 1), -1.0);
        assert_eq!(g.get(1, 2), -2.0);
        assert_eq!(g.get(0, 1), 1.0);
    }

    #[test]
    fn trajectory_invariants() {
        let a = Field::zeros(2, 2).unwrap();
        let b = Field::zeros(3, 3).unwrap();
        assert!(Trajectory::new(vec![(1, a.clone()), (1, a.clone())]).is_err());
        assert!(Trajectory::new(vec![(0, a.clone()), (1, b)]).is_err());
        let t = Trajectory::new(vec![(0, a.clone()), (4, a.clone())]).unwrap();
        assert!(t.get(4).is_some());
        assert!(t.get(2).is_none());
    }

    #[test]
    fn heat_problem_validation() {
        let bc = BoundarySpec::uniform(0.0).unwrap();
        assert!(HeatProblem::uniform((2, 5), bc, 0.0, 0.1).is_err());
        assert!(HeatProblem::uniform((5, 5), bc, 0.0, -0.1).is_err());
        let p = HeatProblem::uniform((5, 4), bc, 1.0, 0.1).unwrap();
        assert_eq!(p.interior_len(), 6);
        assert_eq!(p.initial_field().get(2, 2), 1.0);
    }

    #[test]
    fn chunk_plan_examples() {
        let plan = ChunkPlan::new(7, 3).unwrap();
        assert_eq!(plan.chunks(), &[vec![0, 3, 6], vec![1, 4, 7], vec![2, 5]]);
        let plan = ChunkPlan::new(5, 1).unwrap();
        assert_eq!(plan.chunks(), &[vec![0, 1, 2, 3, 4, 5]]);
        assert!(ChunkPlan::new(5, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn chunk_plan_partitions(p in 1usize..60, extra in 0usize..500) {
                let l = p + extra;
                let plan = ChunkPlan::new(l, p).unwrap();
                prop_assert_eq!(plan.chunks().len(), p);
                let mut all: Vec<usize> = plan.chunks().iter().flatten().copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..=l).collect::<Vec<_>>());
            }

            #[test]
            fn field_bytes_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1e6..1e6)).collect();
                let f = Field::new(rows, cols, data).unwrap();
                let g = Field::from_le_bytes(rows, cols, &f.to_le_bytes()).unwrap();
                prop_assert!(f.as_slice().iter().zip(g.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
            }

            #[test]
            fn dirichlet_idempotent(rows in 3usize..8, cols in 3usize..8, v in -100.0f64..100.0) {
                let bc = BoundarySpec::new(v, 2.0 * v, -v, 1.0).unwrap();
                let f = make_uniform_field((rows, cols), 7.0).unwrap();
                let once = apply_dirichlet(&f, &bc).unwrap();
                prop_assert_eq!(apply_dirichlet(&once, &bc).unwrap(), once);
            }
        }
    }
}
