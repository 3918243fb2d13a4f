//! P-step propagators: maps that advance a state by `P` time steps at once.
//!
//! - [`NumericalPropagator`] runs `P` solver steps (ADI or upwind Burgers).
//! - [`AffinePropagator`] is the exact `x -> M x + b` form of the linear heat
//!   map, reconstructed by probing the numerical propagator.
//! - [`RidgePropagator`] is a least-squares surrogate fitted to dataset
//!   pairs in standardized space.
//!
//! Every propagator is immutable once built and `advance` is pure, so one
//! instance can serve many chunk workers at once.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Standardizer};
use crate::fd::{heat_advance, BurgersProblem};
use crate::field::{apply_dirichlet, BoundarySpec, Field, HeatProblem};
use crate::io::{read_framed, write_framed, PayloadReader};
use crate::parallel::{map_indexed, map_indexed_min};
use crate::{Error, Result};

pub const PROPAGATOR_VERSION: &str = "PRP1";

/// Matrix rows per parallel task before the mat-vec fans out.
const PARALLEL_MIN_ROWS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemClass {
    Heat(HeatProblem),
    Burgers(BurgersProblem),
}

impl ProblemClass {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ProblemClass::Heat(p) => p.shape(),
            ProblemClass::Burgers(p) => p.initial().shape(),
        }
    }

    /// State at time index 0.
    pub fn initial_field(&self) -> Field {
        match self {
            ProblemClass::Heat(p) => p.initial_field(),
            ProblemClass::Burgers(p) => p.initial().clone(),
        }
    }

    /// `steps` sequential solver steps from `state`.
    pub fn step_n(&self, state: &Field, steps: usize) -> Result<Field> {
        check_shape(self.shape(), state)?;
        match self {
            ProblemClass::Heat(p) => heat_advance(state, p.boundary(), p.lambda(), steps),
            ProblemClass::Burgers(p) => p.advance(state, steps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorKind {
    Numerical,
    Affine,
    Ridge,
}

pub trait Propagator: Send + Sync {
    fn kind(&self) -> PropagatorKind;
    /// Time steps covered by one `advance`.
    fn pred_step(&self) -> usize;
    fn shape(&self) -> (usize, usize);
    fn advance(&self, state: &Field) -> Result<Field>;
}

/// One P-step prediction after checking the state shape.
pub fn advance(propagator: &dyn Propagator, state: &Field) -> Result<Field> {
    check_shape(propagator.shape(), state)?;
    propagator.advance(state)
}

fn check_shape(expected: (usize, usize), state: &Field) -> Result<()> {
    if state.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: state.shape(),
        });
    }
    Ok(())
}

fn check_step(pred_step: usize) -> Result<()> {
    if pred_step == 0 {
        return Err(Error::InvalidParameter("prediction step must be >= 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericalPropagator {
    problem: ProblemClass,
    pred_step: usize,
}

pub fn numerical_propagator(problem: &ProblemClass, pred_step: usize) -> Result<NumericalPropagator> {
    check_step(pred_step)?;
    Ok(NumericalPropagator {
        problem: problem.clone(),
        pred_step,
    })
}

impl NumericalPropagator {
    pub fn problem(&self) -> &ProblemClass {
        &self.problem
    }
}

impl Propagator for NumericalPropagator {
    fn kind(&self) -> PropagatorKind {
        PropagatorKind::Numerical
    }

    fn pred_step(&self) -> usize {
        self.pred_step
    }

    fn shape(&self) -> (usize, usize) {
        self.problem.shape()
    }

    /// Heat states get the problem's edges re-applied before stepping.
    fn advance(&self, state: &Field) -> Result<Field> {
        self.problem.step_n(state, self.pred_step)
    }
}

/// `advance(x) = M x_interior + b` with the problem's edges around it.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePropagator {
    shape: (usize, usize),
    boundary: BoundarySpec,
    lambda: f64,
    pred_step: usize,
    /// `d x d`, row-major.
    matrix: Vec<f64>,
    offset: Vec<f64>,
}

/// Reconstructs the heat P-step map from `d + 1` numerical propagations.
/// `b = F(0)` with the problem's edges. Column `j` of `M` is the response to
/// `e_j` with all edges held at zero, which equals `F(e_j) - b` but skips the
/// cancellation against `b`.
pub fn probe_affine(problem: &ProblemClass, pred_step: usize) -> Result<AffinePropagator> {
    check_step(pred_step)?;
    let heat = match problem {
        ProblemClass::Heat(h) => h,
        ProblemClass::Burgers(_) => {
            return Err(Error::InvalidParameter(
                "affine probing needs linear (heat) dynamics".into(),
            ))
        }
    };
    let (bc, lambda) = (*heat.boundary(), heat.lambda());
    let d = heat.interior_len();
    let zero = Field::zeros(heat.shape().0, heat.shape().1)?;
    let homogeneous = BoundarySpec::uniform(0.0)?;
    let offset = heat_advance(&zero, &bc, lambda, pred_step)?.interior();
    let columns = map_indexed(d, |j| {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        Ok::<_, Error>(heat_advance(&zero.with_interior(&e)?, &homogeneous, lambda, pred_step)?.interior())
    });
    let mut matrix = vec![0.0; d * d];
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            matrix[i * d + j] = v;
        }
    }
    Ok(AffinePropagator {
        shape: heat.shape(),
        boundary: bc,
        lambda,
        pred_step,
        matrix,
        offset,
    })
}

fn mat_vec(matrix: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    let rows = matrix.len() / cols;
    map_indexed_min(rows, PARALLEL_MIN_ROWS, |i| {
        matrix[i * cols..(i + 1) * cols]
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    })
}

impl AffinePropagator {
    pub fn interior_len(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Propagator for AffinePropagator {
    fn kind(&self) -> PropagatorKind {
        PropagatorKind::Affine
    }

    fn pred_step(&self) -> usize {
        self.pred_step
    }

    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn advance(&self, state: &Field) -> Result<Field> {
        check_shape(self.shape, state)?;
        let x = state.interior();
        let mut y = mat_vec(&self.matrix, x.len(), &x);
        for (v, b) in y.iter_mut().zip(&self.offset) {
            *v += b;
        }
        apply_dirichlet(state, &self.boundary)?.with_interior(&y)
    }
}

/// Linear surrogate `y = W [x; 1]` on standardized interior values. The
/// input's edges are carried over to the prediction unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgePropagator {
    shape: (usize, usize),
    pred_step: usize,
    reg: f64,
    standardizer: Standardizer,
    /// `d x (d + 1)`, row-major; the last column is the bias.
    weights: Vec<f64>,
}

/// Minimises `sum |W [x; 1] - y|^2 + reg |W|^2` over the dataset's
/// standardized interior pairs via the normal equations
/// `(A^T A + reg I) W^T = A^T Y`, solved by Cholesky.
pub fn fit_ridge(dataset: &Dataset, reg: f64) -> Result<RidgePropagator> {
    if !(reg.is_finite() && reg >= 0.0) {
        return Err(Error::InvalidParameter(format!("reg must be finite and >= 0, got {reg}")));
    }
    let n = dataset.sample_count();
    if n == 0 {
        return Err(Error::InvalidParameter("cannot fit a ridge propagator to no samples".into()));
    }
    let shape = dataset.config.shape;
    let d = shape.0.saturating_sub(2) * shape.1.saturating_sub(2);
    if d == 0 {
        return Err(Error::InvalidShape {
            rows: shape.0,
            cols: shape.1,
            reason: "ridge propagators act on interior nodes",
        });
    }
    let standardizer = match dataset.stats {
        Some(s) => s,
        None => crate::datagen::fit_standardizer(dataset)?,
    };

    let mut design = DMatrix::<f64>::zeros(n, d + 1);
    let mut targets = DMatrix::<f64>::zeros(n, d);
    for (r, (_, sample)) in dataset.samples().enumerate() {
        check_shape(shape, &sample.input)?;
        check_shape(shape, &sample.target)?;
        for (k, v) in sample.input.interior().into_iter().enumerate() {
            design[(r, k)] = standardizer.forward(v);
        }
        design[(r, d)] = 1.0;
        for (k, v) in sample.target.interior().into_iter().enumerate() {
            targets[(r, k)] = standardizer.forward(v);
        }
    }
    let mut normal = design.tr_mul(&design);
    for k in 0..=d {
        normal[(k, k)] += reg;
    }
    let rhs = design.tr_mul(&targets);
    let scale = normal.diagonal().iter().fold(0.0f64, |a, &v| a.max(v));
    let chol = normal.cholesky().ok_or(Error::SingularNormalMatrix)?;
    if reg == 0.0 {
        // Floating-point Cholesky can succeed on a rank-deficient matrix
        // with vanishing pivots; treat those as singular.
        let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &v| a.min(v * v));
        if min_pivot <= scale * 1e-13 {
            return Err(Error::SingularNormalMatrix);
        }
    }
    let wt = chol.solve(&rhs);
    let mut weights = vec![0.0; d * (d + 1)];
    for i in 0..d {
        for k in 0..=d {
            weights[i * (d + 1) + k] = wt[(k, i)];
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::SingularNormalMatrix);
    }
    Ok(RidgePropagator {
        shape,
        pred_step: dataset.config.pred_step,
        reg,
        standardizer,
        weights,
    })
}

impl RidgePropagator {
    pub fn interior_len(&self) -> usize {
        self.shape.0.saturating_sub(2) * self.shape.1.saturating_sub(2)
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The fitted map in raw units: `y = M x + b` with `M` row-major `d x d`.
    pub fn effective_affine(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.interior_len();
        let Standardizer { mean, std } = self.standardizer;
        let mut m = Vec::with_capacity(d * d);
        let mut b = Vec::with_capacity(d);
        for row in self.weights.chunks(d + 1) {
            m.extend_from_slice(&row[..d]);
            let row_sum: f64 = row[..d].iter().sum();
            b.push(std * row[d] + mean - mean * row_sum);
        }
        (m, b)
    }
}

impl Propagator for RidgePropagator {
    fn kind(&self) -> PropagatorKind {
        PropagatorKind::Ridge
    }

    fn pred_step(&self) -> usize {
        self.pred_step
    }

    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn advance(&self, state: &Field) -> Result<Field> {
        check_shape(self.shape, state)?;
        let s = &self.standardizer;
        let mut x: Vec<f64> = state.interior().into_iter().map(|v| s.forward(v)).collect();
        x.push(1.0);
        let y: Vec<f64> = mat_vec(&self.weights, x.len(), &x)
            .into_iter()
            .map(|z| s.inverse(z))
            .collect();
        state.with_interior(&y)
    }
}

/// Any propagator that can be saved and loaded.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyPropagator {
    Numerical(NumericalPropagator),
    Affine(AffinePropagator),
    Ridge(RidgePropagator),
}

impl AnyPropagator {
    pub fn as_dyn(&self) -> &dyn Propagator {
        match self {
            AnyPropagator::Numerical(p) => p,
            AnyPropagator::Affine(p) => p,
            AnyPropagator::Ridge(p) => p,
        }
    }
}

impl Propagator for AnyPropagator {
    fn kind(&self) -> PropagatorKind {
        self.as_dyn().kind()
    }

    fn pred_step(&self) -> usize {
        self.as_dyn().pred_step()
    }

    fn shape(&self) -> (usize, usize) {
        self.as_dyn().shape()
    }

    fn advance(&self, state: &Field) -> Result<Field> {
        self.as_dyn().advance(state)
    }
}

impl From<NumericalPropagator> for AnyPropagator {
    fn from(p: NumericalPropagator) -> Self {
        AnyPropagator::Numerical(p)
    }
}

impl From<AffinePropagator> for AnyPropagator {
    fn from(p: AffinePropagator) -> Self {
        AnyPropagator::Affine(p)
    }
}

impl From<RidgePropagator> for AnyPropagator {
    fn from(p: RidgePropagator) -> Self {
        AnyPropagator::Ridge(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
enum ProblemParams {
    Heat {
        boundary: BoundarySpec,
        lambda: f64,
        /// Initial interior temperature when uniform.
        ic: Option<f64>,
    },
    Burgers {
        dt: f64,
        dx: f64,
    },
    /// Ridge fits carry no problem parameters of their own.
    Data,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PropagatorManifest {
    version: String,
    kind: PropagatorKind,
    pred_step: usize,
    rows: usize,
    cols: usize,
    problem: ProblemParams,
    reg: Option<f64>,
    mean: Option<f64>,
    std: Option<f64>,
}

impl PropagatorManifest {
    fn interior_len(&self) -> usize {
        self.rows.saturating_sub(2) * self.cols.saturating_sub(2)
    }

    fn payload_len(&self) -> u64 {
        let d = self.interior_len() as u64;
        match self.kind {
            PropagatorKind::Numerical => 0,
            PropagatorKind::Affine => (d * d + d) * 8,
            PropagatorKind::Ridge => d * (d + 1) * 8,
        }
    }
}

fn heat_params(p: &HeatProblem) -> ProblemParams {
    ProblemParams::Heat {
        boundary: *p.boundary(),
        lambda: p.lambda(),
        ic: match p.initial() {
            crate::field::InitialCondition::Uniform(v) => Some(*v),
            crate::field::InitialCondition::Field(_) => None,
        },
    }
}

impl AnyPropagator {
    /// Framed file: JSON manifest line, then weights in the core field
    /// layout (`M` then `b` for affine, `W` for ridge, nothing for
    /// numerical).
    pub fn save(&self, path: &Path) -> Result<()> {
        let shape = self.shape();
        let mut manifest = PropagatorManifest {
            version: PROPAGATOR_VERSION.into(),
            kind: self.kind(),
            pred_step: self.pred_step(),
            rows: shape.0,
            cols: shape.1,
            problem: ProblemParams::Data,
            reg: None,
            mean: None,
            std: None,
        };
        let mut payload = Vec::new();
        match self {
            AnyPropagator::Numerical(p) => {
                manifest.problem = match &p.problem {
                    ProblemClass::Heat(h) => heat_params(h),
                    ProblemClass::Burgers(b) => ProblemParams::Burgers { dt: b.dt(), dx: b.dx() },
                };
            }
            AnyPropagator::Affine(p) => {
                manifest.problem = ProblemParams::Heat {
                    boundary: p.boundary,
                    lambda: p.lambda,
                    ic: None,
                };
                let d = p.interior_len();
                Field::from_raw(d, d, p.matrix.clone()).write_le_bytes(&mut payload);
                Field::from_raw(d, 1, p.offset.clone()).write_le_bytes(&mut payload);
            }
            AnyPropagator::Ridge(p) => {
                manifest.reg = Some(p.reg);
                manifest.mean = Some(p.standardizer.mean);
                manifest.std = Some(p.standardizer.std);
                let d = p.interior_len();
                Field::from_raw(d, d + 1, p.weights.clone()).write_le_bytes(&mut payload);
            }
        }
        write_framed(path, &manifest, &payload)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (m, payload): (PropagatorManifest, _) = read_framed(path, |m: &PropagatorManifest| {
            if m.version != PROPAGATOR_VERSION {
                return Err(Error::MalformedHeader(format!("unknown version {:?}", m.version)));
            }
            if m.pred_step == 0 || m.rows == 0 || m.cols == 0 {
                return Err(Error::MalformedHeader("zero shape or prediction step".into()));
            }
            Ok(m.payload_len())
        })?;
        let bad = |e: Error| Error::MalformedHeader(e.to_string());
        let shape = (m.rows, m.cols);
        let d = m.interior_len();
        let mut reader = PayloadReader::new(&payload);
        match m.kind {
            PropagatorKind::Numerical => {
                let problem = match m.problem {
                    ProblemParams::Heat { boundary, lambda, ic } => ProblemClass::Heat(
                        HeatProblem::uniform(shape, boundary, ic.unwrap_or(0.0), lambda).map_err(bad)?,
                    ),
                    ProblemParams::Burgers { dt, dx } => ProblemClass::Burgers(
                        BurgersProblem::new(Field::zeros(m.rows, m.cols).map_err(bad)?, dt, dx).map_err(bad)?,
                    ),
                    ProblemParams::Data => {
                        return Err(Error::MalformedHeader("numerical propagator without a problem".into()))
                    }
                };
                Ok(numerical_propagator(&problem, m.pred_step).map_err(bad)?.into())
            }
            PropagatorKind::Affine => {
                let ProblemParams::Heat { boundary, lambda, .. } = m.problem else {
                    return Err(Error::MalformedHeader("affine propagator needs heat parameters".into()));
                };
                if d == 0 {
                    return Err(Error::MalformedHeader("affine propagator without interior".into()));
                }
                let matrix = reader.field(d, d)?.into_vec();
                let offset = reader.field(d, 1)?.into_vec();
                Ok(AffinePropagator {
                    shape,
                    boundary,
                    lambda,
                    pred_step: m.pred_step,
                    matrix,
                    offset,
                }
                .into())
            }
            PropagatorKind::Ridge => {
                let (Some(reg), Some(mean), Some(std)) = (m.reg, m.mean, m.std) else {
                    return Err(Error::MalformedHeader("ridge propagator needs reg, mean and std".into()));
                };
                if d == 0 {
                    return Err(Error::MalformedHeader("ridge propagator without interior".into()));
                }
                let weights = reader.field(d, d + 1)?.into_vec();
                Ok(RidgePropagator {
                    shape,
                    pred_step: m.pred_step,
                    reg,
                    standardizer: Standardizer::new(mean, std).map_err(bad)?,
                    weights,
                }
                .into())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{Batch, GenConfig, Sample};
    use crate::fd::heat_solve_2d;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn demo_problem(shape: (usize, usize)) -> ProblemClass {
        let bc = BoundarySpec::new(600.0, 500.0, 194.0, 248.0).unwrap();
        ProblemClass::Heat(HeatProblem::uniform(shape, bc, 254.0, 0.27047).unwrap())
    }

    fn random_state(shape: (usize, usize), rng: &mut ChaCha8Rng) -> Field {
        Field::new(shape.0, shape.1, (0..shape.0 * shape.1).map(|_| rng.gen_range(0.0..100.0)).collect()).unwrap()
    }

    fn max_abs_diff(a: &Field, b: &Field) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn numerical_matches_sequential() {
        let problem = demo_problem((12, 12));
        let traj = match &problem {
            ProblemClass::Heat(h) => heat_solve_2d(h, 20).unwrap(),
            _ => unreachable!(),
        };
        let one = numerical_propagator(&problem, 1).unwrap();
        assert_eq!(one.advance(&traj.states()[0]).unwrap(), traj.states()[1]);
        let ten = numerical_propagator(&problem, 10).unwrap();
        let twice = ten.advance(&ten.advance(&traj.states()[0]).unwrap()).unwrap();
        assert_eq!(&twice, traj.get(20).unwrap());
        assert!(numerical_propagator(&problem, 0).is_err());
    }

    #[test]
    fn numerical_equilibrium() {
        let bc = BoundarySpec::uniform(3.0).unwrap();
        let p = ProblemClass::Heat(HeatProblem::uniform((6, 6), bc, 3.0, 0.4).unwrap());
        let prop = numerical_propagator(&p, 7).unwrap();
        let x = p.initial_field();
        assert!(max_abs_diff(&prop.advance(&x).unwrap(), &x) < 1e-12);
    }

    #[test]
    fn affine_identity_at_zero_lambda() {
        let bc = BoundarySpec::new(10.0, 20.0, 30.0, 40.0).unwrap();
        let p = ProblemClass::Heat(HeatProblem::uniform((5, 6), bc, 0.0, 0.0).unwrap());
        let a = probe_affine(&p, 3).unwrap();
        let d = a.interior_len();
        for i in 0..d {
            for j in 0..d {
                assert_eq!(a.matrix()[i * d + j], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(a.offset().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn affine_matches_numerical_fig_params() {
        let problem = demo_problem((12, 12));
        let affine = probe_affine(&problem, 10).unwrap();
        let numerical = numerical_propagator(&problem, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let x = random_state((12, 12), &mut rng);
            worst = worst.max(max_abs_diff(&affine.advance(&x).unwrap(), &numerical.advance(&x).unwrap()));
        }
        assert!(worst < 1e-9, "worst {worst}");
    }

    #[test]
    fn probing_is_deterministic() {
        let problem = demo_problem((7, 8));
        let a = probe_affine(&problem, 4).unwrap();
        let b = crate::parallel::with_workers(3, || probe_affine(&problem, 4).unwrap());
        assert!(a.matrix().iter().zip(b.matrix()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.offset().iter().zip(b.offset()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn probing_rejects_burgers() {
        let b = BurgersProblem::new(Field::column(vec![1.0; 8]).unwrap(), 0.1, 0.5).unwrap();
        assert!(probe_affine(&ProblemClass::Burgers(b), 2).is_err());
    }

    fn scalar_dataset(xs: &[f64], f: impl Fn(f64) -> f64) -> Dataset {
        let batches = xs
            .iter()
            .map(|&x| {
                let input = Field::new(3, 3, vec![0.0, 0.0, 0.0, 0.0, x, 0.0, 0.0, 0.0, 0.0]).unwrap();
                let target = input.with_interior(&[f(x)]).unwrap();
                Batch {
                    t0: 0,
                    t1: 1,
                    samples: vec![Sample {
                        permutation: None,
                        input,
                        target,
                    }],
                }
            })
            .collect();
        let cfg = GenConfig {
            shape: (3, 3),
            pred_step: 1,
            ..GenConfig::default()
        };
        Dataset::from_batches(cfg, batches).unwrap()
    }

    #[test]
    fn ridge_scalar_closed_form() {
        let ds = scalar_dataset(&[0.0, 1.0, 2.0, 3.0], |x| 2.0 * x + 1.0);
        let r = fit_ridge(&ds, 0.0).unwrap();
        let (m, b) = r.effective_affine();
        assert!((m[0] - 2.0).abs() < 1e-12 && (b[0] - 1.0).abs() < 1e-12, "{m:?} {b:?}");
        let x = ds.batches[2].samples[0].input.clone();
        assert!((r.advance(&x).unwrap().get(1, 1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_singular_without_reg() {
        let ds = scalar_dataset(&[2.0, 2.0, 2.0], |x| x);
        assert!(matches!(fit_ridge(&ds, 0.0), Err(Error::SingularNormalMatrix)));
        assert!(fit_ridge(&ds, 1e-6).is_ok());
    }

    #[test]
    fn ridge_large_reg_predicts_mean() {
        let ds = scalar_dataset(&[0.0, 1.0, 2.0, 3.0], |x| 2.0 * x + 1.0);
        let r = fit_ridge(&ds, 1e30).unwrap();
        assert!(r.weights().iter().all(|w| w.abs() < 1e-20));
        let y = r.advance(&ds.batches[0].samples[0].input).unwrap();
        assert!((y.get(1, 1) - r.standardizer().mean).abs() < 1e-9);
    }

    /// Random states mapped through the numerical propagator: an exactly
    /// affine dataset with independent inputs.
    fn affine_dataset(problem: &ProblemClass, p: usize, n: usize, seed: u64) -> Dataset {
        let prop = numerical_propagator(problem, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = problem.shape();
        let batches = (0..n)
            .map(|_| {
                let input = apply_dirichlet(&random_state(shape, &mut rng), match problem {
                    ProblemClass::Heat(h) => h.boundary(),
                    _ => unreachable!(),
                })
                .unwrap();
                let target = prop.advance(&input).unwrap();
                Batch {
                    t0: 0,
                    t1: p,
                    samples: vec![Sample {
                        permutation: None,
                        input,
                        target,
                    }],
                }
            })
            .collect();
        let cfg = GenConfig {
            shape,
            pred_step: p,
            ..GenConfig::default()
        };
        Dataset::from_batches(cfg, batches).unwrap()
    }

    #[test]
    fn ridge_recovers_affine_map() {
        let problem = demo_problem((6, 7));
        let d = 4 * 5;
        let ds = affine_dataset(&problem, 5, d + 10, 8);
        let ridge = fit_ridge(&ds, 1e-10).unwrap();
        let affine = probe_affine(&problem, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut mae = 0.0;
        let trials = 50u32;
        for _ in 0..trials {
            let x = random_state((6, 7), &mut rng);
            let x = apply_dirichlet(&x, affine.boundary()).unwrap();
            let a = ridge.advance(&x).unwrap();
            let b = affine.advance(&x).unwrap();
            mae += a.as_slice().iter().zip(b.as_slice()).map(|(u, v)| (u - v).abs()).sum::<f64>() / a.len() as f64;
        }
        let mae = mae / f64::from(trials);
        assert!(mae < 1e-5, "mae {mae}");
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let problem = demo_problem((5, 6));
        let props: Vec<AnyPropagator> = vec![
            numerical_propagator(&problem, 3).unwrap().into(),
            probe_affine(&problem, 3).unwrap().into(),
            fit_ridge(&affine_dataset(&problem, 3, 20, 1), 1e-8).unwrap().into(),
        ];
        for (k, p) in props.iter().enumerate() {
            let path = dir.path().join(format!("p{k}.prp"));
            p.save(&path).unwrap();
            let back = AnyPropagator::load(&path).unwrap();
            assert_eq!(&back, p);
            let x = problem.initial_field();
            assert_eq!(back.advance(&x).unwrap(), p.advance(&x).unwrap());
        }
        let path = dir.path().join("p1.prp");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(AnyPropagator::load(&path), Err(Error::TruncatedPayload { .. })));
    }

    #[test]
    fn shape_mismatch() {
        let problem = demo_problem((5, 5));
        let p = numerical_propagator(&problem, 1).unwrap();
        assert!(matches!(
            advance(&p, &Field::zeros(4, 4).unwrap()),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
