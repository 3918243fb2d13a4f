//! Randomized training pairs for P-step heat propagators.
//!
//! Each batch draws one start step `t0`; every sample in the batch draws its
//! own `(BC1, BC2, BC3, BC4, IC, lambda)` permutation, is solved with ADI up
//! to `t0 + P`, and contributes the pair `(X(t0), X(t0 + P))`.
//!
//! Randomness comes from ChaCha8 seeded with `seed`. Batch `b` draws its
//! start step from stream `b << 32`; sample `s` of batch `b` draws its
//! permutation from stream `(b << 32) | (s + 1)`. Every draw is therefore
//! independent of generation order and thread count.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fd::heat_advance;
use crate::field::{Field, PermutationSample};
use crate::io::{read_framed, write_framed, PayloadReader};
use crate::parallel::try_map_indexed;
use crate::{Error, Result};

pub const DATASET_VERSION: &str = "DNT1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Range for the four boundary temperatures and the initial temperature.
    pub bc_ic_range: (f64, f64),
    pub lambda_range: (f64, f64),
    /// Inclusive range of batch start steps.
    pub t_range: (usize, usize),
    pub pred_step: usize,
    pub batches: usize,
    pub batch_size: usize,
    pub shape: (usize, usize),
    pub seed: u64,
}

impl Default for GenConfig {
    /// Temperatures in `[0, 100]`, lambda in `[0, 1]`, start steps in
    /// `[0, 1000]`, `P = 10`, 12x12 grid, batches of 32.
    fn default() -> Self {
        Self {
            bc_ic_range: (0.0, 100.0),
            lambda_range: (0.0, 1.0),
            t_range: (0, 1000),
            pred_step: 10,
            batches: 4,
            batch_size: 32,
            shape: (12, 12),
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let (lo, hi) = self.bc_ic_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("bad temperature range [{lo}, {hi}]"));
        }
        let (lo, hi) = self.lambda_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad(format!("bad lambda range [{lo}, {hi}]"));
        }
        if self.t_range.0 > self.t_range.1 {
            return bad(format!("bad start-step range {:?}", self.t_range));
        }
        if self.pred_step == 0 || self.batch_size == 0 {
            return bad("pred_step and batch_size must be >= 1".into());
        }
        if self.shape.0 < 3 || self.shape.1 < 3 {
            return bad(format!("grid {:?} has no interior", self.shape));
        }
        if self.batches > u32::MAX as usize || self.batch_size >= u32::MAX as usize {
            return bad("batch counts must fit the 32-bit stream layout".into());
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Six independent uniform draws, in the order BC1..BC4, IC, lambda.
pub fn generate_random_permutation(config: &GenConfig, rng: &mut impl Rng) -> PermutationSample {
    let r = config.bc_ic_range;
    PermutationSample {
        bc1: uniform(rng, r),
        bc2: uniform(rng, r),
        bc3: uniform(rng, r),
        bc4: uniform(rng, r),
        ic: uniform(rng, r),
        lambda: uniform(rng, config.lambda_range),
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Start step of batch `batch`.
pub fn batch_start_step(config: &GenConfig, batch: usize) -> usize {
    let mut rng = stream_rng(config.seed, (batch as u64) << 32);
    let (lo, hi) = config.t_range;
    rng.gen_range(lo..=hi)
}

/// Permutation of sample `sample` in batch `batch`.
pub fn sample_permutation(config: &GenConfig, batch: usize, sample: usize) -> PermutationSample {
    let mut rng = stream_rng(config.seed, ((batch as u64) << 32) | (sample as u64 + 1));
    generate_random_permutation(config, &mut rng)
}

/// Solves one permutation and returns `(X(t0), X(t0 + steps))`.
pub fn solve_pair(perm: &PermutationSample, shape: (usize, usize), t0: usize, steps: usize) -> Result<(Field, Field)> {
    let problem = perm.to_problem(shape)?;
    let bc = *problem.boundary();
    let input = heat_advance(&problem.initial_field(), &bc, problem.lambda(), t0)?;
    let target = heat_advance(&input, &bc, problem.lambda(), steps)?;
    Ok((input, target))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Known for generated datasets; `None` for hand-built ones and after
    /// reading a file (see [`Dataset::regenerate_permutations`]).
    pub permutation: Option<PermutationSample>,
    pub input: Field,
    pub target: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub t0: usize,
    pub t1: usize,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: GenConfig,
    pub batches: Vec<Batch>,
    /// `None` when the data is constant.
    pub stats: Option<Standardizer>,
}

impl Dataset {
    /// Assembles a dataset from explicit pairs; `config` supplies the
    /// metadata (shape, `P`, ranges, seed) and its batch counts are
    /// overwritten from `batches`.
    pub fn from_batches(mut config: GenConfig, batches: Vec<Batch>) -> Result<Self> {
        let size = batches.first().map_or(0, |b| b.samples.len());
        config.batches = batches.len();
        config.batch_size = size;
        for b in &batches {
            if b.t1 != b.t0 + config.pred_step {
                return Err(Error::InvalidParameter(format!(
                    "batch ({}, {}) does not span P = {}",
                    b.t0, b.t1, config.pred_step
                )));
            }
            if b.samples.len() != size {
                return Err(Error::InvalidParameter("batches must share one size".into()));
            }
            for s in &b.samples {
                for f in [&s.input, &s.target] {
                    if f.shape() != config.shape {
                        return Err(Error::ShapeMismatch {
                            expected: config.shape,
                            actual: f.shape(),
                        });
                    }
                }
            }
        }
        let mut ds = Self {
            config,
            batches,
            stats: None,
        };
        ds.stats = match fit_standardizer(&ds) {
            Ok(s) => Some(s),
            Err(Error::ZeroVariance) => None,
            Err(e) => return Err(e),
        };
        Ok(ds)
    }

    pub fn sample_count(&self) -> usize {
        self.batches.iter().map(|b| b.samples.len()).sum()
    }

    pub fn samples(&self) -> impl Iterator<Item = (&Batch, &Sample)> {
        self.batches.iter().flat_map(|b| b.samples.iter().map(move |s| (b, s)))
    }

    /// Re-derives every sample's permutation from the seed. Only meaningful
    /// for datasets made by [`generate_dataset`].
    pub fn regenerate_permutations(&mut self) {
        let config = self.config.clone();
        for (b, batch) in self.batches.iter_mut().enumerate() {
            for (s, sample) in batch.samples.iter_mut().enumerate() {
                sample.permutation = Some(sample_permutation(&config, b, s));
            }
        }
    }
}

pub fn generate_dataset(config: &GenConfig) -> Result<Dataset> {
    generate_with(config, |b, s| sample_permutation(config, b, s))
}

/// Dataset of one permutation, sampled at the seeded batch start steps.
/// Samples within a batch are identical, so `batch_size = 1` with many
/// batches is the useful shape. Suited to fitting a ridge propagator, which
/// conditions on the state alone.
pub fn generate_fixed_dataset(config: &GenConfig, perm: &PermutationSample) -> Result<Dataset> {
    perm.boundary()?;
    generate_with(config, |_, _| *perm)
}

fn generate_with<F>(config: &GenConfig, perm_of: F) -> Result<Dataset>
where
    F: Fn(usize, usize) -> PermutationSample + Sync + Send,
{
    config.validate()?;
    let p = config.pred_step;
    let starts: Vec<usize> = (0..config.batches).map(|b| batch_start_step(config, b)).collect();
    let total = config.batches * config.batch_size;
    let samples = try_map_indexed(total, |k| {
        let (b, s) = (k / config.batch_size, k % config.batch_size);
        let perm = perm_of(b, s);
        let (input, target) = solve_pair(&perm, config.shape, starts[b], p)?;
        Ok::<_, Error>(Sample {
            permutation: Some(perm),
            input,
            target,
        })
    })
    .map_err(|(_, e)| e)?;
    let mut iter = samples.into_iter();
    let batches = starts
        .iter()
        .map(|&t0| Batch {
            t0,
            t1: t0 + p,
            samples: iter.by_ref().take(config.batch_size).collect(),
        })
        .collect();
    let mut ds = Dataset {
        config: config.clone(),
        batches,
        stats: None,
    };
    ds.stats = match fit_standardizer(&ds) {
        Ok(s) => Some(s),
        Err(Error::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    Ok(ds)
}

/// Affine rescaling to zero mean and unit standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::NonFinite { index: 0, value: mean });
        }
        if !(std.is_finite() && std > 0.0) {
            return Err(Error::ZeroVariance);
        }
        Ok(Self { mean, std })
    }

    /// Population statistics of `values`.
    pub fn fit(values: &[f64]) -> Result<Self> {
        Self::fit_passes(|| values.iter())
    }

    /// Two-pass mean and variance over a re-iterable source.
    fn fit_passes<'a, I, F>(values: F) -> Result<Self>
    where
        I: Iterator<Item = &'a f64>,
        F: Fn() -> I,
    {
        let (sum, n) = values().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            return Err(Error::InvalidParameter("cannot fit statistics to no data".into()));
        }
        let mean = sum / n as f64;
        let var = values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Self::new(mean, var.sqrt())
    }

    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    #[inline]
    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Mean and population standard deviation over every input and target value.
pub fn fit_standardizer(dataset: &Dataset) -> Result<Standardizer> {
    Standardizer::fit_passes(|| {
        dataset
            .samples()
            .flat_map(|(_, s)| s.input.as_slice().iter().chain(s.target.as_slice()))
    })
}

pub fn standardize(field: &Field, s: &Standardizer) -> Field {
    field.map(|x| s.forward(x))
}

pub fn destandardize(field: &Field, s: &Standardizer) -> Field {
    field.map(|z| s.inverse(z))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetManifest {
    version: String,
    rows: usize,
    cols: usize,
    pred_step: usize,
    batches: usize,
    batch_size: usize,
    bc_ic_range: (f64, f64),
    lambda_range: (f64, f64),
    t_range: (usize, usize),
    seed: u64,
    mean: Option<f64>,
    std: Option<f64>,
}

impl DatasetManifest {
    fn payload_len(&self) -> u64 {
        let field = (self.rows * self.cols * 8) as u64;
        self.batches as u64 * (8 + self.batch_size as u64 * 2 * field)
    }
}

pub fn encode_dataset(dataset: &Dataset) -> Result<Vec<u8>> {
    let (manifest, payload) = dataset_parts(dataset);
    crate::io::encode_framed(&manifest, &payload)
}

fn dataset_parts(dataset: &Dataset) -> (DatasetManifest, Vec<u8>) {
    let c = &dataset.config;
    let manifest = DatasetManifest {
        version: DATASET_VERSION.into(),
        rows: c.shape.0,
        cols: c.shape.1,
        pred_step: c.pred_step,
        batches: dataset.batches.len(),
        batch_size: dataset.batches.first().map_or(0, |b| b.samples.len()),
        bc_ic_range: c.bc_ic_range,
        lambda_range: c.lambda_range,
        t_range: c.t_range,
        seed: c.seed,
        mean: dataset.stats.map(|s| s.mean),
        std: dataset.stats.map(|s| s.std),
    };
    let mut payload = Vec::with_capacity(manifest.payload_len() as usize);
    for batch in &dataset.batches {
        payload.extend_from_slice(&(batch.t0 as u64).to_le_bytes());
        for s in &batch.samples {
            s.input.write_le_bytes(&mut payload);
            s.target.write_le_bytes(&mut payload);
        }
    }
    (manifest, payload)
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let (manifest, payload) = dataset_parts(dataset);
    write_framed(path, &manifest, &payload)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let (m, payload): (DatasetManifest, _) = read_framed(path, |m: &DatasetManifest| {
        if m.version != DATASET_VERSION {
            return Err(Error::MalformedHeader(format!("unknown version {:?}", m.version)));
        }
        if m.rows == 0 || m.cols == 0 || m.pred_step == 0 {
            return Err(Error::MalformedHeader("zero shape or prediction step".into()));
        }
        Ok(m.payload_len())
    })?;
    let stats = match (m.mean, m.std) {
        (Some(mean), Some(std)) => {
            Some(Standardizer::new(mean, std).map_err(|e| Error::MalformedHeader(e.to_string()))?)
        }
        (None, None) => None,
        _ => return Err(Error::MalformedHeader("mean and std must both be present or absent".into())),
    };
    let mut reader = PayloadReader::new(&payload);
    let mut batches = Vec::with_capacity(m.batches);
    for _ in 0..m.batches {
        let t0 = reader.u64()? as usize;
        let mut samples = Vec::with_capacity(m.batch_size);
        for _ in 0..m.batch_size {
            let input = reader.field(m.rows, m.cols)?;
            let target = reader.field(m.rows, m.cols)?;
            samples.push(Sample {
                permutation: None,
                input,
                target,
            });
        }
        batches.push(Batch {
            t0,
            t1: t0 + m.pred_step,
            samples,
        });
    }
    Ok(Dataset {
        config: GenConfig {
            bc_ic_range: m.bc_ic_range,
            lambda_range: m.lambda_range,
            t_range: m.t_range,
            pred_step: m.pred_step,
            batches: m.batches,
            batch_size: m.batch_size,
            shape: (m.rows, m.cols),
            seed: m.seed,
        },
        batches,
        stats,
    })
}
