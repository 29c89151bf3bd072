//! Permutation two-sample tests, bandwidth sweeps and Type II experiments.
//!
//! The null distribution comes from relabeling the pooled sample. Every
//! shuffle owns a seed derived from the test seed, and estimators that draw
//! frequencies draw a fresh bank from it, so the estimator's own randomness is
//! part of the null.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::circular::ensemble_discrepancy;
use crate::dataset::{self, BlobSpec, SampleSet};
use crate::error::{Error, Result};
use crate::estimate::{EstimateKind, Method, MmdEstimate};
use crate::exact;
use crate::fastfood::fastmmd_fastfood;
use crate::fourier::fastmmd_fourier;
use crate::kernel::ShiftInvariantKernel;
use crate::numeric::{mean, std_dev};
use crate::rng;

/// A configured MMD estimator: everything except the data and the seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimator {
    pub method: Method,
    pub kernel: ShiftInvariantKernel,
    pub kind: EstimateKind,
    /// `L` for frequency-based methods.
    pub basis: usize,
    /// B-test block size; `None` picks `round(sqrt(n))`.
    pub block_size: Option<usize>,
}

impl Estimator {
    pub fn new(method: Method, kernel: ShiftInvariantKernel, kind: EstimateKind, basis: usize) -> Result<Self> {
        let est = Self {
            method,
            kernel,
            kind,
            basis,
            block_size: None,
        };
        est.validate()?;
        Ok(est)
    }

    pub fn with_block_size(mut self, block_size: Option<usize>) -> Self {
        self.block_size = block_size;
        self
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Ok(Self {
            kernel: self.kernel.with_sigma(sigma)?,
            ..*self
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.method.supports(self.kind) {
            return Err(Error::Unsupported {
                method: self.method.name(),
                what: format!("the {} estimate", self.kind),
            });
        }
        if self.method.uses_basis() && self.basis == 0 {
            return Err(Error::invalid("basis", format!("{} needs at least one frequency", self.method)));
        }
        Ok(())
    }

    /// Runs the estimator. `seed` drives the frequency bank or the pairing shuffle.
    pub fn estimate(&self, s: &SampleSet, seed: u64) -> Result<MmdEstimate> {
        self.validate()?;
        let k = &self.kernel;
        let pick = |(biased, unbiased): (MmdEstimate, Option<MmdEstimate>)| match self.kind {
            EstimateKind::Biased => Ok(biased),
            EstimateKind::Unbiased => {
                unbiased.ok_or_else(|| s.require_class_size(2).err().unwrap_or(Error::Numerical("missing unbiased estimate".into())))
            }
        };
        match self.method {
            Method::Exact => match self.kind {
                EstimateKind::Biased => exact::mmd_biased_exact(s, k),
                EstimateKind::Unbiased => exact::mmd_unbiased_exact(s, k),
            },
            Method::Linear => exact::mmd_linear(s, k, seed),
            Method::Btest => exact::mmd_btest(s, k, self.block_size, seed),
            Method::Fourier => pick(fastmmd_fourier(s, k, &k.sample_spectral(self.basis, s.dim(), seed)?)?),
            Method::Fastfood => pick(fastmmd_fastfood(s, k, self.basis, seed)?),
            Method::Circular => ensemble_discrepancy(s, k, &k.sample_spectral(self.basis, s.dim(), seed)?),
        }
    }
}

/// Seed of shuffle `index` (0-based) under test seed `seed`.
fn shuffle_seed(seed: u64, index: usize) -> u64 {
    rng::derive_seed(seed, index as u64 + 1)
}

/// The sample set with labels permuted under shuffle `index`.
pub fn permuted(s: &SampleSet, seed: u64, index: usize) -> Result<SampleSet> {
    let mut labels = s.labels().to_vec();
    labels.shuffle(&mut rng::stream(shuffle_seed(seed, index), 0));
    s.relabel(labels)
}

/// Statistics of `shuffles` label permutations of the pooled sample.
pub fn bootstrap_null(s: &SampleSet, estimator: &Estimator, shuffles: usize, seed: u64) -> Result<Vec<f64>> {
    if shuffles == 0 {
        return Err(Error::invalid("shuffles", "need at least one shuffle"));
    }
    estimator.validate()?;
    (0..shuffles)
        .into_par_iter()
        .map(|index| {
            let wrap = |source| Error::Shuffle {
                index,
                source: Box::new(source),
            };
            let relabeled = permuted(s, seed, index).map_err(wrap)?;
            let est_seed = rng::derive_seed(shuffle_seed(seed, index), 0);
            estimator.estimate(&relabeled, est_seed).map(|e| e.value_sq).map_err(wrap)
        })
        .collect()
}

/// Smallest null value whose rank is at least `ceil((1 - alpha) n)`.
pub fn null_threshold(null: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if null.is_empty() {
        return Err(Error::invalid("null", "empty null sample"));
    }
    let mut sorted = null.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // The small offset keeps e.g. 0.95 * 1000 from rounding up to 951.
    let rank = (((1.0 - alpha) * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(sorted[rank - 1])
}

/// `(1 + #{null >= statistic}) / (shuffles + 1)`.
pub fn p_value(null: &[f64], statistic: f64) -> f64 {
    let exceed = null.iter().filter(|&&v| v >= statistic).count();
    (1 + exceed) as f64 / (null.len() + 1) as f64
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub shuffles: usize,
    pub method: Method,
    pub estimate: EstimateKind,
    #[serde(rename = "L")]
    pub basis: usize,
    pub seed: u64,
}

/// Rejects equality of the two distributions when the statistic exceeds the
/// `1 - alpha` quantile of the permutation null.
pub fn two_sample_test(
    s: &SampleSet,
    estimator: &Estimator,
    alpha: f64,
    shuffles: usize,
    seed: u64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let statistic = estimator.estimate(s, seed)?.value_sq;
    let null = bootstrap_null(s, estimator, shuffles, seed)?;
    let threshold = null_threshold(&null, alpha)?;
    Ok(TestResult {
        statistic,
        threshold,
        p_value: p_value(&null, statistic),
        reject: statistic > threshold,
        alpha,
        shuffles,
        method: estimator.method,
        estimate: estimator.kind,
        basis: if estimator.method.uses_basis() { estimator.basis } else { 0 },
        seed,
    })
}

/// `sigma_min * 10^(k / steps_per_decade)` for every `k` that stays within `sigma_max`.
pub fn sigma_grid(sigma_min: f64, sigma_max: f64, steps_per_decade: usize) -> Result<Vec<f64>> {
    if !(sigma_min > 0.0 && sigma_min < sigma_max && sigma_max.is_finite()) {
        return Err(Error::invalid(
            "sigma range",
            format!("need 0 < sigma_min < sigma_max, got [{sigma_min}, {sigma_max}]"),
        ));
    }
    if steps_per_decade == 0 {
        return Err(Error::invalid("steps_per_decade", "must be at least 1"));
    }
    let decades = (sigma_max / sigma_min).log10();
    let last = (decades * steps_per_decade as f64 + 1e-9).floor() as usize;
    Ok((0..=last)
        .map(|k| sigma_min * 10f64.powf(k as f64 / steps_per_decade as f64))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub method: Method,
    pub estimate: EstimateKind,
    pub points: Vec<SweepPoint>,
    pub argmax_sigma: f64,
}

impl SweepResult {
    pub fn sigmas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sigma).collect()
    }

    /// Writes `method,estimate,sigma,mean,std,repeats`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let err = |source| Error::Csv {
            path: "<sweep>".into(),
            source,
        };
        out.write_record(["method", "estimate", "sigma", "mean", "std", "repeats"]).map_err(err)?;
        for p in &self.points {
            out.write_record([
                self.method.to_string(),
                self.estimate.to_string(),
                p.sigma.to_string(),
                p.mean.to_string(),
                p.std.to_string(),
                p.values.len().to_string(),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|source| Error::Io {
            path: "<sweep>".into(),
            source,
        })
    }
}

/// Repeats the estimator `repeats` times at every grid bandwidth, each with its own seed.
pub fn bandwidth_sweep(
    s: &SampleSet,
    estimator: &Estimator,
    sigmas: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<SweepResult> {
    if repeats == 0 {
        return Err(Error::invalid("repeats", "must be at least 1"));
    }
    if sigmas.is_empty() || sigmas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sigmas", "grid must be non-empty and strictly increasing"));
    }
    let points = sigmas
        .iter()
        .enumerate()
        .map(|(g, &sigma)| {
            let est = estimator.with_sigma(sigma)?;
            let grid_seed = rng::derive_seed(seed, g as u64);
            let values = (0..repeats)
                .into_par_iter()
                .map(|r| est.estimate(s, rng::derive_seed(grid_seed, r as u64)).map(|e| e.value_sq))
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepPoint {
                sigma,
                mean: mean(&values),
                std: std_dev(&values),
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax_sigma = points
        .iter()
        .max_by(|a, b| a.mean.total_cmp(&b.mean))
        .map(|p| p.sigma)
        .expect("grid is non-empty");
    Ok(SweepResult {
        method: estimator.method,
        estimate: estimator.kind,
        points,
        argmax_sigma,
    })
}

/// Grid of blob experiments: each `(epsilon, L)` cell runs `trials` independent tests.
#[derive(Clone, Debug, PartialEq)]
pub struct Type2Config {
    pub epsilons: Vec<f64>,
    pub bases: Vec<usize>,
    pub samples_per_set: usize,
    pub trials: usize,
    pub alpha: f64,
    pub shuffles: usize,
    /// Estimator template; its `basis` is replaced by each grid value.
    pub estimator: Estimator,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Type2Cell {
    pub epsilon: f64,
    pub basis: usize,
    pub trials: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    /// Fraction of trials that kept the null. At `epsilon = 1` the
    /// distributions coincide and this is `1 -` the Type I error.
    pub type2_error: f64,
}

/// Trial `t` draws the same data in every cell with the same epsilon, so
/// cells that differ only in `L` are compared on common samples.
pub fn type2_experiment(config: &Type2Config) -> Result<Vec<Type2Cell>> {
    if config.trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let mut cells = Vec::new();
    for (e, &epsilon) in config.epsilons.iter().enumerate() {
        let spec = BlobSpec::new(epsilon, config.samples_per_set)?;
        for &basis in &config.bases {
            let estimator = Estimator {
                basis,
                ..config.estimator
            };
            estimator.validate()?;
            let rejections = (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let trial_seed = rng::derive_seed(rng::derive_seed(config.seed, e as u64), t as u64);
                    let s = dataset::blob_pair(&spec, trial_seed)?;
                    let test_seed = rng::derive_seed(trial_seed, basis as u64);
                    two_sample_test(&s, &estimator, config.alpha, config.shuffles, test_seed).map(|r| r.reject)
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&r| r)
                .count();
            let rate = rejections as f64 / config.trials as f64;
            cells.push(Type2Cell {
                epsilon,
                basis,
                trials: config.trials,
                rejections,
                rejection_rate: rate,
                type2_error: 1.0 - rate,
            });
        }
    }
    Ok(cells)
}

/// Writes `epsilon,basis,trials,rejections,rejection_rate,type2_error`.
pub fn write_type2_csv<W: Write>(cells: &[Type2Cell], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for cell in cells {
        out.serialize(cell).map_err(|source| Error::Csv {
            path: "<type2>".into(),
            source,
        })?;
    }
    out.flush().map_err(|source| Error::Io {
        path: "<type2>".into(),
        source,
    })
}
