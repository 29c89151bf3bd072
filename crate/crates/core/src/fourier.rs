//! FastMMD with random Fourier frequencies.
//!
//! For each frequency `omega_k`, the weighted sinusoids `a_i cos(omega' x - phi)`
//! of one class add up to a single sinusoid with amplitude `A` and phase
//! `theta`. Both classes are reduced this way in one pass over the samples,
//! and the squared MMD follows from the amplitudes and the phase difference.
//!
//! [`fastmmd_features`] computes the same estimate through explicit random
//! feature vectors. It shares no code with the accumulator path and serves as
//! its oracle.

use std::io::Write;

use rayon::prelude::*;

use crate::dataset::{Label, SampleSet};
use crate::error::{Error, Result};
use crate::estimate::{EstimateKind, Method, MmdEstimate};
use crate::exact::clamp_biased;
use crate::kernel::{FrequencyBank, ShiftInvariantKernel};
use crate::numeric::{pairwise_reduce, pairwise_sum};
use crate::trig;

/// Running `sum a_i cos(phi_i)` and `sum a_i sin(phi_i)` for one frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SinusoidAccumulator {
    pub cos_sum: f64,
    pub sin_sum: f64,
    pub count: usize,
}

impl SinusoidAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absorb(&mut self, weight: f64, phase: f64) {
        let (s, c) = phase.sin_cos();
        self.cos_sum += weight * c;
        self.sin_sum += weight * s;
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.cos_sum += other.cos_sum;
        self.sin_sum += other.sin_sum;
        self.count += other.count;
    }

    pub fn amplitude_sq(&self) -> f64 {
        self.cos_sum * self.cos_sum + self.sin_sum * self.sin_sum
    }

    pub fn amplitude(&self) -> f64 {
        self.cos_sum.hypot(self.sin_sum)
    }

    /// Four-quadrant phase in `(-pi, pi]`; 0 when the amplitude vanishes.
    pub fn phase(&self) -> f64 {
        if self.cos_sum == 0.0 && self.sin_sum == 0.0 {
            0.0
        } else {
            self.sin_sum.atan2(self.cos_sum)
        }
    }
}

/// Amplitude and phase of `sum_i a_i cos(omega' x_i - phi)` as a function of `phi`,
/// for `(a_i, x_i)` pairs.
pub fn amplitude_phase<'a, I>(omega: &[f64], points: I) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = (f64, &'a [f64])>,
{
    let mut acc = SinusoidAccumulator::new();
    for (weight, x) in points {
        if x.len() != omega.len() {
            return Err(Error::DimensionMismatch {
                expected: omega.len(),
                got: x.len(),
            });
        }
        acc.absorb(weight, dot(omega, x));
    }
    if acc.count == 0 {
        return Err(Error::invalid("points", "need at least one point"));
    }
    Ok((acc.amplitude(), acc.phase()))
}

/// Squared amplitude of the difference of two sinusoids,
/// `A1^2 + A2^2 - 2 A1 A2 cos(theta1 - theta2)`, written as
/// `(A1 - A2)^2 + 4 A1 A2 sin^2((theta1 - theta2) / 2)` so it never goes negative.
pub fn difference_amplitude_sq(a1: f64, theta1: f64, a2: f64, theta2: f64) -> f64 {
    let half = 0.5 * (theta1 - theta2);
    let s = half.sin();
    (a1 - a2) * (a1 - a2) + 4.0 * a1 * a2 * s * s
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maps a sample to its `L` projections `omega_k' x`.
pub trait Projector: Sync {
    fn basis(&self) -> usize;
    fn dim(&self) -> usize;
    /// Writes `omega_k' x` into `out[k]`; `x.len() == self.dim()`, `out.len() == self.basis()`.
    fn project(&self, x: &[f64], out: &mut [f64]);
}

/// A frequency bank stored column-major (`d x L`) so projection streams
/// over contiguous memory.
#[derive(Clone, Debug)]
pub struct DenseProjector {
    columns: Vec<f64>,
    basis: usize,
    dim: usize,
}

impl DenseProjector {
    pub fn new(bank: &FrequencyBank) -> Self {
        let (basis, dim) = (bank.basis(), bank.dim());
        let mut columns = vec![0.0; basis * dim];
        for (k, row) in bank.rows().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                columns[j * basis + k] = w;
            }
        }
        Self { columns, basis, dim }
    }
}

impl Projector for DenseProjector {
    fn basis(&self) -> usize {
        self.basis
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&xj, column) in x.iter().zip(self.columns.chunks_exact(self.basis)) {
            for (o, &w) in out.iter_mut().zip(column) {
                *o += xj * w;
            }
        }
    }
}

/// Unweighted per-class sums `sum_{i in I_c} cos(omega_k' x_i)` and
/// `sum_{i in I_c} sin(omega_k' x_i)` for every frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassSums {
    cos: [Vec<f64>; 2],
    sin: [Vec<f64>; 2],
    counts: [usize; 2],
}

const MIN_SAMPLE_BLOCK: usize = 128;
const MAX_SAMPLE_BLOCKS: usize = 256;

fn class_slot(label: Label) -> usize {
    match label {
        Label::First => 0,
        Label::Second => 1,
    }
}

impl ClassSums {
    pub fn zeros(basis: usize) -> Self {
        Self {
            cos: [vec![0.0; basis], vec![0.0; basis]],
            sin: [vec![0.0; basis], vec![0.0; basis]],
            counts: [0, 0],
        }
    }

    /// One pass over the samples. Samples are cut into at most
    /// `MAX_SAMPLE_BLOCKS` contiguous blocks summed in order, and the block
    /// partials are combined pairwise, so the result does not depend on the
    /// thread count.
    pub fn compute<P: Projector + ?Sized>(s: &SampleSet, proj: &P) -> Result<Self> {
        if proj.dim() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: proj.dim(),
                got: s.dim(),
            });
        }
        let basis = proj.basis();
        let block = MIN_SAMPLE_BLOCK.max(s.len().div_ceil(MAX_SAMPLE_BLOCKS));
        let starts: Vec<usize> = (0..s.len()).step_by(block).collect();
        let partials: Vec<Vec<f64>> = starts
            .into_par_iter()
            .map(|start| {
                let mut acc = vec![0.0; 4 * basis];
                let mut phase = vec![0.0; basis];
                for i in start..(start + block).min(s.len()) {
                    proj.project(s.row(i), &mut phase);
                    let offset = 2 * basis * class_slot(s.label(i));
                    let (cos_acc, sin_acc) = acc[offset..offset + 2 * basis].split_at_mut(basis);
                    trig::accumulate_sin_cos(&phase, cos_acc, sin_acc);
                }
                acc
            })
            .collect();
        let total = pairwise_reduce(partials).unwrap_or_else(|| vec![0.0; 4 * basis]);
        let mut parts = total.chunks_exact(basis).map(<[f64]>::to_vec);
        let (c1, s1, c2, s2) = (
            parts.next().unwrap(),
            parts.next().unwrap(),
            parts.next().unwrap(),
            parts.next().unwrap(),
        );
        let (m, n) = s.class_sizes();
        Ok(Self {
            cos: [c1, c2],
            sin: [s1, s2],
            counts: [m, n],
        })
    }

    pub fn basis(&self) -> usize {
        self.cos[0].len()
    }

    /// Adds one sample's projections.
    pub fn absorb_projection(&mut self, label: Label, phases: &[f64]) {
        let c = class_slot(label);
        trig::accumulate_sin_cos(phases, &mut self.cos[c], &mut self.sin[c]);
        self.counts[c] += 1;
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.counts[0], self.counts[1])
    }

    /// Accumulator of class `label` at frequency `k`, with weights `1/|I_c|`.
    pub fn accumulator(&self, label: Label, k: usize) -> SinusoidAccumulator {
        let c = class_slot(label);
        let w = 1.0 / self.counts[c] as f64;
        SinusoidAccumulator {
            cos_sum: w * self.cos[c][k],
            sin_sum: w * self.sin[c][k],
            count: self.counts[c],
        }
    }

    pub fn terms(&self) -> Vec<FrequencyTerm> {
        (0..self.basis())
            .map(|k| {
                let first = self.accumulator(Label::First, k);
                let second = self.accumulator(Label::Second, k);
                let (a1, t1, a2, t2) = (first.amplitude(), first.phase(), second.amplitude(), second.phase());
                FrequencyTerm {
                    a1,
                    theta1: t1,
                    a2,
                    theta2: t2,
                    a_sq: difference_amplitude_sq(a1, t1, a2, t2),
                }
            })
            .collect()
    }

    /// Biased estimate and, when both classes have two or more samples, the unbiased one.
    pub fn estimates(&self, k0: f64, method: Method, seed: Option<u64>) -> Result<FourierEstimates> {
        let (m, n) = self.counts();
        if m == 0 || n == 0 {
            return Err(Error::ClassTooSmall {
                label: if m == 0 { 1 } else { 2 },
                count: 0,
                required: 1,
            });
        }
        let terms = self.terms();
        let basis = terms.len();
        let scale = k0 / basis as f64;
        let a_sq: Vec<f64> = terms.iter().map(|t| t.a_sq).collect();
        let sum_a_sq = pairwise_sum(&a_sq);
        let biased = MmdEstimate {
            value_sq: clamp_biased(scale * sum_a_sq, k0)?,
            kind: EstimateKind::Biased,
            method,
            basis,
            seed,
        };
        let unbiased = (m >= 2 && n >= 2).then(|| {
            let a1_sq: Vec<f64> = terms.iter().map(|t| t.a1 * t.a1).collect();
            let a2_sq: Vec<f64> = terms.iter().map(|t| t.a2 * t.a2).collect();
            let (mf, nf) = (m as f64, n as f64);
            let value_sq = scale
                * (sum_a_sq + pairwise_sum(&a1_sq) / (mf - 1.0) + pairwise_sum(&a2_sq) / (nf - 1.0))
                - (mf + nf - 2.0) * k0 / ((mf - 1.0) * (nf - 1.0));
            MmdEstimate {
                value_sq,
                kind: EstimateKind::Unbiased,
                method,
                basis,
                seed,
            }
        });
        Ok(FourierEstimates { biased, unbiased })
    }
}

/// Per-frequency amplitudes and phases of both classes and their difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyTerm {
    pub a1: f64,
    pub theta1: f64,
    pub a2: f64,
    pub theta2: f64,
    pub a_sq: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierEstimates {
    pub biased: MmdEstimate,
    /// `None` when a class has fewer than two samples.
    pub unbiased: Option<MmdEstimate>,
}

impl FourierEstimates {
    pub fn get(&self, kind: EstimateKind) -> Result<MmdEstimate> {
        match kind {
            EstimateKind::Biased => Ok(self.biased),
            EstimateKind::Unbiased => self.unbiased.ok_or(Error::ClassTooSmall {
                label: 1,
                count: 1,
                required: 2,
            }),
        }
    }
}

fn check_bank(s: &SampleSet, bank: &FrequencyBank) -> Result<()> {
    if bank.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: bank.dim(),
        });
    }
    Ok(())
}

/// Amplitude/phase estimator over a sampled bank; returns `(biased, unbiased)`.
pub fn fastmmd_fourier(
    s: &SampleSet,
    k: &ShiftInvariantKernel,
    bank: &FrequencyBank,
) -> Result<(MmdEstimate, Option<MmdEstimate>)> {
    check_bank(s, bank)?;
    let sums = ClassSums::compute(s, &DenseProjector::new(bank))?;
    let est = sums.estimates(k.k0(), Method::Fourier, bank.seed())?;
    Ok((est.biased, est.unbiased))
}

/// `z(x) = sqrt(k0 / L) [cos(omega_1' x), .., cos(omega_L' x), sin(omega_1' x), .., sin(omega_L' x)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    z: Vec<f64>,
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.z, &other.z)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }
}

/// Random feature map for a kernel and a frequency bank.
#[derive(Clone, Debug)]
pub struct FeatureMap<'a> {
    bank: &'a FrequencyBank,
    scale: f64,
}

impl<'a> FeatureMap<'a> {
    pub fn new(k: &ShiftInvariantKernel, bank: &'a FrequencyBank) -> Self {
        Self {
            bank,
            scale: (k.k0() / bank.basis() as f64).sqrt(),
        }
    }

    pub fn map(&self, x: &[f64]) -> Result<FeatureVector> {
        if x.len() != self.bank.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.bank.dim(),
                got: x.len(),
            });
        }
        let basis = self.bank.basis();
        let mut z = vec![0.0; 2 * basis];
        for (k, omega) in self.bank.rows().enumerate() {
            let (s, c) = dot(omega, x).sin_cos();
            z[k] = self.scale * c;
            z[basis + k] = self.scale * s;
        }
        Ok(FeatureVector { z })
    }

    /// Mean feature vector over `idx`.
    pub fn mean(&self, s: &SampleSet, idx: &[usize]) -> Result<Vec<f64>> {
        let features = idx.iter().map(|&i| self.map(s.row(i)).map(|f| f.z)).collect::<Result<Vec<_>>>()?;
        let width = 2 * self.bank.basis();
        let inv = 1.0 / idx.len() as f64;
        Ok((0..width)
            .map(|c| {
                let column: Vec<f64> = features.iter().map(|f| f[c]).collect();
                inv * pairwise_sum(&column)
            })
            .collect())
    }
}

/// Feature-vector estimator: `MMD_b^2 = |z1 - z2|^2` with `z_c` the class mean
/// feature, and `MMD_u^2 = |z1 - z2|^2 + |z1|^2/(m-1) + |z2|^2/(n-1) - (m+n-2) k0/((m-1)(n-1))`.
pub fn fastmmd_features(
    s: &SampleSet,
    k: &ShiftInvariantKernel,
    bank: &FrequencyBank,
) -> Result<(MmdEstimate, Option<MmdEstimate>)> {
    check_bank(s, bank)?;
    let map = FeatureMap::new(k, bank);
    let z1 = map.mean(s, s.class1())?;
    let z2 = map.mean(s, s.class2())?;
    let diff: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| (a - b) * (a - b)).collect();
    let sq = |v: &[f64]| pairwise_sum(&v.iter().map(|a| a * a).collect::<Vec<_>>());
    let biased_sq = pairwise_sum(&diff);
    let (m, n) = s.class_sizes();
    let estimate = |value_sq, kind| MmdEstimate {
        value_sq,
        kind,
        method: Method::Fourier,
        basis: bank.basis(),
        seed: bank.seed(),
    };
    let unbiased = (m >= 2 && n >= 2).then(|| {
        let (mf, nf) = (m as f64, n as f64);
        let k0 = k.k0();
        let value = biased_sq + sq(&z1) / (mf - 1.0) + sq(&z2) / (nf - 1.0)
            - (mf + nf - 2.0) * k0 / ((mf - 1.0) * (nf - 1.0));
        estimate(value, EstimateKind::Unbiased)
    });
    Ok((estimate(biased_sq, EstimateKind::Biased), unbiased))
}

/// Absorbs samples one at a time; memory is `O(L)` regardless of `N`.
#[derive(Clone, Debug)]
pub struct StreamingFastMmd {
    projector: DenseProjector,
    sums: ClassSums,
    k0: f64,
    seed: Option<u64>,
    phases: Vec<f64>,
}

impl StreamingFastMmd {
    pub fn new(k: &ShiftInvariantKernel, bank: &FrequencyBank) -> Self {
        Self {
            projector: DenseProjector::new(bank),
            sums: ClassSums::zeros(bank.basis()),
            k0: k.k0(),
            seed: bank.seed(),
            phases: vec![0.0; bank.basis()],
        }
    }

    pub fn absorb(&mut self, x: &[f64], label: Label) -> Result<()> {
        if x.len() != self.projector.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.projector.dim(),
                got: x.len(),
            });
        }
        self.projector.project(x, &mut self.phases);
        self.sums.absorb_projection(label, &self.phases);
        Ok(())
    }

    pub fn counts(&self) -> (usize, usize) {
        self.sums.counts()
    }

    pub fn estimates(&self) -> Result<FourierEstimates> {
        self.sums.estimates(self.k0, Method::Fourier, self.seed)
    }
}

/// Writes `k,a1,theta1,a2,theta2,a_sq`, one row per frequency.
pub fn write_amplitudes<W: Write>(terms: &[FrequencyTerm], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let err = |source| Error::Csv {
        path: "<amplitudes>".into(),
        source,
    };
    out.write_record(["k", "a1", "theta1", "a2", "theta2", "a_sq"]).map_err(err)?;
    for (k, t) in terms.iter().enumerate() {
        out.write_record([
            k.to_string(),
            t.a1.to_string(),
            t.theta1.to_string(),
            t.a2.to_string(),
            t.theta2.to_string(),
            t.a_sq.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|source| Error::Io {
        path: "<amplitudes>".into(),
        source,
    })
}
