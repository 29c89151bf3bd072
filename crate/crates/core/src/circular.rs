//! Circular discrepancy between samples wrapped onto the unit circle.
//!
//! Projecting with a fixed `omega` and reducing modulo `2 pi` places every
//! sample on the circle without changing `cos(omega' (x - y))`. The
//! discrepancy of the two wrapped classes is the largest mean margin
//! `sum_i a_i sin(y - x_i)` over support points `y`, attained in closed form.
//! Its mean square over spectral frequencies, scaled by `k0`, is the biased
//! squared MMD.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use rayon::prelude::*;

use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::estimate::{EstimateKind, Method, MmdEstimate};
use crate::exact::clamp_biased;
use crate::kernel::{FrequencyBank, ShiftInvariantKernel};
use crate::numeric::pairwise_sum;

/// Wrapped angles in `[0, 2 pi)` with their weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CircularSample {
    angles: Vec<f64>,
    weights: Vec<f64>,
}

impl CircularSample {
    pub fn new(angles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if angles.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: angles.len(),
                got: weights.len(),
            });
        }
        if let Some(bad) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::invalid("angles", format!("{bad} is outside [0, 2 pi)")));
        }
        Ok(Self { angles, weights })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Outcome of one circular comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscrepancyResult {
    pub eta: f64,
    /// Orientation of the decision diameter in `(-pi, pi]`.
    pub decision_angle: f64,
    /// Set when `eta == 0`; the angle is then reported as 0.
    pub degenerate: bool,
}

impl DiscrepancyResult {
    /// The support point `y` in `[0, 2 pi)` maximizing the mean margin.
    pub fn optimal_support(&self) -> f64 {
        wrap_angle(self.decision_angle + FRAC_PI_2)
    }
}

/// Non-negative representative of `t` modulo `2 pi`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2 pi for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps both classes for one frequency, with weights `1/|I1|` and `1/|I2|`.
pub fn wrap(omega: &[f64], s: &SampleSet) -> Result<(CircularSample, CircularSample)> {
    if omega.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: omega.len(),
        });
    }
    let side = |idx: &[usize]| {
        let angles = idx
            .iter()
            .map(|&i| wrap_angle(omega.iter().zip(s.row(i)).map(|(w, x)| w * x).sum()))
            .collect();
        CircularSample {
            angles,
            weights: vec![1.0 / idx.len() as f64; idx.len()],
        }
    };
    Ok((side(s.class1()), side(s.class2())))
}

/// Closed-form discrepancy: the amplitude of `sum_i a_i sin(y - x_i)` with
/// class-2 weights negated.
pub fn circular_discrepancy(c1: &CircularSample, c2: &CircularSample) -> DiscrepancyResult {
    let (cos1, sin1) = weighted_resultant(c1);
    let (cos2, sin2) = weighted_resultant(c2);
    let (cos_sum, sin_sum) = (cos1 - cos2, sin1 - sin2);
    let eta = cos_sum.hypot(sin_sum);
    let degenerate = eta == 0.0;
    DiscrepancyResult {
        eta,
        decision_angle: if degenerate { 0.0 } else { sin_sum.atan2(cos_sum) },
        degenerate,
    }
}

/// `(sum_i a_i cos x_i, sum_i a_i sin x_i)` over one sample.
fn weighted_resultant(c: &CircularSample) -> (f64, f64) {
    let (mut cos_terms, mut sin_terms) = (Vec::with_capacity(c.len()), Vec::with_capacity(c.len()));
    for (&x, &a) in c.angles.iter().zip(&c.weights) {
        let (s, co) = x.sin_cos();
        cos_terms.push(a * co);
        sin_terms.push(a * s);
    }
    (pairwise_sum(&cos_terms), pairwise_sum(&sin_terms))
}

/// Mean margin `sum_i a_i sin(y - x_i)` at support point `y`, class-2 weights negated.
pub fn margin(c1: &CircularSample, c2: &CircularSample, y: f64) -> f64 {
    let first: f64 = c1.angles.iter().zip(&c1.weights).map(|(x, a)| a * (y - x).sin()).sum();
    let second: f64 = c2.angles.iter().zip(&c2.weights).map(|(x, a)| a * (y - x).sin()).sum();
    first - second
}

/// Per-frequency wrapped samples and their discrepancy.
pub fn discrepancies(s: &SampleSet, bank: &FrequencyBank) -> Result<Vec<DiscrepancyResult>> {
    if bank.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: bank.dim(),
        });
    }
    (0..bank.basis())
        .into_par_iter()
        .map(|k| {
            let (c1, c2) = wrap(bank.row(k), s)?;
            Ok(circular_discrepancy(&c1, &c2))
        })
        .collect()
}

/// `(k0 / L) sum_k eta^2(omega_k)`: the biased squared MMD through the circle.
pub fn ensemble_discrepancy(
    s: &SampleSet,
    k: &ShiftInvariantKernel,
    bank: &FrequencyBank,
) -> Result<MmdEstimate> {
    let etas: Vec<f64> = discrepancies(s, bank)?.iter().map(|r| r.eta * r.eta).collect();
    let value = k.k0() / bank.basis() as f64 * pairwise_sum(&etas);
    Ok(MmdEstimate {
        value_sq: clamp_biased(value, k.k0())?,
        kind: EstimateKind::Biased,
        method: Method::Circular,
        basis: bank.basis(),
        seed: bank.seed(),
    })
}

/// Writes `k,class,angle,weight,eta,decision_angle`, one row per wrapped sample per frequency.
pub fn write_circle<W: Write>(s: &SampleSet, bank: &FrequencyBank, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let err = |source| Error::Csv {
        path: "<circle>".into(),
        source,
    };
    out.write_record(["k", "class", "angle", "weight", "eta", "decision_angle"]).map_err(err)?;
    for k in 0..bank.basis() {
        let (c1, c2) = wrap(bank.row(k), s)?;
        let result = circular_discrepancy(&c1, &c2);
        for (class, c) in [(1, &c1), (2, &c2)] {
            for (angle, weight) in c.angles.iter().zip(&c.weights) {
                out.write_record([
                    k.to_string(),
                    class.to_string(),
                    angle.to_string(),
                    weight.to_string(),
                    result.eta.to_string(),
                    result.decision_angle.to_string(),
                ])
                .map_err(err)?;
            }
        }
    }
    out.flush().map_err(|source| Error::Io {
        path: "<circle>".into(),
        source,
    })
}
