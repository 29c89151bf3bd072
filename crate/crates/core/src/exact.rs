//! Quadratic-time MMD estimators and the two subsampling baselines.
//!
//! Kernel sums are formed row by row with the row order fixed, then combined
//! with pairwise summation, so results do not depend on thread count.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::estimate::{EstimateKind, Method, MmdEstimate};
use crate::kernel::ShiftInvariantKernel;
use crate::numeric::pairwise_sum;
use crate::rng;

/// Biased estimates down to `-CLAMP_SLACK * k0` are rounding noise and clamp to zero.
pub const CLAMP_SLACK: f64 = 1e-12;

/// Off-diagonal and cross kernel sums over two index sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSums {
    /// `sum_{i != j in I1} K(x_i, x_j)`
    pub within1: f64,
    /// `sum_{i != j in I2} K(x_i, x_j)`
    pub within2: f64,
    /// `sum_{i in I1, j in I2} K(x_i, x_j)`
    pub cross: f64,
    pub m: usize,
    pub n: usize,
    pub k0: f64,
}

impl KernelSums {
    pub fn compute(s: &SampleSet, k: &ShiftInvariantKernel, idx1: &[usize], idx2: &[usize]) -> Self {
        Self {
            within1: 2.0 * upper_triangle_sum(s, k, idx1),
            within2: 2.0 * upper_triangle_sum(s, k, idx2),
            cross: cross_sum(s, k, idx1, idx2),
            m: idx1.len(),
            n: idx2.len(),
            k0: k.k0(),
        }
    }

    /// `S1 = |mu_1|^2`, the full (diagonal included) mean kernel value over `I1`.
    pub fn s1(&self) -> f64 {
        let m = self.m as f64;
        (self.within1 + m * self.k0) / (m * m)
    }

    /// `S2 = |mu_2|^2`.
    pub fn s2(&self) -> f64 {
        let n = self.n as f64;
        (self.within2 + n * self.k0) / (n * n)
    }

    pub fn biased(&self) -> f64 {
        let (m, n) = (self.m as f64, self.n as f64);
        self.s1() + self.s2() - 2.0 * self.cross / (m * n)
    }

    /// Three-term U-statistic with the diagonal excluded.
    pub fn unbiased(&self) -> f64 {
        let (m, n) = (self.m as f64, self.n as f64);
        self.within1 / (m * (m - 1.0)) + self.within2 / (n * (n - 1.0))
            - 2.0 * self.cross / (m * n)
    }
}

fn upper_triangle_sum(s: &SampleSet, k: &ShiftInvariantKernel, idx: &[usize]) -> f64 {
    let rows: Vec<f64> = (0..idx.len())
        .into_par_iter()
        .map(|a| {
            let xa = s.row(idx[a]);
            let terms: Vec<f64> = idx[a + 1..].iter().map(|&b| k.eval(xa, s.row(b))).collect();
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

fn cross_sum(s: &SampleSet, k: &ShiftInvariantKernel, idx1: &[usize], idx2: &[usize]) -> f64 {
    let rows: Vec<f64> = idx1
        .par_iter()
        .map(|&a| {
            let xa = s.row(a);
            let terms: Vec<f64> = idx2.iter().map(|&b| k.eval(xa, s.row(b))).collect();
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&rows)
}

/// Rewrites a biased estimate as the unbiased one:
/// `MMD_u^2 = MMD_b^2 + S1/(m-1) + S2/(n-1) - (m+n-2) k0 / ((m-1)(n-1))`,
/// where `S1 = |mu_1|^2` and `S2 = |mu_2|^2` are the squared mean-embedding norms.
pub fn unbiased_from_biased(biased_sq: f64, s1: f64, s2: f64, m: usize, n: usize, k0: f64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    biased_sq + s1 / (m - 1.0) + s2 / (n - 1.0) - (m + n - 2.0) * k0 / ((m - 1.0) * (n - 1.0))
}

pub(crate) fn clamp_biased(value: f64, k0: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -CLAMP_SLACK * k0 {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!(
            "biased squared MMD {value:e} is below the rounding slack; the kernel is not positive definite"
        )))
    }
}

/// `sum_i sum_j a_i a_j K(x_i, x_j)` with `a_i = 1/|I1|` on `I1` and `-1/|I2|` on `I2`.
pub fn mmd_biased_exact(s: &SampleSet, k: &ShiftInvariantKernel) -> Result<MmdEstimate> {
    let sums = KernelSums::compute(s, k, s.class1(), s.class2());
    Ok(MmdEstimate {
        value_sq: clamp_biased(sums.biased(), k.k0())?,
        kind: EstimateKind::Biased,
        method: Method::Exact,
        basis: 0,
        seed: None,
    })
}

pub fn mmd_unbiased_exact(s: &SampleSet, k: &ShiftInvariantKernel) -> Result<MmdEstimate> {
    s.require_class_size(2)?;
    let sums = KernelSums::compute(s, k, s.class1(), s.class2());
    Ok(MmdEstimate {
        value_sq: sums.unbiased(),
        kind: EstimateKind::Unbiased,
        method: Method::Exact,
        basis: 0,
        seed: None,
    })
}

/// Both classes shuffled under `seed` and truncated to the smaller size.
/// Position `i` of the two returned lists forms the pair `z_i = (x_i, y_i)`.
pub fn equalized_pairs(s: &SampleSet, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut first = s.class1().to_vec();
    let mut second = s.class2().to_vec();
    first.shuffle(&mut rng::stream(seed, 1));
    second.shuffle(&mut rng::stream(seed, 2));
    let n = first.len().min(second.len());
    first.truncate(n);
    second.truncate(n);
    (first, second)
}

/// Linear-time statistic: the mean of
/// `h(z_a, z_b) = K(x_a, x_b) + K(y_a, y_b) - K(x_a, y_b) - K(x_b, y_a)`
/// over consecutive disjoint pairs of the equalized, shuffled samples.
pub fn mmd_linear(s: &SampleSet, k: &ShiftInvariantKernel, seed: u64) -> Result<MmdEstimate> {
    let (xs, ys) = equalized_pairs(s, seed);
    if xs.len() < 2 {
        return Err(Error::ClassTooSmall {
            label: if s.class1().len() <= s.class2().len() { 1 } else { 2 },
            count: xs.len(),
            required: 2,
        });
    }
    let terms: Vec<f64> = (0..xs.len() / 2)
        .map(|p| {
            let (a, b) = (2 * p, 2 * p + 1);
            let (xa, xb, ya, yb) = (s.row(xs[a]), s.row(xs[b]), s.row(ys[a]), s.row(ys[b]));
            k.eval(xa, xb) + k.eval(ya, yb) - k.eval(xa, yb) - k.eval(xb, ya)
        })
        .collect();
    Ok(MmdEstimate {
        value_sq: pairwise_sum(&terms) / terms.len() as f64,
        kind: EstimateKind::Unbiased,
        method: Method::Linear,
        basis: 0,
        seed: Some(seed),
    })
}

/// Default B-test block size: `round(sqrt(n))`, at least 2.
pub fn default_block_size(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(2)
}

/// Block statistic: the equalized, shuffled samples are cut into `floor(n / B)`
/// blocks of `B` pairs (the remainder is dropped), the unbiased exact MMD is
/// computed inside each block, and the block values are averaged.
pub fn mmd_btest(
    s: &SampleSet,
    k: &ShiftInvariantKernel,
    block_size: Option<usize>,
    seed: u64,
) -> Result<MmdEstimate> {
    let (xs, ys) = equalized_pairs(s, seed);
    let n = xs.len();
    let block = block_size.unwrap_or_else(|| default_block_size(n));
    if block < 2 {
        return Err(Error::invalid("block_size", "must be at least 2"));
    }
    if block > n {
        return Err(Error::invalid(
            "block_size",
            format!("{block} exceeds the {n} paired samples"),
        ));
    }
    let values: Vec<f64> = xs
        .chunks_exact(block)
        .zip(ys.chunks_exact(block))
        .map(|(bx, by)| KernelSums::compute(s, k, bx, by).unbiased())
        .collect();
    Ok(MmdEstimate {
        value_sq: pairwise_sum(&values) / values.len() as f64,
        kind: EstimateKind::Unbiased,
        method: Method::Btest,
        basis: 0,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{self, BlobSpec, Label};
    use crate::kernel::KernelFamily;
    use crate::numeric::{mean, rel_close, std_dev};

    /// Naive double loop over all pairs with explicit weights.
    fn brute_biased(s: &SampleSet, k: &ShiftInvariantKernel) -> f64 {
        let (m, n) = s.class_sizes();
        let weight = |i: usize| match s.label(i) {
            Label::First => 1.0 / m as f64,
            Label::Second => -1.0 / n as f64,
        };
        let mut total = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                total += weight(i) * weight(j) * k.evaluate(s.row(i), s.row(j)).unwrap();
            }
        }
        total
    }

    fn small_set(seed: u64, m: usize, n: usize, d: usize) -> SampleSet {
        let mut normals = rng::NormalStream::new(rng::stream(seed, 0));
        let data = (0..(m + n) * d).map(|_| normals.next()).collect();
        let mut labels = vec![Label::First; m];
        labels.resize(m + n, Label::Second);
        SampleSet::new(data, d, labels).unwrap()
    }

    #[test]
    fn identical_classes_give_zero() {
        let pts = dataset::Points::new(vec![0.0, 1.0, 2.0, -1.0, 0.5, 0.5], 2).unwrap();
        let s = SampleSet::from_classes(&pts, &pts).unwrap();
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        assert!(mmd_biased_exact(&s, &k).unwrap().value_sq.abs() < 1e-15);
        // U-statistic on identical multisets: strictly negative, equal to the identity form.
        let u = mmd_unbiased_exact(&s, &k).unwrap().value_sq;
        let sums = KernelSums::compute(&s, &k, s.class1(), s.class2());
        let via_identity = unbiased_from_biased(sums.biased(), sums.s1(), sums.s2(), 3, 3, 1.0);
        assert!(u <= 0.0);
        assert!((u - via_identity).abs() < 1e-15);
    }

    #[test]
    fn two_point_analytic_case() {
        let sigma: f64 = 1.3;
        let dist = (2.0 * sigma * sigma * 2f64.ln()).sqrt();
        let s = SampleSet::new(vec![0.0, 0.0, dist, 0.0], 2, vec![Label::First, Label::Second]).unwrap();
        let k = ShiftInvariantKernel::gaussian(sigma).unwrap();
        let v = mmd_biased_exact(&s, &k).unwrap().value_sq;
        assert!((v - 1.0).abs() < 1e-15);
        assert!(matches!(mmd_unbiased_exact(&s, &k), Err(Error::ClassTooSmall { required: 2, .. })));
    }

    #[test]
    fn matches_brute_force_double_loop() {
        for seed in 0..10 {
            let s = small_set(seed, 9 + seed as usize, 11, 3);
            for family in [KernelFamily::Gaussian, KernelFamily::Laplacian] {
                let k = ShiftInvariantKernel::new(family, 1.1, 1.0).unwrap();
                let fast = mmd_biased_exact(&s, &k).unwrap().value_sq;
                assert!(rel_close(fast, brute_biased(&s, &k), 1e-12));
            }
        }
    }

    #[test]
    fn unbiased_identity_on_random_sets() {
        for seed in 0..20 {
            let s = small_set(100 + seed, 8, 12, 3);
            let k = ShiftInvariantKernel::gaussian(0.9).unwrap();
            let sums = KernelSums::compute(&s, &k, s.class1(), s.class2());
            let direct = mmd_unbiased_exact(&s, &k).unwrap().value_sq;
            let identity = unbiased_from_biased(sums.biased(), sums.s1(), sums.s2(), 8, 12, 1.0);
            assert!(rel_close(direct, identity, 1e-12), "{direct} vs {identity}");
        }
    }

    #[test]
    fn permutation_invariance() {
        let s = small_set(5, 10, 14, 4);
        let k = ShiftInvariantKernel::laplacian(2.0).unwrap();
        let t = s.shuffled(99);
        assert!(rel_close(
            mmd_biased_exact(&s, &k).unwrap().value_sq,
            mmd_biased_exact(&t, &k).unwrap().value_sq,
            1e-12
        ));
        assert!(rel_close(
            mmd_unbiased_exact(&s, &k).unwrap().value_sq,
            mmd_unbiased_exact(&t, &k).unwrap().value_sq,
            1e-12
        ));
    }

    /// Under P = Q the U-statistic averages to zero.
    #[test]
    fn unbiased_has_zero_mean_under_null() {
        let spec = BlobSpec::new(1.0, 20).unwrap();
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        let values: Vec<f64> = (0..500)
            .map(|t| mmd_unbiased_exact(&dataset::blob_pair(&spec, t).unwrap(), &k).unwrap().value_sq)
            .collect();
        let se = std_dev(&values) / (values.len() as f64).sqrt();
        assert!(mean(&values).abs() < 3.0 * se, "mean {} se {se}", mean(&values));
    }

    #[test]
    fn linear_single_pair_by_hand() {
        let s = small_set(7, 2, 2, 2);
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        let est = mmd_linear(&s, &k, 3).unwrap();
        let (xs, ys) = equalized_pairs(&s, 3);
        let (x1, x2, y1, y2) = (s.row(xs[0]), s.row(xs[1]), s.row(ys[0]), s.row(ys[1]));
        let e = |a: &[f64], b: &[f64]| k.evaluate(a, b).unwrap();
        let h = e(x1, x2) + e(y1, y2) - e(x1, y2) - e(x2, y1);
        assert!((est.value_sq - h).abs() < 1e-15);
        assert_eq!(est.kind, EstimateKind::Unbiased);
    }

    #[test]
    fn linear_needs_two_pairs_worth_of_samples() {
        let s = small_set(7, 1, 5, 2);
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        assert!(mmd_linear(&s, &k, 0).is_err());
    }

    #[test]
    fn equalization_discards_the_excess() {
        let s = small_set(8, 6, 9, 1);
        let (xs, ys) = equalized_pairs(&s, 4);
        assert_eq!((xs.len(), ys.len()), (6, 6));
        assert!(xs.iter().all(|&i| s.label(i) == Label::First));
        assert!(ys.iter().all(|&i| s.label(i) == Label::Second));
        assert_eq!(equalized_pairs(&s, 4), (xs, ys));
    }

    #[test]
    fn btest_full_block_is_exact() {
        let s = small_set(9, 12, 12, 3);
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        let b = mmd_btest(&s, &k, Some(12), 5).unwrap().value_sq;
        let u = mmd_unbiased_exact(&s, &k).unwrap().value_sq;
        assert!(rel_close(b, u, 1e-12), "{b} vs {u}");
        assert!(mmd_btest(&s, &k, Some(13), 5).is_err());
        assert!(mmd_btest(&s, &k, Some(1), 5).is_err());
    }

    /// A block of two pairs is the unbiased MMD on four points: the within
    /// terms of `h` plus all four cross terms averaged.
    #[test]
    fn btest_pair_blocks_use_symmetrized_h() {
        let s = small_set(10, 8, 8, 2);
        let k = ShiftInvariantKernel::gaussian(0.7).unwrap();
        let (xs, ys) = equalized_pairs(&s, 6);
        let e = |a: usize, b: usize| k.evaluate(s.row(a), s.row(b)).unwrap();
        let mut total = 0.0;
        for p in 0..4 {
            let (x1, x2, y1, y2) = (xs[2 * p], xs[2 * p + 1], ys[2 * p], ys[2 * p + 1]);
            total += e(x1, x2) + e(y1, y2) - 0.5 * (e(x1, y1) + e(x1, y2) + e(x2, y1) + e(x2, y2));
        }
        let b = mmd_btest(&s, &k, Some(2), 6).unwrap().value_sq;
        assert!(rel_close(b, total / 4.0, 1e-12));
    }

    #[test]
    fn default_block_size_is_rounded_root() {
        assert_eq!(default_block_size(200), 14);
        assert_eq!(default_block_size(1000), 32);
        assert_eq!(default_block_size(2), 2);
    }

    fn permutation_stats<F: Fn(u64) -> f64>(f: F, reps: u64) -> (f64, f64) {
        let values: Vec<f64> = (0..reps).map(f).collect();
        (mean(&values), std_dev(&values))
    }

    /// Expectation over permutations recovers the exact U-statistic.
    #[test]
    fn baselines_are_unbiased_over_permutations() {
        let s = small_set(11, 20, 20, 2);
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        let exact = mmd_unbiased_exact(&s, &k).unwrap().value_sq;
        let reps = 10_000;
        let (lin_mean, lin_std) = permutation_stats(|seed| mmd_linear(&s, &k, seed).unwrap().value_sq, reps);
        let (bt_mean, bt_std) = permutation_stats(|seed| mmd_btest(&s, &k, None, seed).unwrap().value_sq, reps);
        let root = (reps as f64).sqrt();
        assert!((lin_mean - exact).abs() < 3.0 * lin_std / root, "linear {lin_mean} vs {exact}");
        assert!((bt_mean - exact).abs() < 3.0 * bt_std / root, "btest {bt_mean} vs {exact}");
        assert!(lin_std > 1.5 * bt_std, "linear std {lin_std}, btest std {bt_std}");
    }

    #[test]
    fn larger_blocks_have_lower_variance() {
        let s = small_set(12, 24, 24, 2);
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        let blocks = [2, 3, 4, 6, 8, 12];
        let stds: Vec<f64> = blocks
            .iter()
            .map(|&b| permutation_stats(|seed| mmd_btest(&s, &k, Some(b), seed).unwrap().value_sq, 2000).1)
            .collect();
        for w in stds.windows(2) {
            assert!(w[1] <= 1.1 * w[0], "{stds:?}");
        }
    }
}
