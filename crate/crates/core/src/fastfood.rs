//! Fastfood: structured Gaussian projections through Walsh-Hadamard transforms.
//!
//! One block stands in for a `d' x d'` Gaussian matrix with
//! `V = 1/(sigma sqrt(d')) S H G Pi H B`, costing `O(d' log d')` per sample
//! instead of `O(d'^2)`. Stacking `ceil(L / d')` independent blocks gives `L`
//! frequencies.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::estimate::{Method, MmdEstimate};
use crate::fourier::{ClassSums, Projector};
use crate::kernel::{BankProvenance, FrequencyBank, KernelFamily, ShiftInvariantKernel};
use crate::rng::{self, NormalStream};

/// In-place unnormalized Walsh-Hadamard transform. Applying it twice scales by the length.
pub fn fwht(x: &mut [f64]) -> Result<()> {
    if !x.len().is_power_of_two() {
        return Err(Error::invalid(
            "length",
            format!("{} is not a power of two", x.len()),
        ));
    }
    let mut h = 1;
    while h < x.len() {
        for chunk in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    Ok(())
}

fn fwht_unchecked(x: &mut [f64]) {
    fwht(x).expect("padded length is a power of two");
}

/// The diagonal and permutation factors of one Fastfood block.
#[derive(Clone, Debug, PartialEq)]
pub struct FastfoodBlock {
    /// Rademacher diagonal `B`.
    pub signs: Vec<f64>,
    /// `Pi`: output position `i` takes input position `perm[i]`.
    pub perm: Vec<usize>,
    /// Standard normal diagonal `G`.
    pub gauss: Vec<f64>,
    /// `S`: chi(d') row lengths divided by `|G|_F`.
    pub scale: Vec<f64>,
}

impl FastfoodBlock {
    pub fn sample(padded_dim: usize, seed: u64) -> Self {
        let mut signs_rng = rng::stream(seed, 0);
        let signs = (0..padded_dim)
            .map(|_| if signs_rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut perm: Vec<usize> = (0..padded_dim).collect();
        perm.shuffle(&mut rng::stream(seed, 1));
        let mut normals = NormalStream::new(rng::stream(seed, 2));
        let gauss: Vec<f64> = (0..padded_dim).map(|_| normals.next()).collect();
        let frobenius = gauss.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut chi = NormalStream::new(rng::stream(seed, 3));
        let scale = (0..padded_dim)
            .map(|_| {
                let len = (0..padded_dim).map(|_| chi.next().powi(2)).sum::<f64>().sqrt();
                len / frobenius
            })
            .collect();
        Self {
            signs,
            perm,
            gauss,
            scale,
        }
    }

    /// `S H G Pi H B x`, overwriting `x`; `scratch` has the same length.
    fn apply(&self, x: &mut [f64], scratch: &mut [f64]) {
        for (v, s) in x.iter_mut().zip(&self.signs) {
            *v *= s;
        }
        fwht_unchecked(x);
        for ((out, &p), g) in scratch.iter_mut().zip(&self.perm).zip(&self.gauss) {
            *out = x[p] * g;
        }
        fwht_unchecked(scratch);
        for ((v, &t), s) in x.iter_mut().zip(scratch.iter()).zip(&self.scale) {
            *v = t * s;
        }
    }
}

/// Independent blocks whose concatenated outputs, truncated to `L`, are `omega_k' x`.
#[derive(Clone, Debug, PartialEq)]
pub struct FastfoodStack {
    blocks: Vec<FastfoodBlock>,
    dim: usize,
    padded_dim: usize,
    basis: usize,
    sigma: f64,
    seed: u64,
}

impl FastfoodStack {
    pub fn new(dim: usize, basis: usize, sigma: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if basis == 0 {
            return Err(Error::invalid("basis", "need at least one frequency"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive and finite, got {sigma}")));
        }
        let padded_dim = dim.next_power_of_two();
        let blocks = (0..basis.div_ceil(padded_dim))
            .map(|b| FastfoodBlock::sample(padded_dim, rng::derive_seed(seed, b as u64)))
            .collect();
        Ok(Self {
            blocks,
            dim,
            padded_dim,
            basis,
            sigma,
            seed,
        })
    }

    pub fn padded_dim(&self) -> usize {
        self.padded_dim
    }

    pub fn blocks(&self) -> &[FastfoodBlock] {
        &self.blocks
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Projections of one sample, allocating the output.
    pub fn project_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() > self.padded_dim || x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.basis];
        self.project(x, &mut out);
        Ok(out)
    }

    /// The implicit `L x d` matrix, recovered by projecting the standard basis.
    pub fn materialize(&self) -> FrequencyBank {
        let mut omegas = vec![0.0; self.basis * self.dim];
        let mut unit = vec![0.0; self.dim];
        let mut column = vec![0.0; self.basis];
        for j in 0..self.dim {
            unit[j] = 1.0;
            self.project(&unit, &mut column);
            unit[j] = 0.0;
            for (k, &w) in column.iter().enumerate() {
                omegas[k * self.dim + j] = w;
            }
        }
        FrequencyBank::with_provenance(omegas, self.dim, Some(self.seed), BankProvenance::Fastfood)
            .expect("fastfood frequencies are finite")
    }
}

thread_local! {
    // Per-thread work and scratch vectors, reused across samples.
    static BUFFERS: std::cell::RefCell<(Vec<f64>, Vec<f64>)> = const { std::cell::RefCell::new((Vec::new(), Vec::new())) };
}

impl Projector for FastfoodStack {
    fn basis(&self) -> usize {
        self.basis
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &[f64], out: &mut [f64]) {
        let norm = 1.0 / (self.sigma * (self.padded_dim as f64).sqrt());
        BUFFERS.with_borrow_mut(|(work, scratch)| {
            work.resize(self.padded_dim, 0.0);
            scratch.resize(self.padded_dim, 0.0);
            for (block, chunk) in self.blocks.iter().zip(out.chunks_mut(self.padded_dim)) {
                work[..x.len()].copy_from_slice(x);
                work[x.len()..self.padded_dim].fill(0.0);
                block.apply(&mut work[..self.padded_dim], &mut scratch[..self.padded_dim]);
                for (o, &v) in chunk.iter_mut().zip(work.iter()) {
                    *o = norm * v;
                }
            }
        });
    }
}

/// FastMMD over a Fastfood stack; Gaussian kernels only. Returns `(biased, unbiased)`.
pub fn fastmmd_fastfood(
    s: &SampleSet,
    k: &ShiftInvariantKernel,
    basis: usize,
    seed: u64,
) -> Result<(MmdEstimate, Option<MmdEstimate>)> {
    if k.family() != KernelFamily::Gaussian {
        return Err(Error::Unsupported {
            method: Method::Fastfood.name(),
            what: format!("the {} kernel; its frequencies are not spherically Gaussian", k.family()),
        });
    }
    let stack = FastfoodStack::new(s.dim(), basis, k.sigma(), seed)?;
    let sums = ClassSums::compute(s, &stack)?;
    let est = sums.estimates(k.k0(), Method::Fastfood, Some(seed))?;
    Ok((est.biased, est.unbiased))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, Points};
    use crate::fourier::{dot, FeatureMap};
    use crate::numeric::{mean, rel_close};
    use proptest::prelude::*;

    #[test]
    fn hadamard_base_cases() {
        let mut two = [1.0, 1.0];
        fwht(&mut two).unwrap();
        assert_eq!(two, [2.0, 0.0]);
        let mut delta = [1.0, 0.0, 0.0, 0.0];
        fwht(&mut delta).unwrap();
        assert_eq!(delta, [1.0; 4]);
        assert!(fwht(&mut [1.0, 2.0, 3.0]).is_err());
        assert!(fwht(&mut []).is_err());
    }

    #[test]
    fn hadamard_matches_sylvester_matrix() {
        let n = 16;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut fast = x.clone();
        fwht(&mut fast).unwrap();
        for (i, &f) in fast.iter().enumerate() {
            let direct: f64 = (0..n)
                .map(|j| if (i & j).count_ones() % 2 == 0 { x[j] } else { -x[j] })
                .sum();
            assert!((f - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_maps_to_zero_and_projection_is_linear() {
        let stack = FastfoodStack::new(5, 20, 1.3, 2).unwrap();
        assert!(stack.project_vec(&[0.0; 5]).unwrap().iter().all(|&v| v == 0.0));
        let x = [0.3, -1.0, 2.0, 0.5, 0.0];
        let px = stack.project_vec(&x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
        for (a, b) in stack.project_vec(&scaled).unwrap().iter().zip(&px) {
            assert!((a - -2.5 * b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        assert!(stack.project_vec(&[1.0; 4]).is_err());
    }

    #[test]
    fn materialized_matrix_reproduces_projection() {
        let stack = FastfoodStack::new(8, 8, 1.0, 5).unwrap();
        let bank = stack.materialize();
        assert_eq!(bank.provenance(), BankProvenance::Fastfood);
        let x = [0.1, -0.7, 1.2, 3.0, -2.2, 0.0, 0.9, 0.4];
        let projected = stack.project_vec(&x).unwrap();
        for (k, &p) in projected.iter().enumerate() {
            assert!(rel_close(dot(bank.row(k), &x), p, 1e-10));
        }
    }

    #[test]
    fn stack_shape_and_padding() {
        let stack = FastfoodStack::new(5, 20, 1.0, 0).unwrap();
        assert_eq!(stack.padded_dim(), 8);
        assert_eq!(stack.blocks().len(), 3);
        for block in stack.blocks() {
            let mut seen = block.perm.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..8).collect::<Vec<_>>());
            assert!(block.scale.iter().all(|&s| s >= 0.0));
            assert!(block.signs.iter().all(|&s| s == 1.0 || s == -1.0));
        }
        assert_ne!(stack.blocks()[0], stack.blocks()[1]);
        assert_eq!(stack, FastfoodStack::new(5, 20, 1.0, 0).unwrap());
        assert!(FastfoodStack::new(0, 1, 1.0, 0).is_err());
        assert!(FastfoodStack::new(1, 0, 1.0, 0).is_err());
        assert!(FastfoodStack::new(1, 1, -1.0, 0).is_err());
    }

    /// Row norms are `s_i / sigma` exactly, whatever `G`.
    #[test]
    fn row_norms_follow_the_scaling_diagonal() {
        let sigma = 0.5;
        let stack = FastfoodStack::new(16, 16, sigma, 3).unwrap();
        let bank = stack.materialize();
        let block = &stack.blocks()[0];
        let frob = block.gauss.iter().map(|g| g * g).sum::<f64>().sqrt();
        for k in 0..16 {
            let norm = dot(bank.row(k), bank.row(k)).sqrt();
            assert!(rel_close(norm, block.scale[k] * frob / sigma, 1e-10));
        }
    }

    #[test]
    fn entries_have_spectral_variance() {
        let sigma = 2.0;
        let mut squares = Vec::new();
        for seed in 0..10_000 {
            let bank = FastfoodStack::new(16, 16, sigma, seed).unwrap().materialize();
            squares.push(bank.row(3)[7].powi(2));
            squares.push(bank.row(11)[0].powi(2));
        }
        let var = mean(&squares);
        assert!((var * sigma * sigma - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn identical_classes_vanish_and_laplacian_is_rejected() {
        let pts = Points::new(vec![1.0, 2.0, -0.5, 0.3, 0.0, 4.0], 3).unwrap();
        let s = SampleSet::from_classes(&pts, &pts).unwrap();
        let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
        let (b, u) = fastmmd_fastfood(&s, &k, 64, 1).unwrap();
        assert!(b.value_sq.abs() < 1e-15);
        assert_eq!(b.method, Method::Fastfood);
        assert!(u.unwrap().value_sq < 0.0);
        let lap = ShiftInvariantKernel::laplacian(1.0).unwrap();
        assert!(matches!(fastmmd_fastfood(&s, &lap, 64, 1), Err(Error::Unsupported { .. })));
    }

    /// The accumulator path over a Fastfood stack equals the feature path on
    /// its materialized bank.
    #[test]
    fn matches_feature_path_on_materialized_bank() {
        let mut normals = NormalStream::new(rng::stream(9, 0));
        let data: Vec<f64> = (0..30 * 6).map(|_| normals.next()).collect();
        let labels = (0..30).map(|i| if i % 3 == 0 { Label::First } else { Label::Second }).collect();
        let s = SampleSet::new(data, 6, labels).unwrap();
        let k = ShiftInvariantKernel::gaussian(1.5).unwrap();
        let (b, u) = fastmmd_fastfood(&s, &k, 40, 4).unwrap();
        let bank = FastfoodStack::new(6, 40, 1.5, 4).unwrap().materialize();
        let (fb, fu) = crate::fourier::fastmmd_features(&s, &k, &bank).unwrap();
        assert!(rel_close(b.value_sq, fb.value_sq, 1e-10));
        assert!((u.unwrap().value_sq - fu.unwrap().value_sq).abs() < 1e-10);
    }

    #[test]
    fn kernel_approximation_error_is_small() {
        let dim = 16;
        let k = ShiftInvariantKernel::gaussian(4.0).unwrap();
        let mut normals = NormalStream::new(rng::stream(17, 0));
        let errors: Vec<f64> = (0..100)
            .map(|pair| {
                let x: Vec<f64> = (0..dim).map(|_| normals.next()).collect();
                let y: Vec<f64> = (0..dim).map(|_| normals.next()).collect();
                let bank = FastfoodStack::new(dim, 1024, 4.0, pair).unwrap().materialize();
                let map = FeatureMap::new(&k, &bank);
                let approx = map.map(&x).unwrap().dot(&map.map(&y).unwrap());
                (approx - k.evaluate(&x, &y).unwrap()).abs()
            })
            .collect();
        assert!(mean(&errors) < 0.05, "{}", mean(&errors));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn double_transform_scales_by_length(
            p in 0u32..11,
            seed in any::<u64>(),
        ) {
            let n = 1usize << p;
            let mut normals = NormalStream::new(rng::stream(seed, 0));
            let x: Vec<f64> = (0..n).map(|_| normals.next()).collect();
            let mut y = x.clone();
            fwht(&mut y).unwrap();
            fwht(&mut y).unwrap();
            for (a, b) in y.iter().zip(&x) {
                prop_assert!((a - n as f64 * b).abs() <= 1e-10 * (n as f64) * b.abs().max(1.0));
            }
        }
    }
}
