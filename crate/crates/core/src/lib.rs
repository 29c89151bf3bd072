//! Linear-time maximum mean discrepancy (MMD) for shift-invariant kernels.
//!
//! The exact quadratic-time estimators live in [`exact`]. The fast path
//! samples frequencies from the kernel's spectral measure and, for every
//! frequency, folds the weighted sinusoids of each sample class into a single
//! amplitude. Averaging the squared amplitudes over frequencies recovers the
//! squared MMD in `O(L N d)` time ([`fourier`]), or `O(L N log d)` when the
//! frequencies come from a Fastfood stack ([`fastfood`]).
//!
//! [`circular`] re-derives the same quantity geometrically, as an ensemble of
//! circular discrepancies between the two classes wrapped onto the unit
//! circle. [`hypothesis`] adds permutation-bootstrap two-sample tests and the
//! bandwidth sweep / Type II experiments, and [`cli`] ties everything into the
//! `fastmmd` binary.
//!
//! ```
//! use fastmmd::{dataset, exact, fourier, kernel::ShiftInvariantKernel};
//!
//! let s = dataset::synth_ring(50, 7).unwrap();
//! let k = ShiftInvariantKernel::gaussian(1.0).unwrap();
//! let bank = k.sample_spectral(2048, s.dim(), 11).unwrap();
//! let exact = exact::mmd_biased_exact(&s, &k).unwrap();
//! let (approx, _unbiased) = fourier::fastmmd_fourier(&s, &k, &bank).unwrap();
//! assert!((approx.value_sq - exact.value_sq).abs() < 0.02);
//! ```

pub mod circular;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod estimate;
pub mod exact;
pub mod fastfood;
pub mod fourier;
pub mod hypothesis;
pub mod kernel;
pub mod numeric;
pub mod rng;
pub mod trig;

pub use dataset::{BlobSpec, Label, Points, SampleSet};
pub use error::{Error, Result};
pub use estimate::{EstimateKind, Method, MmdEstimate};
pub use kernel::{FrequencyBank, KernelFamily, ShiftInvariantKernel};
