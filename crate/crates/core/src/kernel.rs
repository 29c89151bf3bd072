//! Shift-invariant kernels and sampling from their spectral measures.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{self, NormalStream};

/// Rows of a frequency bank drawn from one random stream.
const BANK_BLOCK_ROWS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `k0 * exp(-|x - y|_2^2 / (2 sigma^2))`
    Gaussian,
    /// `k0 * exp(-|x - y|_1 / sigma)`
    Laplacian,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelFamily::Gaussian),
            "laplacian" | "laplace" => Ok(KernelFamily::Laplacian),
            _ => Err(Error::invalid("kernel", format!("unknown kernel family `{s}`"))),
        }
    }
}

/// A bounded shift-invariant kernel `K(x, y) = k0 * kappa((x - y) / sigma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftInvariantKernel {
    family: KernelFamily,
    sigma: f64,
    k0: f64,
}

impl ShiftInvariantKernel {
    pub fn new(family: KernelFamily, sigma: f64, k0: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("{sigma} is not a positive finite bandwidth")));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::invalid("k0", format!("{k0} is not positive and finite")));
        }
        Ok(Self { family, sigma, k0 })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, sigma, 1.0)
    }

    pub fn laplacian(sigma: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplacian, sigma, 1.0)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `K(0)`, the value on the diagonal.
    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.family, sigma, self.k0)
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval(x, y))
    }

    /// Kernel value without the length check.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                self.k0 * (-sq / (2.0 * self.sigma * self.sigma)).exp()
            }
            KernelFamily::Laplacian => {
                let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                self.k0 * (-l1 / self.sigma).exp()
            }
        }
    }

    /// Draws `basis` frequencies from the normalized spectral measure `p(omega)`.
    ///
    /// Gaussian: rows are `N(0, I / sigma^2)`. Laplacian: coordinates are
    /// independent Cauchy variables with scale `1 / sigma`.
    pub fn sample_spectral(&self, basis: usize, dim: usize, seed: u64) -> Result<FrequencyBank> {
        if basis == 0 {
            return Err(Error::invalid("basis", "need at least one frequency"));
        }
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        let mut omegas = vec![0.0; basis * dim];
        let inv_sigma = 1.0 / self.sigma;
        let family = self.family;
        omegas
            .par_chunks_mut(BANK_BLOCK_ROWS * dim)
            .enumerate()
            .for_each(|(block, chunk)| {
                let mut normals = NormalStream::new(rng::stream(seed, block as u64));
                for w in chunk.iter_mut() {
                    *w = inv_sigma
                        * match family {
                            KernelFamily::Gaussian => normals.next(),
                            KernelFamily::Laplacian => normals.cauchy(),
                        };
                }
            });
        Ok(FrequencyBank {
            omegas,
            basis,
            dim,
            seed: Some(seed),
            provenance: BankProvenance::IidSpectral,
        })
    }

    /// `E_p[omega' omega]`: `d / sigma^2` for the Gaussian, `+inf` for the Laplacian
    /// (Cauchy coordinates have no second moment).
    pub fn spectral_second_moment(&self, dim: usize) -> f64 {
        match self.family {
            KernelFamily::Gaussian => dim as f64 / (self.sigma * self.sigma),
            KernelFamily::Laplacian => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BankProvenance {
    IidSpectral,
    Fastfood,
    /// Supplied by the caller.
    External,
}

/// `L` frequency vectors `omega_1 .. omega_L`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyBank {
    omegas: Vec<f64>,
    basis: usize,
    dim: usize,
    seed: Option<u64>,
    provenance: BankProvenance,
}

impl FrequencyBank {
    pub fn from_rows(omegas: Vec<f64>, dim: usize) -> Result<Self> {
        Self::with_provenance(omegas, dim, None, BankProvenance::External)
    }

    pub(crate) fn with_provenance(
        omegas: Vec<f64>,
        dim: usize,
        seed: Option<u64>,
        provenance: BankProvenance,
    ) -> Result<Self> {
        if dim == 0 || omegas.is_empty() || !omegas.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "omegas",
                format!("{} values do not form rows of dimension {dim}", omegas.len()),
            ));
        }
        if let Some(pos) = omegas.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                column: pos % dim,
            });
        }
        Ok(Self {
            basis: omegas.len() / dim,
            omegas,
            dim,
            seed,
            provenance,
        })
    }

    /// `L`.
    pub fn basis(&self) -> usize {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn provenance(&self) -> BankProvenance {
        self.provenance
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.omegas[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.omegas.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.omegas
    }

    /// `w1..wd` header, one frequency per line.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let err = |source| Error::Csv {
            path: "<bank>".into(),
            source,
        };
        out.write_record((1..=self.dim).map(|j| format!("w{j}")))
            .map_err(err)?;
        for row in self.rows() {
            out.write_record(row.iter().map(|w| w.to_string())).map_err(err)?;
        }
        out.flush().map_err(|source| Error::Io {
            path: "<bank>".into(),
            source,
        })
    }
}
