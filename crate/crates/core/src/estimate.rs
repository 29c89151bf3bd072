use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;

/// V-statistic (diagonal kernel terms included) or U-statistic (excluded).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Biased,
    Unbiased,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Linear,
    Btest,
    Fourier,
    Fastfood,
    Circular,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Exact,
        Method::Linear,
        Method::Btest,
        Method::Fourier,
        Method::Fastfood,
        Method::Circular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Linear => "linear",
            Method::Btest => "btest",
            Method::Fourier => "fourier",
            Method::Fastfood => "fastfood",
            Method::Circular => "circular",
        }
    }

    /// The subsampling baselines only define an unbiased statistic.
    pub fn supports(self, kind: EstimateKind) -> bool {
        match self {
            Method::Linear | Method::Btest => kind == EstimateKind::Unbiased,
            // The circular ensemble is a biased (V-statistic) quantity.
            Method::Circular => kind == EstimateKind::Biased,
            _ => true,
        }
    }

    /// Whether the method draws a frequency bank of `L` rows.
    pub fn uses_basis(self) -> bool {
        matches!(self, Method::Fourier | Method::Fastfood | Method::Circular)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("method", format!("unknown method `{s}`")))
    }
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateKind::Biased => "biased",
            EstimateKind::Unbiased => "unbiased",
        })
    }
}

/// One squared-MMD estimate and where it came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MmdEstimate {
    /// Squared MMD. Unbiased estimates may be negative.
    pub value_sq: f64,
    pub kind: EstimateKind,
    pub method: Method,
    /// Number of frequencies `L`, or 0 for methods without a bank.
    pub basis: usize,
    pub seed: Option<u64>,
}

impl MmdEstimate {
    /// `sqrt(max(value_sq, 0))`.
    pub fn value(&self) -> f64 {
        self.value_sq.max(0.0).sqrt()
    }
}
