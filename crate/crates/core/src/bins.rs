//! Bin schemes for coarse-grained quadrature detection.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::InterferometerConfig;

/// How the outermost boundaries `b_1 = -R` and `b_{M+1} = R` are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OuterMode {
    /// Outcomes with `|p| > R` fall in no bin.
    #[default]
    Finite,
    /// The edge bins extend to infinity, so the bin probabilities sum to one.
    Infinite,
}

/// Ordered bin boundaries `b_1 < ... < b_{M+1}` with `b_1 = -R`, `b_{M+1} = R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeJson", into = "SchemeJson")]
pub struct BinScheme {
    range: f64,
    outer_mode: OuterMode,
    boundaries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SchemeJson {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "R")]
    range: f64,
    outer_mode: OuterMode,
    boundaries: Vec<f64>,
}

impl TryFrom<SchemeJson> for BinScheme {
    type Error = Error;
    fn try_from(raw: SchemeJson) -> Result<Self> {
        if raw.boundaries.len() != raw.m + 1 {
            return Err(Error::scheme(format!(
                "M = {} requires {} boundaries, got {}",
                raw.m,
                raw.m + 1,
                raw.boundaries.len()
            )));
        }
        let scheme = BinScheme::from_boundaries(raw.boundaries, raw.outer_mode)?;
        if (scheme.range - raw.range).abs() > 1e-9 * raw.range.abs().max(1.0) {
            return Err(Error::scheme(format!(
                "R = {} does not match outer boundaries ±{}",
                raw.range, scheme.range
            )));
        }
        Ok(scheme)
    }
}

impl From<BinScheme> for SchemeJson {
    fn from(s: BinScheme) -> Self {
        SchemeJson {
            m: s.bins(),
            range: s.range,
            outer_mode: s.outer_mode,
            boundaries: s.boundaries,
        }
    }
}

impl BinScheme {
    /// Validates a full boundary list. The outer boundaries must be `∓R`.
    pub fn from_boundaries(boundaries: Vec<f64>, outer_mode: OuterMode) -> Result<Self> {
        if boundaries.len() < 3 {
            return Err(Error::scheme(format!(
                "at least 2 bins required, got {}",
                boundaries.len().saturating_sub(1)
            )));
        }
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::scheme("boundaries must be finite"));
        }
        if let Some(w) = boundaries.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::scheme(format!(
                "boundaries must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        let range = boundaries[boundaries.len() - 1];
        if range <= 0.0 || (boundaries[0] + range).abs() > 1e-12 * range {
            return Err(Error::scheme(format!(
                "outer boundaries must be -R and R with R > 0, got {} and {}",
                boundaries[0], range
            )));
        }
        Ok(Self {
            range,
            outer_mode,
            boundaries,
        })
    }

    /// Builds a symmetric scheme on `[-R, R]` from its positive interior boundaries.
    ///
    /// For even `M` a boundary at zero is inserted; `positive` holds the
    /// `floor((M - 1) / 2)` boundaries strictly between 0 and `R`.
    pub fn symmetric(m: usize, range: f64, positive: &[f64], outer_mode: OuterMode) -> Result<Self> {
        if m < 2 {
            return Err(Error::scheme(format!("M must be >= 2, got {m}")));
        }
        if positive.len() != (m - 1) / 2 {
            return Err(Error::scheme(format!(
                "M = {m} needs {} positive interior boundaries, got {}",
                (m - 1) / 2,
                positive.len()
            )));
        }
        let mut b = Vec::with_capacity(m + 1);
        b.push(-range);
        b.extend(positive.iter().rev().map(|x| -x));
        if m.is_multiple_of(2) {
            b.push(0.0);
        }
        b.extend_from_slice(positive);
        b.push(range);
        Self::from_boundaries(b, outer_mode)
    }

    /// Number of bins `M`.
    pub fn bins(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn outer_mode(&self) -> OuterMode {
        self.outer_mode
    }

    /// Stored boundaries, with the outer ones at `∓R` regardless of mode.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Boundaries as used in probability integrals (`∓∞` at the edges in infinite mode).
    pub fn effective_boundaries(&self) -> Vec<f64> {
        let mut b = self.boundaries.clone();
        if self.outer_mode == OuterMode::Infinite {
            let last = b.len() - 1;
            b[0] = f64::NEG_INFINITY;
            b[last] = f64::INFINITY;
        }
        b
    }

    pub fn interior(&self) -> &[f64] {
        &self.boundaries[1..self.boundaries.len() - 1]
    }

    pub fn with_outer_mode(&self, outer_mode: OuterMode) -> Self {
        Self {
            outer_mode,
            ..self.clone()
        }
    }

    /// Rescales every boundary by `factor`, e.g. to move a scheme between squeezing levels.
    pub fn scaled_by(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::param(format!("scale factor must be > 0, got {factor}")));
        }
        Self::from_boundaries(
            self.boundaries.iter().map(|b| b * factor).collect(),
            self.outer_mode,
        )
    }

    /// `b_k = -b_{M+2-k}` for every `k`, within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.boundaries.len();
        (0..n).all(|k| (self.boundaries[k] + self.boundaries[n - 1 - k]).abs() <= tol)
    }

    /// Bin index containing `p`, or `None` when `p` is outside `[-R, R]` in finite mode.
    /// Infinite mode assigns out-of-range values to the edge bins.
    pub fn locate(&self, p: f64) -> Option<usize> {
        let m = self.bins();
        if p < -self.range || p > self.range {
            return match self.outer_mode {
                OuterMode::Finite => None,
                OuterMode::Infinite if p < 0.0 => Some(0),
                OuterMode::Infinite => Some(m - 1),
            };
        }
        let k = self.interior().partition_point(|&b| b <= p);
        Some(k)
    }

    /// `c_k = e^r b_k / sqrt(2)` for the given squeezing (infinite edges stay infinite).
    pub fn scaled(&self, r: f64) -> ScaledBoundaries {
        let f = r.exp() / SQRT_2;
        ScaledBoundaries {
            c: self.effective_boundaries().into_iter().map(|b| b * f).collect(),
        }
    }
}

/// Boundaries in units of the squeezed standard deviation: `c_k = e^r b_k / sqrt(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledBoundaries {
    c: Vec<f64>,
}

impl ScaledBoundaries {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.len() < 3 {
            return Err(Error::scheme("at least 2 bins required"));
        }
        if c.iter().any(|x| x.is_nan()) || c.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::scheme("scaled boundaries must be strictly increasing"));
        }
        Ok(Self { c })
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }
}

/// Four standard deviations of the quadrature at `phi = 0`: `R = 4 e^{-r}`.
pub fn default_range(cfg: &InterferometerConfig) -> f64 {
    4.0 * (-cfg.r()).exp()
}

/// `M` equal bins partitioning `[-R, R]`.
pub fn equal_bins(m: usize, range: f64, outer_mode: OuterMode) -> Result<BinScheme> {
    if m < 2 {
        return Err(Error::scheme(format!("M must be >= 2, got {m}")));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::scheme(format!("R must be finite and > 0, got {range}")));
    }
    let step = 2.0 * range / m as f64;
    // Mirror the upper half so the scheme is exactly antisymmetric.
    let mut b: Vec<f64> = (0..=m).map(|k| -range + k as f64 * step).collect();
    for k in 0..=m / 2 {
        b[m - k] = -b[k];
    }
    if m.is_multiple_of(2) {
        b[m / 2] = 0.0;
    }
    BinScheme::from_boundaries(b, outer_mode)
}
