//! Gaussian statistics of the dark-port `p` quadrature.
//!
//! A coherent state of amplitude `alpha` and a `p`-squeezed vacuum with
//! squeezing parameter `r` enter a Mach-Zehnder interferometer. With the
//! convention `[x, p] = 2i` (vacuum variance 1) the dark-port quadrature is
//! normal with
//!
//! ```text
//! mean(phi)     = -2 alpha sin(phi / 2)
//! variance(phi) = sin^2(phi / 2) + exp(-2 r) cos^2(phi / 2)
//! ```

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An interferometric phase, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Phase(f64);

impl Phase {
    pub const ZERO: Phase = Phase(0.0);

    pub fn from_radians(rad: f64) -> Self {
        Phase(rad)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Phase(deg.to_radians())
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

/// Physical scenario: coherent amplitude and squeezing parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct InterferometerConfig {
    alpha: f64,
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    alpha: f64,
    r: f64,
}

impl TryFrom<RawConfig> for InterferometerConfig {
    type Error = Error;
    fn try_from(raw: RawConfig) -> Result<Self> {
        InterferometerConfig::new(raw.alpha, raw.r)
    }
}

impl From<InterferometerConfig> for RawConfig {
    fn from(c: InterferometerConfig) -> Self {
        RawConfig {
            alpha: c.alpha,
            r: c.r,
        }
    }
}

impl InterferometerConfig {
    /// Requires `alpha > 0` and `r >= 0`, both finite.
    pub fn new(alpha: f64, r: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param(format!("alpha must be finite and > 0, got {alpha}")));
        }
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::param(format!("r must be finite and >= 0, got {r}")));
        }
        Ok(Self { alpha, r })
    }

    /// Builds a configuration from a squeezing level in dB.
    pub fn with_squeezing_db(alpha: f64, db: f64) -> Result<Self> {
        Self::new(alpha, db_to_r(db))
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn squeezing_db(&self) -> f64 {
        r_to_db(self.r)
    }

    /// Same amplitude, no squeezing.
    pub fn classical(&self) -> Self {
        Self {
            alpha: self.alpha,
            r: 0.0,
        }
    }
}

/// `r = ln(10) dB / 20`, so that `10 log10(exp(2 r)) = dB`.
pub fn db_to_r(db: f64) -> f64 {
    LN_10 * db / 20.0
}

pub fn r_to_db(r: f64) -> f64 {
    20.0 * r / LN_10
}

/// Mean and variance of the quadrature distribution at one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

pub fn moments(cfg: &InterferometerConfig, phi: Phase) -> GaussianMoments {
    let (s, c) = (phi.radians() / 2.0).sin_cos();
    GaussianMoments {
        mean: -2.0 * cfg.alpha * s,
        variance: s * s + (-2.0 * cfg.r).exp() * c * c,
    }
}

/// Phase derivatives `(d mean / d phi, d variance / d phi)`.
pub fn moment_derivatives(cfg: &InterferometerConfig, phi: Phase) -> (f64, f64) {
    let half = phi.radians() / 2.0;
    let dmean = -cfg.alpha * half.cos();
    let dvar = 0.5 * phi.radians().sin() * (1.0 - (-2.0 * cfg.r).exp());
    (dmean, dvar)
}

/// Gaussian density of the quadrature value `p`.
pub fn pdf(cfg: &InterferometerConfig, phi: Phase, p: f64) -> f64 {
    let m = moments(cfg, phi);
    let sd = m.std_dev();
    let u = (p - m.mean) / (std::f64::consts::SQRT_2 * sd);
    (-u * u).exp() / ((2.0 * PI).sqrt() * sd)
}

/// Fisher information of ideal (fine-grained) homodyne detection at `phi = 0`:
/// `alpha^2 exp(2 r)`.
pub fn ideal_fisher(cfg: &InterferometerConfig) -> f64 {
    cfg.alpha * cfg.alpha * (2.0 * cfg.r).exp()
}

/// Quantum Fisher information `alpha^2 exp(2 r) + sinh^2 r`.
pub fn qfi(cfg: &InterferometerConfig) -> f64 {
    ideal_fisher(cfg) + cfg.r.sinh().powi(2)
}

/// Error variance of the ideal mean-quadrature estimator `-2 asin(p_mean / 2 alpha)`
/// at phase `phi` with `nu` repetitions. Reduces to `1 / (nu F_id)` at `phi = 0`.
pub fn ideal_estimator_variance(cfg: &InterferometerConfig, phi: Phase, nu: usize) -> f64 {
    let m = moments(cfg, phi);
    let (dmean, _) = moment_derivatives(cfg, phi);
    m.variance / (nu as f64 * dmean * dmean)
}

/// Heisenberg limit `1 / n` and standard quantum limit `1 / sqrt(n)`.
pub fn reference_limits(n_tot: f64) -> Result<(f64, f64)> {
    if !(n_tot.is_finite() && n_tot > 0.0) {
        return Err(Error::param(format!("total photon number must be > 0, got {n_tot}")));
    }
    Ok((1.0 / n_tot, 1.0 / n_tot.sqrt()))
}
