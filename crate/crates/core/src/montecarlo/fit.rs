//! Least-squares fit of `(alpha, r)` to measured bin probabilities.

use serde::Serialize;

use crate::bins::BinScheme;
use crate::coarse::{bin_probabilities, ProbVector};
use crate::error::{Error, Result};
use crate::quadrature::{InterferometerConfig, Phase};
use crate::simplex::{nelder_mead, SimplexOptions};

const ALPHA_MAX: f64 = 1e4;
const R_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub alpha_hat: f64,
    pub r_hat: f64,
    /// Sum of squared probability residuals over all phases and bins.
    pub residual: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn config(&self) -> Result<InterferometerConfig> {
        InterferometerConfig::new(self.alpha_hat, self.r_hat)
    }
}

fn sum_sq(scheme: &BinScheme, scan: &[(Phase, ProbVector)], cfg: &InterferometerConfig) -> f64 {
    scan.iter()
        .map(|(phi, measured)| {
            let model = bin_probabilities(cfg, *phi, scheme);
            measured
                .iter()
                .zip(model.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Parameters are `(ln alpha, sqrt r)`, which keeps `alpha > 0` and `r >= 0`.
fn unpack(x: &[f64]) -> Option<InterferometerConfig> {
    let alpha = x[0].exp();
    let r = x[1] * x[1];
    if !(alpha <= ALPHA_MAX && r <= R_MAX) {
        return None;
    }
    InterferometerConfig::new(alpha, r).ok()
}

/// Fits the Gaussian bin-probability model to a phase scan. `scan` holds
/// measured probabilities relative to all outcomes at each phase.
///
/// Two bins only constrain `alpha e^r` well; the separate values are then
/// weakly determined but the fitted model still reproduces the data.
pub fn fit_probability_model(scheme: &BinScheme, scan: &[(Phase, ProbVector)]) -> Result<FitResult> {
    let mut distinct: Vec<f64> = scan.iter().map(|(p, _)| p.radians()).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::param(format!(
            "model fit needs at least 3 distinct phases, got {}",
            distinct.len()
        )));
    }
    if scan.iter().any(|(_, p)| p.len() != scheme.bins()) {
        return Err(Error::param("scan probability vectors do not match the bin count"));
    }
    let objective = |x: &[f64]| match unpack(x) {
        Some(cfg) => sum_sq(scheme, scan, &cfg),
        None => f64::INFINITY,
    };
    let opts = SimplexOptions {
        initial_step: 0.3,
        f_tol: 1e-15,
        x_tol: 1e-9,
        max_evaluations: 4000,
    };
    let mut best = None::<crate::simplex::SimplexResult>;
    for &alpha in &[1.0f64, 4.0, 16.0] {
        for &r in &[0.05f64, 0.5, 1.5] {
            let res = nelder_mead(objective, &[alpha.ln(), r.sqrt()], &opts);
            if best.as_ref().is_none_or(|b| res.value < b.value) {
                best = Some(res);
            }
        }
    }
    let best = best.expect("starts evaluated");
    let polish = nelder_mead(objective, &best.x, &SimplexOptions { initial_step: 0.02, ..opts });
    let best = if polish.value <= best.value { polish } else { best };

    let alpha_hat = best.x[0].exp();
    let r_hat = best.x[1] * best.x[1];
    if !best.value.is_finite() || unpack(&best.x).is_none() {
        return Err(Error::FitFailed {
            reason: "iterate left the admissible parameter region".into(),
            alpha_hat,
            r_hat,
            residual: best.value,
        });
    }
    Ok(FitResult {
        alpha_hat,
        r_hat,
        residual: best.value,
        converged: best.converged,
    })
}
