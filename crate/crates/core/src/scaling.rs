//! Heisenberg-scaling sweep: the total mean photon number is split equally
//! between the coherent and the squeezed input, `alpha^2 = sinh^2 r = n/2`.

use crate::coarse::{binning_ratio, Binning};
use crate::error::{Error, Result};
use crate::quadrature::{ideal_fisher, reference_limits, InterferometerConfig};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScalingRow {
    pub n_tot: f64,
    pub dphi_ideal: f64,
    pub dphi_m: f64,
    /// Heisenberg limit `1/n`.
    pub hl: f64,
    /// Standard quantum limit `1/sqrt(n)`.
    pub sql: f64,
}

/// Interferometer with `alpha^2 = sinh^2 r = n_tot / 2`.
pub fn equal_split(n_tot: f64) -> Result<InterferometerConfig> {
    if !(n_tot.is_finite() && n_tot > 0.0) {
        return Err(Error::param(format!("total photon number must be > 0, got {n_tot}")));
    }
    let half = n_tot / 2.0;
    InterferometerConfig::new(half.sqrt(), half.sqrt().asinh())
}

/// One row per entry of `n_grid`; the coarse-grained error is the ideal error
/// divided by `sqrt(f_M)`.
pub fn scaling_sweep(n_grid: &[f64], m: usize, binning: Binning, nu: usize) -> Result<Vec<ScalingRow>> {
    if nu == 0 {
        return Err(Error::param("nu must be >= 1"));
    }
    let f = binning_ratio(m, binning)?;
    n_grid
        .iter()
        .map(|&n| {
            let cfg = equal_split(n)?;
            let (hl, sql) = reference_limits(n)?;
            let dphi_ideal = 1.0 / (nu as f64 * ideal_fisher(&cfg)).sqrt();
            Ok(ScalingRow {
                n_tot: n,
                dphi_ideal,
                dphi_m: dphi_ideal / f.sqrt(),
                hl,
                sql,
            })
        })
        .collect()
}

/// Ordinary least-squares fit of `ln y = slope ln x + intercept`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::param("log-log fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::param("log-log fit needs positive values"));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("log-log fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
