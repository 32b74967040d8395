//! Binned detection probabilities, coarse-grained Fisher information and
//! optimal bin boundaries.

use std::f64::consts::{PI, SQRT_2};
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bins::{BinScheme, OuterMode, ScaledBoundaries};
use crate::error::{Error, Result};
use crate::quadrature::{moment_derivatives, moments, InterferometerConfig, Phase};
use crate::simplex::{nelder_mead, SimplexOptions};
use crate::special::{erf_diff, std_normal_interval, std_normal_pdf};

/// Bins with a probability below this are treated as empty.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Per-bin detection probabilities `P_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Each entry must lie in `[0, 1]` and the total must not exceed one.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::param("a probability vector needs at least 2 bins"));
        }
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::param("probabilities must lie in [0, 1]"));
        }
        let total: f64 = p.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::param(format!("probabilities sum to {total} > 1")));
        }
        Ok(Self(p))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ProbVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-bin phase derivatives `dP_k / dphi` (per radian).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDerivVector(Vec<f64>);

impl ProbDerivVector {
    pub fn new(dp: Vec<f64>) -> Self {
        Self(dp)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl Deref for ProbDerivVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Standardized boundaries `(b - mean) / sd` at the given phase.
fn standardized(cfg: &InterferometerConfig, phi: Phase, scheme: &BinScheme) -> (Vec<f64>, f64, f64) {
    let m = moments(cfg, phi);
    let sd = m.std_dev();
    let u = scheme
        .effective_boundaries()
        .into_iter()
        .map(|b| (b - m.mean) / sd)
        .collect();
    (u, m.mean, sd)
}

pub fn bin_probabilities(cfg: &InterferometerConfig, phi: Phase, scheme: &BinScheme) -> ProbVector {
    let (u, _, _) = standardized(cfg, phi, scheme);
    ProbVector(
        u.windows(2)
            .map(|w| std_normal_interval(w[0], w[1]).clamp(0.0, 1.0))
            .collect(),
    )
}

/// Analytic `dP_k / dphi`, including the phase dependence of both the mean and the width.
pub fn bin_prob_derivative(
    cfg: &InterferometerConfig,
    phi: Phase,
    scheme: &BinScheme,
) -> ProbDerivVector {
    let (u, _, sd) = standardized(cfg, phi, scheme);
    let (dmean, dvar) = moment_derivatives(cfg, phi);
    let dsd = dvar / (2.0 * sd);
    // d/dphi Phi(u) with u = (b - mean) / sd
    let edge = |u: f64| {
        if u.is_infinite() {
            0.0
        } else {
            -std_normal_pdf(u) * (dmean + u * dsd) / sd
        }
    };
    let d: Vec<f64> = u.iter().map(|&x| edge(x)).collect();
    ProbDerivVector(d.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Fisher information of a binned measurement, with any empty bins it skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    pub value: f64,
    /// Bins whose probability fell below [`PROBABILITY_FLOOR`].
    pub excluded_bins: Vec<usize>,
}

impl FisherInfo {
    pub fn is_clean(&self) -> bool {
        self.excluded_bins.is_empty()
    }
}

/// `F_M(phi) = sum_k (dP_k/dphi)^2 / P_k`.
pub fn fisher_from(p: &[f64], dp: &[f64]) -> FisherInfo {
    let mut value = 0.0;
    let mut excluded_bins = Vec::new();
    for (k, (&pk, &dk)) in p.iter().zip(dp).enumerate() {
        if pk < PROBABILITY_FLOOR {
            excluded_bins.push(k);
        } else {
            value += dk * dk / pk;
        }
    }
    FisherInfo {
        value,
        excluded_bins,
    }
}

pub fn coarse_fisher(cfg: &InterferometerConfig, phi: Phase, scheme: &BinScheme) -> FisherInfo {
    let p = bin_probabilities(cfg, phi, scheme);
    let dp = bin_prob_derivative(cfg, phi, scheme);
    fisher_from(&p, &dp)
}

/// Fisher-information ratio `f_M = F_M(0) / F_id(0)` from scaled boundaries:
///
/// ```text
/// f_M = (1/pi) sum_k (exp(-c_{k+1}^2) - exp(-c_k^2))^2 / (erf(c_{k+1}) - erf(c_k))
/// ```
pub fn fisher_ratio(scaled: &ScaledBoundaries) -> f64 {
    let c = scaled.values();
    let gauss = |x: f64| if x.is_infinite() { 0.0 } else { (-x * x).exp() };
    c.windows(2)
        .map(|w| {
            let den = erf_diff(w[0], w[1]);
            if den <= 0.0 {
                0.0
            } else {
                (gauss(w[1]) - gauss(w[0])).powi(2) / den
            }
        })
        .sum::<f64>()
        / PI
}

/// Ratio of a scheme expressed in units where the squeezed width is `1/sqrt(2)`
/// (i.e. already multiplied by `e^r`).
fn ratio_of_sigma_units(m: usize, outer: f64, positive: &[f64]) -> f64 {
    // positive boundaries are in units of sigma(0); c = b / sqrt(2)
    let mut c = Vec::with_capacity(m + 1);
    c.push(-outer / SQRT_2);
    c.extend(positive.iter().rev().map(|x| -x / SQRT_2));
    if m.is_multiple_of(2) {
        c.push(0.0);
    }
    c.extend(positive.iter().map(|x| x / SQRT_2));
    c.push(outer / SQRT_2);
    match ScaledBoundaries::new(c) {
        Ok(s) => fisher_ratio(&s),
        Err(_) => f64::NAN,
    }
}

/// Maps unconstrained parameters to ordered positive boundaries in `(0, outer)`.
///
/// The half-axis `[0, outer]` is split into `K + 1` gaps with softmax-like
/// weights `(e^{x_1}, ..., e^{x_K}, 1)`; for odd `M` the first gap is half of the
/// central bin.
fn decode(x: &[f64], outer: f64) -> Vec<f64> {
    let weights: Vec<f64> = x.iter().map(|v| v.clamp(-50.0, 50.0).exp()).collect();
    let total: f64 = weights.iter().sum::<f64>() + 1.0;
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc * outer
        })
        .collect()
}

fn encode(positive: &[f64], outer: f64) -> Vec<f64> {
    let mut prev = 0.0;
    let gaps: Vec<f64> = positive
        .iter()
        .map(|&b| {
            let g = b - prev;
            prev = b;
            g
        })
        .collect();
    let last = outer - prev;
    gaps.iter().map(|g| (g / last).ln()).collect()
}

/// Result of [`optimize_bins`].
#[derive(Debug, Clone)]
pub struct OptimizedBins {
    pub scheme: BinScheme,
    pub ratio: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Settings for the restarted simplex search in [`optimize_bins_with`].
#[derive(Debug, Clone, Copy)]
pub struct BinOptimizerOptions {
    pub restarts: usize,
    pub seed: u64,
    pub f_tol: f64,
    pub max_evaluations: usize,
}

impl Default for BinOptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: 0x5eed_b1a5,
            f_tol: 1e-10,
            max_evaluations: 40_000,
        }
    }
}

/// Symmetric bins on `[-R, R]` (finite outer mode) maximizing the Fisher-information ratio.
pub fn optimize_bins(m: usize, range: f64) -> Result<OptimizedBins> {
    optimize_bins_with(m, range, &BinOptimizerOptions::default())
}

pub fn optimize_bins_with(m: usize, range: f64, opts: &BinOptimizerOptions) -> Result<OptimizedBins> {
    if m < 2 {
        return Err(Error::scheme(format!("M must be >= 2, got {m}")));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::scheme(format!("R must be finite and > 0, got {range}")));
    }
    // The ratio only depends on boundaries measured in squeezed standard
    // deviations, so optimize with sigma(0) = 1 and outer edge fixed at 4.
    const OUTER: f64 = 4.0;
    let free = (m - 1) / 2;
    let objective = |x: &[f64]| -ratio_of_sigma_units(m, OUTER, &decode(x, OUTER));

    let equal = crate::bins::equal_bins(m, OUTER, OuterMode::Finite)?;
    let equal_positive: Vec<f64> = equal.interior().iter().copied().filter(|&b| b > 0.0).collect();
    let mut starts = vec![encode(&equal_positive, OUTER)];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 1..opts.restarts.max(1) {
        starts.push((0..free).map(|_| rng.random_range(-2.5..2.5)).collect());
    }
    let simplex = SimplexOptions {
        initial_step: 0.5,
        f_tol: opts.f_tol,
        x_tol: 1e-9,
        max_evaluations: opts.max_evaluations,
    };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|x0| nelder_mead(objective, x0, &simplex))
        .collect();
    // ordered reduction: best value, ties to the lowest start index
    let mut best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r.clone())
        .expect("at least one start");
    let mut evaluations: usize = runs.iter().map(|r| r.evaluations).sum();
    // polish from the winner with a fresh simplex
    let polish = nelder_mead(
        objective,
        &best.x,
        &SimplexOptions {
            initial_step: 0.05,
            ..simplex
        },
    );
    evaluations += polish.evaluations;
    if polish.value <= best.value {
        best = polish;
    }

    let factor = range / OUTER;
    let positive: Vec<f64> = decode(&best.x, OUTER).iter().map(|b| b * factor).collect();
    let scheme = BinScheme::symmetric(m, range, &positive, OuterMode::Finite)?;
    Ok(OptimizedBins {
        scheme,
        ratio: -best.value,
        converged: best.converged,
        evaluations,
    })
}

/// Which family of bins a computation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    Equal,
    Optimal,
}

impl Binning {
    pub fn as_str(self) -> &'static str {
        match self {
            Binning::Equal => "equal",
            Binning::Optimal => "optimal",
        }
    }
}

impl std::fmt::Display for Binning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bin scheme for `cfg` over its default `4 sigma(0)` range.
pub fn scheme_for(
    cfg: &InterferometerConfig,
    m: usize,
    binning: Binning,
    outer_mode: OuterMode,
) -> Result<BinScheme> {
    let range = crate::bins::default_range(cfg);
    let s = match binning {
        Binning::Equal => crate::bins::equal_bins(m, range, outer_mode)?,
        Binning::Optimal => optimize_bins(m, range)?.scheme.with_outer_mode(outer_mode),
    };
    Ok(s)
}

/// `f_M` of the equal or optimal `M`-bin scheme over the `4 sigma(0)` range.
pub fn binning_ratio(m: usize, binning: Binning) -> Result<f64> {
    match binning {
        Binning::Equal => {
            let s = crate::bins::equal_bins(m, 4.0, OuterMode::Finite)?;
            Ok(fisher_ratio(&s.scaled(0.0)))
        }
        Binning::Optimal => Ok(optimize_bins(m, 4.0)?.ratio),
    }
}
