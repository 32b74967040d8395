//! Method-of-moments phase estimation from binned observables.
//!
//! Each bin defines a projector `o_k` with `<o_k> = P_k`. A weighted sum
//! `O = w^T o` is measured `nu` times and its sample mean is mapped back to a
//! phase through the calibration curve `g(phi) = w^T P(phi)`. The weight
//! `w = Gamma^+ dP/dphi` minimizes the error propagation formula
//!
//! ```text
//! dphi^2 = w^T Gamma w / (nu (w^T dP)^2)
//! ```
//!
//! and reaches the Cramer-Rao bound `1 / (nu F_M)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bins::BinScheme;
use crate::coarse::{bin_probabilities, ProbDerivVector, ProbVector, PROBABILITY_FLOOR};
use crate::error::{Error, Result};
use crate::quadrature::{InterferometerConfig, Phase};

/// Probability vectors summing to one within this tolerance use the
/// closed-form pseudoinverse; larger deficits have an invertible covariance.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Relative eigenvalue cutoff of [`spectral_pseudoinverse`].
pub const PINV_RCOND: f64 = 1e-12;

/// Multinomial covariance `Gamma_kl = P_k delta_kl - P_k P_l` of the bin projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::param("covariance matrix must be square"));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Quadratic form `w^T Gamma w`.
    pub fn quadratic(&self, w: &[f64]) -> f64 {
        let v = DVector::from_column_slice(w);
        (v.transpose() * &self.0 * &v)[(0, 0)]
    }
}

pub fn covariance(p: &ProbVector) -> CovarianceMatrix {
    let m = p.len();
    CovarianceMatrix(DMatrix::from_fn(m, m, |k, l| {
        if k == l {
            p[k] * (1.0 - p[k])
        } else {
            -p[k] * p[l]
        }
    }))
}

/// Sample covariance of the bin indicator vectors (`n - 1` normalization).
/// Samples outside every bin (`None`) contribute an all-zero indicator.
pub fn empirical_covariance(samples: &[Option<usize>], bins: usize) -> Result<CovarianceMatrix> {
    if samples.len() < 2 {
        return Err(Error::param("empirical covariance needs at least 2 samples"));
    }
    let n = samples.len() as f64;
    let mut counts = vec![0.0; bins];
    for k in samples.iter().flatten() {
        if *k >= bins {
            return Err(Error::param(format!("bin index {k} out of range")));
        }
        counts[*k] += 1.0;
    }
    let f: Vec<f64> = counts.iter().map(|c| c / n).collect();
    // sum_i (x_i - f)(x_i - f)^T = n diag(f) - n f f^T for one-hot x_i
    let scale = n / (n - 1.0);
    Ok(CovarianceMatrix(DMatrix::from_fn(bins, bins, |k, l| {
        let d = if k == l { f[k] } else { 0.0 };
        scale * (d - f[k] * f[l])
    })))
}

/// Rank-one matrix `Lambda = dP dP^T`.
pub fn deriv_outer(dp: &ProbDerivVector) -> DMatrix<f64> {
    let v = DVector::from_column_slice(dp);
    &v * v.transpose()
}

fn check_floor(p: &ProbVector) -> Result<()> {
    match p.iter().position(|&x| x <= PROBABILITY_FLOOR) {
        Some(bin) => Err(Error::DegenerateBin { bin, prob: p[bin] }),
        None => Ok(()),
    }
}

/// Closed-form Moore-Penrose pseudoinverse of the multinomial covariance,
/// valid when the probabilities sum to one:
///
/// ```text
/// (Gamma^+)_kl = delta_kl / P_k - (1/P_k + 1/P_l) / M + sum_m (1/P_m) / M^2
/// ```
pub fn pseudoinverse_closed_form(p: &ProbVector) -> Result<DMatrix<f64>> {
    check_floor(p)?;
    let deficit = 1.0 - p.total();
    if deficit.abs() > COMPLETENESS_TOL {
        return Err(Error::param(format!(
            "closed-form pseudoinverse needs probabilities summing to 1 (deficit {deficit:e})"
        )));
    }
    let m = p.len();
    let mf = m as f64;
    let inv: Vec<f64> = p.iter().map(|x| 1.0 / x).collect();
    let s: f64 = inv.iter().sum();
    Ok(DMatrix::from_fn(m, m, |k, l| {
        let d = if k == l { inv[k] } else { 0.0 };
        d - (inv[k] + inv[l]) / mf + s / (mf * mf)
    }))
}

/// Exact inverse of the covariance when `sum P_k < 1` (finite outer range):
/// `diag(1/P) + J / (1 - sum P)`.
pub fn inverse_closed_form(p: &ProbVector) -> Result<DMatrix<f64>> {
    check_floor(p)?;
    let deficit = 1.0 - p.total();
    if deficit <= COMPLETENESS_TOL {
        return Err(Error::param(format!(
            "covariance is singular when probabilities sum to 1 (deficit {deficit:e})"
        )));
    }
    let m = p.len();
    Ok(DMatrix::from_fn(m, m, |k, l| {
        let d = if k == l { 1.0 / p[k] } else { 0.0 };
        d + 1.0 / deficit
    }))
}

/// `Gamma^+` for a model probability vector, whichever closed form applies.
pub fn covariance_pinv(p: &ProbVector) -> Result<DMatrix<f64>> {
    if 1.0 - p.total() > COMPLETENESS_TOL {
        inverse_closed_form(p)
    } else {
        pseudoinverse_closed_form(p)
    }
}

/// Moore-Penrose pseudoinverse of a symmetric matrix from its spectral
/// decomposition; eigenvalues with `|lambda| <= PINV_RCOND * max |lambda|` are
/// treated as zero. For the positive semidefinite covariance matrices used
/// here this coincides with the SVD pseudoinverse.
pub fn spectral_pseudoinverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (nr, nc) = m.shape();
    if nr != nc {
        return Err(Error::param(format!("pseudoinverse needs a square matrix, got {nr}x{nc}")));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * m.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::param(format!("matrix is not symmetric (max asymmetry {asym:e})")));
    }
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.amax();
    let mut out = DMatrix::zeros(nr, nr);
    if lmax == 0.0 {
        return Ok(out);
    }
    let cutoff = PINV_RCOND * lmax;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > cutoff {
            let v = eig.eigenvectors.column(i);
            out += v * v.transpose() / l;
        }
    }
    Ok(out)
}

/// Unit-norm weight vector with the first nonzero entry non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Normalizes `raw` to unit Euclidean norm with `w_1 >= 0`.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NoSensitivity);
        }
        let sign = match raw.iter().find(|x| x.abs() > 1e-12 * norm) {
            Some(x) if *x < 0.0 => -1.0,
            _ => 1.0,
        };
        Ok(Self(raw.iter().map(|x| sign * x / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Deref for WeightVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

fn check_sensitivity(dp: &ProbDerivVector) -> Result<()> {
    let norm = dp.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 1e-300) {
        return Err(Error::NoSensitivity);
    }
    Ok(())
}

/// Optimal weight `w = Gamma^+ dP` (kernel component set to zero), normalized.
pub fn optimal_weight(p: &ProbVector, dp: &ProbDerivVector) -> Result<WeightVector> {
    check_sensitivity(dp)?;
    if p.len() != dp.len() {
        return Err(Error::param("probability and derivative lengths differ"));
    }
    WeightVector::normalized(&apply(&covariance_pinv(p)?, dp))
}

/// Optimal weight from a measured covariance matrix, via its spectral pseudoinverse.
pub fn optimal_weight_empirical(gamma: &CovarianceMatrix, dp: &ProbDerivVector) -> Result<WeightVector> {
    check_sensitivity(dp)?;
    if gamma.dim() != dp.len() {
        return Err(Error::param("covariance and derivative dimensions differ"));
    }
    WeightVector::normalized(&apply(&spectral_pseudoinverse(gamma.matrix())?, dp))
}

/// Error-propagation variance `w^T Gamma w / (nu (w^T dP)^2)`.
pub fn estimator_variance(w: &[f64], p: &ProbVector, dp: &ProbDerivVector, nu: usize) -> Result<f64> {
    variance_with(w, &covariance(p), dp, nu)
}

/// As [`estimator_variance`] with an explicit covariance matrix.
pub fn variance_with(w: &[f64], gamma: &CovarianceMatrix, dp: &[f64], nu: usize) -> Result<f64> {
    if nu == 0 {
        return Err(Error::param("nu must be >= 1"));
    }
    let slope: f64 = w.iter().zip(dp).map(|(a, b)| a * b).sum();
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dn = dp.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(slope.abs() > 1e-14 * wn * dn) || slope == 0.0 {
        return Err(Error::OrthogonalWeight);
    }
    Ok(gamma.quadratic(w) / (nu as f64 * slope * slope))
}

/// Uniform phase grid `[lo, hi]` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub lo_deg: f64,
    pub hi_deg: f64,
    pub points: usize,
}

impl PhaseGrid {
    pub const DEFAULT_POINTS: usize = 2001;

    pub fn symmetric_deg(half_width: f64) -> Self {
        Self {
            lo_deg: -half_width,
            hi_deg: half_width,
            points: Self::DEFAULT_POINTS,
        }
    }

    pub fn phases(&self) -> Result<Vec<Phase>> {
        if self.points < 2 || !(self.hi_deg > self.lo_deg) {
            return Err(Error::param(format!(
                "phase grid needs hi > lo and >= 2 points, got [{}, {}] x {}",
                self.lo_deg, self.hi_deg, self.points
            )));
        }
        let step = (self.hi_deg - self.lo_deg) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let deg = if i + 1 == self.points {
                    self.hi_deg
                } else {
                    self.lo_deg + i as f64 * step
                };
                Phase::from_degrees(deg)
            })
            .collect())
    }
}

/// Calibrated method-of-moments estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EstimatorJson", into = "EstimatorJson")]
pub struct MomentEstimator {
    scheme: BinScheme,
    w: WeightVector,
    phi0: Phase,
    /// `(phi, g(phi))`, sorted by phi, `g` strictly monotone.
    table: Vec<(Phase, f64)>,
    increasing: bool,
}

#[derive(Serialize, Deserialize)]
struct EstimatorJson {
    scheme: BinScheme,
    phi0_deg: f64,
    w: Vec<f64>,
    g: Vec<[f64; 2]>,
}

impl TryFrom<EstimatorJson> for MomentEstimator {
    type Error = Error;
    fn try_from(raw: EstimatorJson) -> Result<Self> {
        let table = raw
            .g
            .iter()
            .map(|[deg, g]| (Phase::from_degrees(*deg), *g))
            .collect();
        MomentEstimator::from_table(
            raw.scheme,
            WeightVector::normalized(&raw.w)?,
            Phase::from_degrees(raw.phi0_deg),
            table,
        )
    }
}

impl From<MomentEstimator> for EstimatorJson {
    fn from(e: MomentEstimator) -> Self {
        EstimatorJson {
            phi0_deg: e.phi0.degrees(),
            w: e.w.0.clone(),
            g: e.table.iter().map(|(p, g)| [p.degrees(), *g]).collect(),
            scheme: e.scheme,
        }
    }
}

/// Index of the first node where strict monotonicity (in the direction set by the first step) fails.
fn monotone_break(table: &[(Phase, f64)]) -> Option<usize> {
    let increasing = table[1].1 > table[0].1;
    table.windows(2).position(|w| {
        if increasing {
            !(w[1].1 > w[0].1)
        } else {
            !(w[1].1 < w[0].1)
        }
    })
}

impl MomentEstimator {
    /// Validates a tabulated calibration curve.
    pub fn from_table(
        scheme: BinScheme,
        w: WeightVector,
        phi0: Phase,
        table: Vec<(Phase, f64)>,
    ) -> Result<Self> {
        if w.len() != scheme.bins() {
            return Err(Error::param(format!(
                "weight has {} entries for {} bins",
                w.len(),
                scheme.bins()
            )));
        }
        if table.len() < 2 {
            return Err(Error::param("calibration table needs at least 2 points"));
        }
        if table.windows(2).any(|p| !(p[1].0 > p[0].0)) {
            return Err(Error::param("calibration phases must be strictly increasing"));
        }
        if let Some(i) = monotone_break(&table) {
            return Err(Error::NonMonotoneCalibration {
                phi_deg: table[i].0.degrees(),
            });
        }
        let increasing = table[1].1 > table[0].1;
        Ok(Self {
            scheme,
            w,
            phi0,
            table,
            increasing,
        })
    }

    pub fn scheme(&self) -> &BinScheme {
        &self.scheme
    }

    pub fn weights(&self) -> &WeightVector {
        &self.w
    }

    pub fn phi0(&self) -> Phase {
        self.phi0
    }

    pub fn table(&self) -> &[(Phase, f64)] {
        &self.table
    }

    /// Calibrated phase interval.
    pub fn phase_range(&self) -> (Phase, Phase) {
        (self.table[0].0, self.table[self.table.len() - 1].0)
    }

    /// Range of `g` covered by the table.
    pub fn value_range(&self) -> (f64, f64) {
        let a = self.table[0].1;
        let b = self.table[self.table.len() - 1].1;
        (a.min(b), a.max(b))
    }

    /// Value of the combined observable for one outcome (`None`: outside every bin).
    pub fn observable(&self, bin: Option<usize>) -> f64 {
        bin.map_or(0.0, |k| self.w[k])
    }

    /// Inverts the calibration curve: piecewise-linear interpolation located by bisection.
    pub fn invert(&self, obar: f64) -> Result<Phase> {
        let (lo, hi) = self.value_range();
        if !(obar >= lo && obar <= hi) {
            return Err(Error::OutOfCalibrationRange { value: obar, lo, hi });
        }
        let below = |g: f64| if self.increasing { g <= obar } else { g >= obar };
        // first index whose g lies strictly past obar
        let n = self.table.len();
        let mut i = self.table.partition_point(|&(_, g)| below(g));
        if i == 0 {
            i = 1;
        }
        if i >= n {
            return Ok(self.table[n - 1].0);
        }
        let (p0, g0) = self.table[i - 1];
        let (p1, g1) = self.table[i];
        if g0 == obar {
            return Ok(p0);
        }
        let t = (obar - g0) / (g1 - g0);
        Ok(Phase::from_radians(
            p0.radians() + t * (p1.radians() - p0.radians()),
        ))
    }

    /// `phi = g^{-1}(mean of w_{k_i})` over the observed bin indices.
    pub fn estimate_phase(&self, samples: &[usize]) -> Result<Phase> {
        if samples.is_empty() {
            return Err(Error::param("no samples"));
        }
        if let Some(k) = samples.iter().find(|&&k| k >= self.w.len()) {
            return Err(Error::param(format!("bin index {k} out of range")));
        }
        let obar = samples.iter().map(|&k| self.w[k]).sum::<f64>() / samples.len() as f64;
        self.invert(obar)
    }

    /// Estimate from observed bin frequencies (relative to all outcomes).
    pub fn estimate_from_frequencies(&self, freqs: &[f64]) -> Result<Phase> {
        if freqs.len() != self.w.len() {
            return Err(Error::param("frequency vector length does not match bin count"));
        }
        self.invert(self.w.dot(freqs))
    }
}

/// Tabulates `g(phi) = w^T P(phi)` on `grid` (plus `phi0` as an exact node)
/// and checks that it is strictly monotone.
pub fn calibration_curve(
    w: &WeightVector,
    cfg: &InterferometerConfig,
    scheme: &BinScheme,
    phi0: Phase,
    grid: &PhaseGrid,
) -> Result<MomentEstimator> {
    let table = tabulate(w, cfg, scheme, phi0, grid)?;
    MomentEstimator::from_table(scheme.clone(), w.clone(), phi0, table)
}

/// Like [`calibration_curve`] but trims the grid to the widest strictly
/// monotone window around `phi0` instead of failing. Returns the estimator and
/// whether trimming happened.
pub fn calibration_curve_trimmed(
    w: &WeightVector,
    cfg: &InterferometerConfig,
    scheme: &BinScheme,
    phi0: Phase,
    grid: &PhaseGrid,
) -> Result<(MomentEstimator, bool)> {
    let table = tabulate(w, cfg, scheme, phi0, grid)?;
    let c = table
        .iter()
        .position(|(p, _)| *p == phi0)
        .expect("phi0 inserted into table");
    let dir = |i: usize, j: usize| {
        let d = table[j].1 - table[i].1;
        if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let s = if c + 1 < table.len() { dir(c, c + 1) } else { dir(c - 1, c) };
    if s == 0.0 {
        return Err(Error::NonMonotoneCalibration {
            phi_deg: phi0.degrees(),
        });
    }
    let mut lo = c;
    while lo > 0 && dir(lo - 1, lo) == s {
        lo -= 1;
    }
    let mut hi = c;
    while hi + 1 < table.len() && dir(hi, hi + 1) == s {
        hi += 1;
    }
    let trimmed = lo > 0 || hi + 1 < table.len();
    let est = MomentEstimator::from_table(scheme.clone(), w.clone(), phi0, table[lo..=hi].to_vec())?;
    Ok((est, trimmed))
}

fn tabulate(
    w: &WeightVector,
    cfg: &InterferometerConfig,
    scheme: &BinScheme,
    phi0: Phase,
    grid: &PhaseGrid,
) -> Result<Vec<(Phase, f64)>> {
    if w.len() != scheme.bins() {
        return Err(Error::param("weight length does not match bin count"));
    }
    let mut phases = grid.phases()?;
    let (lo, hi) = (phases[0], phases[phases.len() - 1]);
    if phi0 < lo || phi0 > hi {
        return Err(Error::param(format!(
            "phi0 = {} deg outside calibration grid",
            phi0.degrees()
        )));
    }
    // phi0 becomes an exact node; a grid node within rounding distance is replaced
    let snap = 1e-9 * (hi.radians() - lo.radians()) / phases.len() as f64;
    let at = phases.partition_point(|p| *p < phi0);
    let near = |i: usize| (phases[i].radians() - phi0.radians()).abs() <= snap;
    if at < phases.len() && near(at) {
        phases[at] = phi0;
    } else if at > 0 && near(at - 1) {
        phases[at - 1] = phi0;
    } else {
        phases.insert(at, phi0);
    }
    Ok(phases
        .into_iter()
        .map(|phi| (phi, w.dot(&bin_probabilities(cfg, phi, scheme))))
        .collect())
}

/// Unit-norm optimal weights at `phi = 0` for the tabulated schemes: `M`
/// equal or optimized bins on `[-4 sigma(0), 4 sigma(0)]`, finite outer edges.
///
/// At `phi = 0` the weights do not depend on `alpha` or `r` once the bins are
/// expressed in units of the squeezed standard deviation.
pub fn reference_weights(m: usize, binning: crate::coarse::Binning) -> Result<WeightVector> {
    let unit = InterferometerConfig::new(1.0, 0.0)?;
    let scheme = crate::coarse::scheme_for(&unit, m, binning, crate::bins::OuterMode::Finite)?;
    let p = bin_probabilities(&unit, Phase::ZERO, &scheme);
    let dp = crate::coarse::bin_prob_derivative(&unit, Phase::ZERO, &scheme);
    optimal_weight(&p, &dp)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;
    use super::*;
    use crate::bins::{default_range, equal_bins, OuterMode};
    use crate::coarse::{bin_prob_derivative, coarse_fisher, optimize_bins};

    fn cfg(alpha: f64, r: f64) -> InterferometerConfig {
        InterferometerConfig::new(alpha, r).unwrap()
    }

    fn pv(p: &[f64]) -> ProbVector {
        ProbVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn covariance_examples() {
        let g = covariance(&pv(&[0.5, 0.5]));
        assert_eq!(g.matrix(), &DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]));
        let g = covariance(&pv(&[1.0, 0.0, 0.0]));
        assert!(g.matrix().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn covariance_is_psd_with_ones_in_kernel() {
        let p = pv(&[0.1, 0.25, 0.3, 0.05, 0.3]);
        let g = covariance(&p);
        let eig = g.matrix().clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-14));
        let ones = DVector::from_element(5, 1.0);
        assert!((g.matrix() * ones).amax() < 1e-15);
    }

    #[test]
    fn two_bin_pseudoinverse() {
        let pinv = pseudoinverse_closed_form(&pv(&[0.5, 0.5])).unwrap();
        let svd = spectral_pseudoinverse(covariance(&pv(&[0.5, 0.5])).matrix()).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!((&pinv - &expect).amax() < 1e-15);
        assert!((&svd - &expect).amax() < 1e-12);
    }

    #[test]
    fn floor_and_completeness_are_enforced() {
        match pseudoinverse_closed_form(&pv(&[0.5, 0.5, 0.0])) {
            Err(Error::DegenerateBin { bin, .. }) => assert_eq!(bin, 2),
            other => panic!("{other:?}"),
        }
        assert!(pseudoinverse_closed_form(&pv(&[0.4, 0.5])).is_err());
        assert!(inverse_closed_form(&pv(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn inverse_for_incomplete_probabilities() {
        let p = pv(&[0.2, 0.3, 0.45]);
        let inv = inverse_closed_form(&p).unwrap();
        let id = covariance(&p).matrix() * inv;
        assert!((id - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn two_bin_weight_is_table_value() {
        let w = optimal_weight(&pv(&[0.5, 0.5]), &ProbDerivVector::new(vec![3.0, -3.0])).unwrap();
        assert!((w[0] - FRAC_1_SQRT_2).abs() < 1e-8 && (w[1] + FRAC_1_SQRT_2).abs() < 1e-8);
    }

    fn weights_at_zero(scheme: &BinScheme) -> WeightVector {
        let c = cfg(5.7, 0.4375);
        let s = scheme.scaled_by(default_range(&c) / scheme.range()).unwrap();
        let p = bin_probabilities(&c, Phase::ZERO, &s);
        let dp = bin_prob_derivative(&c, Phase::ZERO, &s);
        optimal_weight(&p, &dp).unwrap()
    }

    #[test]
    fn five_bin_weights_match_tables() {
        let eq = weights_at_zero(&equal_bins(5, 4.0, OuterMode::Finite).unwrap());
        for (a, b) in eq.iter().zip([0.637, 0.307, 0.0, -0.307, -0.637]) {
            assert!((a - b).abs() <= 1e-3, "{:?}", eq);
        }
        let opt = weights_at_zero(&optimize_bins(5, 4.0).unwrap().scheme);
        for (a, b) in opt.iter().zip([0.646, 0.287, 0.0, -0.287, -0.646]) {
            assert!((a - b).abs() <= 1e-3, "{:?}", opt);
        }
    }

    #[test]
    fn optimal_weight_saturates_bound() {
        let c = cfg(10.0, 0.3);
        let s = equal_bins(2, default_range(&c), OuterMode::Infinite).unwrap();
        let p = bin_probabilities(&c, Phase::ZERO, &s);
        let dp = bin_prob_derivative(&c, Phase::ZERO, &s);
        let w = optimal_weight(&p, &dp).unwrap();
        let v = estimator_variance(&w, &p, &dp, 1).unwrap();
        let f = coarse_fisher(&c, Phase::ZERO, &s).value;
        assert!((v * f - 1.0).abs() < 1e-12);
        // finite mode: 1 / 115.93
        let sf = s.with_outer_mode(OuterMode::Finite);
        let p = bin_probabilities(&c, Phase::ZERO, &sf);
        let dp = bin_prob_derivative(&c, Phase::ZERO, &sf);
        let w = optimal_weight(&p, &dp).unwrap();
        let v = estimator_variance(&w, &p, &dp, 1).unwrap();
        assert!((v - 8.626e-3).abs() < 1e-6, "{v}");
        let doubled: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        assert_eq!(estimator_variance(&doubled, &p, &dp, 1).unwrap(), v);
    }

    #[test]
    fn orthogonal_weight_is_rejected() {
        let p = pv(&[0.3, 0.4, 0.3]);
        let dp = ProbDerivVector::new(vec![1.0, 0.0, -1.0]);
        assert!(matches!(
            estimator_variance(&[0.0, 1.0, 0.0], &p, &dp, 1),
            Err(Error::OrthogonalWeight)
        ));
        assert!(matches!(
            optimal_weight(&p, &ProbDerivVector::new(vec![0.0; 3])),
            Err(Error::NoSensitivity)
        ));
    }

    #[test]
    fn empirical_covariance_of_indicators() {
        let samples = [Some(0), Some(1), Some(1), None, Some(0), Some(1)];
        let g = empirical_covariance(&samples, 2).unwrap();
        // direct two-pass sample covariance
        let n = samples.len() as f64;
        let x: Vec<[f64; 2]> = samples
            .iter()
            .map(|s| match s {
                Some(0) => [1.0, 0.0],
                Some(1) => [0.0, 1.0],
                _ => [0.0, 0.0],
            })
            .collect();
        let mean = [x.iter().map(|v| v[0]).sum::<f64>() / n, x.iter().map(|v| v[1]).sum::<f64>() / n];
        for k in 0..2 {
            for l in 0..2 {
                let c = x.iter().map(|v| (v[k] - mean[k]) * (v[l] - mean[l])).sum::<f64>() / (n - 1.0);
                assert!((g.matrix()[(k, l)] - c).abs() < 1e-15);
            }
        }
    }

    fn two_bin_estimator() -> (InterferometerConfig, MomentEstimator) {
        let c = cfg(10.0, 0.3);
        let s = equal_bins(2, default_range(&c), OuterMode::Infinite).unwrap();
        let p = bin_probabilities(&c, Phase::ZERO, &s);
        let dp = bin_prob_derivative(&c, Phase::ZERO, &s);
        let w = optimal_weight(&p, &dp).unwrap();
        let est = calibration_curve(&w, &c, &s, Phase::ZERO, &PhaseGrid::symmetric_deg(20.0)).unwrap();
        (c, est)
    }

    #[test]
    fn calibration_curve_properties() {
        let (c, est) = two_bin_estimator();
        assert_eq!(est.table().len(), 2001);
        let g0 = est.table().iter().find(|(p, _)| *p == Phase::ZERO).unwrap().1;
        assert!(g0.abs() < 1e-15);
        for (phi, g) in est.table() {
            // odd in phi
            let p = bin_probabilities(&c, *phi, est.scheme());
            let closed = FRAC_1_SQRT_2 * (2.0 * p[0] - 1.0);
            assert!((g - closed).abs() < 1e-14);
        }
        let (lo, hi) = est.value_range();
        assert!((lo + hi).abs() < 1e-12);
    }

    #[test]
    fn population_limit_recovers_phase() {
        let (c, est) = two_bin_estimator();
        let truth = Phase::from_degrees(2.0);
        let p = bin_probabilities(&c, truth, est.scheme());
        let phi = est.estimate_from_frequencies(&p).unwrap();
        assert!((phi.degrees() - 2.0).abs() < 1e-4, "{}", phi.degrees());
    }

    #[test]
    fn fixed_point_at_phi0() {
        let c = cfg(5.7, 0.4375);
        let s = equal_bins(4, default_range(&c), OuterMode::Infinite).unwrap();
        let phi0 = Phase::from_degrees(-0.02);
        let p = bin_probabilities(&c, phi0, &s);
        let dp = bin_prob_derivative(&c, phi0, &s);
        let w = optimal_weight(&p, &dp).unwrap();
        let grid = PhaseGrid::symmetric_deg(20.0);
        // -0.02 deg is a grid node up to rounding: it is replaced, not duplicated
        let est = calibration_curve(&w, &c, &s, phi0, &grid).unwrap();
        assert_eq!(est.table().len(), 2001);
        assert!(est.table().iter().any(|(q, _)| *q == phi0));
        assert_eq!(est.estimate_from_frequencies(&p).unwrap(), phi0);

        let off = Phase::from_degrees(-0.013);
        let p = bin_probabilities(&c, off, &s);
        let dp = bin_prob_derivative(&c, off, &s);
        let w = optimal_weight(&p, &dp).unwrap();
        let est = calibration_curve(&w, &c, &s, off, &grid).unwrap();
        assert_eq!(est.table().len(), 2002);
        assert_eq!(est.estimate_from_frequencies(&p).unwrap(), off);
    }

    #[test]
    fn out_of_range_is_an_error() {
        let (_, est) = two_bin_estimator();
        let (_, hi) = est.value_range();
        assert!(matches!(est.invert(hi + 1e-6), Err(Error::OutOfCalibrationRange { .. })));
        // every sample in bin 0 gives w_1 = 0.707 > g(20 deg)
        assert!(matches!(est.estimate_phase(&[0; 25]), Err(Error::OutOfCalibrationRange { .. })));
        assert!(est.estimate_phase(&[]).is_err());
        assert!(est.estimate_phase(&[5]).is_err());
        let s = est.estimate_phase(&[0, 1, 0, 1]).unwrap();
        assert!(s.radians().abs() < 1e-12);
    }

    #[test]
    fn non_monotone_curve_is_rejected_or_trimmed() {
        // an even weight gives an even calibration curve with its extremum at 0
        let c = cfg(5.7, 0.4375);
        let s = equal_bins(3, default_range(&c), OuterMode::Infinite).unwrap();
        let w = WeightVector::normalized(&[1.0, -0.2, 1.0]).unwrap();
        let grid = PhaseGrid::symmetric_deg(20.0);
        assert!(matches!(
            calibration_curve(&w, &c, &s, Phase::from_degrees(3.0), &grid),
            Err(Error::NonMonotoneCalibration { .. })
        ));
        let (est, trimmed) =
            calibration_curve_trimmed(&w, &c, &s, Phase::from_degrees(3.0), &grid).unwrap();
        assert!(trimmed);
        assert!(est.phase_range().0.degrees() >= -1e-9);
    }

    #[test]
    fn estimator_json_round_trip() {
        let (_, est) = two_bin_estimator();
        let text = serde_json::to_string(&est).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("phi0_deg").is_some() && v.get("g").is_some() && v.get("w").is_some());
        let back: MomentEstimator = serde_json::from_str(&text).unwrap();
        assert_eq!(back.weights(), est.weights());
        assert_eq!(back.table().len(), est.table().len());
        for ((p, g), (q, h)) in back.table().iter().zip(est.table()) {
            assert!((p.radians() - q.radians()).abs() < 1e-15, "{p:?} {q:?}");
            assert_eq!(g, h);
        }
    }
}
