//! Simulated calibration-and-estimation campaigns.
//!
//! A campaign reproduces the experimental workflow on synthetic data:
//! scan the bin probabilities over a range of phases, fit the Gaussian model,
//! build the optimal weight and calibration curve at `phi0`, then repeat
//! `nu`-shot estimates to measure the phase error and its bootstrap spread.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bins::BinScheme;
use crate::coarse::{bin_prob_derivative, bin_probabilities, coarse_fisher, ProbVector};
use crate::error::{Error, Result};
use crate::estimator::{
    calibration_curve_trimmed, empirical_covariance, optimal_weight_empirical,
    MomentEstimator, PhaseGrid,
};
use crate::quadrature::{ideal_estimator_variance, InterferometerConfig, Phase};

use super::fit::{fit_probability_model, FitResult};
use super::sampling::{empirical_bin_frequencies, sample_quadratures};
use super::seeds::{stream_rng, stream_seed, Stage};

/// Phases at which the bin probabilities are recorded for the model fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub lo_deg: f64,
    pub hi_deg: f64,
    pub count: usize,
}

impl Default for PhaseScan {
    fn default() -> Self {
        Self {
            lo_deg: -20.0,
            hi_deg: 20.0,
            count: 150,
        }
    }
}

impl PhaseScan {
    pub fn phases(&self) -> Vec<Phase> {
        if self.count == 1 {
            return vec![Phase::from_degrees(self.lo_deg)];
        }
        (0..self.count)
            .map(|i| {
                let step = (self.hi_deg - self.lo_deg) * i as f64 / (self.count - 1) as f64;
                Phase::from_degrees(self.lo_deg + step)
            })
            .collect()
    }
}

/// Source of the covariance matrix used for the optimal weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceSource {
    /// Multinomial covariance of the fitted model at `phi0`.
    #[default]
    Model,
    /// Sample covariance of calibration data at `phi0`, pseudo-inverted spectrally.
    Empirical,
}

fn default_phi0_deg() -> f64 {
    -0.02
}
fn default_nu() -> usize {
    25
}
fn default_repeats() -> usize {
    40
}
fn default_samples() -> usize {
    1000
}
fn default_bootstrap() -> usize {
    40
}
fn default_points() -> usize {
    PhaseGrid::DEFAULT_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCampaignConfig {
    pub cfg: InterferometerConfig,
    pub scheme: BinScheme,
    #[serde(default = "default_phi0_deg")]
    pub phi0_deg: f64,
    /// True phase of the estimation runs; defaults to `phi0`.
    #[serde(default)]
    pub phi_true_deg: Option<f64>,
    #[serde(default = "default_nu")]
    pub nu: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_samples")]
    pub samples_per_phase: usize,
    #[serde(default)]
    pub phase_scan: PhaseScan,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub covariance: CovarianceSource,
    #[serde(default = "default_points")]
    pub calibration_points: usize,
}

impl SimCampaignConfig {
    /// Default campaign settings around the given interferometer and scheme.
    pub fn new(cfg: InterferometerConfig, scheme: BinScheme, master_seed: u64) -> Self {
        Self {
            cfg,
            scheme,
            phi0_deg: default_phi0_deg(),
            phi_true_deg: None,
            nu: default_nu(),
            repeats: default_repeats(),
            samples_per_phase: default_samples(),
            phase_scan: PhaseScan::default(),
            bootstrap_resamples: default_bootstrap(),
            master_seed,
            covariance: CovarianceSource::Model,
            calibration_points: default_points(),
        }
    }

    pub fn phi0(&self) -> Phase {
        Phase::from_degrees(self.phi0_deg)
    }

    pub fn phi_true(&self) -> Phase {
        Phase::from_degrees(self.phi_true_deg.unwrap_or(self.phi0_deg))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("repeats", self.repeats),
            ("samples_per_phase", self.samples_per_phase),
            ("phase_scan.count", self.phase_scan.count),
            ("bootstrap_resamples", self.bootstrap_resamples),
        ] {
            if v == 0 {
                return Err(Error::param(format!("{name} must be >= 1")));
            }
        }
        if self.calibration_points < 2 {
            return Err(Error::param("calibration_points must be >= 2"));
        }
        let PhaseScan { lo_deg, hi_deg, .. } = self.phase_scan;
        if !(hi_deg > lo_deg) {
            return Err(Error::param("phase scan needs hi_deg > lo_deg"));
        }
        if !(self.phi0_deg >= lo_deg && self.phi0_deg <= hi_deg) {
            return Err(Error::param(format!(
                "phi0 = {} deg lies outside the phase scan [{lo_deg}, {hi_deg}]",
                self.phi0_deg
            )));
        }
        if self.phi_true_deg.is_some_and(|p| !p.is_finite()) {
            return Err(Error::param("phi_true_deg must be finite"));
        }
        Ok(())
    }
}

/// Diagnostics attached to a [`TrialReport`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TrialFlags {
    /// Repeats whose observable mean fell outside the calibration curve.
    pub saturated: usize,
    /// Fewer than two usable estimates: the spread is reported as zero.
    pub degenerate_statistics: bool,
    /// The calibration curve was cut to its monotone window around `phi0`.
    pub calibration_trimmed: bool,
    /// Some bins were empty when evaluating the Fisher information.
    pub excluded_bins: bool,
    /// The model fit stopped on its evaluation budget.
    pub fit_unconverged: bool,
}

impl TrialFlags {
    pub fn is_clean(&self) -> bool {
        *self == TrialFlags::default()
    }
}

impl fmt::Display for TrialFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.saturated > 0 {
            parts.push(format!("saturated={}", self.saturated));
        }
        if self.degenerate_statistics {
            parts.push("degenerate".to_string());
        }
        if self.calibration_trimmed {
            parts.push("trimmed".to_string());
        }
        if self.excluded_bins {
            parts.push("excluded_bins".to_string());
        }
        if self.fit_unconverged {
            parts.push("fit_unconverged".to_string());
        }
        if parts.is_empty() {
            f.write_str("ok")
        } else {
            f.write_str(&parts.join("|"))
        }
    }
}

/// Outcome of repeated estimation at one true phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub phi_true: Phase,
    /// One entry per repeat, in radians; `None` where the estimate saturated.
    pub estimates: Vec<Option<f64>>,
    /// Sample standard deviation of the usable estimates (radians).
    pub dphi_std: f64,
    /// Bootstrap standard error of `dphi_std` (radians).
    pub dphi_bootstrap_err: f64,
    /// Cramer-Rao bound on the error variance, `1 / (nu F)` (radians^2).
    pub crb_variance: f64,
    pub flags: TrialFlags,
}

impl TrialReport {
    pub fn crb_dphi(&self) -> f64 {
        self.crb_variance.sqrt()
    }

    pub fn valid_estimates(&self) -> Vec<f64> {
        self.estimates.iter().flatten().copied().collect()
    }

    /// More than half of the repeats saturated.
    pub fn saturation_dominated(&self) -> bool {
        2 * self.flags.saturated > self.estimates.len()
    }
}

/// Sample standard deviation with `n - 1` normalization (zero for fewer than two values).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Standard deviation of `sample_std` over `resamples` bootstrap datasets
/// drawn with replacement from `xs`.
pub fn bootstrap_std_error<R: Rng>(xs: &[f64], resamples: usize, rng: &mut R) -> f64 {
    if xs.len() < 2 || resamples < 2 {
        return 0.0;
    }
    let mut buf = vec![0.0; xs.len()];
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            sample_std(&buf)
        })
        .collect();
    sample_std(&stats)
}

/// Everything built during calibration.
#[derive(Debug, Clone)]
pub struct CalibratedEstimator {
    pub fit: FitResult,
    pub fitted: InterferometerConfig,
    pub estimator: MomentEstimator,
    pub trimmed: bool,
}

fn scan_seed_key(phi: Phase) -> u64 {
    phi.radians().to_bits()
}

/// Scan, fit, weight and calibration curve at `phi0`.
pub fn calibrate(config: &SimCampaignConfig) -> Result<CalibratedEstimator> {
    config.validate()?;
    let scheme = &config.scheme;
    let scan: Vec<(Phase, ProbVector)> = config
        .phase_scan
        .phases()
        .into_par_iter()
        .enumerate()
        .map(|(i, phi)| {
            let seed = stream_seed(config.master_seed, Stage::Scan, i as u64, 0);
            let xs = sample_quadratures(&config.cfg, phi, config.samples_per_phase, seed)?;
            Ok((phi, empirical_bin_frequencies(&xs, scheme)?.fractions_of_total()))
        })
        .collect::<Result<_>>()?;
    let fit = fit_probability_model(scheme, &scan)?;
    let fitted = fit.config()?;

    let phi0 = config.phi0();
    let dp = bin_prob_derivative(&fitted, phi0, scheme);
    let w = match config.covariance {
        CovarianceSource::Model => {
            crate::estimator::optimal_weight(&bin_probabilities(&fitted, phi0, scheme), &dp)?
        }
        CovarianceSource::Empirical => {
            let seed = stream_seed(config.master_seed, Stage::Calibration, 0, 0);
            let xs = sample_quadratures(&config.cfg, phi0, config.samples_per_phase.max(2), seed)?;
            let bins: Vec<Option<usize>> = xs.iter().map(|&x| scheme.locate(x)).collect();
            optimal_weight_empirical(&empirical_covariance(&bins, scheme.bins())?, &dp)?
        }
    };
    let grid = PhaseGrid {
        lo_deg: config.phase_scan.lo_deg,
        hi_deg: config.phase_scan.hi_deg,
        points: config.calibration_points,
    };
    let (estimator, trimmed) = calibration_curve_trimmed(&w, &fitted, scheme, phi0, &grid)?;
    Ok(CalibratedEstimator {
        fit,
        fitted,
        estimator,
        trimmed,
    })
}

/// Shared settings of a batch of repeated estimates.
#[derive(Debug, Clone, Copy)]
pub struct TrialSettings {
    pub nu: usize,
    pub repeats: usize,
    pub bootstrap_resamples: usize,
    pub master_seed: u64,
}

impl From<&SimCampaignConfig> for TrialSettings {
    fn from(c: &SimCampaignConfig) -> Self {
        Self {
            nu: c.nu,
            repeats: c.repeats,
            bootstrap_resamples: c.bootstrap_resamples,
            master_seed: c.master_seed,
        }
    }
}

fn summarize(
    phi_true: Phase,
    estimates: Vec<Option<f64>>,
    crb_variance: f64,
    mut flags: TrialFlags,
    settings: &TrialSettings,
    stage_key: u64,
) -> TrialReport {
    flags.saturated = estimates.iter().filter(|e| e.is_none()).count();
    let valid: Vec<f64> = estimates.iter().flatten().copied().collect();
    flags.degenerate_statistics = valid.len() < 2;
    let mut rng = stream_rng(
        settings.master_seed,
        Stage::Bootstrap,
        scan_seed_key(phi_true),
        stage_key,
    );
    let dphi_bootstrap_err = bootstrap_std_error(&valid, settings.bootstrap_resamples, &mut rng);
    TrialReport {
        phi_true,
        dphi_std: sample_std(&valid),
        dphi_bootstrap_err,
        crb_variance,
        estimates,
        flags,
    }
}

/// Repeated `nu`-shot method-of-moments estimates at `phi_true` drawn from `truth`.
pub fn run_trials(
    calibrated: &CalibratedEstimator,
    truth: &InterferometerConfig,
    phi_true: Phase,
    settings: &TrialSettings,
) -> Result<TrialReport> {
    if settings.nu == 0 || settings.repeats == 0 {
        return Err(Error::param("nu and repeats must be >= 1"));
    }
    let est = &calibrated.estimator;
    let scheme = est.scheme();
    let estimates = (0..settings.repeats)
        .into_par_iter()
        .map(|j| {
            let seed = stream_seed(settings.master_seed, Stage::Trial, scan_seed_key(phi_true), j as u64);
            let xs = sample_quadratures(truth, phi_true, settings.nu, seed)?;
            let obar = xs.iter().map(|&x| est.observable(scheme.locate(x))).sum::<f64>()
                / settings.nu as f64;
            match est.invert(obar) {
                Ok(phi) => Ok(Some(phi.radians())),
                Err(Error::OutOfCalibrationRange { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let fi = coarse_fisher(truth, phi_true, scheme);
    let flags = TrialFlags {
        calibration_trimmed: calibrated.trimmed,
        excluded_bins: !fi.is_clean(),
        fit_unconverged: !calibrated.fit.converged,
        ..Default::default()
    };
    let crb = if fi.value > 0.0 {
        1.0 / (settings.nu as f64 * fi.value)
    } else {
        f64::INFINITY
    };
    Ok(summarize(phi_true, estimates, crb, flags, settings, 0))
}

/// Full pipeline at the configured true phase.
pub fn run_campaign(config: &SimCampaignConfig) -> Result<TrialReport> {
    let calibrated = calibrate(config)?;
    run_trials(&calibrated, &config.cfg, config.phi_true(), &config.into())
}

/// Calibrates once at `phi0` and estimates at every phase of `phi_grid`.
pub fn phase_range_scan(config: &SimCampaignConfig, phi_grid: &[Phase]) -> Result<Vec<TrialReport>> {
    let calibrated = calibrate(config)?;
    let settings = TrialSettings::from(config);
    phi_grid
        .par_iter()
        .map(|&phi| run_trials(&calibrated, &config.cfg, phi, &settings))
        .collect()
}

/// Ideal (unbinned) homodyne detection with the mean-quadrature estimator
/// `-2 asin(p_mean / 2 alpha)`; with `r = 0` this is the classical baseline.
pub fn run_ideal_homodyne(
    cfg: &InterferometerConfig,
    phi_true: Phase,
    settings: &TrialSettings,
) -> Result<TrialReport> {
    if settings.nu == 0 || settings.repeats == 0 {
        return Err(Error::param("nu and repeats must be >= 1"));
    }
    let estimates = (0..settings.repeats)
        .into_par_iter()
        .map(|j| {
            let seed = stream_seed(
                settings.master_seed,
                Stage::IdealHomodyne,
                scan_seed_key(phi_true),
                j as u64,
            );
            let xs = sample_quadratures(cfg, phi_true, settings.nu, seed)?;
            let pbar = xs.iter().sum::<f64>() / settings.nu as f64;
            let s = pbar / (2.0 * cfg.alpha());
            Ok((s.abs() <= 1.0).then(|| -2.0 * s.asin()))
        })
        .collect::<Result<Vec<_>>>()?;
    let crb = ideal_estimator_variance(cfg, phi_true, settings.nu);
    Ok(summarize(phi_true, estimates, crb, TrialFlags::default(), settings, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bins::{default_range, equal_bins, OuterMode};
    use rand::SeedableRng;

    fn reference_config(m: usize, seed: u64) -> SimCampaignConfig {
        let cfg = InterferometerConfig::new(5.7, 0.4375).unwrap();
        let scheme = equal_bins(m, default_range(&cfg), OuterMode::Infinite).unwrap();
        SimCampaignConfig::new(cfg, scheme, seed)
    }

    #[test]
    fn std_and_bootstrap() {
        assert_eq!(sample_std(&[1.0]), 0.0);
        assert!((sample_std(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(bootstrap_std_error(&[2.0; 10], 40, &mut rng), 0.0);
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let e = bootstrap_std_error(&xs, 200, &mut rng);
        // asymptotic SE of the std for this bounded sample is about s / sqrt(2n) ~ 0.08
        assert!(e > 0.02 && e < 0.2, "{e}");
    }

    #[test]
    fn config_validation() {
        let mut c = reference_config(2, 1);
        assert!(c.validate().is_ok());
        c.repeats = 0;
        assert!(c.validate().is_err());
        let mut c = reference_config(2, 1);
        c.phi0_deg = 30.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c = reference_config(2, 9);
        let text = serde_json::to_string(&c).unwrap();
        let back: SimCampaignConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let minimal = r#"{"cfg":{"alpha":5.7,"r":0.4375},
            "scheme":{"M":2,"R":2.583,"outer_mode":"infinite","boundaries":[-2.583,0.0,2.583]}}"#;
        let c: SimCampaignConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!((c.nu, c.repeats, c.samples_per_phase, c.bootstrap_resamples), (25, 40, 1000, 40));
        assert_eq!(c.phase_scan, PhaseScan::default());
        assert_eq!(c.phi0_deg, -0.02);
    }

    #[test]
    fn single_repeat_is_degenerate() {
        let mut c = reference_config(2, 3);
        c.repeats = 1;
        let rep = run_campaign(&c).unwrap();
        assert_eq!(rep.estimates.len(), 1);
        assert_eq!(rep.dphi_std, 0.0);
        assert!(rep.flags.degenerate_statistics);
    }

    #[test]
    fn campaign_is_reproducible() {
        let c = reference_config(3, 17);
        let a = run_campaign(&c).unwrap();
        let b = run_campaign(&c).unwrap();
        assert_eq!(a, b);
        let other = run_campaign(&reference_config(3, 18)).unwrap();
        assert_ne!(a.estimates, other.estimates);
    }

    #[test]
    fn two_bin_campaign_near_bound() {
        let rep = run_campaign(&reference_config(2, 5)).unwrap();
        assert_eq!(rep.estimates.len(), 40);
        assert_eq!(rep.flags.saturated, 0);
        // CRB: f_2 alpha^2 e^{2r} ~ 49.6 per shot, nu = 25
        assert!((rep.crb_dphi() - 0.0284).abs() < 5e-4, "{}", rep.crb_dphi());
        assert!((rep.dphi_std - rep.crb_dphi()).abs() < 3.0 * rep.dphi_bootstrap_err + 1e-12);
    }

    #[test]
    fn empirical_covariance_path_gives_similar_weights() {
        let mut c = reference_config(4, 21);
        let model = calibrate(&c).unwrap();
        c.covariance = CovarianceSource::Empirical;
        let emp = calibrate(&c).unwrap();
        for (a, b) in model.estimator.weights().iter().zip(emp.estimator.weights().iter()) {
            assert!((a - b).abs() < 0.1, "{a} vs {b}");
        }
    }

    #[test]
    fn phase_scan_reproduces_single_point() {
        let c = reference_config(2, 8);
        let single = run_campaign(&c).unwrap();
        let scan = phase_range_scan(&c, &[Phase::from_degrees(-3.0), c.phi0(), Phase::from_degrees(4.0)]).unwrap();
        assert_eq!(scan[1], single);
    }

    #[test]
    fn classical_baseline_matches_its_bound() {
        let cfg = InterferometerConfig::new(5.7, 0.0).unwrap();
        let settings = TrialSettings {
            nu: 25,
            repeats: 400,
            bootstrap_resamples: 40,
            master_seed: 2,
        };
        let rep = run_ideal_homodyne(&cfg, Phase::from_degrees(-0.02), &settings).unwrap();
        let expect = 1.0 / (5.7 * 5.0);
        assert!((rep.crb_dphi() - expect).abs() < 1e-6);
        assert!((rep.dphi_std / expect - 1.0).abs() < 0.15, "{}", rep.dphi_std / expect);
    }

    #[test]
    fn flags_render() {
        assert_eq!(TrialFlags::default().to_string(), "ok");
        let f = TrialFlags {
            saturated: 3,
            degenerate_statistics: true,
            ..Default::default()
        };
        assert_eq!(f.to_string(), "saturated=3|degenerate");
    }
}
