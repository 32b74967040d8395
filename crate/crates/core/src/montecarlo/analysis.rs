//! Analytic error curves and the bin-number campaign behind the `simulate` command.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bins::{BinScheme, OuterMode};
use crate::coarse::{bin_prob_derivative, bin_probabilities, scheme_for, Binning};
use crate::error::{Error, Result};
use crate::estimator::{estimator_variance, optimal_weight, WeightVector};
use crate::quadrature::{ideal_estimator_variance, InterferometerConfig, Phase};

use super::campaign::{run_campaign, CovarianceSource, PhaseScan, SimCampaignConfig, TrialFlags};
use super::seeds::{stream_seed, Stage};

/// Delta-method error of the moment estimator with weights `w` held fixed,
/// evaluated at `phi`.
pub fn fixed_weight_dphi(
    w: &[f64],
    cfg: &InterferometerConfig,
    scheme: &BinScheme,
    phi: Phase,
    nu: usize,
) -> Result<f64> {
    let p = bin_probabilities(cfg, phi, scheme);
    let dp = bin_prob_derivative(cfg, phi, scheme);
    Ok(estimator_variance(w, &p, &dp, nu)?.sqrt())
}

/// Optimal weights of the true model at `phi0`.
pub fn weights_at(cfg: &InterferometerConfig, scheme: &BinScheme, phi0: Phase) -> Result<WeightVector> {
    optimal_weight(
        &bin_probabilities(cfg, phi0, scheme),
        &bin_prob_derivative(cfg, phi0, scheme),
    )
}

/// First phase between `phi0` and `limit_deg` where the coarse-grained error
/// (weights fixed at `phi0`) rises above the ideal classical (`r = 0`) error.
///
/// Returns `None` when the quantum curve stays below the baseline on the whole
/// interval, and an error if it is not below the baseline at `phi0` itself.
pub fn advantage_crossing(
    cfg: &InterferometerConfig,
    scheme: &BinScheme,
    phi0: Phase,
    limit_deg: f64,
) -> Result<Option<Phase>> {
    let w = weights_at(cfg, scheme, phi0)?;
    let classical = cfg.classical();
    // log ratio of quantum to classical variance; nu cancels
    let gap = |deg: f64| -> Result<f64> {
        let phi = Phase::from_degrees(deg);
        let q = fixed_weight_dphi(&w, cfg, scheme, phi, 1).map(|d| d * d);
        let q = match q {
            Ok(v) => v,
            Err(Error::OrthogonalWeight) | Err(Error::NoSensitivity) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        Ok((q / ideal_estimator_variance(&classical, phi, 1)).ln())
    };
    let start = phi0.degrees();
    if gap(start)? >= 0.0 {
        return Err(Error::param("no quantum advantage at phi0"));
    }
    const STEP_DEG: f64 = 0.05;
    let steps = ((limit_deg - start).abs() / STEP_DEG).ceil().max(1.0) as usize;
    let dir = (limit_deg - start) / steps as f64;
    let mut lo = start;
    for i in 1..=steps {
        let hi = start + dir * i as f64;
        if gap(hi)? >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if gap(mid)? < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(Some(Phase::from_degrees(0.5 * (a + b))));
        }
        lo = hi;
    }
    Ok(None)
}

fn default_ms() -> Vec<usize> {
    (2..=10).collect()
}
fn default_binnings() -> Vec<Binning> {
    vec![Binning::Equal, Binning::Optimal]
}
fn default_outer_mode() -> OuterMode {
    OuterMode::Infinite
}

/// Settings of the bin-number campaign: quantum and classical runs for every
/// `(M, binning)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub cfg: InterferometerConfig,
    #[serde(default = "default_ms")]
    pub bins: Vec<usize>,
    #[serde(default = "default_binnings")]
    pub binnings: Vec<Binning>,
    #[serde(default = "default_outer_mode")]
    pub outer_mode: OuterMode,
    #[serde(default = "SimulateConfig::default_phi0_deg")]
    pub phi0_deg: f64,
    #[serde(default = "SimulateConfig::default_nu")]
    pub nu: usize,
    #[serde(default = "SimulateConfig::default_repeats")]
    pub repeats: usize,
    #[serde(default = "SimulateConfig::default_samples")]
    pub samples_per_phase: usize,
    #[serde(default)]
    pub phase_scan: PhaseScan,
    #[serde(default = "SimulateConfig::default_bootstrap")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub covariance: CovarianceSource,
}

impl SimulateConfig {
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

    pub fn new(cfg: InterferometerConfig, master_seed: u64) -> Self {
        Self {
            cfg,
            bins: default_ms(),
            binnings: default_binnings(),
            outer_mode: default_outer_mode(),
            phi0_deg: Self::default_phi0_deg(),
            nu: Self::default_nu(),
            repeats: Self::default_repeats(),
            samples_per_phase: Self::default_samples(),
            phase_scan: PhaseScan::default(),
            bootstrap_resamples: Self::default_bootstrap(),
            master_seed,
            covariance: CovarianceSource::Model,
        }
    }

    /// Campaign settings for one run; the seed is derived from the master seed.
    pub fn campaign(&self, cfg: InterferometerConfig, scheme: BinScheme, seed: u64) -> SimCampaignConfig {
        SimCampaignConfig {
            phi0_deg: self.phi0_deg,
            phi_true_deg: None,
            nu: self.nu,
            repeats: self.repeats,
            samples_per_phase: self.samples_per_phase,
            phase_scan: self.phase_scan,
            bootstrap_resamples: self.bootstrap_resamples,
            covariance: self.covariance,
            ..SimCampaignConfig::new(cfg, scheme, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins.is_empty() || self.binnings.is_empty() {
            return Err(Error::param("bins and binnings must be non-empty"));
        }
        if let Some(m) = self.bins.iter().find(|&&m| m < 2) {
            return Err(Error::scheme(format!("M must be >= 2, got {m}")));
        }
        let probe = crate::bins::equal_bins(2, 1.0, self.outer_mode)?;
        self.campaign(self.cfg, probe, 0).validate()
    }
}

/// One `(M, binning)` row of the bin-number campaign. Errors are in radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRow {
    pub bins: usize,
    pub binning: Binning,
    pub dphi_quantum: f64,
    pub dphi_quantum_err: f64,
    pub dphi_classical: f64,
    pub dphi_classical_err: f64,
    pub crb_quantum: f64,
    pub dphi_ideal_quantum: f64,
    pub dphi_ideal_classical: f64,
    pub flags_quantum: TrialFlags,
    pub flags_classical: TrialFlags,
}

/// Runs quantum and classical campaigns for every configured `(M, binning)`.
///
/// Optimal schemes are optimized once per `M` and rescaled to each
/// configuration's `4 sigma(0)` range.
pub fn simulate(config: &SimulateConfig) -> Result<Vec<SimulateRow>> {
    config.validate()?;
    let quantum = config.cfg;
    let classical = quantum.classical();
    let phi0 = Phase::from_degrees(config.phi0_deg);
    let scale = (quantum.r()).exp();

    let combos: Vec<(usize, Binning)> = config
        .bins
        .iter()
        .flat_map(|&m| config.binnings.iter().map(move |&b| (m, b)))
        .collect();
    combos
        .par_iter()
        .map(|&(m, binning)| {
            let q_scheme = scheme_for(&quantum, m, binning, config.outer_mode)?;
            let c_scheme = q_scheme.scaled_by(scale)?;
            let key = m as u64 * 2 + binning as u64;
            let q_seed = stream_seed(config.master_seed, Stage::Campaign, key, 0);
            let c_seed = stream_seed(config.master_seed, Stage::Campaign, key, 1);
            let q = run_campaign(&config.campaign(quantum, q_scheme, q_seed))?;
            let c = run_campaign(&config.campaign(classical, c_scheme, c_seed))?;
            Ok(SimulateRow {
                bins: m,
                binning,
                dphi_quantum: q.dphi_std,
                dphi_quantum_err: q.dphi_bootstrap_err,
                dphi_classical: c.dphi_std,
                dphi_classical_err: c.dphi_bootstrap_err,
                crb_quantum: q.crb_dphi(),
                dphi_ideal_quantum: ideal_estimator_variance(&quantum, phi0, config.nu).sqrt(),
                dphi_ideal_classical: ideal_estimator_variance(&classical, phi0, config.nu).sqrt(),
                flags_quantum: q.flags,
                flags_classical: c.flags,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bins::{default_range, equal_bins};
    use crate::coarse::coarse_fisher;

    fn reference() -> InterferometerConfig {
        InterferometerConfig::new(5.7, 0.4375).unwrap()
    }

    #[test]
    fn fixed_weight_error_meets_bound_at_phi0() {
        let cfg = reference();
        let phi0 = Phase::from_degrees(-0.02);
        for m in [2, 5, 10] {
            let s = equal_bins(m, default_range(&cfg), OuterMode::Infinite).unwrap();
            let w = weights_at(&cfg, &s, phi0).unwrap();
            let d = fixed_weight_dphi(&w, &cfg, &s, phi0, 25).unwrap();
            let crb = (1.0 / (25.0 * coarse_fisher(&cfg, phi0, &s).value)).sqrt();
            assert!((d / crb - 1.0).abs() < 1e-9, "M={m}: {d} vs {crb}");
        }
    }

    #[test]
    fn two_bin_crossing_is_symmetric() {
        let cfg = reference();
        let s = equal_bins(2, default_range(&cfg), OuterMode::Infinite).unwrap();
        let phi0 = Phase::from_degrees(-0.02);
        let up = advantage_crossing(&cfg, &s, phi0, 30.0).unwrap().unwrap();
        let down = advantage_crossing(&cfg, &s, phi0, -30.0).unwrap().unwrap();
        assert!((up.degrees() - 6.8107).abs() < 2e-3, "{}", up.degrees());
        assert!((down.degrees() + 6.8107).abs() < 2e-3, "{}", down.degrees());
    }

    #[test]
    fn no_advantage_without_squeezing() {
        let cfg = InterferometerConfig::new(5.7, 0.0).unwrap();
        let s = equal_bins(2, default_range(&cfg), OuterMode::Infinite).unwrap();
        assert!(advantage_crossing(&cfg, &s, Phase::ZERO, 10.0).is_err());
    }

    #[test]
    fn simulate_small_grid() {
        let mut c = SimulateConfig::new(reference(), 4);
        c.bins = vec![2, 3];
        c.repeats = 20;
        c.phase_scan.count = 40;
        let rows = simulate(&c).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[0].bins, rows[0].binning), (2, Binning::Equal));
        assert_eq!((rows[3].bins, rows[3].binning), (3, Binning::Optimal));
        for r in &rows {
            assert!(r.dphi_ideal_quantum < r.dphi_ideal_classical);
            assert!(r.crb_quantum > r.dphi_ideal_quantum);
        }
        assert_eq!(simulate(&c).unwrap(), rows);
    }

    #[test]
    fn simulate_rejects_bad_bins() {
        let mut c = SimulateConfig::new(reference(), 4);
        c.bins = vec![1];
        assert!(simulate(&c).is_err());
    }
}
