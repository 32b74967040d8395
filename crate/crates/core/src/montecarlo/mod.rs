//! Seeded Monte Carlo simulation of the calibration and estimation pipeline.

pub mod analysis;
pub mod campaign;
pub mod fit;
pub mod sampling;
pub mod seeds;

pub use analysis::{
    advantage_crossing, fixed_weight_dphi, simulate, SimulateConfig, SimulateRow,
};
pub use campaign::{
    bootstrap_std_error, calibrate, phase_range_scan, run_campaign, run_ideal_homodyne, run_trials,
    sample_std, CalibratedEstimator, CovarianceSource, PhaseScan, SimCampaignConfig, TrialFlags,
    TrialReport, TrialSettings,
};
pub use fit::{fit_probability_model, FitResult};
pub use sampling::{empirical_bin_frequencies, sample_quadratures, BinCounts};
pub use seeds::{stream_rng, stream_seed, Stage};

use crate::error::{Error, Result};

/// Enhancement of the quantum over the classical error variance, in dB.
pub fn enhancement_db(dphi2_quantum: f64, dphi2_classical: f64) -> Result<f64> {
    if !(dphi2_quantum > 0.0 && dphi2_quantum.is_finite())
        || !(dphi2_classical > 0.0 && dphi2_classical.is_finite())
    {
        return Err(Error::param(format!(
            "variances must be positive and finite, got {dphi2_quantum} and {dphi2_classical}"
        )));
    }
    Ok(10.0 * (dphi2_classical / dphi2_quantum).log10())
}
