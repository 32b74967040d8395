//! Phase estimation under coarse-grained homodyne detection.
//!
//! The crate models a Mach-Zehnder interferometer fed with a coherent state
//! and a squeezed vacuum whose dark-port quadrature is detected with only a
//! handful of bins. It provides
//!
//! * exact Gaussian quadrature statistics and ideal Fisher information ([`quadrature`]),
//! * bin schemes, binned probabilities, coarse-grained Fisher information and
//!   optimal bin boundaries ([`bins`], [`coarse`]),
//! * method-of-moments estimators that saturate the Cramer-Rao bound ([`estimator`]),
//! * Heisenberg-scaling sweeps ([`scaling`]),
//! * a seeded Monte Carlo simulation of the full calibration and estimation
//!   pipeline ([`montecarlo`]),
//! * CSV/JSON writers for every table the CLI emits ([`report`]).

// `!(x > y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bins;
pub mod coarse;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod quadrature;
pub mod report;
pub mod scaling;
pub mod simplex;
pub mod special;

pub use bins::{default_range, equal_bins, BinScheme, OuterMode, ScaledBoundaries};
pub use coarse::{
    bin_prob_derivative, bin_probabilities, coarse_fisher, fisher_ratio, optimize_bins, Binning,
    FisherInfo, ProbDerivVector, ProbVector,
};
pub use error::{Error, Result};
pub use estimator::{
    calibration_curve, covariance, estimator_variance, optimal_weight, pseudoinverse_closed_form,
    reference_weights, CovarianceMatrix, MomentEstimator, PhaseGrid, WeightVector,
};
pub use montecarlo::{enhancement_db, run_campaign, simulate, SimCampaignConfig, SimulateConfig, TrialReport};
pub use quadrature::{ideal_fisher, moments, qfi, InterferometerConfig, Phase};
