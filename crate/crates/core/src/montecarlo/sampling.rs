//! Quadrature sampling and empirical binning.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bins::BinScheme;
use crate::coarse::ProbVector;
use crate::error::{Error, Result};
use crate::quadrature::{moments, InterferometerConfig, Phase};

/// `n` independent draws from the quadrature distribution at `phi`.
/// The stream is a pure function of `seed`.
pub fn sample_quadratures(cfg: &InterferometerConfig, phi: Phase, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("sample count must be >= 1"));
    }
    let m = moments(cfg, phi);
    let dist = Normal::new(m.mean, m.std_dev()).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// Per-bin counts of a batch of quadrature samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinCounts {
    pub counts: Vec<u64>,
    /// Samples outside `[-R, R]` in finite outer mode.
    pub out_of_range: u64,
    pub total: u64,
}

impl BinCounts {
    pub fn assigned(&self) -> u64 {
        self.total - self.out_of_range
    }

    /// Frequencies over the assigned samples; `None` when every sample was out of range.
    pub fn frequencies(&self) -> Option<ProbVector> {
        let n = self.assigned();
        if n == 0 {
            return None;
        }
        ProbVector::new(self.counts.iter().map(|&c| c as f64 / n as f64).collect()).ok()
    }

    /// Frequencies relative to all samples, the empirical counterpart of the
    /// model probabilities in either outer mode.
    pub fn fractions_of_total(&self) -> ProbVector {
        ProbVector::new(
            self.counts
                .iter()
                .map(|&c| c as f64 / self.total as f64)
                .collect(),
        )
        .expect("counts never exceed total")
    }

    pub fn out_of_range_fraction(&self) -> f64 {
        self.out_of_range as f64 / self.total as f64
    }
}

pub fn empirical_bin_frequencies(samples: &[f64], scheme: &BinScheme) -> Result<BinCounts> {
    if samples.is_empty() {
        return Err(Error::param("no samples to bin"));
    }
    let mut counts = vec![0u64; scheme.bins()];
    let mut out_of_range = 0;
    for &x in samples {
        match scheme.locate(x) {
            Some(k) => counts[k] += 1,
            None => out_of_range += 1,
        }
    }
    Ok(BinCounts {
        counts,
        out_of_range,
        total: samples.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bins::{default_range, equal_bins, OuterMode};
    use crate::coarse::bin_probabilities;

    fn cfg() -> InterferometerConfig {
        InterferometerConfig::new(10.0, 0.3).unwrap()
    }

    #[test]
    fn sample_moments_concentrate() {
        let xs = sample_quadratures(&cfg(), Phase::ZERO, 1_000_000, 11).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = (-0.3f64).exp();
        assert!(mean.abs() < 4.0 * sd / 1e3, "{mean}");
        assert!((var / (-0.6f64).exp() - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn identical_seed_identical_stream() {
        let a = sample_quadratures(&cfg(), Phase::from_degrees(1.0), 100, 5).unwrap();
        let b = sample_quadratures(&cfg(), Phase::from_degrees(1.0), 100, 5).unwrap();
        let c = sample_quadratures(&cfg(), Phase::from_degrees(1.0), 100, 6).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, c);
        assert!(sample_quadratures(&cfg(), Phase::ZERO, 0, 1).is_err());
    }

    #[test]
    fn two_sample_split() {
        let s = equal_bins(2, 4.0, OuterMode::Finite).unwrap();
        let c = empirical_bin_frequencies(&[-1.0, 1.0], &s).unwrap();
        assert_eq!(&c.frequencies().unwrap()[..], &[0.5, 0.5]);
        assert!(empirical_bin_frequencies(&[], &s).is_err());
    }

    #[test]
    fn out_of_range_in_finite_mode() {
        let s = equal_bins(3, 1.0, OuterMode::Finite).unwrap();
        let c = empirical_bin_frequencies(&[2.0, -5.0, 1.5], &s).unwrap();
        assert_eq!(c.out_of_range, 3);
        assert_eq!(c.out_of_range_fraction(), 1.0);
        assert!(c.frequencies().is_none());
        let i = empirical_bin_frequencies(&[2.0, -5.0, 1.5], &s.with_outer_mode(OuterMode::Infinite)).unwrap();
        assert_eq!(i.counts, vec![1, 0, 2]);
        assert_eq!(i.out_of_range, 0);
    }

    #[test]
    fn large_sample_matches_model() {
        let c = cfg();
        let phi = Phase::from_degrees(2.0);
        let s = equal_bins(2, default_range(&c), OuterMode::Infinite).unwrap();
        let xs = sample_quadratures(&c, phi, 10_000_000, 2024).unwrap();
        let f = empirical_bin_frequencies(&xs, &s).unwrap().frequencies().unwrap();
        let p = bin_probabilities(&c, phi, &s);
        // binomial standard error sqrt(p(1-p)/n) = 1.5e-4
        for k in 0..2 {
            assert!((f[k] - p[k]).abs() < 3e-4, "{} vs {}", f[k], p[k]);
        }
    }
}
