use std::collections::BTreeSet;

use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{require_samples, tags, EstimateReport, Runner};
use crate::error::{invalid, Error, Result};
use crate::stats::{least_squares, quantile, Summary};
use crate::walk::{LerwSampler, LerwTarget, RngStream};

/// Quantile levels of `M_n / Ê[M_n]` reported as a tightness diagnostic.
pub const TIGHTNESS_LEVELS: [f64; 3] = [0.5, 0.9, 0.99];

const BOOTSTRAP_RESAMPLES: usize = 2000;

/// `M_n` for replicas `0..samples`, in replica order.
pub fn sample_step_counts(n: u32, samples: u64, runner: &Runner) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(invalid("scale must be at least 1"));
    }
    require_samples(samples)?;
    runner.chunks(samples, |range| {
        let mut s = LerwSampler::new(LerwTarget::Ball(n))?;
        range
            .map(|i| {
                s.run(runner.stream(tags::MN, i))?;
                Ok(s.lerw().len() as u64 - 1)
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MnEstimate {
    pub report: EstimateReport,
    /// `(level, quantile of M_n / Ê[M_n])` for [`TIGHTNESS_LEVELS`].
    pub quantiles: Vec<(f64, f64)>,
    #[serde(skip)]
    pub steps: Vec<u64>,
}

/// Sample mean of `M_n` and the quantile table of the normalized counts.
pub fn estimate_mn(n: u32, samples: u64, runner: &Runner) -> Result<MnEstimate> {
    let steps = sample_step_counts(n, samples, runner)?;
    let xs: Vec<f64> = steps.iter().map(|&m| m as f64).collect();
    let s = Summary::of(&xs);
    let mut normalized: Vec<f64> = xs.iter().map(|x| x / s.mean).collect();
    normalized.sort_by(f64::total_cmp);
    let quantiles = TIGHTNESS_LEVELS.iter().map(|&p| (p, quantile(&normalized, p))).collect();
    let report = EstimateReport::new(s.mean, s.stderr, s.count, runner.seed()).with("n", n).with("quantity", "M_n");
    Ok(MnEstimate { report, quantiles, steps })
}

/// Least-squares fit of `log Ê[M_n]` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// Half-width of the central 95% interval of slopes refitted to means
    /// perturbed by their standard errors.
    pub half_width: f64,
}

/// Fits the growth exponent. `reports[i]` is the estimate of `E[M_n]` at
/// `ns[i]`; `seed` drives the parametric bootstrap.
pub fn fit_growth_exponent(ns: &[u32], reports: &[EstimateReport], seed: u64) -> Result<ExponentFit> {
    if ns.len() != reports.len() {
        return Err(invalid("one report per scale is required"));
    }
    let distinct = ns.iter().collect::<BTreeSet<_>>().len();
    if distinct < 3 || distinct != ns.len() {
        return Err(Error::DegenerateFit { needed: 3, got: distinct.min(ns.len()) });
    }
    if ns.contains(&0) || reports.iter().any(|r| !(r.estimate > 0.0) || !(r.stderr >= 0.0)) {
        return Err(invalid("scales and means must be positive"));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = reports.iter().map(|r| r.estimate.ln()).collect();
    let fit = least_squares(&x, &y)?;

    let mut rng = RngStream::derive(seed, tags::FIT, 0).rng();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut yb = vec![0.0; y.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for (v, r) in yb.iter_mut().zip(reports) {
            let draw = if r.stderr > 0.0 {
                Normal::new(r.estimate, r.stderr).map_err(|e| invalid(e.to_string()))?.sample(&mut rng)
            } else {
                r.estimate
            };
            *v = draw.max(f64::MIN_POSITIVE).ln();
        }
        slopes.push(least_squares(&x, &yb)?.slope);
    }
    slopes.sort_by(f64::total_cmp);
    let half_width = 0.5 * (quantile(&slopes, 0.975) - quantile(&slopes, 0.025));
    Ok(ExponentFit { slope: fit.slope, intercept: fit.intercept, residuals: fit.residuals, half_width })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(n: u32, mean: f64, se: f64) -> EstimateReport {
        EstimateReport::new(mean, se, 100, 0).with("n", n)
    }

    #[test]
    fn unit_radius_is_one_step() {
        let e = estimate_mn(1, 200, &Runner::new(7, 1).unwrap()).unwrap();
        assert_eq!(e.report.estimate, 1.0);
        assert_eq!(e.report.stderr, 0.0);
        assert!(e.quantiles.iter().all(|&(_, q)| q == 1.0));
    }

    #[test]
    fn synthetic_power_laws() {
        let ns = [16u32, 32, 64, 128];
        for c in [1.0, 3.0] {
            let reps: Vec<_> = ns.iter().map(|&n| report(n, c * (n as f64).powf(1.25), 0.0)).collect();
            let f = fit_growth_exponent(&ns, &reps, 1).unwrap();
            assert!((f.slope - 1.25).abs() < 1e-12);
            assert!((f.intercept - f64::ln(c)).abs() < 1e-12);
            assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));
            assert_eq!(f.half_width, 0.0);
        }
        let noisy: Vec<_> = ns.iter().map(|&n| report(n, (n as f64).powf(1.25), 0.05 * (n as f64).powf(1.25))).collect();
        let f = fit_growth_exponent(&ns, &noisy, 1).unwrap();
        assert!(f.half_width > 0.0 && f.half_width < 0.2);
    }

    #[test]
    fn degenerate_scales() {
        let r = |n| report(n, 10.0, 1.0);
        assert!(matches!(
            fit_growth_exponent(&[4, 4, 8], &[r(4), r(4), r(8)], 0),
            Err(Error::DegenerateFit { .. })
        ));
        assert!(matches!(fit_growth_exponent(&[4, 8], &[r(4), r(8)], 0), Err(Error::DegenerateFit { .. })));
    }

    #[test]
    fn step_counts_depend_only_on_seed() {
        let a = sample_step_counts(8, 300, &Runner::new(3, 1).unwrap()).unwrap();
        let b = sample_step_counts(8, 300, &Runner::new(3, 2).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&m| m >= 8));
    }
}
