use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{require_samples, tags, EstimateReport, Runner};
use crate::curve::point_segment_distance;
use crate::error::{invalid, Result};
use crate::loewner::{sample_sle_trace, InverseMethod, TraceOptions};
use crate::stats::Summary;
use crate::walk::{LerwSampler, LerwTarget};

fn meets_ball(pts: &[Complex64], z: Complex64, eps: f64) -> bool {
    match pts {
        [p] => (p - z).norm() < eps,
        _ => pts.windows(2).any(|w| point_segment_distance(z, w[0], w[1]) < eps),
    }
}

fn check_radius(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("ball radius must be positive, got {eps}")));
    }
    Ok(())
}

fn check_in_disk(z: [f64; 2], eps: f64) -> Result<()> {
    if z[0].hypot(z[1]) + eps > 1.0 {
        return Err(invalid(format!("B({z:?}, {eps}) is not contained in the unit disk")));
    }
    Ok(())
}

/// Frequency with which the rescaled LERW trace meets the open ball
/// `B(z, ε)`, for any ball.
pub fn hit_probability(z: [f64; 2], eps: f64, n: u32, samples: u64, runner: &Runner) -> Result<EstimateReport> {
    require_samples(samples)?;
    check_radius(eps)?;
    if n == 0 {
        return Err(invalid("scale must be at least 1"));
    }
    let zc = Complex64::new(z[0], z[1]);
    let s = 1.0 / n as f64;
    let hits: Vec<bool> = runner.chunks(samples, |range| {
        let mut smp = LerwSampler::new(LerwTarget::Ball(n))?;
        let mut pts = Vec::new();
        range
            .map(|i| {
                smp.run(runner.stream(tags::HIT, i))?;
                pts.clear();
                pts.extend(smp.lerw().iter().map(|p| Complex64::new(p.x as f64 * s, p.y as f64 * s)));
                Ok(meets_ball(&pts, zc, eps))
            })
            .collect()
    })?;
    let k = hits.iter().filter(|&&h| h).count() as u64;
    let sum = Summary::of_proportion(k, samples);
    Ok(EstimateReport::new(sum.mean, sum.stderr, samples, runner.seed())
        .with("model", "lerw")
        .with("n", n)
        .with("eps", eps)
        .with("z", vec![z[0], z[1]]))
}

/// [`hit_probability`] for balls inside the unit disk.
pub fn estimate_hit_probability(z: [f64; 2], eps: f64, n: u32, samples: u64, runner: &Runner) -> Result<EstimateReport> {
    check_radius(eps)?;
    check_in_disk(z, eps)?;
    hit_probability(z, eps, n, samples, runner)
}

/// Discretization of the SLE companion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleHitConfig {
    pub kappa: f64,
    pub t_max: f64,
    pub dt: f64,
    pub stride: usize,
}

impl Default for SleHitConfig {
    fn default() -> Self {
        Self { kappa: 2.0, t_max: 4.0, dt: 2e-3, stride: 5 }
    }
}

/// Frequency with which a radial SLE(κ) trace, truncated at capacity time
/// `t_max` and closed by a segment to the origin, meets `B(z, ε)`.
pub fn estimate_sle_hit_probability(
    z: [f64; 2],
    eps: f64,
    samples: u64,
    cfg: &SleHitConfig,
    runner: &Runner,
) -> Result<EstimateReport> {
    require_samples(samples)?;
    check_radius(eps)?;
    check_in_disk(z, eps)?;
    let zc = Complex64::new(z[0], z[1]);
    let opts = TraceOptions { stride: cfg.stride, inverse: InverseMethod::Composition, ..Default::default() };
    let hits: Vec<bool> = runner.chunks(samples, |range| {
        range
            .map(|i| {
                let tr = sample_sle_trace(cfg.kappa, cfg.t_max, cfg.dt, runner.stream(tags::HIT_SLE, i), &opts)?;
                Ok(meets_ball(tr.curve.vertices(), zc, eps))
            })
            .collect()
    })?;
    let k = hits.iter().filter(|&&h| h).count() as u64;
    let sum = Summary::of_proportion(k, samples);
    Ok(EstimateReport::new(sum.mean, sum.stderr, samples, runner.seed())
        .with("model", "sle")
        .with("kappa", cfg.kappa)
        .with("t_max", cfg.t_max)
        .with("dt", cfg.dt)
        .with("eps", eps)
        .with("z", vec![z[0], z[1]]))
}
