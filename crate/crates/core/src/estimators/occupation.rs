use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{require_samples, sample_step_counts, tags, Runner, SpeedChoice};
use crate::curve::point_segment_distance;
use crate::error::{invalid, Error, Result};
use crate::stats::Summary;
use crate::walk::{LerwSampler, LerwTarget};

/// Hits of the ball needed before conditional means are reported.
pub const MIN_HITS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationConfig {
    pub z: [f64; 2],
    pub eps: f64,
    pub n: u32,
    pub samples: u64,
    /// Samples for the companion estimate of `E[M_{εn}]`.
    pub mn_samples: u64,
    pub speed: SpeedChoice,
}

impl OccupationConfig {
    /// Lattice radius `max(1, round(εn))` of the comparison walk.
    pub fn eps_n(&self) -> u32 {
        ((self.eps * self.n as f64).round() as u32).max(1)
    }
}

/// Conditional occupation of `B(z, ε)` by the rescaled LERW given that its
/// trace meets the ball. The conjecture comparisons are diagnostics; the
/// bound quotient checks the proven inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationEstimate {
    pub z: [f64; 2],
    pub eps: f64,
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    pub speed: SpeedChoice,
    pub c_n: f64,
    pub hits: u64,
    pub hit_rate: f64,
    pub hit_stderr: f64,
    /// (a) `Ê[# steps of X in B(z, ε) | hit]`, counting edges by midpoint.
    pub mean_steps: f64,
    pub mean_steps_stderr: f64,
    /// (a) in measure units, `Ê[ν(B(z, ε)) | hit]`.
    pub mean_mass: f64,
    pub eps_n: u32,
    pub mean_m_eps_n: f64,
    pub mean_m_n: f64,
    /// (b) `mean_steps / Ê[M_{εn}]` (diagnostic).
    pub ratio_steps: f64,
    /// (c) `mean_mass / (Ê[M_{εn}] / Ê[M_n])` (diagnostic).
    pub ratio_scaled: f64,
    /// (d) `mean_steps / (log(1/ε) Ê[M_{εn}])` (bound check).
    pub bound_quotient: f64,
}

/// Runs the conditional-occupation experiment without checking that the ball
/// sits inside the disk or that it is hit often enough.
pub fn conditional_occupation(cfg: &OccupationConfig, runner: &Runner) -> Result<OccupationEstimate> {
    require_samples(cfg.samples)?;
    require_samples(cfg.mn_samples)?;
    if cfg.n == 0 || !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(invalid("need n ≥ 1 and a positive radius"));
    }
    let z = Complex64::new(cfg.z[0], cfg.z[1]);
    let s = 1.0 / cfg.n as f64;
    let per_sample: Vec<(u64, Option<u64>)> = runner.chunks(cfg.samples, |range| {
        let mut smp = LerwSampler::new(LerwTarget::Ball(cfg.n))?;
        range
            .map(|i| {
                smp.run(runner.stream(tags::OCCUPATION, i))?;
                let pts: Vec<Complex64> =
                    smp.lerw().iter().map(|p| Complex64::new(p.x as f64 * s, p.y as f64 * s)).collect();
                let steps = pts.len() as u64 - 1;
                let hit = pts.len() == 1 && (pts[0] - z).norm() < cfg.eps
                    || pts.windows(2).any(|w| point_segment_distance(z, w[0], w[1]) < cfg.eps);
                let inside = pts.windows(2).filter(|w| ((w[0] + w[1]) * 0.5 - z).norm() < cfg.eps).count() as u64;
                Ok((steps, hit.then_some(inside)))
            })
            .collect()
    })?;
    let all: Vec<f64> = per_sample.iter().map(|(m, _)| *m as f64).collect();
    let mean_m_n = Summary::of(&all).mean;
    let c_n = cfg.speed.speed(cfg.n, mean_m_n);
    let conditional: Vec<f64> = per_sample.iter().filter_map(|(_, h)| h.map(|k| k as f64)).collect();
    let hits = conditional.len() as u64;
    let hit = Summary::of_proportion(hits, cfg.samples);
    let occ = Summary::of(&conditional);

    let eps_n = cfg.eps_n();
    let m_eps = sample_step_counts(eps_n, cfg.mn_samples, runner)?;
    let mean_m_eps_n = m_eps.iter().sum::<u64>() as f64 / m_eps.len() as f64;
    let mean_mass = occ.mean / c_n;
    Ok(OccupationEstimate {
        z: cfg.z,
        eps: cfg.eps,
        n: cfg.n,
        samples: cfg.samples,
        seed: runner.seed(),
        speed: cfg.speed,
        c_n,
        hits,
        hit_rate: hit.mean,
        hit_stderr: hit.stderr,
        mean_steps: occ.mean,
        mean_steps_stderr: occ.stderr,
        mean_mass,
        eps_n,
        mean_m_eps_n,
        mean_m_n,
        ratio_steps: occ.mean / mean_m_eps_n,
        ratio_scaled: mean_mass / (mean_m_eps_n / mean_m_n),
        bound_quotient: occ.mean / ((1.0 / cfg.eps).ln() * mean_m_eps_n),
    })
}

/// [`conditional_occupation`] restricted to balls with `B(z, 2ε) ⊂ 𝔻` and at
/// least [`MIN_HITS`] hits.
pub fn estimate_conditional_occupation(cfg: &OccupationConfig, runner: &Runner) -> Result<OccupationEstimate> {
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(invalid(format!("ε must lie in (0, 1), got {}", cfg.eps)));
    }
    if cfg.z[0].hypot(cfg.z[1]) + 2.0 * cfg.eps > 1.0 {
        return Err(invalid(format!("B({:?}, 2ε) is not contained in the unit disk for ε = {}", cfg.z, cfg.eps)));
    }
    let est = conditional_occupation(cfg, runner)?;
    if est.hits < MIN_HITS {
        return Err(Error::InsufficientHits { hits: est.hits, needed: MIN_HITS });
    }
    Ok(est)
}
