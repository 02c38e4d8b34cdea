use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{require_samples, tags, Runner};
use crate::error::{invalid, Result};
use crate::green::{green_disk, SleParams};
use crate::loewner::{martingale_observable, DrivingFunction, LoewnerChain, StartAngle};
use crate::stats::Summary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleConfig {
    pub kappa: f64,
    pub z: [f64; 2],
    /// Observation times; each must be a multiple of `dt`.
    pub times: Vec<f64>,
    pub dt: f64,
    pub samples: u64,
    pub start: StartAngle,
}

impl MartingaleConfig {
    pub fn new(kappa: f64, z: [f64; 2], samples: u64) -> Self {
        Self { kappa, z, times: vec![0.1, 0.2, 0.3, 0.4, 0.5], dt: 1e-3, samples, start: StartAngle::Uniform }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingalePoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `Ê[M_t − M_{t₀}]` over the same driving samples, `t₀` the first time.
    pub drift: f64,
    pub drift_stderr: f64,
    /// `(Ê[M_t] − G_𝔻(z)) / stderr`.
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub kappa: f64,
    pub z: [f64; 2],
    pub samples: u64,
    pub seed: u64,
    pub dt: f64,
    /// `M_0(z) = G_𝔻(z)`.
    pub initial: f64,
    /// Fraction of samples in which `z` was swallowed by the last time.
    pub swallowed: f64,
    pub points: Vec<MartingalePoint>,
}

impl MartingaleReport {
    /// Largest `|drift| / drift_stderr` over the observation times.
    pub fn max_drift_score(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| p.drift_stderr > 0.0)
            .map(|p| (p.drift / p.drift_stderr).abs())
            .fold(0.0, f64::max)
    }
}

/// Sample means of `M_t(z) = |g_t'(z)|^{2−d} G_𝔻(g_t(z))` along independent
/// driving functions, with `M_t = 0` once `z` is swallowed.
pub fn martingale_check(cfg: &MartingaleConfig, runner: &Runner) -> Result<MartingaleReport> {
    require_samples(cfg.samples)?;
    if cfg.times.is_empty() {
        return Err(invalid("at least one observation time is required"));
    }
    let params = SleParams::new(cfg.kappa)?;
    let z = Complex64::new(cfg.z[0], cfg.z[1]);
    let initial = green_disk(z, params)?;
    let mut steps = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let k = (t / cfg.dt).round();
        if !(t > 0.0) || (k * cfg.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(invalid(format!("time {t} is not a positive multiple of dt = {}", cfg.dt)));
        }
        steps.push(k as usize);
    }
    let t_max = cfg.times.iter().cloned().fold(0.0, f64::max);
    let last = *steps.iter().max().expect("nonempty");
    let values: Vec<(Vec<f64>, bool)> = runner.chunks(cfg.samples, |range| {
        range
            .map(|i| {
                let d = DrivingFunction::brownian(cfg.kappa, t_max, cfg.dt, cfg.start, runner.stream(tags::MARTINGALE, i))?;
                let series = martingale_observable(&LoewnerChain::new(&d), z, params)?;
                let at = steps.iter().map(|&k| series.get(k).map_or(0.0, |v| v.1)).collect();
                Ok((at, series.len() <= last))
            })
            .collect()
    })?;
    let swallowed = values.iter().filter(|v| v.1).count() as f64 / cfg.samples as f64;
    let points = (0..steps.len())
        .map(|k| {
            let col: Vec<f64> = values.iter().map(|v| v.0[k]).collect();
            let diff: Vec<f64> = values.iter().map(|v| v.0[k] - v.0[0]).collect();
            let s = Summary::of(&col);
            let d = Summary::of(&diff);
            MartingalePoint {
                t: cfg.times[k],
                mean: s.mean,
                stderr: s.stderr,
                drift: d.mean,
                drift_stderr: d.stderr,
                z_score: if s.stderr > 0.0 { (s.mean - initial) / s.stderr } else { 0.0 },
            }
        })
        .collect();
    Ok(MartingaleReport {
        kappa: cfg.kappa,
        z: cfg.z,
        samples: cfg.samples,
        seed: runner.seed(),
        dt: cfg.dt,
        initial,
        swallowed,
        points,
    })
}
