use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{require_samples, tags, Runner, SpeedChoice};
use crate::error::{invalid, Result};
use crate::green::{green_disk, SleParams};
use crate::lattice::{Edge, LatticePoint};
use crate::walk::{LerwSampler, LerwTarget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeConfig {
    pub n: u32,
    pub samples: u64,
    /// Rescaled annulus `inner ≤ |z_e| ≤ outer` of reported edges.
    pub annulus: (f64, f64),
    /// Centers of the radial bins.
    pub bins: Vec<f64>,
    pub bin_half_width: f64,
    pub speed: SpeedChoice,
    /// κ of the Green's function companion.
    pub kappa: f64,
}

impl EdgeConfig {
    pub fn new(n: u32, samples: u64) -> Self {
        Self {
            n,
            samples,
            annulus: (0.2, 0.8),
            bins: vec![0.3, 0.5, 0.7],
            bin_half_width: 0.05,
            speed: SpeedChoice::Empirical,
            kappa: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        require_samples(self.samples)?;
        if self.n == 0 {
            return Err(invalid("scale must be at least 1"));
        }
        let (a, b) = self.annulus;
        if !(a * self.n as f64 > 1.0 && a < b && b <= 1.0) {
            return Err(invalid(format!(
                "annulus ({a}, {b}) must be nonempty, avoid the origin cell and stay in the closed disk"
            )));
        }
        if !(self.bin_half_width > 0.0) {
            return Err(invalid("bin half-width must be positive"));
        }
        for &r in &self.bins {
            if r - self.bin_half_width < a || r + self.bin_half_width > b {
                return Err(invalid(format!("bin around {r} does not fit inside the annulus")));
            }
        }
        Ok(())
    }
}

/// Dense index of undirected edges of `Z²` within `|x|, |y| ≤ n`, keyed by
/// doubled midpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
struct EdgeIndex {
    n: i64,
    side: usize,
}

impl EdgeIndex {
    fn new(n: u32) -> Self {
        Self { n: n as i64, side: 4 * n as usize + 1 }
    }

    fn len(&self) -> usize {
        self.side * self.side
    }

    fn of(&self, a: LatticePoint, b: LatticePoint) -> usize {
        let mx = (a.x + b.x) as i64 + 2 * self.n;
        let my = (a.y + b.y) as i64 + 2 * self.n;
        my as usize * self.side + mx as usize
    }

    fn edge(&self, idx: usize) -> Option<Edge> {
        let mx = (idx % self.side) as i64 - 2 * self.n;
        let my = (idx / self.side) as i64 - 2 * self.n;
        let (p, q) = if mx.rem_euclid(2) == 1 && my.rem_euclid(2) == 0 {
            ((mx - 1) / 2, my / 2)
        } else if mx.rem_euclid(2) == 0 && my.rem_euclid(2) == 1 {
            (mx / 2, (my - 1) / 2)
        } else {
            return None;
        };
        let a = LatticePoint::new(p as i32, q as i32);
        let b = if mx.rem_euclid(2) == 1 { LatticePoint::new(a.x + 1, a.y) } else { LatticePoint::new(a.x, a.y + 1) };
        Edge::new(a, b).ok()
    }
}

/// One edge of the annulus with its visit frequency and the Green's
/// function at its midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeRow {
    pub x: f64,
    pub y: f64,
    pub hits: u64,
    pub probability: f64,
    /// `(2n²/c_n) P̂(z_e ∈ Ỹ_n)`.
    pub scaled: f64,
    pub green: f64,
}

/// Radial bin `inner ≤ |z_e| ≤ outer` aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeBin {
    pub radius: f64,
    pub inner: f64,
    pub outer: f64,
    pub edges: usize,
    /// Mean of `(2n²/c_n) P̂` over the bin's edges.
    pub scaled_mean: f64,
    pub green_mean: f64,
    /// `Σ (2n²/c_n) P̂ / Σ G` over the bin.
    pub ratio: f64,
    /// Sampling error of `ratio` with `c_n` held fixed.
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeField {
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    pub speed: SpeedChoice,
    pub c_n: f64,
    pub mean_steps: f64,
    /// `Σ_samples M_n`.
    pub total_steps: u64,
    /// `Σ_e hits(e)`; equals `total_steps`.
    pub total_visits: u64,
    pub bins: Vec<EdgeBin>,
    pub rows: Vec<EdgeRow>,
    #[serde(skip)]
    index: EdgeIndex,
    #[serde(skip)]
    counts: Vec<u64>,
}

impl EdgeField {
    /// `Σ_e P̂(z_e ∈ Ỹ_n) / c_n`, the sample mean of `ν(𝔻)`.
    pub fn mean_total_mass(&self) -> f64 {
        self.total_visits as f64 / self.samples as f64 / self.c_n
    }

    /// Number of samples whose path used `e`.
    pub fn hits(&self, e: &Edge) -> u64 {
        let (a, b) = e.endpoints();
        let n = self.index.n as i32;
        if [a.x, a.y, b.x, b.y].iter().any(|c| c.abs() > n) {
            return 0;
        }
        self.counts[self.index.of(a, b)]
    }
}

struct Accumulator {
    counts: Vec<u64>,
    steps: u64,
    bin_sum: Vec<u64>,
    bin_sumsq: Vec<u128>,
}

/// Edge-visit frequencies of the LERW to `∂B_n` and their comparison with
/// `G_𝔻` in radial bins.
pub fn estimate_edge_probability(cfg: &EdgeConfig, runner: &Runner) -> Result<EdgeField> {
    cfg.validate()?;
    let params = SleParams::new(cfg.kappa)?;
    let index = EdgeIndex::new(cfg.n);
    let nf = cfg.n as f64;
    let midpoint = |idx: usize| {
        let mx = (idx % index.side) as f64 - 2.0 * nf;
        let my = (idx / index.side) as f64 - 2.0 * nf;
        Complex64::new(mx / (2.0 * nf), my / (2.0 * nf))
    };
    let nb = cfg.bins.len();
    let mut bin_of = vec![u8::MAX; index.len()];
    for (idx, slot) in bin_of.iter_mut().enumerate() {
        if index.edge(idx).is_none() {
            continue;
        }
        let r = midpoint(idx).norm();
        if let Some(b) = cfg.bins.iter().position(|&c| (r - c).abs() <= cfg.bin_half_width) {
            *slot = b as u8;
        }
    }

    let acc = runner
        .reduce(
            cfg.samples,
            |range| {
                let mut s = LerwSampler::new(LerwTarget::Ball(cfg.n))?;
                let mut acc = Accumulator {
                    counts: vec![0; index.len()],
                    steps: 0,
                    bin_sum: vec![0; nb],
                    bin_sumsq: vec![0; nb],
                };
                let mut per_bin = vec![0u64; nb];
                for i in range {
                    s.run(runner.stream(tags::EDGES, i))?;
                    per_bin.iter_mut().for_each(|c| *c = 0);
                    let path = s.lerw();
                    acc.steps += path.len() as u64 - 1;
                    for w in path.windows(2) {
                        let idx = index.of(w[0], w[1]);
                        acc.counts[idx] += 1;
                        if bin_of[idx] != u8::MAX {
                            per_bin[bin_of[idx] as usize] += 1;
                        }
                    }
                    for b in 0..nb {
                        acc.bin_sum[b] += per_bin[b];
                        acc.bin_sumsq[b] += (per_bin[b] as u128) * (per_bin[b] as u128);
                    }
                }
                Ok(acc)
            },
            |a, b| {
                a.counts.iter_mut().zip(&b.counts).for_each(|(x, y)| *x += y);
                a.steps += b.steps;
                for k in 0..nb {
                    a.bin_sum[k] += b.bin_sum[k];
                    a.bin_sumsq[k] += b.bin_sumsq[k];
                }
            },
        )?
        .expect("at least one sample");

    let samples = cfg.samples as f64;
    let mean_steps = acc.steps as f64 / samples;
    let c_n = cfg.speed.speed(cfg.n, mean_steps);
    let scale = 2.0 * nf * nf / c_n;
    let (a, b) = cfg.annulus;
    let mut rows = Vec::new();
    let mut bin_edges = vec![0usize; nb];
    let mut bin_green = vec![0.0; nb];
    for idx in 0..index.len() {
        if index.edge(idx).is_none() {
            continue;
        }
        let z = midpoint(idx);
        let r = z.norm();
        if bin_of[idx] != u8::MAX {
            bin_edges[bin_of[idx] as usize] += 1;
            bin_green[bin_of[idx] as usize] += green_disk(z, params)?;
        }
        if r < a || r > b {
            continue;
        }
        let p = acc.counts[idx] as f64 / samples;
        rows.push(EdgeRow { x: z.re, y: z.im, hits: acc.counts[idx], probability: p, scaled: scale * p, green: green_disk(z, params)? });
    }
    let bins = (0..nb)
        .map(|k| {
            let mean = acc.bin_sum[k] as f64 / samples;
            let var = if cfg.samples > 1 {
                (acc.bin_sumsq[k] as f64 - samples * mean * mean).max(0.0) / (samples - 1.0)
            } else {
                0.0
            };
            let edges = bin_edges[k].max(1) as f64;
            EdgeBin {
                radius: cfg.bins[k],
                inner: cfg.bins[k] - cfg.bin_half_width,
                outer: cfg.bins[k] + cfg.bin_half_width,
                edges: bin_edges[k],
                scaled_mean: scale * mean / edges,
                green_mean: bin_green[k] / edges,
                ratio: scale * mean / bin_green[k],
                ratio_stderr: scale * (var / samples).sqrt() / bin_green[k],
            }
        })
        .collect();
    let total_visits = acc.counts.iter().sum();
    Ok(EdgeField {
        n: cfg.n,
        samples: cfg.samples,
        seed: runner.seed(),
        speed: cfg.speed,
        c_n,
        mean_steps,
        total_steps: acc.steps,
        total_visits,
        bins,
        rows,
        index,
        counts: acc.counts,
    })
}
