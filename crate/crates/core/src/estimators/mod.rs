//! Monte Carlo experiments on loop-erased random walk and SLE(2), and the
//! deterministic replica runner they share.

mod edges;
mod escape;
mod hit;
mod markov;
mod martingale;
mod mn;
mod occupation;

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::edges::{estimate_edge_probability, EdgeBin, EdgeConfig, EdgeField, EdgeRow};
pub use self::escape::{estimate_es, estimate_es2, estimate_es_profile};
pub use self::hit::{estimate_hit_probability, estimate_sle_hit_probability, hit_probability, SleHitConfig};
pub use self::markov::{domain_markov_test, Comparator, MarkovReport, PREFIX_MIN_COUNT};
pub use self::martingale::{martingale_check, MartingaleConfig, MartingalePoint, MartingaleReport};
pub use self::mn::{estimate_mn, fit_growth_exponent, sample_step_counts, ExponentFit, MnEstimate, TIGHTNESS_LEVELS};
pub use self::occupation::{
    conditional_occupation, estimate_conditional_occupation, OccupationConfig, OccupationEstimate, MIN_HITS,
};

use crate::error::{invalid, Error, Result};
use crate::walk::RngStream;

/// Stream tags separating the experiments' random streams.
pub(crate) mod tags {
    pub const MN: u64 = 1;
    pub const EDGES: u64 = 2;
    pub const OCCUPATION: u64 = 3;
    pub const ES_WALK: u64 = 4;
    pub const ES_LERW: u64 = 5;
    pub const HIT: u64 = 6;
    pub const HIT_SLE: u64 = 7;
    pub const MARKOV_FULL: u64 = 8;
    pub const MARKOV_FRESH: u64 = 9;
    pub const MARTINGALE: u64 = 10;
    pub const FIT: u64 = 11;
}

/// Choice of the speed `c_n` in `σ_n(t) = c_n t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedChoice {
    /// The sample mean `Ê[M_n]` of the same run.
    #[default]
    Empirical,
    /// `n^{5/4}`.
    Growth,
}

impl SpeedChoice {
    pub fn speed(&self, n: u32, empirical_mean: f64) -> f64 {
        match self {
            SpeedChoice::Empirical => empirical_mean,
            SpeedChoice::Growth => (n as f64).powf(1.25),
        }
    }
}

/// Shared experiment settings, as read from flags or a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: Vec<u32>,
    pub samples: u64,
    pub seed: u64,
    pub speed: SpeedChoice,
    pub eps: Vec<f64>,
    pub z: Vec<[f64; 2]>,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { n: vec![], samples: 1000, seed: 0, speed: SpeedChoice::Empirical, eps: vec![], z: vec![], workers: 1 }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("worker count must be at least 1"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(invalid(format!("ε must lie in (0, 1), got {e}")));
        }
        if self.n.contains(&0) {
            return Err(invalid("scales must be positive"));
        }
        Ok(())
    }

    /// Additionally requires `|z| + ε < 1` for every pair.
    pub fn validate_in_disk(&self) -> Result<()> {
        self.validate()?;
        for z in &self.z {
            for e in &self.eps {
                if z[0].hypot(z[1]) + e >= 1.0 {
                    return Err(invalid(format!("ball B({z:?}, {e}) leaves the unit disk")));
                }
            }
        }
        Ok(())
    }
}

/// A point estimate with its standard error and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub stderr: f64,
    pub count: u64,
    pub seed: u64,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl EstimateReport {
    pub fn new(estimate: f64, stderr: f64, count: u64, seed: u64) -> Self {
        Self { estimate, stderr, count, seed, meta: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }
}

/// Replicas per work unit in [`Runner::chunks`].
pub const MAP_CHUNK: u64 = 64;
/// Replicas per work unit in [`Runner::reduce`].
pub const REDUCE_CHUNK: u64 = 1024;

/// Runs replicas `0..count` on a fixed number of worker threads. Replica `i`
/// of an experiment tagged `tag` always draws from
/// `RngStream::derive(seed, tag, i)`, so results do not depend on the worker
/// count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Runner {
    seed: u64,
    workers: usize,
}

impl Runner {
    pub fn new(seed: u64, workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(invalid("worker count must be at least 1"));
        }
        Ok(Self { seed, workers })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn stream(&self, tag: u64, index: u64) -> RngStream {
        RngStream::derive(self.seed, tag, index)
    }

    fn ranges(count: u64, chunk: u64) -> Vec<Range<u64>> {
        (0..count.div_ceil(chunk)).map(|c| c * chunk..((c + 1) * chunk).min(count)).collect()
    }

    fn execute<A: Send>(&self, ranges: Vec<Range<u64>>, work: impl Fn(Range<u64>) -> Result<A> + Sync) -> Result<Vec<A>> {
        let results: Vec<Result<A>> = if self.workers == 1 {
            ranges.into_iter().map(&work).collect()
        } else {
            self.pool()?.install(|| ranges.into_par_iter().map(&work).collect())
        };
        results.into_iter().collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))
    }

    /// Per-chunk results in replica order. `work` receives a contiguous range
    /// of replica indices and may reuse buffers across it.
    pub fn chunks<A: Send>(&self, count: u64, work: impl Fn(Range<u64>) -> Result<Vec<A>> + Sync) -> Result<Vec<A>> {
        Ok(self.execute(Self::ranges(count, MAP_CHUNK), work)?.into_iter().flatten().collect())
    }

    /// Combines chunk results with `merge`, which must be associative;
    /// adjacent chunks are merged in replica order. With an exact merge
    /// (integer counters) the result does not depend on `workers`.
    pub fn reduce<A: Send>(
        &self,
        count: u64,
        work: impl Fn(Range<u64>) -> Result<A> + Sync,
        merge: impl Fn(&mut A, A) + Sync,
    ) -> Result<Option<A>> {
        let ranges = Self::ranges(count, REDUCE_CHUNK);
        if self.workers == 1 {
            let mut acc: Option<A> = None;
            for r in ranges {
                let part = work(r)?;
                match acc.as_mut() {
                    Some(a) => merge(a, part),
                    None => acc = Some(part),
                }
            }
            return Ok(acc);
        }
        self.pool()?.install(|| {
            ranges.into_par_iter().map(&work).try_reduce_with(|mut a, b| {
                merge(&mut a, b);
                Ok(a)
            })
        })
        .transpose()
    }
}

pub(crate) fn require_samples(samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunks_are_ordered_and_worker_independent() {
        let draw = |r: &Runner| {
            r.chunks(1000, |range| Ok(range.map(|i| r.stream(99, i).rng().random::<u64>()).collect())).unwrap()
        };
        let a = draw(&Runner::new(5, 1).unwrap());
        let b = draw(&Runner::new(5, 4).unwrap());
        assert_eq!(a.len(), 1000);
        assert_eq!(a, b);
        let c = draw(&Runner::new(6, 1).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn reduce_visits_every_replica_once() {
        let r = Runner::new(0, 3).unwrap();
        let total = r.reduce(5000, |range| Ok(range.sum::<u64>()), |a, b| *a += b).unwrap();
        assert_eq!(total, Some(5000 * 4999 / 2));
        assert_eq!(r.reduce(0, |_| Ok(0u64), |a, b| *a += b).unwrap(), None);
        assert!(Runner::new(0, 0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig { eps: vec![0.1], z: vec![[0.5, 0.0]], ..Default::default() };
        assert!(c.validate_in_disk().is_ok());
        c.eps = vec![0.6];
        assert!(c.validate().is_ok() && c.validate_in_disk().is_err());
        c.eps = vec![1.0];
        assert!(c.validate().is_err());
        c.eps = vec![];
        c.samples = 0;
        assert!(c.validate().is_err());
    }
}
