//! Simple random walk, chronological and reversed loop erasure, and
//! loop-erased random walk sampling in discrete balls and grid domains.

mod erase;
mod rng;

use serde::{Deserialize, Serialize};

pub use self::rng::RngStream;
pub(crate) use self::erase::{DenseIndex, Eraser};
pub(crate) use self::rng::Directions;

use self::erase::erase_points;
use crate::error::{invalid, Error, Result};
use crate::lattice::{GridDomain, LatticePoint, Site};

/// Hard cap on simple random walk length. Hitting it is a defect, never a
/// truncation.
pub const STEP_CAP: u64 = 1_000_000_000;

/// A finite nearest-neighbour lattice path `[S(0), …, S(m)]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<LatticePoint>", into = "Vec<LatticePoint>")]
pub struct LatticePath {
    points: Vec<LatticePoint>,
}

impl LatticePath {
    pub fn new(points: Vec<LatticePoint>) -> Result<Self> {
        if let Some(w) = points.windows(2).find(|w| !w[0].is_adjacent(w[1])) {
            return Err(invalid(format!("{:?} -> {:?} is not a lattice step", w[0], w[1])));
        }
        Ok(Self { points })
    }

    pub(crate) fn from_vec_unchecked(points: Vec<LatticePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].is_adjacent(w[1])));
        Self { points }
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<LatticePoint> {
        self.points
    }

    /// Number of steps, one less than the number of points.
    pub fn len(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> Option<LatticePoint> {
        self.points.first().copied()
    }

    pub fn end(&self) -> Option<LatticePoint> {
        self.points.last().copied()
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    pub fn is_self_avoiding(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.points.len());
        self.points.iter().all(|p| seen.insert(*p))
    }
}

impl TryFrom<Vec<LatticePoint>> for LatticePath {
    type Error = Error;
    fn try_from(points: Vec<LatticePoint>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<LatticePath> for Vec<LatticePoint> {
    fn from(p: LatticePath) -> Self {
        p.points
    }
}

/// Chronological loop erasure `LE(S)`.
pub fn loop_erase(path: &LatticePath) -> LatticePath {
    LatticePath::from_vec_unchecked(erase_points(path.points.iter().copied()))
}

/// Reversed loop erasure `RLE(S) = rev(LE(rev(S)))`.
pub fn reverse_loop_erase(path: &LatticePath) -> LatticePath {
    let mut pts = erase_points(path.points.iter().rev().copied());
    pts.reverse();
    LatticePath::from_vec_unchecked(pts)
}

/// Where a walk from the origin is stopped.
#[derive(Debug, Clone, Copy)]
pub enum LerwTarget<'a> {
    /// First time `|S(j)| ≥ n`.
    Ball(u32),
    /// First entry into the outer boundary of the domain.
    Domain(&'a GridDomain),
}

impl LerwTarget<'_> {
    fn scale(&self) -> u32 {
        match self {
            LerwTarget::Ball(n) => *n,
            LerwTarget::Domain(d) => d.scale(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LerwTarget::Ball(0) => Err(invalid("ball radius must be at least 1")),
            LerwTarget::Ball(_) => Ok(()),
            LerwTarget::Domain(d) if !d.origin_inside() => Err(invalid("domain does not contain the origin")),
            LerwTarget::Domain(_) => Ok(()),
        }
    }

    fn window(&self) -> DenseIndex {
        match self {
            LerwTarget::Ball(n) => DenseIndex::centered(*n as i32 + 1),
            LerwTarget::Domain(d) => {
                let (x0, y0, w, h) = d.bounds();
                DenseIndex::new(x0, y0, w, h)
            }
        }
    }
}

fn walk_until<R: rand::RngCore>(
    target: LerwTarget<'_>,
    dirs: &mut Directions<R>,
    out: &mut Vec<LatticePoint>,
    cap: u64,
) -> Result<()> {
    out.clear();
    let mut p = LatticePoint::ORIGIN;
    out.push(p);
    let mut steps = 0u64;
    match target {
        LerwTarget::Ball(n) => {
            let r2 = (n as i64) * (n as i64);
            loop {
                if steps >= cap {
                    return Err(Error::StepCapExceeded { cap });
                }
                p = p.step(dirs.next_dir());
                steps += 1;
                out.push(p);
                if p.norm2() >= r2 {
                    return Ok(());
                }
            }
        }
        LerwTarget::Domain(dom) => loop {
            if steps >= cap {
                return Err(Error::StepCapExceeded { cap });
            }
            p = p.step(dirs.next_dir());
            steps += 1;
            out.push(p);
            match dom.site(p) {
                Site::Interior => {}
                Site::Boundary => return Ok(()),
                Site::Outside => unreachable!("walk left the domain without crossing its boundary"),
            }
        },
    }
}

/// Simple random walk from the origin up to `τ_n = min{j : |S(j)| ≥ n}`.
pub fn sample_srw_to_radius(n: u32, stream: RngStream) -> Result<LatticePath> {
    sample_srw(LerwTarget::Ball(n), stream)
}

/// Simple random walk from the origin up to its first visit to `∂dom`.
pub fn sample_srw_in_domain(dom: &GridDomain, stream: RngStream) -> Result<LatticePath> {
    sample_srw(LerwTarget::Domain(dom), stream)
}

fn sample_srw(target: LerwTarget<'_>, stream: RngStream) -> Result<LatticePath> {
    target.validate()?;
    let mut out = Vec::new();
    walk_until(target, &mut Directions::new(stream.rng()), &mut out, STEP_CAP)?;
    Ok(LatticePath::from_vec_unchecked(out))
}

/// One loop-erased random walk sample.
///
/// `path` is the loop erasure of the time-reversed walk: it starts at the
/// walk's exit point and ends at the origin, so `path.len() = M_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LerwSample {
    pub n: u32,
    pub seed: u64,
    pub stream_index: u64,
    #[serde(rename = "M_n")]
    pub steps: usize,
    pub srw_steps: usize,
    pub path: LatticePath,
}

/// Reusable LERW generator. Holds the walk buffer and a dense erasure table
/// sized for the target, so repeated sampling does not reallocate.
pub struct LerwSampler<'a> {
    target: LerwTarget<'a>,
    walk: Vec<LatticePoint>,
    eraser: Eraser<DenseIndex>,
    cap: u64,
}

impl<'a> LerwSampler<'a> {
    pub fn new(target: LerwTarget<'a>) -> Result<Self> {
        target.validate()?;
        Ok(Self { target, walk: Vec::new(), eraser: Eraser::new(target.window()), cap: STEP_CAP })
    }

    #[cfg(test)]
    fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    /// Runs one walk for `stream` and erases it. Afterwards [`Self::lerw`]
    /// holds `X` (exit point → origin) and [`Self::walk`] the walk itself.
    pub fn run(&mut self, stream: RngStream) -> Result<()> {
        self.eraser.reset();
        walk_until(self.target, &mut Directions::new(stream.rng()), &mut self.walk, self.cap)?;
        for &p in self.walk.iter().rev() {
            self.eraser.push(p);
        }
        Ok(())
    }

    pub fn lerw(&self) -> &[LatticePoint] {
        self.eraser.path()
    }

    pub fn walk(&self) -> &[LatticePoint] {
        &self.walk
    }

    /// Index of `p` on the current erased path, if present.
    pub fn position(&self, p: LatticePoint) -> Option<usize> {
        use self::erase::PositionIndex;
        if self.eraser.index().covers(p) {
            self.eraser.index().get(p)
        } else {
            None
        }
    }

    pub fn sample(&mut self, stream: RngStream) -> Result<LerwSample> {
        self.run(stream)?;
        let path = LatticePath::from_vec_unchecked(self.lerw().to_vec());
        Ok(LerwSample {
            n: self.target.scale(),
            seed: stream.seed,
            stream_index: stream.stream_index,
            steps: path.len(),
            srw_steps: self.walk.len() - 1,
            path,
        })
    }
}

/// Loop-erased random walk: the reversed loop erasure of a fresh simple
/// random walk from the origin to the target's exit set.
pub fn sample_lerw(target: LerwTarget<'_>, stream: RngStream) -> Result<LerwSample> {
    LerwSampler::new(target)?.sample(stream)
}
