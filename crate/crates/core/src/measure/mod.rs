//! Finite positive planar measures built from point and segment atoms,
//! occupation measures of lattice paths, and the Lévy–Prokhorov distance.

mod flow;
mod lp;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use self::lp::{levy_prokhorov, LpDistance, TestFamily};

use crate::error::{invalid, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::walk::LerwSample;

/// Where an atom's mass lives: a single point, or spread uniformly along a
/// segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Point(Complex64),
    Segment(Complex64, Complex64),
}

impl Support {
    /// Point used for ball membership: the point itself or the segment
    /// midpoint.
    pub fn representative(&self) -> Complex64 {
        match *self {
            Support::Point(p) => p,
            Support::Segment(a, b) => (a + b) * 0.5,
        }
    }

    pub fn endpoints(&self) -> (Complex64, Complex64) {
        match *self {
            Support::Point(p) => (p, p),
            Support::Segment(a, b) => (a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub support: Support,
    pub mass: f64,
}

impl Atom {
    pub fn point(p: Complex64, mass: f64) -> Self {
        Self { support: Support::Point(p), mass }
    }

    /// Uniform mass on `[a, b]`; collapses to a point atom when `a = b`.
    pub fn segment(a: Complex64, b: Complex64, mass: f64) -> Self {
        let support = if a == b { Support::Point(a) } else { Support::Segment(a, b) };
        Self { support, mass }
    }
}

/// Finite positive measure given as a list of atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OccupationMeasure {
    atoms: Vec<Atom>,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct AtomRow {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
    mass: f64,
}

impl OccupationMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            let (p, q) = a.support.endpoints();
            if !(a.mass >= 0.0 && a.mass.is_finite()) {
                return Err(invalid(format!("atom mass must be finite and nonnegative, got {}", a.mass)));
            }
            if !p.is_finite() || !q.is_finite() {
                return Err(invalid("atom support must be finite"));
            }
        }
        Ok(Self::from_atoms_unchecked(atoms))
    }

    pub(crate) fn from_atoms_unchecked(atoms: Vec<Atom>) -> Self {
        let total = compensated_sum(atoms.iter().map(|a| a.mass));
        Self { atoms, total }
    }

    /// `m δ_p`.
    pub fn dirac(p: Complex64, mass: f64) -> Result<Self> {
        Self::new(vec![Atom::point(p, mass)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Masses aggregated on the dyadic grid of side `2^{-k}`, keyed by cell
    /// index `(⌊x 2^k⌋, ⌊y 2^k⌋)`. Segment atoms are cut into pieces no
    /// longer than half a cell, each credited to the cell holding its
    /// midpoint.
    pub fn raster(&self, k: u32) -> BTreeMap<(i64, i64), f64> {
        let scale = (1u64 << k) as f64;
        let half = 0.5 / scale;
        let mut sums: BTreeMap<(i64, i64), CompensatedSum> = BTreeMap::new();
        let mut credit = |p: Complex64, m: f64| {
            let key = ((p.re * scale).floor() as i64, (p.im * scale).floor() as i64);
            sums.entry(key).or_default().add(m);
        };
        for a in &self.atoms {
            if a.mass == 0.0 {
                continue;
            }
            match a.support {
                Support::Point(p) => credit(p, a.mass),
                Support::Segment(p, q) => {
                    let pieces = (((q - p).norm() / half).ceil() as usize).max(1);
                    let m = a.mass / pieces as f64;
                    for j in 0..pieces {
                        let s = (j as f64 + 0.5) / pieces as f64;
                        credit(p + (q - p) * s, m);
                    }
                }
            }
        }
        sums.into_iter().map(|(k, s)| (k, s.value())).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for a in &self.atoms {
            let (p, q) = a.support.endpoints();
            wr.serialize(AtomRow { x1: p.re, y1: p.im, x2: q.re, y2: q.im, mass: a.mass })?;
        }
        if self.atoms.is_empty() {
            wr.write_record(["x1", "y1", "x2", "y2", "mass"])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut atoms = Vec::new();
        for row in rd.deserialize() {
            let row: AtomRow = row?;
            atoms.push(Atom::segment(Complex64::new(row.x1, row.y1), Complex64::new(row.x2, row.y2), row.mass));
        }
        Self::new(atoms)
    }
}

/// Occupation measure of a rescaled LERW: every traversed edge, scaled by
/// `1/n`, carries mass `1/c`.
pub fn occupation_from_edges(sample: &LerwSample, n: u32, c: f64) -> Result<OccupationMeasure> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("speed must be positive and finite, got {c}")));
    }
    if n == 0 {
        return Err(invalid("scale must be positive"));
    }
    let s = 1.0 / n as f64;
    let m = 1.0 / c;
    let atoms = sample
        .path
        .points()
        .windows(2)
        .map(|w| {
            let a = Complex64::new(w[0].x as f64 * s, w[0].y as f64 * s);
            let b = Complex64::new(w[1].x as f64 * s, w[1].y as f64 * s);
            Atom::segment(a, b, m)
        })
        .collect();
    Ok(OccupationMeasure::from_atoms_unchecked(atoms))
}

/// Total mass of atoms whose representative point lies in the open ball
/// `B(z; ε)`.
pub fn ball_mass(mu: &OccupationMeasure, z: Complex64, eps: f64) -> f64 {
    compensated_sum(
        mu.atoms
            .iter()
            .filter(|a| (a.support.representative() - z).norm() < eps)
            .map(|a| a.mass),
    )
}
