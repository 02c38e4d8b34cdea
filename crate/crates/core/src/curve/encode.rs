use num_complex::Complex64;

use super::{project_to_segment, Curve, CurveClass};
use crate::error::{invalid, Error, Result};
use crate::measure::{Atom, OccupationMeasure, Support};

/// Default distance within which a measure's atoms must sit on a trace.
pub const DEFAULT_SUPPORT_TOLERANCE: f64 = 1e-6;

/// `T : γ ↦ (γ̃, ν_γ)`.
///
/// Each segment of `γ` becomes segment atoms, no longer than `resolution`,
/// carrying the time spent on them; a stationary stretch becomes a point
/// atom. The total mass is the lifetime.
pub fn map_t(g: &Curve, resolution: f64) -> Result<(CurveClass, OccupationMeasure)> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid("resolution must be positive"));
    }
    let v = g.vertices();
    let t = g.times();
    let mut atoms = Vec::with_capacity(v.len());
    for k in 0..v.len().saturating_sub(1) {
        let (a, b) = (v[k], v[k + 1]);
        let dt = t[k + 1] - t[k];
        let pieces = (((b - a).norm() / resolution).ceil() as usize).max(1);
        let m = dt / pieces as f64;
        for j in 0..pieces {
            let p = a + (b - a) * (j as f64 / pieces as f64);
            let q = if j + 1 == pieces { b } else { a + (b - a) * ((j + 1) as f64 / pieces as f64) };
            atoms.push(Atom::segment(p, q, m));
        }
    }
    Ok((CurveClass::of(g), OccupationMeasure::from_atoms_unchecked(atoms)))
}

/// Trace position of a planar point: distance to the representative and the
/// representative's time at the nearest point.
struct Locator<'a> {
    v: &'a [Complex64],
    t: &'a [f64],
    hint: usize,
}

impl<'a> Locator<'a> {
    fn new(rep: &'a Curve) -> Self {
        Self { v: rep.vertices(), t: rep.times(), hint: 0 }
    }

    fn on_segment(&self, k: usize, p: Complex64) -> (f64, f64) {
        let (d, s) = project_to_segment(p, self.v[k], self.v[k + 1]);
        (d, self.t[k] + s * (self.t[k + 1] - self.t[k]))
    }

    /// Nearest trace point, trying the neighbourhood of the previous answer
    /// before a full scan.
    fn locate(&mut self, p: Complex64, tol: f64) -> (f64, f64) {
        let segs = self.v.len() - 1;
        let lo = self.hint.saturating_sub(2);
        let hi = (self.hint + 3).min(segs);
        let mut best = (f64::INFINITY, 0.0, 0);
        for k in lo..hi {
            let (d, s) = self.on_segment(k, p);
            if d < best.0 {
                best = (d, s, k);
            }
        }
        if best.0 > tol {
            for k in 0..segs {
                let (d, s) = self.on_segment(k, p);
                if d < best.0 {
                    best = (d, s, k);
                }
            }
        }
        self.hint = best.2;
        (best.0, best.1)
    }
}

/// `S : (γ̃, μ) ↦ γ` with `γ(t) = η(Θ_η⁻¹(t))`, where `η` is the class
/// representative and `Θ_η(s) = μ(η[0, s])`.
///
/// Every atom is located on the trace (segment atoms spread their mass
/// uniformly between the positions of their endpoints). The right-continuous
/// inverse is used: where `Θ_η` jumps the curve sits still, and where it is
/// flat the curve crosses the unweighted arc in the last representable
/// instant before the jump time.
pub fn map_s(cls: &CurveClass, mu: &OccupationMeasure, tolerance: f64) -> Result<Curve> {
    if !(mu.total_mass() > 0.0) {
        return Err(invalid("measure must have positive total mass"));
    }
    let rep = cls.representative();
    if cls.is_degenerate() {
        return Curve::constant(rep.start(), mu.total_mass());
    }
    let mut loc = Locator::new(rep);
    // (position, jump mass, density change)
    let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(2 * mu.atoms().len() + rep.times().len());
    for &s in rep.times() {
        events.push((s, 0.0, 0.0));
    }
    for a in mu.atoms() {
        if a.mass == 0.0 {
            continue;
        }
        match a.support {
            Support::Point(p) => {
                let (d, s) = loc.locate(p, tolerance);
                check(d, tolerance)?;
                events.push((s, a.mass, 0.0));
            }
            Support::Segment(p, q) => {
                let (d0, s0) = loc.locate(p, tolerance);
                let (d1, s1) = loc.locate(q, tolerance);
                let (dm, _) = loc.locate((p + q) * 0.5, tolerance);
                check(d0.max(d1).max(dm), tolerance)?;
                let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
                if s1 - s0 <= f64::EPSILON {
                    events.push((s0, a.mass, 0.0));
                } else {
                    let rho = a.mass / (s1 - s0);
                    events.push((s0, 0.0, rho));
                    events.push((s1, 0.0, -rho));
                }
            }
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut vertices: Vec<Complex64> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut emit = |z: Complex64, time: f64| match times.last() {
        Some(&last) if time <= last => {
            let k = times.len() - 1;
            let earlier = last.next_down();
            if vertices[k] != z && k > 0 && earlier > times[k - 1] {
                times[k] = earlier;
                vertices.push(z);
                times.push(last);
            } else {
                vertices[k] = z;
            }
        }
        _ => {
            vertices.push(z);
            times.push(time);
        }
    };
    let mut theta = 0.0f64;
    let mut density = 0.0f64;
    let mut pos = 0.0f64;
    let mut i = 0;
    while i < events.len() {
        let s = events[i].0;
        theta += density * (s - pos);
        pos = s;
        let z = rep.eval(s);
        emit(z, theta);
        let mut jump = 0.0;
        while i < events.len() && events[i].0 == s {
            jump += events[i].1;
            density += events[i].2;
            i += 1;
        }
        if jump > 0.0 {
            theta += jump;
            emit(z, theta);
        }
    }
    emit(rep.end(), theta);
    Curve::new(vertices, times)
}

fn check(distance: f64, tolerance: f64) -> Result<()> {
    if distance > tolerance {
        Err(Error::SupportMismatch { distance, tolerance })
    } else {
        Ok(())
    }
}
