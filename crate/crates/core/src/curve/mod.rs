//! Time-parametrized piecewise-linear planar curves, the supremum and
//! reparametrization metrics, and the encoding of a curve as its trace class
//! plus occupation measure.

mod encode;
mod metric;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use self::encode::{map_s, map_t, DEFAULT_SUPPORT_TOLERANCE};
pub use self::metric::{dist_rho, dist_sup, RhoEstimate};

use crate::error::{invalid, Result};
use crate::lattice::LatticePoint;
use crate::walk::LerwSample;

/// Spatial tolerance for geometry derived from exact lattice coordinates.
pub const LATTICE_TOLERANCE: f64 = 1e-9;
/// Spatial tolerance for geometry derived from Loewner traces.
pub const TRACE_TOLERANCE: f64 = 1e-6;

/// Continuous piecewise-linear curve `γ : [0, t_γ] → ℂ`.
///
/// Evaluation interpolates linearly between vertices and sits at the final
/// vertex after the lifetime. A single vertex is the constant curve of
/// lifetime zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub struct Curve {
    vertices: Vec<Complex64>,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    vertices: Vec<[f64; 2]>,
    times: Vec<f64>,
}

impl TryFrom<CurveRepr> for Curve {
    type Error = crate::Error;
    fn try_from(r: CurveRepr) -> Result<Self> {
        Curve::new(r.vertices.into_iter().map(|[x, y]| Complex64::new(x, y)).collect(), r.times)
    }
}

impl From<Curve> for CurveRepr {
    fn from(c: Curve) -> Self {
        CurveRepr { vertices: c.vertices.iter().map(|z| [z.re, z.im]).collect(), times: c.times }
    }
}

impl Curve {
    pub fn new(vertices: Vec<Complex64>, times: Vec<f64>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(invalid("curve needs at least one vertex"));
        }
        if vertices.len() != times.len() {
            return Err(invalid(format!(
                "{} vertices but {} times",
                vertices.len(),
                times.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(invalid("curve times must start at 0"));
        }
        if times.iter().any(|t| !t.is_finite()) || vertices.iter().any(|z| !z.is_finite()) {
            return Err(invalid("curve data must be finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("curve times must be strictly increasing"));
        }
        Ok(Self { vertices, times })
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<Complex64>, times: Vec<f64>) -> Self {
        debug_assert_eq!(vertices.len(), times.len());
        debug_assert!(times.windows(2).all(|w| w[1] > w[0]));
        Self { vertices, times }
    }

    /// Vertices visited at times `0, dt, 2dt, …`.
    pub fn uniform(vertices: Vec<Complex64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("time step must be positive"));
        }
        let times = (0..vertices.len()).map(|k| k as f64 * dt).collect();
        Self::new(vertices, times)
    }

    /// The curve sitting at `p` for time `lifetime`.
    pub fn constant(p: Complex64, lifetime: f64) -> Result<Self> {
        if lifetime == 0.0 {
            Self::new(vec![p], vec![0.0])
        } else {
            Self::new(vec![p, p], vec![0.0, lifetime])
        }
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn lifetime(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().expect("nonempty")
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        if t <= 0.0 {
            return self.vertices[0];
        }
        if t >= self.lifetime() {
            return self.end();
        }
        let k = self.times.partition_point(|&s| s <= t);
        self.lerp(k - 1, t)
    }

    #[inline]
    fn lerp(&self, k: usize, t: f64) -> Complex64 {
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let a = (t - t0) / (t1 - t0);
        self.vertices[k] + (self.vertices[k + 1] - self.vertices[k]) * a
    }

    /// Evaluates at a nondecreasing sequence of times in one pass.
    pub fn eval_sorted(&self, ts: &[f64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(ts.len());
        let mut k = 0;
        let last = self.times.len() - 1;
        for &t in ts {
            if t <= 0.0 {
                out.push(self.vertices[0]);
                continue;
            }
            if t >= self.lifetime() {
                out.push(self.end());
                continue;
            }
            while k + 1 < last && self.times[k + 1] <= t {
                k += 1;
            }
            out.push(self.lerp(k, t));
        }
        out
    }

    /// Euclidean length of the trace.
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn max_segment_length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
    }

    /// Same function, with extra vertices at each of `ts` inside the
    /// lifetime.
    pub fn refined_at(&self, ts: &[f64]) -> Curve {
        let mut merged: Vec<f64> = self
            .times
            .iter()
            .copied()
            .chain(ts.iter().copied().filter(|&t| t > 0.0 && t < self.lifetime()))
            .collect();
        merged.sort_by(f64::total_cmp);
        merged.dedup();
        let vertices = self.eval_sorted(&merged);
        Curve::from_parts_unchecked(vertices, merged)
    }

    /// Same function, with segments subdivided so none is longer than `h`.
    pub fn refined(&self, h: f64) -> Curve {
        assert!(h > 0.0);
        let mut vertices = vec![self.vertices[0]];
        let mut times = vec![0.0];
        for k in 0..self.vertices.len() - 1 {
            let len = (self.vertices[k + 1] - self.vertices[k]).norm();
            let pieces = ((len / h).ceil() as usize).max(1);
            for j in 1..=pieces {
                let a = j as f64 / pieces as f64;
                vertices.push(self.vertices[k] + (self.vertices[k + 1] - self.vertices[k]) * a);
                times.push(if j == pieces {
                    self.times[k + 1]
                } else {
                    self.times[k] + (self.times[k + 1] - self.times[k]) * a
                });
            }
        }
        Curve::from_parts_unchecked(vertices, times)
    }

    /// `γ ∘ φ` for a strictly increasing map `φ` with `φ(0) = 0`, realized by
    /// moving each vertex time `t` to `φ⁻¹(t)`. The trace and vertex order
    /// are unchanged.
    pub fn retimed(&self, new_times: impl Fn(f64) -> f64) -> Result<Curve> {
        Curve::new(self.vertices.clone(), self.times.iter().map(|&t| new_times(t)).collect())
    }

    /// True when no segment doubles back on its predecessor and no two
    /// segments separated by more than `2 tol` of arclength come within `tol`
    /// of each other.
    pub fn is_simple(&self, tol: f64) -> bool {
        let pts = dedup_consecutive(&self.vertices);
        let m = pts.len();
        if m < 3 {
            return true;
        }
        for i in 0..m - 2 {
            if segments_fold_back(pts[i], pts[i + 1], pts[i + 2], tol) {
                return false;
            }
        }
        let segs = m - 1;
        let mut arc = Vec::with_capacity(m);
        arc.push(0.0);
        for w in pts.windows(2) {
            arc.push(arc[arc.len() - 1] + (w[1] - w[0]).norm());
        }
        let mean = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>() / segs as f64;
        let h = mean + tol;
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        for p in &pts {
            x0 = x0.min(p.re);
            y0 = y0.min(p.im);
        }
        let cell = |x: f64, y: f64| (((x - x0) / h).floor() as i64, ((y - y0) / h).floor() as i64);
        let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
        for i in 0..segs {
            let (a, b) = (pts[i], pts[i + 1]);
            let lo = cell(a.re.min(b.re) - tol, a.im.min(b.im) - tol);
            let hi = cell(a.re.max(b.re) + tol, a.im.max(b.im) + tol);
            for cx in lo.0..=hi.0 {
                for cy in lo.1..=hi.1 {
                    let bucket = grid.entry((cx, cy)).or_default();
                    for &j in bucket.iter() {
                        if i > j + 1 && arc[i] - arc[j + 1] > 2.0 * tol && segment_distance(a, b, pts[j], pts[j + 1]) <= tol {
                            return false;
                        }
                    }
                    bucket.push(i);
                }
            }
        }
        true
    }
}

/// Distance between segments `[a, b]` and `[c, d]`.
pub(crate) fn segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}

fn segments_cross(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Whether `[b, c]` doubles back along `[a, b]`.
fn segments_fold_back(a: Complex64, b: Complex64, c: Complex64, tol: f64) -> bool {
    let u = a - b;
    let v = c - b;
    let cosine = (u.re * v.re + u.im * v.im) / (u.norm() * v.norm());
    if cosine > 1.0 - 1e-12 {
        return true;
    }
    (point_segment_distance(c, a, b) <= tol && (c - b).norm() > tol)
        || (point_segment_distance(a, b, c) <= tol && (a - b).norm() > tol)
}

/// Distance from `p` to segment `[a, b]`, together with the parameter of
/// the closest point.
pub(crate) fn project_to_segment(p: Complex64, a: Complex64, b: Complex64) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return ((p - a).norm(), 0.0);
    }
    let s = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    ((p - (a + ab * s)).norm(), s)
}

pub(crate) fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    project_to_segment(p, a, b).0
}

fn dedup_consecutive(pts: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(pts.len());
    for &p in pts {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    out
}

/// Equivalence class of a curve modulo reparametrization, held through its
/// canonical representative: consecutive duplicate vertices removed and
/// time proportional to arclength on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveClass {
    representative: Curve,
}

impl CurveClass {
    pub fn of(curve: &Curve) -> Self {
        let pts = dedup_consecutive(curve.vertices());
        if pts.len() == 1 {
            return Self { representative: Curve::from_parts_unchecked(vec![pts[0], pts[0]], vec![0.0, 1.0]) };
        }
        let mut acc = Vec::with_capacity(pts.len());
        let mut s = 0.0;
        acc.push(0.0);
        for w in pts.windows(2) {
            s += (w[1] - w[0]).norm();
            acc.push(s);
        }
        let mut vertices = Vec::with_capacity(pts.len());
        let mut times: Vec<f64> = Vec::with_capacity(pts.len());
        let last = pts.len() - 1;
        for (k, (p, a)) in pts.into_iter().zip(acc).enumerate() {
            let t = if k == last { 1.0 } else { a / s };
            match times.last() {
                Some(&prev) if t <= prev => {
                    if k == last {
                        *vertices.last_mut().expect("nonempty") = p;
                    }
                }
                _ => {
                    vertices.push(p);
                    times.push(t);
                }
            }
        }
        Self { representative: Curve::from_parts_unchecked(vertices, times) }
    }

    pub fn representative(&self) -> &Curve {
        &self.representative
    }

    /// True when the trace is a single point.
    pub fn is_degenerate(&self) -> bool {
        self.representative.vertices.len() == 2
            && self.representative.vertices[0] == self.representative.vertices[1]
    }
}

/// Linear speed `σ(t) = c t`, mapping curve time to lattice step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFunction {
    c: f64,
}

impl SpeedFunction {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("speed must be positive and finite, got {c}")));
        }
        Ok(Self { c })
    }

    /// `c_n = n^{5/4}`.
    pub fn growth(n: u32) -> Self {
        Self { c: (n as f64).powf(1.25) }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.c * t
    }
}

/// Rescaled lattice path `t ↦ n⁻¹ X(σ(t))`, interpolated linearly between
/// steps.
pub fn embed_path(points: &[LatticePoint], n: u32, speed: SpeedFunction) -> Result<Curve> {
    if points.is_empty() {
        return Err(invalid("cannot embed an empty path"));
    }
    if n == 0 {
        return Err(invalid("scale must be positive"));
    }
    let s = 1.0 / n as f64;
    let vertices = points.iter().map(|p| Complex64::new(p.x as f64 * s, p.y as f64 * s)).collect();
    let dt = 1.0 / speed.c;
    Ok(Curve::from_parts_unchecked(vertices, (0..points.len()).map(|k| k as f64 * dt).collect()))
}

pub fn embed_lerw(sample: &LerwSample, n: u32, speed: SpeedFunction) -> Result<Curve> {
    embed_path(sample.path.points(), n, speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{sample_lerw, LerwTarget, RngStream};

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn construction_rejects_bad_times() {
        assert!(Curve::new(vec![], vec![]).is_err());
        assert!(Curve::new(vec![c(0., 0.)], vec![1.0]).is_err());
        assert!(Curve::new(vec![c(0., 0.), c(1., 0.)], vec![0.0, 0.0]).is_err());
        assert!(Curve::new(vec![c(0., 0.), c(1., 0.)], vec![0.0]).is_err());
        assert!(Curve::new(vec![c(0., 0.), c(f64::NAN, 0.)], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn evaluation_interpolates_and_sits() {
        let g = Curve::new(vec![c(0., 0.), c(1., 0.), c(1., 2.)], vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(g.eval(0.5), c(0.5, 0.));
        assert_eq!(g.eval(2.0), c(1., 1.));
        assert_eq!(g.eval(10.0), c(1., 2.));
        assert_eq!(g.eval(-1.0), c(0., 0.));
        assert_eq!(g.lifetime(), 3.0);
        let ts = [0.0, 0.25, 1.0, 1.5, 2.5, 3.0, 4.0];
        let batch = g.eval_sorted(&ts);
        for (t, z) in ts.iter().zip(batch) {
            assert!((g.eval(*t) - z).norm() < 1e-15);
        }
    }

    #[test]
    fn json_shape() {
        let g = Curve::new(vec![c(0., 0.), c(1., 0.5)], vec![0.0, 2.0]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"vertices":[[0.0,0.0],[1.0,0.5]],"times":[0.0,2.0]}"#);
        let back: Curve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Curve>(r#"{"vertices":[[0,0]],"times":[1]}"#).is_err());
    }

    #[test]
    fn refinement_preserves_function() {
        let g = Curve::new(vec![c(0., 0.), c(1., 0.), c(1., 2.)], vec![0.0, 0.5, 3.0]).unwrap();
        let r = g.refined(0.1);
        assert!(r.max_segment_length() <= 0.1 + 1e-12);
        assert_eq!(r.lifetime(), g.lifetime());
        for k in 0..=300 {
            let t = k as f64 * 0.01;
            assert!((g.eval(t) - r.eval(t)).norm() < 1e-12);
        }
        let r2 = g.refined_at(&[0.1, 0.2, 2.9, 5.0]);
        assert_eq!(r2.times().len(), 6);
        assert!((r2.eval(0.2) - g.eval(0.2)).norm() < 1e-15);
    }

    #[test]
    fn class_is_arclength_normalized() {
        let g = Curve::new(vec![c(0., 0.), c(0., 0.), c(3., 0.), c(3., 1.)], vec![0.0, 1.0, 1.5, 7.0]).unwrap();
        let cls = CurveClass::of(&g);
        let rep = cls.representative();
        assert_eq!(rep.vertices(), &[c(0., 0.), c(3., 0.), c(3., 1.)]);
        assert_eq!(rep.times(), &[0.0, 0.75, 1.0]);
        let h = g.retimed(|t| t * t + t).unwrap();
        assert_eq!(CurveClass::of(&h), cls);
        let pt = CurveClass::of(&Curve::constant(c(0.5, 0.5), 2.0).unwrap());
        assert!(pt.is_degenerate());
        assert_eq!(pt.representative().lifetime(), 1.0);
    }

    #[test]
    fn embedding_lifetimes() {
        let s = sample_lerw(LerwTarget::Ball(1), RngStream::new(3, 0)).unwrap();
        let g = embed_lerw(&s, 1, SpeedFunction::new(1.0).unwrap()).unwrap();
        assert_eq!(g.lifetime(), 1.0);
        assert_eq!(g.vertices().len(), 2);
        assert!((g.start().norm() - 1.0).abs() < 1e-15);
        assert_eq!(g.end(), c(0., 0.));

        let s = sample_lerw(LerwTarget::Ball(16), RngStream::new(3, 1)).unwrap();
        let sp = SpeedFunction::growth(16);
        let g = embed_lerw(&s, 16, sp).unwrap();
        assert!((g.lifetime() - s.steps as f64 * 16f64.powf(-1.25)).abs() < 1e-12);
        assert!((g.max_segment_length() - 1.0 / 16.0).abs() < 1e-15);
        let mean = 40.0;
        let g = embed_lerw(&s, 16, SpeedFunction::new(mean).unwrap()).unwrap();
        assert!((g.lifetime() - s.steps as f64 / mean).abs() < 1e-12);
        assert!(SpeedFunction::new(0.0).is_err());
        assert!(SpeedFunction::new(-1.0).is_err());
    }

    #[test]
    fn simplicity_scan() {
        let zigzag = Curve::uniform(vec![c(0., 0.), c(1., 0.), c(1., 1.), c(2., 1.)], 1.0).unwrap();
        assert!(zigzag.is_simple(1e-9));
        let crossing = Curve::uniform(vec![c(0., 0.), c(2., 0.), c(1., 1.), c(1., -1.)], 1.0).unwrap();
        assert!(!crossing.is_simple(1e-9));
        let backtrack = Curve::uniform(vec![c(0., 0.), c(2., 0.), c(1., 0.)], 1.0).unwrap();
        assert!(!backtrack.is_simple(1e-9));
        let touching = Curve::uniform(vec![c(0., 0.), c(2., 0.), c(2., 1.), c(1., 1.), c(1., 0.0005)], 1.0).unwrap();
        assert!(!touching.is_simple(1e-3));
        assert!(touching.is_simple(1e-4));
    }
}
