//! Integer lattice geometry: points, edges, discrete balls, outer boundaries
//! and grid-domain approximations of continuum domains.
//!
//! Everything here works in exact integer coordinates. A [`GridDomain`] at
//! scale `n` stores points of `n⁻¹ℤ²` multiplied by `n`; rescaling to plane
//! units happens only when a lattice path is embedded as a curve.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of ℤ².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct LatticePoint {
    pub x: i32,
    pub y: i32,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Squared Euclidean norm, exact.
    #[inline]
    pub fn norm2(self) -> i64 {
        let (x, y) = (self.x as i64, self.y as i64);
        x * x + y * y
    }

    /// The four nearest neighbours in E, N, W, S order.
    #[inline]
    pub fn neighbors(self) -> [LatticePoint; 4] {
        [
            LatticePoint::new(self.x + 1, self.y),
            LatticePoint::new(self.x, self.y + 1),
            LatticePoint::new(self.x - 1, self.y),
            LatticePoint::new(self.x, self.y - 1),
        ]
    }

    #[inline]
    pub fn step(self, dir: u8) -> LatticePoint {
        match dir & 3 {
            0 => LatticePoint::new(self.x + 1, self.y),
            1 => LatticePoint::new(self.x, self.y + 1),
            2 => LatticePoint::new(self.x - 1, self.y),
            _ => LatticePoint::new(self.x, self.y - 1),
        }
    }

    #[inline]
    pub fn is_adjacent(self, other: LatticePoint) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }
}

impl From<[i32; 2]> for LatticePoint {
    fn from([x, y]: [i32; 2]) -> Self {
        LatticePoint::new(x, y)
    }
}

impl From<LatticePoint> for [i32; 2] {
    fn from(p: LatticePoint) -> Self {
        [p.x, p.y]
    }
}

impl From<(i32, i32)> for LatticePoint {
    fn from((x, y): (i32, i32)) -> Self {
        LatticePoint::new(x, y)
    }
}

/// An undirected nearest-neighbour edge, stored with its endpoints sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: LatticePoint,
    b: LatticePoint,
}

impl Edge {
    pub fn new(p: LatticePoint, q: LatticePoint) -> Result<Self> {
        if !p.is_adjacent(q) {
            return Err(invalid(format!("{p:?} and {q:?} are not nearest neighbours")));
        }
        Ok(Self::new_unchecked(p, q))
    }

    #[inline]
    pub(crate) fn new_unchecked(p: LatticePoint, q: LatticePoint) -> Self {
        if p <= q {
            Self { a: p, b: q }
        } else {
            Self { a: q, b: p }
        }
    }

    pub fn endpoints(&self) -> (LatticePoint, LatticePoint) {
        (self.a, self.b)
    }

    /// Twice the midpoint, which is always an integer pair.
    #[inline]
    pub fn midpoint_doubled(&self) -> (i64, i64) {
        (
            self.a.x as i64 + self.b.x as i64,
            self.a.y as i64 + self.b.y as i64,
        )
    }

    /// Midpoint in lattice units (a dyadic rational, exactly representable).
    #[inline]
    pub fn midpoint(&self) -> (f64, f64) {
        let (x, y) = self.midpoint_doubled();
        (x as f64 * 0.5, y as f64 * 0.5)
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }
}

/// `B_n = { x ∈ ℤ² : |x| ≤ n }`.
pub fn ball(n: u32) -> BTreeSet<LatticePoint> {
    let r = n as i32;
    let r2 = (n as i64) * (n as i64);
    let mut out = BTreeSet::new();
    for x in -r..=r {
        for y in -r..=r {
            let p = LatticePoint::new(x, y);
            if p.norm2() <= r2 {
                out.insert(p);
            }
        }
    }
    out
}

/// Outer vertex boundary: points outside `set` adjacent to some point of it.
pub fn boundary(set: &BTreeSet<LatticePoint>) -> BTreeSet<LatticePoint> {
    let mut out = BTreeSet::new();
    for p in set {
        for q in p.neighbors() {
            if !set.contains(&q) {
                out.insert(q);
            }
        }
    }
    out
}

/// Catalog of continuum domains, in plane units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Disk {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Square {
        side: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

const GEOM_TOL: f64 = 1e-9;

impl DomainSpec {
    pub fn unit_disk() -> Self {
        DomainSpec::Disk { radius: 1.0, center: [0.0, 0.0] }
    }

    /// Checks the catalog invariants: bounded, simply connected, origin inside.
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Disk { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("disk radius must be positive and finite"));
                }
                if center[0].hypot(center[1]) >= *radius {
                    return Err(invalid("disk does not contain the origin"));
                }
            }
            DomainSpec::Square { side, center } => {
                if !(side.is_finite() && *side > 0.0) {
                    return Err(invalid("square side must be positive and finite"));
                }
                let h = side / 2.0;
                if center[0].abs() >= h || center[1].abs() >= h {
                    return Err(invalid("square does not contain the origin"));
                }
            }
            DomainSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(invalid("polygon needs at least three vertices"));
                }
                if vertices.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(invalid("polygon vertices must be finite"));
                }
                if !polygon_is_simple(vertices) {
                    return Err(invalid("polygon is not simple"));
                }
                if !point_in_polygon(vertices, [0.0, 0.0]) {
                    return Err(invalid("polygon does not contain the origin"));
                }
            }
        }
        Ok(())
    }

    fn polygon(&self) -> Option<Vec<[f64; 2]>> {
        match self {
            DomainSpec::Disk { .. } => None,
            DomainSpec::Square { side, center } => {
                let h = side / 2.0;
                let [cx, cy] = *center;
                Some(vec![
                    [cx - h, cy - h],
                    [cx + h, cy - h],
                    [cx + h, cy + h],
                    [cx - h, cy + h],
                ])
            }
            DomainSpec::Polygon { vertices } => Some(vertices.clone()),
        }
    }

    fn bounding_box(&self) -> [f64; 4] {
        match self {
            DomainSpec::Disk { radius, center } => [
                center[0] - radius,
                center[1] - radius,
                center[0] + radius,
                center[1] + radius,
            ],
            _ => {
                let poly = self.polygon().expect("polygonal spec");
                let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
                for [x, y] in poly {
                    bb[0] = bb[0].min(x);
                    bb[1] = bb[1].min(y);
                    bb[2] = bb[2].max(x);
                    bb[3] = bb[3].max(y);
                }
                bb
            }
        }
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let scale = len.max(1.0);
    if cross(a, b, p).abs() > tol * scale * scale {
        return false;
    }
    let dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
    dot >= -tol * scale && dot <= len * len + tol * scale
}

/// Closed point-in-polygon test (boundary counts as inside).
pub(crate) fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let k = poly.len();
    let mut inside = false;
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        if on_segment(p, a, b, GEOM_TOL) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(p1, q1, q2, GEOM_TOL)
        || on_segment(p2, q1, q2, GEOM_TOL)
        || on_segment(q1, p1, p2, GEOM_TOL)
        || on_segment(q2, p1, p2, GEOM_TOL)
}

fn polygon_is_simple(poly: &[[f64; 2]]) -> bool {
    let k = poly.len();
    for i in 0..k {
        for j in (i + 1)..k {
            let adjacent = j == i + 1 || (i == 0 && j == k - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % k], poly[j], poly[(j + 1) % k]) {
                return false;
            }
        }
    }
    true
}

/// Does the segment `a→b` meet the open box `(x0,x1)×(y0,y1)`?
fn segment_meets_open_box(a: [f64; 2], b: [f64; 2], x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p, d, l, h) in [(a[0], b[0] - a[0], x0, x1), (a[1], b[1] - a[1], y0, y1)] {
        if d == 0.0 {
            if !(p > l + GEOM_TOL && p < h - GEOM_TOL) {
                return false;
            }
        } else {
            let (t0, t1) = ((l - p) / d, (h - p) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    hi - lo > GEOM_TOL
}

/// Classification of a lattice site relative to a [`GridDomain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Interior,
    Boundary,
    Outside,
}

/// Lattice approximation `Dⁿ` of a continuum domain, in integer units of the
/// `n⁻¹`-grid.
#[derive(Debug, Clone)]
pub struct GridDomain {
    scale: u32,
    vertices: BTreeSet<LatticePoint>,
    boundary: BTreeSet<LatticePoint>,
    origin_inside: bool,
    // dense lookup over the bounding box of vertices ∪ boundary
    min_x: i32,
    min_y: i32,
    width: usize,
    height: usize,
    sites: Vec<u8>,
}

impl GridDomain {
    /// Builds a domain from an explicit vertex set, keeping only the
    /// nearest-neighbour component that contains the origin.
    pub fn from_vertices(scale: u32, vertices: impl IntoIterator<Item = LatticePoint>) -> Result<Self> {
        if scale == 0 {
            return Err(invalid("scale must be positive"));
        }
        let all: BTreeSet<LatticePoint> = vertices.into_iter().collect();
        if !all.contains(&LatticePoint::ORIGIN) {
            return Err(invalid("vertex set does not contain the origin"));
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([LatticePoint::ORIGIN]);
        comp.insert(LatticePoint::ORIGIN);
        while let Some(p) = queue.pop_front() {
            for q in p.neighbors() {
                if all.contains(&q) && comp.insert(q) {
                    queue.push_back(q);
                }
            }
        }
        Ok(Self::assemble(scale, comp))
    }

    fn assemble(scale: u32, vertices: BTreeSet<LatticePoint>) -> Self {
        let boundary = boundary(&vertices);
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for p in boundary.iter().chain(vertices.iter()) {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let width = (max_x - min_x + 1) as usize;
        let height = (max_y - min_y + 1) as usize;
        let mut sites = vec![0u8; width * height];
        for p in &vertices {
            sites[(p.y - min_y) as usize * width + (p.x - min_x) as usize] = 1;
        }
        for p in &boundary {
            sites[(p.y - min_y) as usize * width + (p.x - min_x) as usize] = 2;
        }
        let origin_inside = vertices.contains(&LatticePoint::ORIGIN);
        Self { scale, vertices, boundary, origin_inside, min_x, min_y, width, height, sites }
    }

    /// The same domain with the given points removed (a slit domain `D ∖ α`).
    pub fn without(&self, removed: &[LatticePoint]) -> Result<Self> {
        let removed: BTreeSet<_> = removed.iter().copied().collect();
        Self::from_vertices(self.scale, self.vertices.iter().copied().filter(|p| !removed.contains(p)))
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn vertices(&self) -> &BTreeSet<LatticePoint> {
        &self.vertices
    }

    pub fn boundary(&self) -> &BTreeSet<LatticePoint> {
        &self.boundary
    }

    pub fn origin_inside(&self) -> bool {
        self.origin_inside
    }

    /// Bounding box `(min_x, min_y, width, height)` of vertices ∪ boundary.
    pub fn bounds(&self) -> (i32, i32, usize, usize) {
        (self.min_x, self.min_y, self.width, self.height)
    }

    #[inline]
    pub fn site(&self, p: LatticePoint) -> Site {
        let dx = p.x - self.min_x;
        let dy = p.y - self.min_y;
        if dx < 0 || dy < 0 || dx as usize >= self.width || dy as usize >= self.height {
            return Site::Outside;
        }
        match self.sites[dy as usize * self.width + dx as usize] {
            1 => Site::Interior,
            2 => Site::Boundary,
            _ => Site::Outside,
        }
    }

    #[inline]
    pub fn contains(&self, p: LatticePoint) -> bool {
        self.site(p) == Site::Interior
    }

    /// Undirected edges with at least one endpoint in the vertex set, i.e.
    /// every edge a walk confined to the domain can traverse.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = BTreeSet::new();
        for &p in &self.vertices {
            for q in p.neighbors() {
                out.insert(Edge::new_unchecked(p, q));
            }
        }
        out.into_iter().collect()
    }
}

/// A closed unit face `[i,i+1]×[j,j+1]` at scale `n` lies inside the closed
/// continuum domain.
fn face_inside(spec: &DomainSpec, poly: Option<&[[f64; 2]]>, n: f64, i: i64, j: i64) -> bool {
    let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
    match spec {
        DomainSpec::Disk { radius, center } => {
            let r = radius * n;
            let lim = r * r * (1.0 + GEOM_TOL);
            corners.iter().all(|&(x, y)| {
                let dx = x as f64 - center[0] * n;
                let dy = y as f64 - center[1] * n;
                dx * dx + dy * dy <= lim
            })
        }
        _ => {
            let poly = poly.expect("polygonal spec");
            let pts = corners.map(|(x, y)| [x as f64 / n, y as f64 / n]);
            if !pts.iter().all(|&c| point_in_polygon(poly, c)) {
                return false;
            }
            let (x0, y0, x1, y1) = (i as f64 / n, j as f64 / n, (i + 1) as f64 / n, (j + 1) as f64 / n);
            let k = poly.len();
            (0..k).all(|e| !segment_meets_open_box(poly[e], poly[(e + 1) % k], x0, y0, x1, y1))
        }
    }
}

/// Grid-domain approximation `Dⁿ` of a catalog domain.
///
/// Retained faces are the closed unit faces of the `n⁻¹`-grid contained in
/// the closed domain; faces crossed by `∂D` are discarded. The result is the
/// set of corners of the retained faces that are edge-connected to a face
/// touching the origin.
pub fn grid_approximation(spec: &DomainSpec, n: u32) -> Result<GridDomain> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("scale must be positive"));
    }
    let nf = n as f64;
    let poly = spec.polygon();
    let bb = spec.bounding_box();
    let i_lo = (bb[0] * nf).floor() as i64 - 1;
    let j_lo = (bb[1] * nf).floor() as i64 - 1;
    let i_hi = (bb[2] * nf).ceil() as i64 + 1;
    let j_hi = (bb[3] * nf).ceil() as i64 + 1;
    let w = (i_hi - i_lo + 1) as usize;
    let h = (j_hi - j_lo + 1) as usize;
    let idx = |i: i64, j: i64| (j - j_lo) as usize * w + (i - i_lo) as usize;

    let mut good = vec![false; w * h];
    for j in j_lo..=j_hi {
        for i in i_lo..=i_hi {
            good[idx(i, j)] = face_inside(spec, poly.as_deref(), nf, i, j);
        }
    }

    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, j) in [(-1, -1), (0, -1), (-1, 0), (0, 0)] {
        if good[idx(i, j)] {
            seen[idx(i, j)] = true;
            queue.push_back((i, j));
        }
    }
    if queue.is_empty() {
        return Err(Error::DomainTooFine { scale: n });
    }
    let mut vertices = BTreeSet::new();
    while let Some((i, j)) = queue.pop_front() {
        for (x, y) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
            vertices.insert(LatticePoint::new(x as i32, y as i32));
        }
        for (a, b) in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
            if a < i_lo || a > i_hi || b < j_lo || b > j_hi {
                continue;
            }
            let k = idx(a, b);
            if good[k] && !seen[k] {
                seen[k] = true;
                queue.push_back((a, b));
            }
        }
    }
    Ok(GridDomain::assemble(n, vertices))
}
