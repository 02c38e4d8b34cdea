//! SLE Green's function on the disk and on conformal images of it, and
//! Riemann sums over lattice edge midpoints.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::GridDomain;
use crate::numeric::CompensatedSum;

/// SLE parameter `κ ∈ (0, 4]` and the dimension `d = 1 + κ/8`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleParams {
    kappa: f64,
}

impl SleParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 4.0) {
            return Err(invalid(format!("kappa must lie in (0, 4], got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dimension(&self) -> f64 {
        1.0 + self.kappa / 8.0
    }
}

/// `G_𝔻(z) = |z|^{d−2}` for `0 < |z| ≤ 1`.
pub fn green_disk(z: Complex64, params: SleParams) -> Result<f64> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::SingularAtOrigin);
    }
    if r > 1.0 + 1e-12 {
        return Err(invalid(format!("|z| = {r} lies outside the closed unit disk")));
    }
    Ok(r.powf(params.dimension() - 2.0))
}

/// Conformal maps onto the unit disk fixing the origin, with closed-form
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConformalMap {
    Identity,
    /// `z ↦ z / r` from the disk of radius `r`.
    Scaling { r: f64 },
    /// `z ↦ e^{iθ} z`.
    Rotation { theta: f64 },
}

impl ConformalMap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConformalMap::Scaling { r } if !(r > 0.0 && r.is_finite()) => {
                Err(invalid(format!("scaling radius must be positive, got {r}")))
            }
            ConformalMap::Rotation { theta } if !theta.is_finite() => Err(invalid("rotation angle must be finite")),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        match *self {
            ConformalMap::Identity => z,
            ConformalMap::Scaling { r } => z / r,
            ConformalMap::Rotation { theta } => Complex64::from_polar(1.0, theta) * z,
        }
    }

    pub fn derivative(&self, _z: Complex64) -> Complex64 {
        match *self {
            ConformalMap::Identity => Complex64::new(1.0, 0.0),
            ConformalMap::Scaling { r } => Complex64::new(1.0 / r, 0.0),
            ConformalMap::Rotation { theta } => Complex64::from_polar(1.0, theta),
        }
    }

    /// Whether `z` lies in the closed domain mapped onto the disk.
    pub fn contains(&self, z: Complex64) -> bool {
        self.apply(z).norm() <= 1.0 + 1e-12
    }
}

/// `G_D(z) = |φ'(z)|^{2−d} G_𝔻(φ(z)) = |φ'(z)/φ(z)|^{2−d}`.
pub fn green_domain(z: Complex64, map: ConformalMap, params: SleParams) -> Result<f64> {
    map.validate()?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::SingularAtOrigin);
    }
    if !map.contains(z) {
        return Err(invalid(format!("{z} lies outside the mapped domain")));
    }
    let w = map.apply(z);
    Ok(map.derivative(z).norm().powf(2.0 - params.dimension()) * green_disk(w, params)?)
}

/// Region of the plane selecting edge midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    /// Closed ball `|z − center| ≤ radius`.
    Ball { center: [f64; 2], radius: f64 },
    /// Closed annulus `inner ≤ |z| ≤ outer` around the origin.
    Annulus { inner: f64, outer: f64 },
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Ball { center, radius } => (z - Complex64::new(center[0], center[1])).norm() <= radius,
            Region::Annulus { inner, outer } => {
                let r = z.norm();
                inner <= r && r <= outer
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Ball { radius, .. } => PI * radius * radius,
            Region::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
        }
    }
}

/// Result of a midpoint Riemann sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannSum {
    pub value: f64,
    /// Edges whose midpoint fell in the region and entered the sum.
    pub edges: usize,
    /// Edges dropped because they touch the origin.
    pub excluded_edges: usize,
}

/// `(1/(2n²)) Σ f(z_e)` over edges of `dom` with rescaled midpoint `z_e` in
/// `region`. Each midpoint stands for the diamond of area `1/(2n²)` around
/// it. The four edges at the origin are skipped when the region reaches
/// them; their diamonds form the square `|x| + |y| ≤ 1/n`, whose Green mass
/// is bounded by [`origin_cell_mass_bound`].
pub fn riemann_sum(f: impl Fn(Complex64) -> f64, dom: &GridDomain, region: Region) -> RiemannSum {
    let n = dom.scale() as f64;
    let mut acc = CompensatedSum::new();
    let mut edges = 0;
    let mut excluded = 0;
    for e in dom.edges() {
        let (mx, my) = e.midpoint_doubled();
        let z = Complex64::new(mx as f64 / (2.0 * n), my as f64 / (2.0 * n));
        if !region.contains(z) {
            continue;
        }
        let (p, q) = e.endpoints();
        if p.norm2() == 0 || q.norm2() == 0 {
            excluded += 1;
            continue;
        }
        acc.add(f(z));
        edges += 1;
    }
    RiemannSum { value: acc.value() / (2.0 * n * n), edges, excluded_edges: excluded }
}

/// `∫_{|z| ≤ 1/n} |z|^{d−2} dA = 2π n^{−d} / d`, an upper bound for the Green
/// mass of the skipped origin cell.
pub fn origin_cell_mass_bound(n: u32, params: SleParams) -> f64 {
    let d = params.dimension();
    2.0 * PI * (n as f64).powf(-d) / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{grid_approximation, DomainSpec};

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn kappa2() -> SleParams {
        SleParams::new(2.0).unwrap()
    }

    #[test]
    fn disk_values() {
        assert_eq!(green_disk(c(1., 0.), kappa2()).unwrap(), 1.0);
        assert!((green_disk(c(0.5, 0.), kappa2()).unwrap() - 1.6817928).abs() < 1e-7);
        let k4 = SleParams::new(4.0).unwrap();
        assert!((green_disk(c(0.25, 0.), k4).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(green_disk(c(0., 0.), kappa2()), Err(Error::SingularAtOrigin)));
        assert!(green_disk(c(1.5, 0.), kappa2()).is_err());
        assert!(SleParams::new(0.0).is_err());
        assert!(SleParams::new(4.5).is_err());
        assert_eq!(kappa2().dimension(), 1.25);
    }

    #[test]
    fn radial_and_decreasing() {
        let p = kappa2();
        let mut prev = f64::INFINITY;
        for k in 1..=100 {
            let r = k as f64 / 100.0;
            let g = green_disk(c(r, 0.), p).unwrap();
            assert!(g < prev);
            prev = g;
            let rot = green_disk(Complex64::from_polar(r, 1.234), p).unwrap();
            assert!((rot - g).abs() < 1e-12 * g);
        }
    }

    #[test]
    fn covariance_catalog() {
        let p = kappa2();
        for z in [c(0.3, 0.1), c(-0.5, 0.7), c(0.01, -0.02)] {
            assert_eq!(green_domain(z, ConformalMap::Identity, p).unwrap(), green_disk(z, p).unwrap());
            let rot = green_domain(z, ConformalMap::Rotation { theta: 0.7 }, p).unwrap();
            assert!((rot - green_disk(z, p).unwrap()).abs() < 1e-12);
            for r in [1.0, 2.0, 5.5] {
                let g = green_domain(z, ConformalMap::Scaling { r }, p).unwrap();
                assert!((g - z.norm().powf(-0.75)).abs() < 1e-12);
            }
        }
        assert!(matches!(green_domain(c(0., 0.), ConformalMap::Identity, p), Err(Error::SingularAtOrigin)));
        assert!(green_domain(c(3., 0.), ConformalMap::Scaling { r: 2.0 }, p).is_err());
        assert!(green_domain(c(0.1, 0.), ConformalMap::Scaling { r: -2.0 }, p).is_err());
    }

    fn unit_disk(n: u32) -> GridDomain {
        grid_approximation(&DomainSpec::unit_disk(), n).unwrap()
    }

    #[test]
    fn annulus_area() {
        let region = Region::Annulus { inner: 0.3, outer: 0.7 };
        let s = riemann_sum(|_| 1.0, &unit_disk(64), region);
        assert!((s.value / region.area() - 1.0).abs() < 0.02, "{}", s.value);
        assert!((region.area() - 1.2566).abs() < 1e-4);
        assert_eq!(s.excluded_edges, 0);
    }

    #[test]
    fn annulus_green_integral() {
        let p = kappa2();
        let (a, b) = (0.2, 0.9);
        let s = riemann_sum(|z| green_disk(z, p).unwrap(), &unit_disk(128), Region::Annulus { inner: a, outer: b });
        let exact = 2.0 * PI * 0.8 * (b.powf(1.25) - a.powf(1.25));
        assert!((s.value / exact - 1.0).abs() < 0.02);
    }

    #[test]
    fn error_shrinks_with_n() {
        let bump = |z: Complex64| {
            let u = z.norm_sqr() / 0.64;
            if u < 1.0 {
                (1.0 - u).powi(2)
            } else {
                0.0
            }
        };
        let exact = PI * 0.64 / 3.0;
        let region = Region::Ball { center: [0.1, 0.05], radius: 0.85 };
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| (riemann_sum(bump, &unit_disk(n), region).value - exact).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn origin_cell_excluded() {
        let p = kappa2();
        let region = Region::Ball { center: [0.0, 0.0], radius: 0.5 };
        let s = riemann_sum(|z| green_disk(z, p).unwrap(), &unit_disk(64), region);
        assert_eq!(s.excluded_edges, 4);
        let exact = 2.0 * PI * 0.8 * 0.5f64.powf(1.25);
        let bound = origin_cell_mass_bound(64, p);
        assert!(exact - s.value > 0.0);
        assert!((exact - s.value - bound).abs() < 0.02 * exact);
    }
}
