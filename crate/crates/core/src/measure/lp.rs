use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use super::flow::FlowNetwork;
use super::OccupationMeasure;
use crate::error::{invalid, Result};

/// Dyadic squares of side `2^{-k}` tiling the plane. Measures are compared
/// after moving their mass to the centers of these squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TestFamily {
    k: u32,
}

impl Default for TestFamily {
    fn default() -> Self {
        Self { k: 7 }
    }
}

impl TestFamily {
    pub fn new(k: u32) -> Result<Self> {
        if !(1..=24).contains(&k) {
            return Err(invalid(format!("dyadic level must lie in 1..=24, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn level(&self) -> u32 {
        self.k
    }

    pub fn side(&self) -> f64 {
        (-(self.k as f64)).exp2()
    }

    /// Largest distance any unit of mass moves when snapped to a square
    /// center: half the diagonal plus half a raster piece.
    pub fn displacement(&self) -> f64 {
        self.side() * (std::f64::consts::FRAC_1_SQRT_2 + 0.25)
    }
}

/// Lévy–Prokhorov distance between the snapped measures, with the bracket
/// that contains the distance between the original measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpDistance {
    /// Distance between the snapped measures, to within the bisection
    /// tolerance.
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Half-width of the bracket contributed by snapping.
    pub resolution: f64,
}

const BISECTION_TOLERANCE: f64 = 1e-6;

struct Snapped {
    centers: Vec<Complex64>,
    cells: Vec<(i64, i64)>,
    masses: Vec<f64>,
    total: f64,
}

fn snap(mu: &OccupationMeasure, family: TestFamily) -> Snapped {
    let h = family.side();
    let raster = mu.raster(family.k);
    let mut s = Snapped { centers: Vec::new(), cells: Vec::new(), masses: Vec::new(), total: 0.0 };
    for ((i, j), m) in raster {
        if m > 0.0 {
            s.centers.push(Complex64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            s.cells.push((i, j));
            s.masses.push(m);
        }
    }
    s.total = crate::numeric::compensated_sum(s.masses.iter().copied());
    s
}

/// Maximum mass that can be matched between `a` and `b` moving no unit
/// farther than `eps`.
fn matched_mass(a: &Snapped, b: &Snapped, b_index: &HashMap<(i64, i64), usize>, eps: f64, h: f64) -> f64 {
    let na = a.masses.len();
    let nb = b.masses.len();
    let (src, sink) = (na + nb, na + nb + 1);
    let scale = a.total.max(b.total);
    let mut g = FlowNetwork::new(na + nb + 2, scale * 1e-14);
    for (i, &m) in a.masses.iter().enumerate() {
        g.add_arc(src, i, m);
    }
    for (j, &m) in b.masses.iter().enumerate() {
        g.add_arc(na + j, sink, m);
    }
    let reach = (eps / h).ceil() as i64 + 1;
    let window = (2 * reach + 1).saturating_mul(2 * reach + 1) as usize;
    let limit = eps * (1.0 + 1e-12);
    for i in 0..na {
        let (ci, cj) = a.cells[i];
        if window < nb {
            for di in -reach..=reach {
                for dj in -reach..=reach {
                    if let Some(&j) = b_index.get(&(ci + di, cj + dj)) {
                        if (a.centers[i] - b.centers[j]).norm() <= limit {
                            g.add_arc(i, na + j, f64::INFINITY);
                        }
                    }
                }
            }
        } else {
            for j in 0..nb {
                if (a.centers[i] - b.centers[j]).norm() <= limit {
                    g.add_arc(i, na + j, f64::INFINITY);
                }
            }
        }
    }
    g.max_flow(src, sink)
}

/// Lévy–Prokhorov distance
/// `inf{ε : μ(A) ≤ ν(A^ε) + ε and ν(A) ≤ μ(A^ε) + ε for all A}`.
///
/// Both measures are snapped to the centers of the family's squares, which
/// moves each unit of mass at most [`TestFamily::displacement`]. For the
/// snapped (discrete) measures the condition at a given `ε` is equivalent,
/// by max-flow/min-cut, to `max(μ(ℂ), ν(ℂ)) − F(ε) ≤ ε`, where `F(ε)` is the
/// largest mass transportable between them along moves of length at most
/// `ε`. That condition is monotone in `ε` and is located by bisection.
pub fn levy_prokhorov(mu: &OccupationMeasure, nu: &OccupationMeasure, family: TestFamily) -> LpDistance {
    let a = snap(mu, family);
    let b = snap(nu, family);
    let h = family.side();
    let resolution = 2.0 * family.displacement();
    let b_index: HashMap<(i64, i64), usize> = b.cells.iter().enumerate().map(|(j, &c)| (c, j)).collect();
    let top = a.total.max(b.total);
    let ok = |eps: f64| top - matched_mass(&a, &b, &b_index, eps, h) <= eps + top * 1e-12;

    let estimate = if top == 0.0 || ok(0.0) {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, top);
        while hi - lo > BISECTION_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    LpDistance {
        estimate,
        lower: (estimate - resolution - BISECTION_TOLERANCE).max(0.0),
        upper: estimate + resolution,
        resolution,
    }
}
