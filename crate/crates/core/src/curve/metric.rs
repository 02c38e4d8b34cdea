use serde::Serialize;

use super::Curve;

/// `d(γ₁, γ₂) = |t₁ − t₂| + sup_{s ≤ t₁ ∨ t₂} |γ₁(s) − γ₂(s)|`.
///
/// Between consecutive breakpoints of either curve both are affine in time,
/// so the pointwise distance is convex there and the supremum is attained at
/// a breakpoint. The result is exact up to rounding.
pub fn dist_sup(g1: &Curve, g2: &Curve) -> f64 {
    let mut ts: Vec<f64> = Vec::with_capacity(g1.times().len() + g2.times().len());
    let (a, b) = (g1.times(), g2.times());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x <= y => {
                i += 1;
                if x == y {
                    j += 1;
                }
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        ts.push(t);
    }
    let p = g1.eval_sorted(&ts);
    let q = g2.eval_sorted(&ts);
    let sup = p.iter().zip(&q).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    (g1.lifetime() - g2.lifetime()).abs() + sup
}

/// Monotone-coupling estimate of the reparametrization distance `ρ`.
///
/// `value` is the discrete Fréchet distance between the vertex sequences, an
/// upper bound for `ρ`; the true value lies in
/// `[value − error_bound, value]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub value: f64,
    pub error_bound: f64,
}

pub fn dist_rho(g1: &Curve, g2: &Curve) -> RhoEstimate {
    let p = g1.vertices();
    let q = g2.vertices();
    let mut prev = vec![0.0f64; q.len()];
    let mut cur = vec![0.0f64; q.len()];
    for (i, &pi) in p.iter().enumerate() {
        for (j, &qj) in q.iter().enumerate() {
            let d = (pi - qj).norm();
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => d.max(cur[j - 1]),
                (_, 0) => d.max(prev[0]),
                _ => d.max(prev[j].min(cur[j - 1]).min(prev[j - 1])),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    RhoEstimate {
        value: prev[q.len() - 1],
        error_bound: g1.max_segment_length().max(g2.max_segment_length()),
    }
}
