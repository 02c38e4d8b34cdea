//! Radial Loewner evolution `∂_t g_t(z) = g_t(z) (ξ(t) + g_t(z)) / (ξ(t) − g_t(z))`
//! driven by piecewise-constant unimodular functions, SLE trace extraction,
//! and the Green's-function observable along the flow.

mod slit;
mod trace;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use self::slit::{koebe_inverse, slit_derivative, slit_forward, slit_inverse};
pub use self::trace::{
    sample_sle_trace, trace_from_driving, InverseMethod, Parametrization, TraceApprox, TraceOptions, DEFAULT_TRACE_OFFSET,
    INVERSE_AGREEMENT,
};

use crate::error::{invalid, Error, Result};
use crate::green::{green_disk, SleParams};
use crate::walk::RngStream;

/// `|ξ − g|` (or `1 − |g|`) below which a point counts as swallowed.
pub const BLOWUP_TOLERANCE: f64 = 1e-6;
/// Local error target of the adaptive Euler cross-check.
pub const EULER_TOLERANCE: f64 = 1e-8;
/// Step of the centered difference used for `g_t'(z)` in the observable.
pub const DIFFERENCE_STEP: f64 = 1e-5;

/// Where the driving function starts on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StartAngle {
    Uniform,
    Fixed { angle: f64 },
}

/// Samples `ξ(t_k) = exp(i θ_k)` on the grid `t_k = k dt`, `k = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingFunction {
    dt: f64,
    kappa: f64,
    angles: Vec<f64>,
}

impl DrivingFunction {
    /// `θ_k = θ_0 + B(κ t_k)` with independent Gaussian increments of
    /// variance `κ dt`.
    pub fn brownian(kappa: f64, t_max: f64, dt: f64, start: StartAngle, stream: RngStream) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        let steps = grid_steps(t_max, dt)?;
        let mut rng = stream.rng();
        let theta0 = match start {
            StartAngle::Uniform => rng.random::<f64>() * TAU,
            StartAngle::Fixed { angle } => angle,
        };
        let sd = (kappa * dt).sqrt();
        let mut angles = Vec::with_capacity(steps + 1);
        angles.push(theta0);
        let mut theta = theta0;
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            theta += sd * z;
            angles.push(theta);
        }
        Ok(Self { dt, kappa, angles })
    }

    /// `ξ ≡ e^{iθ}`.
    pub fn constant(angle: f64, t_max: f64, dt: f64) -> Result<Self> {
        let steps = grid_steps(t_max, dt)?;
        Ok(Self { dt, kappa: 0.0, angles: vec![angle; steps + 1] })
    }

    pub fn from_angles(angles: Vec<f64>, dt: f64, kappa: f64) -> Result<Self> {
        if angles.is_empty() || !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("driving function needs at least one angle and a positive step"));
        }
        Ok(Self { dt, kappa, angles })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn steps(&self) -> usize {
        self.angles.len() - 1
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn value(&self, k: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.angles[k])
    }

    /// The driving function restarted at step `k`, for `t ↦ ξ(t_k + t)`.
    pub fn shifted(&self, k: usize) -> Self {
        Self { dt: self.dt, kappa: self.kappa, angles: self.angles[k..].to_vec() }
    }

    /// The first `k` steps.
    pub fn truncated(&self, k: usize) -> Self {
        Self { dt: self.dt, kappa: self.kappa, angles: self.angles[..=k].to_vec() }
    }
}

fn grid_steps(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite() && t_max >= 0.0 && t_max.is_finite()) {
        return Err(invalid("time horizon must be nonnegative and the step positive"));
    }
    let steps = (t_max / dt).round();
    if (steps * dt - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return Err(invalid(format!("horizon {t_max} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Discrete radial Loewner chain: `g_{t_k} = G_k ∘ ⋯ ∘ G_1`, where `G_j` is
/// the exact flow over `[t_{j−1}, t_j]` with the driving held at `ξ(t_j)`.
#[derive(Debug, Clone)]
pub struct LoewnerChain {
    dt: f64,
    xi: Vec<Complex64>,
    grow: f64,
}

impl LoewnerChain {
    pub fn new(driving: &DrivingFunction) -> Self {
        let xi = (0..=driving.steps()).map(|k| driving.value(k)).collect();
        Self { dt: driving.dt, xi, grow: driving.dt.exp() }
    }

    pub fn steps(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn xi(&self, k: usize) -> Complex64 {
        self.xi[k]
    }

    /// `G_k`: the map over step `k` (`t_{k−1} → t_k`), `1 ≤ k ≤ N`.
    pub fn step_forward(&self, k: usize, w: Complex64) -> Complex64 {
        slit_forward(w, self.xi[k], self.grow)
    }

    pub fn step_inverse(&self, k: usize, w: Complex64) -> Complex64 {
        slit_inverse(w, self.xi[k], self.grow)
    }

    /// `g_{t_k}⁻¹(w)` by composing inverse steps `k, k−1, …, 1`.
    pub fn inverse(&self, k: usize, mut w: Complex64) -> Complex64 {
        for j in (1..=k).rev() {
            w = self.step_inverse(j, w);
        }
        w
    }

    /// Forward images `g_{t_k}(z)` for `k = 0..=N`, stopping at blow-up.
    pub fn solve(&self, z: Complex64) -> Result<Trajectory> {
        check_start(z)?;
        let mut tr = Trajectory { dt: self.dt, values: vec![z], derivatives: vec![Complex64::new(1.0, 0.0)], blow_up: None };
        let (mut g, mut dg) = (z, Complex64::new(1.0, 0.0));
        for k in 1..=self.steps() {
            let next = self.step_forward(k, g);
            if swallowed(next, self.xi[k]) {
                tr.blow_up = Some(self.time(k));
                break;
            }
            dg *= slit_derivative(g, next, self.xi[k], self.grow);
            g = next;
            tr.values.push(g);
            tr.derivatives.push(dg);
        }
        Ok(tr)
    }
}

fn check_start(z: Complex64) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(invalid(format!("start point {z} must lie in the open unit disk")));
    }
    Ok(())
}

fn swallowed(g: Complex64, xi: Complex64) -> bool {
    !g.is_finite() || g.norm() >= 1.0 - BLOWUP_TOLERANCE || (xi - g).norm() < BLOWUP_TOLERANCE
}

/// `t ↦ g_t(z)` on the time grid, up to (excluding) the blow-up step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub values: Vec<Complex64>,
    /// `g_t'(z)` from the exact step derivatives.
    pub derivatives: Vec<Complex64>,
    /// Grid time at which the point was swallowed, if it was.
    pub blow_up: Option<f64>,
}

/// Time-stepping scheme for [`solve_radial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact radial slit map per step.
    #[default]
    SlitMap,
    /// Step-doubling Euler on the same piecewise-constant driving.
    AdaptiveEuler,
}

/// Solves the radial Loewner equation from `z` along `driving`.
pub fn solve_radial(driving: &DrivingFunction, z: Complex64, scheme: Scheme) -> Result<Trajectory> {
    let chain = LoewnerChain::new(driving);
    match scheme {
        Scheme::SlitMap => chain.solve(z),
        Scheme::AdaptiveEuler => solve_euler(&chain, z),
    }
}

fn vector_field(g: Complex64, xi: Complex64) -> Complex64 {
    g * (xi + g) / (xi - g)
}

fn solve_euler(chain: &LoewnerChain, z: Complex64) -> Result<Trajectory> {
    check_start(z)?;
    let dt = chain.dt;
    let mut tr = Trajectory { dt, values: vec![z], derivatives: vec![Complex64::new(1.0, 0.0)], blow_up: None };
    let mut g = z;
    let mut h = dt;
    let h_min = dt * 1e-12;
    'steps: for k in 1..=chain.steps() {
        let xi = chain.xi[k];
        let mut s = 0.0;
        while s < dt {
            h = h.min(dt - s);
            loop {
                let full = g + vector_field(g, xi) * h;
                let half = g + vector_field(g, xi) * (0.5 * h);
                let two = half + vector_field(half, xi) * (0.5 * h);
                let err = (full - two).norm();
                if err <= EULER_TOLERANCE && two.is_finite() {
                    g = two;
                    s += h;
                    if swallowed(g, xi) {
                        tr.blow_up = Some(chain.time(k - 1) + s);
                        break 'steps;
                    }
                    if err < EULER_TOLERANCE / 4.0 {
                        h *= 2.0;
                    }
                    break;
                }
                h *= 0.5;
                if h < h_min {
                    return Err(Error::StepTooLarge { target: EULER_TOLERANCE });
                }
            }
        }
        tr.values.push(g);
    }
    tr.derivatives.clear();
    Ok(tr)
}

/// `M_t(z) = |g_t'(z)|^{2−d} G_𝔻(g_t(z))` on the time grid, with `g_t'(z)`
/// from a centered difference of step [`DIFFERENCE_STEP`]. The series ends
/// at the last grid time before `z` or a difference point is swallowed.
pub fn martingale_observable(chain: &LoewnerChain, z: Complex64, params: SleParams) -> Result<Vec<(f64, f64)>> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::SingularAtOrigin);
    }
    check_start(z)?;
    let h = DIFFERENCE_STEP;
    let e = 2.0 - params.dimension();
    let mut pts = [z, z + h, z - h];
    if pts.iter().any(|p| p.norm() >= 1.0) {
        return Err(invalid("difference stencil leaves the unit disk"));
    }
    let mut out = vec![(0.0, green_disk(z, params)?)];
    for k in 1..=chain.steps() {
        let mut next = pts;
        for p in next.iter_mut() {
            *p = chain.step_forward(k, *p);
        }
        if next.iter().any(|&p| swallowed(p, chain.xi[k])) {
            break;
        }
        pts = next;
        let deriv = (pts[1] - pts[2]) / (2.0 * h);
        out.push((chain.time(k), deriv.norm().powf(e) * green_disk(pts[0], params)?));
    }
    Ok(out)
}
