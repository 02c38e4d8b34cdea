use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{vector_field, DrivingFunction, LoewnerChain, StartAngle};
use crate::curve::Curve;
use crate::error::{invalid, Error, Result};
use crate::walk::RngStream;

/// Default `1 − r` in `γ(t) ≈ g_t⁻¹(r ξ(t))`.
pub const DEFAULT_TRACE_OFFSET: f64 = 1e-3;

/// Largest tolerated gap between the two inverse evaluations.
pub const INVERSE_AGREEMENT: f64 = 1e-4;

const BACKWARD_TOLERANCE: f64 = 1e-12;

/// Clock attached to a sampled trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Parametrization {
    /// Loewner capacity time `t ∈ [0, T]`.
    Capacity,
    /// `s = t/(1+t)`, with the origin appended at `s = 1`.
    #[default]
    FiniteLifetime,
}

/// How `g_t⁻¹` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InverseMethod {
    /// Adaptive RK4 integration of the time-reversed Loewner flow.
    #[default]
    BackwardFlow,
    /// Composition of exact inverse slit maps.
    Composition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub offset: f64,
    pub parametrization: Parametrization,
    pub inverse: InverseMethod,
    pub start: StartAngle,
    /// Emit a trace point every `stride` driving steps (the last step is
    /// always emitted).
    pub stride: usize,
    /// Also evaluate with the other inverse method and report the largest
    /// disagreement.
    pub cross_check: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            offset: DEFAULT_TRACE_OFFSET,
            parametrization: Parametrization::default(),
            inverse: InverseMethod::default(),
            start: StartAngle::Uniform,
            stride: 1,
            cross_check: false,
        }
    }
}

/// Approximate SLE trace with its clock and extraction settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceApprox {
    pub curve: Curve,
    pub parametrization: Parametrization,
    pub offset: f64,
    pub inverse: InverseMethod,
    pub kappa: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Largest distance between the two inverse methods, when cross-checked.
    pub inverse_discrepancy: Option<f64>,
}

impl TraceApprox {
    /// Whether a cross-check found the inverse methods disagreeing beyond
    /// [`INVERSE_AGREEMENT`].
    pub fn flagged(&self) -> bool {
        self.inverse_discrepancy.is_some_and(|d| d > INVERSE_AGREEMENT)
    }
}

/// Radial SLE(κ) trace on `[0, T]` from a fresh Brownian driving function.
pub fn sample_sle_trace(kappa: f64, t_max: f64, dt: f64, stream: RngStream, opts: &TraceOptions) -> Result<TraceApprox> {
    let driving = DrivingFunction::brownian(kappa, t_max, dt, opts.start, stream)?;
    trace_from_driving(&driving, opts)
}

/// Trace `γ(t_k) ≈ g_{t_k}⁻¹((1 − offset) ξ(t_k))` of the chain generated by
/// `driving`, starting from `γ(0) = ξ(0)`.
pub fn trace_from_driving(driving: &DrivingFunction, opts: &TraceOptions) -> Result<TraceApprox> {
    if !(opts.offset > 0.0 && opts.offset < 1.0) {
        return Err(invalid(format!("trace offset must lie in (0, 1), got {}", opts.offset)));
    }
    if opts.stride == 0 {
        return Err(invalid("stride must be positive"));
    }
    let chain = LoewnerChain::new(driving);
    let n = chain.steps();
    let r = 1.0 - opts.offset;
    let mut ks: Vec<usize> = (opts.stride..=n).step_by(opts.stride).collect();
    if n > 0 && ks.last() != Some(&n) {
        ks.push(n);
    }
    let eval = |method: InverseMethod, k: usize, w: Complex64| match method {
        InverseMethod::Composition => Ok(chain.inverse(k, w)),
        InverseMethod::BackwardFlow => backward_flow(&chain, k, w),
    };
    let other = match opts.inverse {
        InverseMethod::Composition => InverseMethod::BackwardFlow,
        InverseMethod::BackwardFlow => InverseMethod::Composition,
    };
    let mut vertices = vec![chain.xi(0)];
    let mut times = vec![0.0];
    let mut discrepancy: f64 = 0.0;
    for k in ks {
        let w = chain.xi(k) * r;
        let z = eval(opts.inverse, k, w)?;
        if opts.cross_check {
            discrepancy = discrepancy.max((eval(other, k, w)? - z).norm());
        }
        vertices.push(z);
        times.push(chain.time(k));
    }
    if opts.parametrization == Parametrization::FiniteLifetime {
        for t in times.iter_mut() {
            *t /= 1.0 + *t;
        }
        vertices.push(Complex64::new(0.0, 0.0));
        times.push(1.0);
    }
    Ok(TraceApprox {
        curve: Curve::new(vertices, times)?,
        parametrization: opts.parametrization,
        offset: opts.offset,
        inverse: opts.inverse,
        kappa: driving.kappa(),
        dt: driving.dt(),
        t_max: chain.time(n),
        inverse_discrepancy: opts.cross_check.then_some(discrepancy),
    })
}

/// `g_{t_k}⁻¹(w)` by integrating `∂_s f = −f (ξ + f)/(ξ − f)` backwards
/// through steps `k, …, 1` with step-doubling RK4.
pub(crate) fn backward_flow(chain: &LoewnerChain, k: usize, w: Complex64) -> Result<Complex64> {
    let dt = chain.dt();
    let mut f = w;
    let mut h = dt;
    let h_min = dt * 1e-14;
    for j in (1..=k).rev() {
        let xi = chain.xi(j);
        let field = |p: Complex64| -vector_field(p, xi);
        let rk4 = |p: Complex64, h: f64| {
            let k1 = field(p);
            let k2 = field(p + k1 * (0.5 * h));
            let k3 = field(p + k2 * (0.5 * h));
            let k4 = field(p + k3 * h);
            p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        };
        let mut s = 0.0;
        while s < dt {
            h = h.min(dt - s);
            loop {
                let full = rk4(f, h);
                let half = rk4(rk4(f, 0.5 * h), 0.5 * h);
                let err = (full - half).norm();
                if err <= BACKWARD_TOLERANCE && half.is_finite() {
                    f = half + (half - full) / 15.0;
                    s += h;
                    if err < BACKWARD_TOLERANCE / 32.0 {
                        h *= 2.0;
                    }
                    break;
                }
                h *= 0.5;
                if h < h_min {
                    return Err(Error::StepTooLarge { target: BACKWARD_TOLERANCE });
                }
            }
        }
    }
    Ok(f)
}
