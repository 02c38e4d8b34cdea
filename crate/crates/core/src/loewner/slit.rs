//! Exact radial slit maps. With the driving held at `ξ` for time `s`, the
//! radial Loewner flow conjugates through the Koebe function
//! `k(u) = u/(1+u)²` to multiplication: `k(g_s(z)/ξ) = e^s k(z/ξ)`.

use num_complex::Complex64;

fn koebe(u: Complex64) -> Complex64 {
    u / ((1.0 + u) * (1.0 + u))
}

fn koebe_derivative(u: Complex64) -> Complex64 {
    (1.0 - u) / ((1.0 + u) * (1.0 + u) * (1.0 + u))
}

/// The root of `c u² + (2c − 1) u + c = 0` of modulus at most one, i.e. the
/// preimage under `k` inside the closed unit disk. The two roots multiply to
/// one; the small one is formed as `c/q` with `q` the larger-modulus
/// quadratic half-root, avoiding cancellation.
pub fn koebe_inverse(c: Complex64) -> Complex64 {
    let s = (1.0 - 4.0 * c).sqrt();
    let a = 0.5 * (1.0 - 2.0 * c + s);
    let b = 0.5 * (1.0 - 2.0 * c - s);
    let q = if a.norm_sqr() >= b.norm_sqr() { a } else { b };
    c / q
}

/// One step of the forward flow: `ξ k⁻¹(e^s k(w/ξ))` with `grow = e^s`.
pub fn slit_forward(w: Complex64, xi: Complex64, grow: f64) -> Complex64 {
    xi * koebe_inverse(koebe(w / xi) * grow)
}

/// Inverse of [`slit_forward`]: `ξ k⁻¹(e^{−s} k(w/ξ))`.
pub fn slit_inverse(w: Complex64, xi: Complex64, grow: f64) -> Complex64 {
    xi * koebe_inverse(koebe(w / xi) / grow)
}

/// Derivative of the forward step at `w`, given its image `g`:
/// `e^s k'(w/ξ) / k'(g/ξ)`.
pub fn slit_derivative(w: Complex64, g: Complex64, xi: Complex64, grow: f64) -> Complex64 {
    grow * koebe_derivative(w / xi) / koebe_derivative(g / xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn koebe_round_trip() {
        for u in [c(0., 0.), c(0.3, 0.1), c(-0.9, 0.0), c(0.0, 0.99), c(0.5, -0.5)] {
            assert!((koebe_inverse(koebe(u)) - u).norm() < 1e-12);
        }
    }

    #[test]
    fn slit_tip_on_real_axis() {
        let s: f64 = 0.7;
        let grow = s.exp();
        // tip x solves x/(1+x)² = e^{-s}/4
        let target = (-s).exp() / 4.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if m / ((1.0 + m) * (1.0 + m)) < target {
                lo = m
            } else {
                hi = m
            }
        }
        let tip = 0.5 * (lo + hi);
        let image = slit_inverse(c(1.0 - 1e-12, 0.0), c(1., 0.), grow);
        assert!((image.re - tip).abs() < 1e-5 && image.im.abs() < 1e-12);
        let on_slit = slit_forward(c(0.5 * (tip + 1.0), 0.0), c(1., 0.), grow);
        assert!((on_slit.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_at_origin() {
        let grow = 0.25f64.exp();
        let d = slit_derivative(c(0., 0.), c(0., 0.), c(0.6, 0.8), grow);
        assert!((d - grow).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn inverse_then_forward_is_identity(r in 0.0..0.999f64, a in 0.0..6.3f64, b in 0.0..6.3f64, s in 1e-5..0.5f64) {
            let w = Complex64::from_polar(r, a);
            let xi = Complex64::from_polar(1.0, b);
            let grow = s.exp();
            let z = slit_inverse(w, xi, grow);
            prop_assert!(z.norm() < 1.0);
            prop_assert!((slit_forward(z, xi, grow) - w).norm() < 1e-9);
        }

        #[test]
        fn forward_increases_modulus(r in 0.01..0.9f64, a in 0.0..6.3f64, s in 1e-4..0.1f64) {
            let z = Complex64::from_polar(r, a);
            let xi = c(1., 0.);
            let g = slit_forward(z, xi, s.exp());
            prop_assume!(g.norm() < 1.0 - 1e-9);
            prop_assert!(g.norm() > z.norm());
        }
    }
}
