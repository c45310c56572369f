//! Changes of variables linking radial Yamabe flow on `R^n`, the cylinder
//! `R x S^(n-1)`, and the rescaled equation for `v`.
//!
//! Conventions: `u(y, t)` is the conformal factor, `w(x, t)` its cylinder
//! form with `x = ln|y|`, `u_tilde(x, tau)` the version rescaled by the
//! extinction time `T`, and `v` the variable of the rescaled equation.

use crate::exponents::Exponents;
use crate::math;

fn nf(exp: &Exponents) -> f64 {
    f64::from(exp.n())
}

/// `(|y|, u) -> (x, w)` with `x = ln|y|`, `w = |y|^((n-2)/2) u`.
pub fn to_cylinder(radius: f64, u: f64, exp: &Exponents) -> (f64, f64) {
    let x = math::ln(radius);
    (x, math::exp(0.5 * (nf(exp) - 2.0) * x) * u)
}

/// `(t, w) -> (tau, u_tilde)` with `tau = -ln(T - t)` and
/// `u_tilde = (T - t)^(-(n-2)/4) w`.
pub fn rescale_time(t: f64, extinction: f64, w: f64, exp: &Exponents) -> (f64, f64) {
    let remaining = extinction - t;
    let tau = -math::ln(remaining);
    (tau, math::powf(remaining, -0.25 * (nf(exp) - 2.0)) * w)
}

/// `(x_cyl, tau_cyl, u_tilde) -> (x, tau, v)`: stretches coordinates by
/// `(n-2)/2` and `(n+2)/4` and normalises amplitude so that
/// `v_tau = (v^m)_xx + v - v^m`.
pub fn to_rescaled(x_cyl: f64, tau_cyl: f64, u_tilde: f64, exp: &Exponents) -> (f64, f64, f64) {
    let n = nf(exp);
    let scale = math::powf((n - 1.0) * (n - 2.0), -0.25 * (n - 2.0));
    (
        0.5 * (n - 2.0) * x_cyl,
        0.25 * (n + 2.0) * tau_cyl,
        math::powf(scale * u_tilde, exp.p()),
    )
}

/// Full map from `u(y, t)` to `(x, tau, v)`.
pub fn flow_to_rescaled(
    radius: f64,
    t: f64,
    extinction: f64,
    u: f64,
    exp: &Exponents,
) -> (f64, f64, f64) {
    let (x, w) = to_cylinder(radius, u, exp);
    let (tau, ut) = rescale_time(t, extinction, w, exp);
    to_rescaled(x, tau, ut, exp)
}

/// `u^p` at `(y, t)` recovered from `v` at the matching rescaled point.
pub fn rescaled_to_density(radius: f64, t: f64, extinction: f64, v: f64, exp: &Exponents) -> f64 {
    let n = nf(exp);
    let k = 1.0 / (1.0 - exp.m());
    math::powf((n - 1.0) * (n - 2.0) * (extinction - t), k) * math::powf(radius, -2.0 * k) * v
}

/// `[(n-1)(n-2)]^(-1/(1-m))`: radial-to-wave amplitude for profiles of
/// `u_t = ((n-1)/m) Delta u^m`.
pub fn wave_scale(exp: &Exponents) -> f64 {
    let n = nf(exp);
    math::powf((n - 1.0) * (n - 2.0), -1.0 / (1.0 - exp.m()))
}

/// `[m(n-2)]^(-1/(1-m))`: the same amplitude for profiles of the unit
/// coefficient problem `Delta f^m + alpha f + beta r f' = 0`, which are
/// `((n-1)/m)^(-1/(1-m))` times the former.
pub fn unit_wave_scale(exp: &Exponents) -> f64 {
    math::powf(exp.m() * (nf(exp) - 2.0), -1.0 / (1.0 - exp.m()))
}

/// Cylinder coordinate of a radius of the self-similar profile:
/// `x = (n-2)/2 ln r`.
pub fn radius_to_x(r: f64, exp: &Exponents) -> f64 {
    0.5 * (nf(exp) - 2.0) * math::ln(r)
}

pub fn x_to_radius(x: f64, exp: &Exponents) -> f64 {
    math::exp(2.0 * x / (nf(exp) - 2.0))
}

/// Wave value from a unit-coefficient radial profile value `f(r)` at
/// `r = e^(2x/(n-2))`.
pub fn radial_to_wave(x: f64, f: f64, exp: &Exponents) -> f64 {
    unit_wave_scale(exp) * math::exp(exp.p() * x) * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_roundtrip() {
        let e = Exponents::new(5).unwrap();
        for r in [1e-3, 0.5, 1.0, 7.0] {
            let x = radius_to_x(r, &e);
            assert!((x_to_radius(x, &e) - r).abs() < 1e-14 * r);
        }
        let e3 = Exponents::new(3).unwrap();
        assert!((radius_to_x(libm::exp(2.0), &e3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_routes_to_the_density_agree() {
        for n in [3, 4, 7] {
            let e = Exponents::new(n).unwrap();
            let (r, t, big_t, u) = (1.7, 0.25, 1.0, 0.8);
            let (_, _, v) = flow_to_rescaled(r, t, big_t, u, &e);
            let density = rescaled_to_density(r, t, big_t, v, &e);
            let want = libm::pow(u, e.p());
            assert!((density - want).abs() < 1e-13 * want, "n = {n}");
        }
    }

    #[test]
    fn wave_map_positive() {
        let e = Exponents::new(3).unwrap();
        assert!((wave_scale(&e) - libm::pow(2.0, -1.25)).abs() < 1e-15);
        let ratio = unit_wave_scale(&e) / wave_scale(&e);
        assert!((ratio - libm::pow(10.0, 1.25)).abs() < 1e-12);
        assert!(radial_to_wave(-0.3, 2.0, &e) > 0.0);
    }
}
