//! Dimension-derived exponents and the characteristic roots of the wave
//! linearisation at `v = 1`.

use crate::error::{Error, Result};
use crate::math;

/// `(n, m, p)` with `m = (n-2)/(n+2)` and `p = 1/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    n: u32,
    m: f64,
    p: f64,
    // Set when p is an integer so hot loops can use repeated squaring.
    p_int: Option<u32>,
}

impl Exponents {
    pub fn new(n: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("n", "n >= 3", f64::from(n)));
        }
        let (lo, hi) = (n - 2, n + 2);
        let p_int = (hi % lo == 0).then_some(hi / lo);
        Ok(Self {
            n,
            m: f64::from(lo) / f64::from(hi),
            p: f64::from(hi) / f64::from(lo),
            p_int,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(p-1)/p = 1 - m`, the growth rate of the ODE at `v = 1`.
    pub fn alpha(&self) -> f64 {
        1.0 - self.m
    }

    /// `u^p` for `u >= 0`.
    #[inline]
    pub fn pow_p(&self, u: f64) -> f64 {
        match self.p_int {
            Some(k) => math::powi(u, k),
            None => math::powf(u, self.p),
        }
    }

    /// `u^(p-1)` for `u >= 0`.
    #[inline]
    pub fn pow_p_minus_1(&self, u: f64) -> f64 {
        match self.p_int {
            Some(k) => math::powi(u, k - 1),
            None => math::powf(u, self.p - 1.0),
        }
    }

    /// `v^m` for `v >= 0`.
    #[inline]
    pub fn pow_m(&self, v: f64) -> f64 {
        math::powf(v, self.m)
    }
}

/// Roots of `g^2 - lambda p g + p - 1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPair {
    pub lambda: f64,
    pub gamma_small: f64,
    pub gamma_large: f64,
}

pub fn gamma_roots(lambda: f64, exp: &Exponents) -> Result<GammaPair> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", "lambda > 1", lambda));
    }
    let p = exp.p();
    let b = lambda * p;
    let disc = b * b - 4.0 * (p - 1.0);
    // p^2 >= 4(p-1) always, so this only trips on NaN input.
    debug_assert!(disc > 0.0);
    let s = math::sqrt(disc);
    Ok(GammaPair {
        lambda,
        gamma_small: 2.0 * (p - 1.0) / (b + s),
        gamma_large: 0.5 * (b + s),
    })
}

/// `(gamma_lambda gamma_lambda' + p - 1) / p`, the decay rate of `1 - max v`.
pub fn rate_d(lambda: f64, lambda_prime: f64, exp: &Exponents) -> Result<f64> {
    let g = gamma_roots(lambda, exp)?.gamma_small;
    let gp = gamma_roots(lambda_prime, exp)?.gamma_small;
    Ok((g * gp + exp.p() - 1.0) / exp.p())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dimensions() {
        let e3 = Exponents::new(3).unwrap();
        assert_eq!((e3.m(), e3.p()), (0.2, 5.0));
        let e4 = Exponents::new(4).unwrap();
        assert_eq!(e4.p(), 3.0);
        assert!((e4.m() - 1.0 / 3.0).abs() < 1e-16);
        let e6 = Exponents::new(6).unwrap();
        assert_eq!((e6.m(), e6.p()), (0.5, 2.0));
        assert!(Exponents::new(2).is_err());
    }

    #[test]
    fn integer_power_matches_pow() {
        for n in [3, 4, 5, 6, 10] {
            let e = Exponents::new(n).unwrap();
            for u in [0.0, 1e-9, 0.3, 1.0, 1.7] {
                let want = libm::pow(u, e.p());
                assert!((e.pow_p(u) - want).abs() <= 1e-14 * want.max(1e-300));
            }
        }
    }

    #[test]
    fn gamma_against_quadratic_formula() {
        let e = Exponents::new(3).unwrap();
        let g = gamma_roots(2.0, &e).unwrap();
        // Textbook form, fine at this lambda.
        let disc: f64 = 100.0 - 16.0;
        assert!((g.gamma_small - (10.0 - disc.sqrt()) / 2.0).abs() < 1e-14);
        assert!((g.gamma_large - (10.0 + disc.sqrt()) / 2.0).abs() < 1e-13);
        assert!((g.gamma_small - 0.417424).abs() < 1e-6);
        assert!((g.gamma_large - 9.582576).abs() < 1e-6);
        assert!(gamma_roots(1.0, &e).is_err());
    }

    #[test]
    fn gamma_at_one_and_a_half() {
        let e = Exponents::new(3).unwrap();
        let g = gamma_roots(1.5, &e).unwrap();
        assert!((g.gamma_small - (7.5 - 40.25_f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn decay_rate_oracle() {
        let e = Exponents::new(3).unwrap();
        let g = (10.0 - 84.0_f64.sqrt()) / 2.0;
        let d = rate_d(2.0, 2.0, &e).unwrap();
        assert!((d - (g * g + 4.0) / 5.0).abs() < 1e-14);
        assert!((d - 0.834849).abs() < 1e-6);
        // g solves the quadratic, so d = lambda * g.
        assert!((d - 2.0 * g).abs() < 1e-14);
    }

    #[test]
    fn large_speed_limit() {
        let e = Exponents::new(3).unwrap();
        let lam = 1e6;
        let g = gamma_roots(lam, &e).unwrap().gamma_small;
        assert!((g * lam * e.p() / (e.p() - 1.0) - 1.0).abs() < 1e-9);
        let d = rate_d(lam, lam, &e).unwrap();
        assert!(d > 0.8 && d - 0.8 < 1e-12);
    }
}
